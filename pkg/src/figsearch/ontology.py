"""Typed ontological graphs of plane-geometry figures.

A figure is a graph whose nodes are concept instances (points, segments,
lines, circles, angles) or reified ``has_ratio`` nodes, and whose edges are
typed relations between them.  Graphs are immutable; every operation returns
a new graph.  Node labels are metadata only and never take part in matching.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Union


class OntologyError(Exception):
    """Base class for graph construction errors."""


class DomainViolation(OntologyError):
    """An edge does not respect the relation's domain table."""


class UnknownNode(OntologyError):
    pass


class ConceptKind(enum.Enum):
    POINT = "point"
    SEGMENT = "segment"
    LINE = "line"
    CIRCLE = "circle"
    ANGLE = "angle"


class RelationKind(enum.Enum):
    BELONGS_TO = "belongs_to"
    IS_CENTER_OF = "is_center_of"
    IS_PARALLEL_TO = "is_parallel_to"
    IS_PERPENDICULAR_TO = "is_perpendicular_to"
    IS_RADIUS_OF = "is_radius_of"
    RATIO_NOMINATOR = "nominator"
    RATIO_DENOMINATOR = "denominator"


SYMMETRIC = frozenset({RelationKind.IS_PARALLEL_TO, RelationKind.IS_PERPENDICULAR_TO})
ARMS = frozenset({RelationKind.RATIO_NOMINATOR, RelationKind.RATIO_DENOMINATOR})
LINEAR = frozenset({ConceptKind.LINE, ConceptKind.SEGMENT})

#: provenance tag for elements produced by inference rather than by a step
INFERRED = "inferred"


@dataclass(frozen=True)
class AngleValue:
    """Value attribute of an angle: unconstrained, right, straight or numeric."""

    tag: str = "unconstrained"
    degrees: Fraction | None = None

    @classmethod
    def numeric(cls, degrees) -> "AngleValue":
        value = Fraction(degrees)
        if not 0 < value < 360:
            raise ValueError(f"angle value must lie in (0, 360), got {value}")
        if value == 90:
            return RIGHT
        if value == 180:
            return STRAIGHT
        return cls("numeric", value)

    def compatible_with(self, other: "AngleValue") -> bool:
        """True if a query angle with this value may match ``other``."""
        return self.tag == "unconstrained" or self == other

    def __str__(self) -> str:
        if self.tag == "numeric":
            return f"{self.degrees}deg"
        return self.tag


UNCONSTRAINED = AngleValue("unconstrained")
RIGHT = AngleValue("right")
STRAIGHT = AngleValue("straight")


@dataclass(frozen=True)
class Concept:
    """A concept instance.

    ``ends`` holds the defining point ids of a segment (two) or of an angle
    (three, vertex in the middle); it is empty for other kinds.
    """

    kind: ConceptKind
    label: str | None = None
    angle: AngleValue | None = None
    ends: tuple[str, ...] = ()

    def __post_init__(self):
        if (self.kind is ConceptKind.ANGLE) != (self.angle is not None):
            raise ValueError("angle value is required for angles and only for them")


@dataclass(frozen=True)
class Ratio:
    """Reified ``has_ratio`` relation; its arms are separate edges."""

    value: Fraction = Fraction(1)

    def __post_init__(self):
        if self.value <= 0:
            raise ValueError("ratio value must be positive")


Payload = Union[Concept, Ratio]


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    kind: RelationKind

    def sort_key(self) -> tuple[str, str, str]:
        return (self.src, self.dst, self.kind.value)

    def __str__(self) -> str:
        return f"{self.src} -{self.kind.value}-> {self.dst}"


@dataclass(frozen=True)
class PendingEquality:
    """Equal length or angle value recorded by a construction step."""

    first: str
    second: str
    step: int


Element = Union[str, Edge]
Provenance = Union[int, str]

_BELONGS_DOMAIN = {
    ConceptKind.POINT: frozenset(
        {ConceptKind.SEGMENT, ConceptKind.LINE, ConceptKind.CIRCLE, ConceptKind.ANGLE}
    ),
    ConceptKind.SEGMENT: frozenset({ConceptKind.LINE, ConceptKind.ANGLE}),
}


def check_domain(src: Payload, dst: Payload, kind: RelationKind) -> None:
    """Raise DomainViolation unless ``src -kind-> dst`` is a legal edge."""
    if kind in ARMS:
        if not isinstance(src, Ratio) or not isinstance(dst, Concept):
            raise DomainViolation(f"{kind.value} must go from a ratio node to a concept")
        if dst.kind not in (ConceptKind.SEGMENT, ConceptKind.ANGLE):
            raise DomainViolation("ratio arms target segments or angles")
        return
    if not isinstance(src, Concept) or not isinstance(dst, Concept):
        raise DomainViolation(f"{kind.value} relates concepts only")
    if kind is RelationKind.BELONGS_TO:
        ok = dst.kind in _BELONGS_DOMAIN.get(src.kind, ())
    elif kind in SYMMETRIC:
        ok = src.kind in LINEAR and dst.kind in LINEAR
    elif kind is RelationKind.IS_CENTER_OF:
        ok = src.kind is ConceptKind.POINT and dst.kind is ConceptKind.CIRCLE
    elif kind is RelationKind.IS_RADIUS_OF:
        ok = src.kind is ConceptKind.SEGMENT and dst.kind is ConceptKind.CIRCLE
    else:  # pragma: no cover - exhaustive
        ok = False
    if not ok:
        raise DomainViolation(
            f"{kind.value} cannot go from {src.kind.value} to {dst.kind.value}"
        )


def canonical_edge(src: str, dst: str, kind: RelationKind) -> Edge:
    """Symmetric relations are stored once, endpoints in id order."""
    if kind in SYMMETRIC and dst < src:
        src, dst = dst, src
    return Edge(src, dst, kind)


class OntoGraph:
    """Immutable typed graph with per-element provenance.

    Provenance maps a node id or an Edge to the index of the construction
    step that emitted it, or to ``INFERRED``.
    """

    __slots__ = ("_nodes", "_edges", "_provenance", "_pending", "_index")

    def __init__(
        self,
        nodes: Mapping[str, Payload] | None = None,
        edges: Iterable[Edge] = (),
        provenance: Mapping[Element, Provenance] | None = None,
        pending: Iterable[PendingEquality] = (),
    ):
        self._nodes = MappingProxyType(dict(nodes or {}))
        self._edges = frozenset(edges)
        self._provenance = MappingProxyType(dict(provenance or {}))
        self._pending = tuple(pending)
        self._index = None

    @property
    def nodes(self) -> Mapping[str, Payload]:
        return self._nodes

    @property
    def edges(self) -> frozenset[Edge]:
        return self._edges

    @property
    def pending(self) -> tuple[PendingEquality, ...]:
        return self._pending

    @property
    def provenance(self) -> Mapping[Element, Provenance]:
        return self._provenance

    def __reduce__(self):
        return (
            OntoGraph,
            (dict(self._nodes), self.sorted_edges(), dict(self._provenance), self._pending),
        )

    def __len__(self) -> int:
        return len(self._nodes)

    def __contains__(self, element: Element) -> bool:
        if isinstance(element, Edge):
            return element in self._edges
        return element in self._nodes

    def __eq__(self, other) -> bool:
        if not isinstance(other, OntoGraph):
            return NotImplemented
        return (
            self._nodes == other._nodes
            and self._edges == other._edges
            and self._provenance == other._provenance
            and self._pending == other._pending
        )

    def __hash__(self):
        return hash((frozenset(self._nodes.items()), self._edges))

    def __repr__(self) -> str:
        return f"OntoGraph({len(self._nodes)} nodes, {len(self._edges)} edges)"

    def sorted_edges(self) -> list[Edge]:
        return sorted(self._edges, key=Edge.sort_key)

    def _adjacency(self):
        if self._index is None:
            out: dict[str, list[Edge]] = {n: [] for n in self._nodes}
            inc: dict[str, list[Edge]] = {n: [] for n in self._nodes}
            for e in self.sorted_edges():
                out[e.src].append(e)
                inc[e.dst].append(e)
            self._index = (out, inc)
        return self._index

    def out_edges(self, node: str) -> list[Edge]:
        return self._adjacency()[0][node]

    def in_edges(self, node: str) -> list[Edge]:
        return self._adjacency()[1][node]

    def incident(self, node: str) -> list[Edge]:
        out, inc = self._adjacency()
        return out[node] + inc[node]

    def kind_of(self, node: str) -> ConceptKind | None:
        payload = self._nodes[node]
        return payload.kind if isinstance(payload, Concept) else None

    def concepts(self, kind: ConceptKind) -> list[str]:
        return sorted(n for n, p in self._nodes.items() if isinstance(p, Concept) and p.kind is kind)

    def ratio_nodes(self) -> list[str]:
        return sorted(n for n, p in self._nodes.items() if isinstance(p, Ratio))

    def arms(self, ratio: str) -> tuple[str, str]:
        """Return (nominator target, denominator target) of a ratio node."""
        targets = {e.kind: e.dst for e in self.out_edges(ratio) if e.kind in ARMS}
        return targets[RelationKind.RATIO_NOMINATOR], targets[RelationKind.RATIO_DENOMINATOR]

    def label(self, node: str) -> str:
        payload = self._nodes[node]
        if isinstance(payload, Concept) and payload.label:
            return payload.label
        return node

    def explicit_edges(self) -> list[Edge]:
        return [e for e in self._edges if self._provenance.get(e) != INFERRED]

    def without(self, nodes: Iterable[str] = (), edges: Iterable[Edge] = ()) -> "OntoGraph":
        """Remove nodes (with incident edges) and edges.

        Ratio nodes that lose an arm are removed as well, so the result is
        always a valid graph.
        """
        drop_nodes = set(nodes)
        drop_edges = set(edges)
        while True:
            kept = [
                e for e in self._edges
                if e not in drop_edges and e.src not in drop_nodes and e.dst not in drop_nodes
            ]
            arm_count = Counter(e.src for e in kept if e.kind in ARMS)
            dangling = {
                n for n, p in self._nodes.items()
                if isinstance(p, Ratio) and n not in drop_nodes and arm_count[n] != 2
            }
            if not dangling:
                break
            drop_nodes |= dangling
        kept_nodes = {n: p for n, p in self._nodes.items() if n not in drop_nodes}
        prov = {
            k: v for k, v in self._provenance.items()
            if (k in kept_nodes if isinstance(k, str) else k in kept)
        }
        pending = [
            p for p in self._pending if p.first in kept_nodes and p.second in kept_nodes
        ]
        return OntoGraph(kept_nodes, kept, prov, pending)


class GraphBuilder:
    """Mutable accumulator used to assemble an OntoGraph."""

    def __init__(self, graph: OntoGraph | None = None):
        self.nodes: dict[str, Payload] = {}
        self.edges: dict[Edge, None] = {}
        self.provenance: dict[Element, Provenance] = {}
        self.pending: list[PendingEquality] = []
        if graph is not None:
            self.nodes.update(graph.nodes)
            self.edges.update(dict.fromkeys(graph.sorted_edges()))
            self.provenance.update(graph.provenance)
            self.pending.extend(graph.pending)

    def add_node(self, node: str, payload: Payload, provenance: Provenance | None = None) -> str:
        existing = self.nodes.get(node)
        if existing is not None:
            if existing != payload:
                raise DomainViolation(f"node {node!r} already exists with another payload")
            return node
        self.nodes[node] = payload
        if provenance is not None:
            self.provenance[node] = provenance
        return node

    def replace_node(self, node: str, payload: Payload) -> None:
        if node not in self.nodes:
            raise UnknownNode(node)
        self.nodes[node] = payload

    def add_relation(
        self, src: str, dst: str, kind: RelationKind, provenance: Provenance | None = None
    ) -> Edge:
        if kind in ARMS:
            raise DomainViolation("ratio arms are created together with their node (add_ratio)")
        return self._add_edge(src, dst, kind, provenance)

    def _add_edge(self, src, dst, kind, provenance) -> Edge:
        for n in (src, dst):
            if n not in self.nodes:
                raise UnknownNode(n)
        if src == dst:
            raise DomainViolation(f"{kind.value} cannot relate {src!r} to itself")
        check_domain(self.nodes[src], self.nodes[dst], kind)
        edge = canonical_edge(src, dst, kind)
        if edge not in self.edges:
            self.edges[edge] = None
            if provenance is not None:
                self.provenance[edge] = provenance
        return edge

    def add_ratio(
        self,
        nominator: str,
        denominator: str,
        value=1,
        provenance: Provenance | None = None,
        node: str | None = None,
    ) -> str:
        for n in (nominator, denominator):
            if n not in self.nodes:
                raise UnknownNode(n)
        a, b = self.nodes[nominator], self.nodes[denominator]
        if nominator == denominator:
            raise DomainViolation("a ratio needs two distinct arms")
        if not (isinstance(a, Concept) and isinstance(b, Concept) and a.kind is b.kind):
            raise DomainViolation("ratio arms must target two concepts of the same kind")
        payload = Ratio(Fraction(value))
        check_domain(payload, a, RelationKind.RATIO_NOMINATOR)
        if node is None:
            n = sum(isinstance(p, Ratio) for p in self.nodes.values()) + 1
            while f"ratio#{n}" in self.nodes:
                n += 1
            node = f"ratio#{n}"
        elif node in self.nodes:
            raise DomainViolation(f"node {node!r} already exists")
        self.nodes[node] = payload
        if provenance is not None:
            self.provenance[node] = provenance
        self._add_edge(node, nominator, RelationKind.RATIO_NOMINATOR, provenance)
        self._add_edge(node, denominator, RelationKind.RATIO_DENOMINATOR, provenance)
        return node

    def build(self) -> OntoGraph:
        return OntoGraph(self.nodes, self.edges, self.provenance, self.pending)


def add_concept(graph: OntoGraph, node: str, concept: Concept, provenance=None) -> OntoGraph:
    builder = GraphBuilder(graph)
    builder.add_node(node, concept, provenance)
    return builder.build()


def add_relation(
    graph: OntoGraph, src: str, dst: str, kind: RelationKind, provenance=None
) -> OntoGraph:
    """Return ``graph`` with the edge present exactly once."""
    builder = GraphBuilder(graph)
    builder.add_relation(src, dst, kind, provenance)
    return builder.build()


def add_ratio(graph: OntoGraph, nominator: str, denominator: str, value=1, provenance=None) -> OntoGraph:
    builder = GraphBuilder(graph)
    builder.add_ratio(nominator, denominator, value, provenance)
    return builder.build()


@dataclass(frozen=True)
class Census:
    concepts: Mapping[ConceptKind, int] = field(default_factory=dict)
    ratios: int = 0
    relations: Mapping[RelationKind, int] = field(default_factory=dict)

    def __getitem__(self, key) -> int:
        if key == "ratio":
            return self.ratios
        if isinstance(key, ConceptKind):
            return self.concepts.get(key, 0)
        return self.relations.get(key, 0)

    def fits_in(self, other: "Census", loose_linear: bool = False) -> bool:
        """Necessary condition for a query with this census to embed in ``other``."""
        if self.ratios > other.ratios:
            return False
        for kind in ConceptKind:
            if loose_linear and kind in LINEAR:
                continue
            if self[kind] > other[kind]:
                return False
        if loose_linear:
            mine = self[ConceptKind.LINE] + self[ConceptKind.SEGMENT]
            theirs = other[ConceptKind.LINE] + other[ConceptKind.SEGMENT]
            if mine > theirs:
                return False
        return all(self[k] <= other[k] for k in RelationKind)

    def as_dict(self) -> dict[str, int]:
        out = {k.value: self[k] for k in ConceptKind}
        out["ratio"] = self.ratios
        out.update({k.value: self[k] for k in RelationKind})
        return out


def kind_census(graph: OntoGraph) -> Census:
    concepts = Counter(p.kind for p in graph.nodes.values() if isinstance(p, Concept))
    ratios = sum(isinstance(p, Ratio) for p in graph.nodes.values())
    relations = Counter(e.kind for e in graph.edges)
    return Census(
        {k: concepts.get(k, 0) for k in ConceptKind},
        ratios,
        {k: relations.get(k, 0) for k in RelationKind},
    )


def graph_problems(graph: OntoGraph) -> list[str]:
    """List every violated structural invariant (empty for a valid graph)."""
    problems = []
    nodes = graph.nodes
    for e in graph.edges:
        if e.src not in nodes or e.dst not in nodes:
            problems.append(f"dangling edge {e}")
            continue
        if e.src == e.dst:
            problems.append(f"self edge {e}")
        try:
            check_domain(nodes[e.src], nodes[e.dst], e.kind)
        except DomainViolation as exc:
            problems.append(f"{e}: {exc}")
        if e.kind in SYMMETRIC and e.dst < e.src:
            problems.append(f"non-canonical symmetric edge {e}")
    for n, payload in nodes.items():
        if isinstance(payload, Ratio):
            arms = [e for e in graph.out_edges(n) if e.kind in ARMS]
            kinds = Counter(e.kind for e in arms)
            if kinds[RelationKind.RATIO_NOMINATOR] != 1 or kinds[RelationKind.RATIO_DENOMINATOR] != 1:
                problems.append(f"ratio {n} must have exactly one nominator and one denominator")
            elif len({graph.kind_of(e.dst) for e in arms}) != 1:
                problems.append(f"ratio {n} arms target different kinds")
            if payload.value <= 0:
                problems.append(f"ratio {n} has non-positive value")
    return problems


def iter_elements(graph: OntoGraph) -> Iterator[Element]:
    yield from sorted(graph.nodes)
    yield from graph.sorted_edges()


_DOT_SHAPES = {
    ConceptKind.POINT: "ellipse",
    ConceptKind.SEGMENT: "box",
    ConceptKind.LINE: "box",
    ConceptKind.CIRCLE: "circle",
    ConceptKind.ANGLE: "triangle",
}


def graph_to_dot(graph: OntoGraph, highlight: Iterable[str] = (), name: str = "figure") -> str:
    """Graphviz rendering; highlighted nodes get bold borders, inferred edges are dotted."""
    marked = set(highlight)
    lines = [f'digraph "{name}" {{']
    for n in sorted(graph.nodes):
        p = graph.nodes[n]
        if isinstance(p, Concept):
            shape = _DOT_SHAPES[p.kind]
            text = graph.label(n) if p.angle is None else f"{graph.label(n)} ({p.angle})"
        else:
            shape, text = "diamond", f"ratio {p.value}"
        style = ", style=bold, penwidth=3" if n in marked else ""
        lines.append(f'  "{n}" [label="{text}", shape={shape}{style}];')
    for e in graph.sorted_edges():
        attrs = [f'label="{e.kind.value}"']
        if graph.provenance.get(e) == INFERRED:
            attrs.append("style=dotted")
        if e.kind in SYMMETRIC:
            attrs.append("dir=none")
        lines.append(f'  "{e.src}" -> "{e.dst}" [{", ".join(attrs)}];')
    lines.append("}")
    return "\n".join(lines)
