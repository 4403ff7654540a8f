"""Dependency lattices and bottom-up query reduction.

The lattice of a figure has one node per named construction object and an
edge from every object a step reads to every object it produces, labelled
with the step's letter (m midpoint, s segment drawing, i intersection,
p perpendicular/parallel, c circle, f foot, b bisector, e mediatrix,
r right angle).  A global source S sits above the objects nothing depends on
and a global sink T below the objects nothing uses.

Reduction walks the lattice from T upwards.  Every onto element emitted by a
step is *owned* by one lattice object: a named object owns its own node,
other elements belong to the object the step produced (for edges, the
produced object they touch).  For each sink object the planner first removes
its owned relations one at a time and then the object itself, after which its
parents may become sinks.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, replace
from typing import Iterator, Mapping, Union

from .construction import Figure, ValidationFailed, Violation, _Namespace, check_step, step_inputs
from .ontology import ARMS, Concept, ConceptKind, Edge, Element, OntoGraph, Ratio

SOURCE = "S"
SINK = "T"


class CycleDetected(Exception):
    pass


class StaleAction(Exception):
    """The element a reduction action targets is no longer in the graph."""


@dataclass(frozen=True)
class DependencyLattice:
    objects: tuple[str, ...]
    edges: frozenset[tuple[str, str, str]]
    defined_at: Mapping[str, int]
    step_subjects: Mapping[int, tuple[str, ...]]
    step_letters: Mapping[int, str]
    draw_index: int

    @property
    def nodes(self) -> tuple[str, ...]:
        return (SOURCE, *self.objects, SINK)

    def parents(self, name: str) -> list[str]:
        return sorted({a for a, b, _ in self.edges if b == name})

    def children(self, name: str) -> list[str]:
        return sorted({b for a, b, _ in self.edges if a == name})

    def sources(self) -> list[str]:
        """Objects attached to S (no construction dependencies)."""
        targets = {b for _, b, _ in self.edges}
        return [o for o in self.objects if o not in targets]

    def sinks(self) -> list[str]:
        """Objects attached to T (nothing depends on them)."""
        used = {a for a, _, _ in self.edges}
        return [o for o in self.objects if o not in used]

    def all_edges(self) -> set[tuple[str, str, str | None]]:
        out: set[tuple[str, str, str | None]] = set(self.edges)
        out |= {(SOURCE, o, None) for o in self.sources()}
        out |= {(o, SINK, None) for o in self.sinks()}
        return out

    def descendants(self, name: str) -> set[str]:
        seen: set[str] = set()
        stack = [name]
        while stack:
            for child in self.children(stack.pop()):
                if child not in seen:
                    seen.add(child)
                    stack.append(child)
        return seen

    def letter_of(self, name: str) -> str:
        return self.step_letters.get(self.defined_at[name], "") or "free"

    def to_dot(self, highlight=()) -> str:
        """Graphviz rendering: dashed S/T attachments, letter-labelled op edges."""
        ids = {SOURCE: "__S__", SINK: "__T__"}
        lines = ["digraph lattice {", "  rankdir=TB;"]
        lines.append('  "__S__" [label="S", shape=plaintext];')
        for o in self.objects:
            style = ", style=bold, penwidth=2" if o in highlight else ""
            lines.append(f'  "{o}" [label="{o}"{style}];')
        lines.append('  "__T__" [label="T", shape=plaintext];')
        for a, b, label in sorted(self.all_edges(), key=lambda e: (e[0], e[1], e[2] or "")):
            attrs = f'label="{label}"' if label else "style=dashed"
            lines.append(f'  "{ids.get(a, a)}" -> "{ids.get(b, b)}" [{attrs}];')
        lines.append("}")
        return "\n".join(lines)


def build_lattice(figure: Figure) -> DependencyLattice:
    """Dependency lattice of a figure's construction steps.

    Objects that are only drawn never enter the lattice.
    """
    ns = _Namespace()
    edges: set[tuple[str, str, str]] = set()
    subjects: dict[int, tuple[str, ...]] = {}
    letters: dict[int, str] = {}
    violations: list[Violation] = []
    for index, step in enumerate(figure.steps):
        problems = check_step(step, ns, index)
        if problems:
            violations.extend(problems)
            continue
        subjects[index] = tuple(step.subjects())
        letters[index] = step.letter
        inputs = step_inputs(step)
        for subject in step.subjects():
            for i in inputs:
                if i != subject:
                    edges.add((i, subject, step.letter))
    if violations:
        raise ValidationFailed(violations)
    objects = tuple(sorted(ns.defined_at, key=lambda n: (ns.defined_at[n], n)))
    lattice = DependencyLattice(objects, frozenset(edges), dict(ns.defined_at), subjects, letters, figure.draw_index)
    _check_acyclic(lattice)
    return lattice


def _check_acyclic(lattice: DependencyLattice) -> None:
    indegree = {o: 0 for o in lattice.objects}
    children: dict[str, list[str]] = {o: [] for o in lattice.objects}
    for a, b, _ in lattice.edges:
        children[a].append(b)
    for a in children:
        children[a] = sorted(set(children[a]))
        for b in children[a]:
            indegree[b] += 1
    ready = [o for o, d in indegree.items() if d == 0]
    seen = 0
    while ready:
        node = ready.pop()
        seen += 1
        for child in children[node]:
            indegree[child] -= 1
            if indegree[child] == 0:
                ready.append(child)
    if seen != len(lattice.objects):
        raise CycleDetected("construction dependencies contain a cycle")


@dataclass(frozen=True)
class RemoveRelation:
    """Remove one relation: an edge, or a whole reified ratio node."""

    element: Union[Edge, str]
    owner: str
    op: str

    def describe(self) -> str:
        return f"remove relation {self.element} (bottom node {self.owner}, op {self.op})"


@dataclass(frozen=True)
class RemoveNode:
    name: str
    op: str

    def describe(self) -> str:
        return f"remove node {self.name} and its fragment (op {self.op})"


ReductionAction = Union[RemoveRelation, RemoveNode]


def ownership(lattice: DependencyLattice, graph: OntoGraph) -> dict[Element, str]:
    """Map each owned element of ``graph`` to its lattice object."""
    objects = set(lattice.defined_at)
    owner: dict[Element, str] = {}
    for node in graph.nodes:
        if node in objects:
            owner[node] = node
            continue
        prov = graph.provenance.get(node)
        if isinstance(prov, int) and prov in lattice.step_subjects:
            owner[node] = lattice.step_subjects[prov][0]
    for edge in graph.edges:
        prov = graph.provenance.get(edge)
        if not isinstance(prov, int) or prov not in lattice.step_subjects:
            continue
        subjects = lattice.step_subjects[prov]
        touching = [s for s in subjects if s in (edge.src, edge.dst)]
        owner[edge] = touching[0] if touching else subjects[0]
    return owner


def _relation_key(graph: OntoGraph, element: Element):
    prov = graph.provenance.get(element)
    step = prov if isinstance(prov, int) else -1
    key = element.sort_key() if isinstance(element, Edge) else (element, "", "")
    return (-step, key)


def reduction_sequence(lattice: DependencyLattice, graph: OntoGraph) -> Iterator[ReductionAction]:
    """Bottom-up removal plan; the iterator ends when only S and T are left.

    Sinks are processed latest-defined first (ties by name).  Each object's
    relations come first, latest step first and then by edge id, followed by
    the object itself.
    """
    owner = ownership(lattice, graph)
    owned: dict[str, list[Element]] = {o: [] for o in lattice.objects}
    for element, name in owner.items():
        if isinstance(element, Edge):
            if element.kind not in ARMS:
                owned[name].append(element)
        elif isinstance(graph.nodes[element], Ratio):
            owned[name].append(element)
    pending_children = {o: set(lattice.children(o)) for o in lattice.objects}
    heap = [(-lattice.defined_at[o], o) for o in lattice.sinks()]
    heapq.heapify(heap)
    while heap:
        _, name = heapq.heappop(heap)
        op = lattice.letter_of(name)
        for element in sorted(owned[name], key=lambda e: _relation_key(graph, e)):
            yield RemoveRelation(element, name, op)
        yield RemoveNode(name, op)
        for parent in lattice.parents(name):
            pending_children[parent].discard(name)
            if not pending_children[parent]:
                heapq.heappush(heap, (-lattice.defined_at[parent], parent))


@dataclass(frozen=True)
class Query:
    """A compiled query and the reductions applied to it so far."""

    figure: Figure
    graph: OntoGraph
    lattice: DependencyLattice | None = None
    log: tuple[ReductionAction, ...] = ()
    source: str | None = None


def _draw_segments_touching(graph: OntoGraph, draw_index: int, removed: set[str]) -> set[str]:
    out = set()
    for n, p in graph.nodes.items():
        if (
            isinstance(p, Concept)
            and p.kind is ConceptKind.SEGMENT
            and graph.provenance.get(n) == draw_index
            and removed.intersection(p.ends)
        ):
            out.add(n)
    return out


def apply_reduction(query: Query, action: ReductionAction) -> Query:
    """Return a new Query with the action's onto elements removed and logged."""
    graph = query.graph
    lattice = query.lattice or build_lattice(query.figure)
    if isinstance(action, RemoveRelation):
        if action.element not in graph:
            raise StaleAction(f"{action.element} is no longer in the query graph")
        if isinstance(action.element, Edge):
            reduced = graph.without(edges=[action.element])
        else:
            reduced = graph.without(nodes=[action.element])
    else:
        if action.name not in graph.nodes:
            raise StaleAction(f"{action.name} is no longer in the query graph")
        owner = ownership(lattice, graph)
        nodes = {e for e, o in owner.items() if o == action.name and isinstance(e, str)}
        edges = {e for e, o in owner.items() if o == action.name and isinstance(e, Edge)}
        nodes |= _draw_segments_touching(graph, lattice.draw_index, nodes)
        reduced = graph.without(nodes=nodes, edges=edges)
    return replace(query, graph=reduced, lattice=lattice, log=query.log + (action,))
