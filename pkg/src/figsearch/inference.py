"""Inference pass over compiled graphs.

Three rules enrich a compiled figure: closure of parallelism and
orthogonality, materialisation of construction-given equalities as unit
``has_ratio`` nodes, and (optionally) instantiation of an angle for every
pair of segments meeting at an endpoint.
"""

from __future__ import annotations

from itertools import combinations

from .ontology import (
    INFERRED,
    LINEAR,
    UNCONSTRAINED,
    Concept,
    ConceptKind,
    GraphBuilder,
    OntoGraph,
    RelationKind,
    Ratio,
)

PARALLEL = RelationKind.IS_PARALLEL_TO
PERPENDICULAR = RelationKind.IS_PERPENDICULAR_TO

CONSTRAINED_ONLY = "constrained-only"
FULL = "full"
MODES = (CONSTRAINED_ONLY, FULL)


class InconsistentConstraints(Exception):
    """Parallel/perpendicular facts force a carrier to be perpendicular to itself."""


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if rb < ra:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True


def direction_classes(graph: OntoGraph) -> tuple[dict[str, list[str]], set[tuple[str, str]]]:
    """Partition the constrained carriers into direction classes.

    Returns ``(classes, pairs)``: classes maps a representative to its sorted
    members, pairs holds the (sorted) representative pairs that are mutually
    perpendicular.
    """
    rel = [e for e in graph.edges if e.kind in (PARALLEL, PERPENDICULAR)]
    carriers = sorted({n for e in rel for n in (e.src, e.dst)})
    uf = _UnionFind(carriers)
    for e in rel:
        if e.kind is PARALLEL:
            uf.union(e.src, e.dst)
    perps = [(e.src, e.dst) for e in rel if e.kind is PERPENDICULAR]
    changed = True
    while changed:
        changed = False
        partner: dict[str, str] = {}
        for a, b in perps:
            ra, rb = uf.find(a), uf.find(b)
            if ra == rb:
                raise InconsistentConstraints(f"{a} would be perpendicular to its own direction")
            for x, y in ((ra, rb), (rb, ra)):
                known = partner.setdefault(x, y)
                if uf.find(known) != uf.find(y):
                    changed |= uf.union(known, y)
    classes: dict[str, list[str]] = {}
    for c in carriers:
        classes.setdefault(uf.find(c), []).append(c)
    pairs = set()
    for a, b in perps:
        ra, rb = uf.find(a), uf.find(b)
        if ra == rb:
            raise InconsistentConstraints(f"{a} would be perpendicular to its own direction")
        pairs.add(tuple(sorted((ra, rb))))
    return classes, pairs


def close_parallel_perpendicular(graph: OntoGraph) -> OntoGraph:
    """Least fixpoint of the parallel/perpendicular rules.

    a//b, b//c |- a//c;  a_|_b, b_|_c |- a//c;  a_|_b, b//c |- a_|_c.
    Derived edges are tagged INFERRED.
    """
    classes, pairs = direction_classes(graph)
    builder = GraphBuilder(graph)
    for members in classes.values():
        for a, b in combinations(members, 2):
            builder.add_relation(a, b, PARALLEL, INFERRED)
    for ra, rb in sorted(pairs):
        for a in classes[ra]:
            for b in classes[rb]:
                builder.add_relation(a, b, PERPENDICULAR, INFERRED)
    return builder.build()


def materialize_unit_ratios(graph: OntoGraph) -> OntoGraph:
    """Turn each pending equality into a ``has_ratio`` node of value 1.

    The ratio node keeps the provenance of the step that stated the equality.
    """
    if not graph.pending:
        return graph
    builder = GraphBuilder(graph)
    existing = {graph.arms(r) for r in graph.ratio_nodes() if graph.nodes[r] == Ratio()}
    for eq in graph.pending:
        if (eq.first, eq.second) in existing or (eq.second, eq.first) in existing:
            continue
        builder.add_ratio(eq.first, eq.second, 1, eq.step)
        existing.add((eq.first, eq.second))
    builder.pending = []
    return builder.build()


def _segment_ends(graph: OntoGraph) -> dict[str, tuple[str, str]]:
    out = {}
    for n, p in graph.nodes.items():
        if isinstance(p, Concept) and p.kind is ConceptKind.SEGMENT and len(p.ends) == 2:
            if all(end in graph.nodes for end in p.ends):
                out[n] = p.ends
    return out


def angle_candidates(graph: OntoGraph) -> list[tuple[str, str, str, str, str]]:
    """Segment pairs sharing exactly one endpoint, with no angle node yet.

    Yields ``(segment1, segment2, far1, vertex, far2)`` in sorted order.
    """
    ends = _segment_ends(graph)
    have = set()
    for p in graph.nodes.values():
        if isinstance(p, Concept) and p.kind is ConceptKind.ANGLE and len(p.ends) == 3:
            a, v, c = p.ends
            have.add((v, frozenset((a, c))))
    out = []
    for s1, s2 in combinations(sorted(ends), 2):
        common = set(ends[s1]) & set(ends[s2])
        if len(common) != 1:
            continue
        (vertex,) = common
        far1 = next(x for x in ends[s1] if x != vertex)
        far2 = next(x for x in ends[s2] if x != vertex)
        if (vertex, frozenset((far1, far2))) in have:
            continue
        out.append((s1, s2, far1, vertex, far2))
    return out


def instantiate_angles(graph: OntoGraph, mode: str = CONSTRAINED_ONLY) -> OntoGraph:
    """In ``full`` mode add an unconstrained angle per segment pair meeting at
    one endpoint; ``constrained-only`` leaves the graph unchanged."""
    if mode not in MODES:
        raise ValueError(f"unknown angle mode {mode!r}")
    if mode == CONSTRAINED_ONLY:
        return graph
    candidates = angle_candidates(graph)
    if not candidates:
        return graph
    builder = GraphBuilder(graph)
    for s1, s2, far1, vertex, far2 in candidates:
        first, last = sorted((far1, far2))
        node = f"{first}-{vertex}-{last}"
        labelled = "#" not in node
        builder.add_node(
            node,
            Concept(ConceptKind.ANGLE, node if labelled else None, UNCONSTRAINED, (first, vertex, last)),
            INFERRED,
        )
        for src in (s1, s2, vertex, far1, far2):
            builder.add_relation(src, node, RelationKind.BELONGS_TO, INFERRED)
    return builder.build()


def infer(graph: OntoGraph, mode: str = CONSTRAINED_ONLY) -> OntoGraph:
    """Apply all rules until nothing changes."""
    current = graph
    while True:
        nxt = close_parallel_perpendicular(materialize_unit_ratios(instantiate_angles(current, mode)))
        if nxt == current:
            return current
        current = nxt


def carriers(graph: OntoGraph) -> list[str]:
    return sorted(n for n, p in graph.nodes.items() if isinstance(p, Concept) and p.kind in LINEAR)


def relation_pairs(graph: OntoGraph, kind: RelationKind) -> set[frozenset[str]]:
    return {frozenset((e.src, e.dst)) for e in graph.edges if e.kind is kind}

