"""Subgraph embedding search over ontological graphs.

An embedding is an injective map from query nodes to figure nodes that
preserves kinds, attributes and every query edge (non-induced matching: the
figure may hold extra relations among the matched nodes).  Parallel and
perpendicular edges are undirected, and the two arms of a unit ratio are
interchangeable because equality of lengths is symmetric.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping

from .ontology import (
    ARMS,
    LINEAR,
    SYMMETRIC,
    Edge,
    OntoGraph,
    Ratio,
    RelationKind,
    kind_census,
)

Embedding = dict[str, str]


def nodes_compatible(q, f, loose_linear: bool = False) -> bool:
    """Kind and attribute compatibility of a query payload with a figure payload."""
    if isinstance(q, Ratio) or isinstance(f, Ratio):
        return isinstance(q, Ratio) and isinstance(f, Ratio) and q.value == f.value
    if q.kind is not f.kind:
        if not (loose_linear and q.kind in LINEAR and f.kind in LINEAR):
            return False
    if q.angle is not None:
        return q.angle.compatible_with(f.angle)
    return True


def _figure_index(figure: OntoGraph) -> dict[tuple[str, str], set[RelationKind]]:
    index: dict[tuple[str, str], set[RelationKind]] = {}
    for e in figure.edges:
        index.setdefault((e.src, e.dst), set()).add(e.kind)
    return index


def _edge_ok(index, edge: Edge, src_payload, fs: str, fd: str) -> bool:
    kinds = index.get((fs, fd), ())
    if edge.kind in SYMMETRIC:
        return edge.kind in kinds or edge.kind in index.get((fd, fs), ())
    if edge.kind in ARMS and isinstance(src_payload, Ratio) and src_payload.value == 1:
        return bool(ARMS.intersection(kinds))
    return edge.kind in kinds


def _signature(graph: OntoGraph, node: str) -> Counter:
    sig: Counter = Counter()
    for e in graph.out_edges(node):
        group = "arm" if e.kind in ARMS else e.kind.value
        sig[(group, "sym" if e.kind in SYMMETRIC else "out")] += 1
    for e in graph.in_edges(node):
        group = "arm" if e.kind in ARMS else e.kind.value
        sig[(group, "sym" if e.kind in SYMMETRIC else "in")] += 1
    return sig


def _dominated(small: Counter, big: Counter) -> bool:
    return all(big[k] >= v for k, v in small.items())


def query_order(query: OntoGraph) -> list[str]:
    """Search order: highest degree first, then greedily the node with the
    most links to already ordered nodes (ties by degree, then id)."""
    degree = {n: len(query.incident(n)) for n in query.nodes}
    neighbours = {n: set() for n in query.nodes}
    for e in query.edges:
        neighbours[e.src].add(e.dst)
        neighbours[e.dst].add(e.src)
    remaining = set(query.nodes)
    order: list[str] = []
    while remaining:
        placed = set(order)
        best = min(
            remaining,
            key=lambda n: (-len(neighbours[n] & placed), -degree[n], n),
        )
        order.append(best)
        remaining.remove(best)
    return order


@dataclass
class _Search:
    query: OntoGraph
    figure: OntoGraph
    limit: int
    loose_linear: bool
    order: list[str] = field(default_factory=list)
    results: list[Embedding] = field(default_factory=list)

    def run(self) -> list[Embedding]:
        q, f = self.query, self.figure
        self.index = _figure_index(f)
        self.order = query_order(q)
        position = {n: i for i, n in enumerate(self.order)}
        fsig = {n: _signature(f, n) for n in f.nodes}
        self.candidates = {}
        for n in self.order:
            sig = _signature(q, n)
            self.candidates[n] = [
                m for m in sorted(f.nodes)
                if nodes_compatible(q.nodes[n], f.nodes[m], self.loose_linear) and _dominated(sig, fsig[m])
            ]
            if not self.candidates[n]:
                return []
        # edges checked when the later of their two endpoints is placed
        self.checks = {n: [] for n in self.order}
        for e in q.edges:
            later = e.src if position[e.src] >= position[e.dst] else e.dst
            self.checks[later].append(e)
        self._extend({}, set(), 0)
        return self.results

    def _extend(self, mapping: dict[str, str], used: set[str], depth: int) -> bool:
        if depth == len(self.order):
            self.results.append(dict(mapping))
            return len(self.results) >= self.limit
        node = self.order[depth]
        for cand in self.candidates[node]:
            if cand in used:
                continue
            mapping[node] = cand
            if all(
                _edge_ok(self.index, e, self.query.nodes[e.src], mapping[e.src], mapping[e.dst])
                for e in self.checks[node]
            ):
                used.add(cand)
                if self._extend(mapping, used, depth + 1):
                    return True
                used.discard(cand)
            del mapping[node]
        return False


def find_embeddings(
    query: OntoGraph, figure: OntoGraph, limit: int = 10, loose_linear: bool = False
) -> list[Embedding]:
    """Up to ``limit`` embeddings of ``query`` into ``figure``.

    Results come in a deterministic order: lexicographic over the search
    order of query nodes, figure candidates by node id.  The list is complete
    whenever it is shorter than ``limit``.
    """
    if limit < 1:
        raise ValueError("limit must be positive")
    if not kind_census(query).fits_in(kind_census(figure), loose_linear):
        return []
    if not query.nodes:
        return [{}]
    return _Search(query, figure, limit, loose_linear).run()


def is_embedding(query: OntoGraph, figure: OntoGraph, mapping: Mapping[str, str], loose_linear: bool = False) -> bool:
    """Check the three embedding invariants directly."""
    if set(mapping) != set(query.nodes) or len(set(mapping.values())) != len(mapping):
        return False
    if not all(m in figure.nodes for m in mapping.values()):
        return False
    if not all(nodes_compatible(query.nodes[n], figure.nodes[m], loose_linear) for n, m in mapping.items()):
        return False
    index = _figure_index(figure)
    return all(
        _edge_ok(index, e, query.nodes[e.src], mapping[e.src], mapping[e.dst]) for e in query.edges
    )


def count_embeddings(query: OntoGraph, figure: OntoGraph, loose_linear: bool = False, cap: int = 10**6) -> int:
    return len(find_embeddings(query, figure, cap, loose_linear))


def labelled(graph: OntoGraph, embedding: Mapping[str, str], figure: OntoGraph) -> dict[str, str]:
    """Embedding expressed with node labels on both sides."""
    return {graph.label(q): figure.label(f) for q, f in sorted(embedding.items())}

