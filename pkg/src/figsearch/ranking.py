"""Size-ratio ranking of matched figures.

A match scores ``(|V_q| + |E_q|) / (|V_f| + |E_f|)``: the smaller the
containing figure, the closer the score is to 1 and the earlier it ranks.
Inferred edges are left out of both counts so that running inference on a
figure never changes its rank.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .ontology import OntoGraph


def graph_size(graph: OntoGraph) -> int:
    """Nodes plus explicit (non-inferred) edges."""
    return len(graph.nodes) + len(graph.explicit_edges())


def size_ratio(query_nodes: int, query_edges: int, figure_nodes: int, figure_edges: int) -> Fraction:
    return Fraction(query_nodes + query_edges, figure_nodes + figure_edges)


def score(query: OntoGraph, figure: OntoGraph, reductions: int = 0, penalty=1) -> Fraction:
    """Exact rank score; each applied reduction multiplies it by ``penalty``."""
    base = Fraction(graph_size(query), graph_size(figure))
    return base * Fraction(penalty) ** reductions


@dataclass(frozen=True)
class MatchResult:
    figure_id: str
    score: Fraction
    figure_size: int
    embeddings: tuple[dict, ...] = ()
    reductions: tuple = ()
    title: str = ""
    labelled_embeddings: tuple[dict, ...] = field(default=(), compare=False)


def rank(results: Iterable[MatchResult]) -> list[MatchResult]:
    """Highest score first, then smaller figure, then figure id."""
    return sorted(results, key=lambda r: (-r.score, r.figure_size, r.figure_id))
