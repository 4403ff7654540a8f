"""Query answering: compile, search the store, and weaken the query on failure.

While a search finds nothing, the next action of the bottom-up reduction
plan is applied to the query graph and the search is repeated.  The loop
stops at the first reduction depth with any match, when the plan runs out,
or after ``max_reductions`` actions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .construction import Figure, compile_figure
from .corpus import CompiledStore
from .cql import compile_query
from .inference import CONSTRAINED_ONLY, infer
from .lattice import Query, ReductionAction, StaleAction, apply_reduction, build_lattice, reduction_sequence
from .matcher import find_embeddings, labelled
from .ontology import OntoGraph, kind_census
from .ranking import MatchResult, graph_size, rank, score


class Status(enum.Enum):
    MATCHED = "matched"
    NO_MATCH = "no-match"
    EXHAUSTED = "exhausted"


@dataclass(frozen=True)
class Answer:
    results: tuple[MatchResult, ...]
    log: tuple[ReductionAction, ...]
    status: Status
    query: Query

    @property
    def matched(self) -> bool:
        return self.status is Status.MATCHED


def compile_source(source: str | Figure) -> Query:
    """CQL text or a Figure to a query graph with constrained-only inference."""
    if isinstance(source, str):
        figure = compile_query(source)
        text = source
    else:
        figure = source
        text = None
    graph = infer(compile_figure(figure), CONSTRAINED_ONLY)
    return Query(figure, graph, source=text)


def search_corpus(
    query: OntoGraph,
    store: CompiledStore,
    limit: int = 10,
    loose_linear: bool = False,
    reductions: tuple = (),
    penalty=1,
) -> list[MatchResult]:
    """Ranked results for every stored figure that contains ``query``."""
    census = kind_census(query)
    results = []
    for stored in store:
        if not census.fits_in(stored.census, loose_linear):
            continue
        found = find_embeddings(query, stored.graph, limit, loose_linear)
        if not found:
            continue
        results.append(
            MatchResult(
                figure_id=stored.figure.id,
                score=score(query, stored.graph, len(reductions), penalty),
                figure_size=graph_size(stored.graph),
                embeddings=tuple(found),
                reductions=tuple(reductions),
                title=stored.figure.title,
                labelled_embeddings=tuple(labelled(query, e, stored.graph) for e in found),
            )
        )
    return rank(results)


def answer_query(
    source: str | Figure,
    store: CompiledStore,
    max_reductions: int = 32,
    limit: int = 10,
    loose_linear: bool = False,
    penalty=1,
) -> Answer:
    """Search, reducing the query one action at a time until something matches.

    Actions whose target an earlier action already removed are skipped
    without a search and are not logged.
    """
    if max_reductions < 0:
        raise ValueError("max_reductions must be non-negative")
    query = compile_source(source)
    results = search_corpus(query.graph, store, limit, loose_linear)
    if results:
        return Answer(tuple(results), (), Status.MATCHED, query)
    if max_reductions == 0:
        return Answer((), (), Status.NO_MATCH, query)
    lattice = build_lattice(query.figure)
    query = Query(query.figure, query.graph, lattice, (), query.source)
    for action in reduction_sequence(lattice, query.graph):
        try:
            query = apply_reduction(query, action)
        except StaleAction:
            continue
        results = search_corpus(query.graph, store, limit, loose_linear, query.log, penalty)
        if results:
            return Answer(tuple(results), query.log, Status.MATCHED, query)
        if len(query.log) >= max_reductions:
            return Answer((), query.log, Status.NO_MATCH, query)
    return Answer((), query.log, Status.EXHAUSTED, query)
