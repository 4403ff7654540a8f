import random
from fractions import Fraction

from hypothesis import given, strategies as st

from figsearch.corpus import ingest
from figsearch.engine import answer_query, compile_source, search_corpus
from figsearch.ranking import MatchResult, graph_size, rank, score, size_ratio

from conftest import SAMPLE_QUERY


def test_size_ratio_is_exact():
    assert size_ratio(3, 2, 10, 5) == Fraction(1, 3)
    assert isinstance(size_ratio(1, 1, 3, 4), Fraction)


def test_identical_graph_scores_one(store):
    graph = store["013"].graph
    assert score(graph, graph) == 1


def test_inferred_edges_do_not_count(store):
    # figure 022 carries a perpendicular derived by closure
    graph = store["022"].graph
    assert set(graph.explicit_edges()) < graph.edges
    assert graph_size(graph) == len(graph.nodes) + len(graph.explicit_edges())


def test_penalty_applies_per_reduction(store):
    graph = store["013"].graph
    assert score(graph, graph, reductions=2, penalty=Fraction(1, 2)) == Fraction(1, 4)
    assert score(graph, graph, reductions=2) == 1


def test_smaller_figure_ranks_first(store):
    answer = answer_query("M is the midpoint of B-C ; draw A-B, A-C, B-C, A-M.", store)
    ids = [r.figure_id for r in answer.results]
    assert ids == ["002", "021", "013"]
    sizes = [r.figure_size for r in answer.results]
    assert sizes == sorted(sizes) and len(set(sizes)) == 3
    assert all(isinstance(r.score, Fraction) for r in answer.results)
    scores = [r.score for r in answer.results]
    assert scores == sorted(scores, reverse=True)


def test_ties_break_on_size_then_id():
    a = MatchResult("b", Fraction(1, 2), 10)
    b = MatchResult("a", Fraction(1, 2), 10)
    c = MatchResult("c", Fraction(1, 2), 8)
    d = MatchResult("d", Fraction(2, 3), 30)
    assert [r.figure_id for r in rank([a, b, c, d])] == ["d", "c", "a", "b"]


@given(st.lists(st.tuples(st.integers(1, 9), st.integers(1, 9), st.integers(1, 40)), max_size=12), st.randoms())
def test_rank_is_permutation_invariant(items, rnd):
    results = [MatchResult(f"{i:03d}", Fraction(p, p + q), size) for i, (p, q, size) in enumerate(items)]
    shuffled = results[:]
    rnd.shuffle(shuffled)
    assert rank(shuffled) == rank(results)


def test_search_order_ignores_corpus_order(corpus):
    query = compile_source("draw A-B, B-C, A-C.").graph
    baseline = search_corpus(query, ingest(corpus), limit=1)
    rnd = random.Random(3)
    for _ in range(5):
        shuffled = corpus[:]
        rnd.shuffle(shuffled)
        assert search_corpus(query, ingest(shuffled), limit=1) == baseline
    assert len(baseline) > 2


def test_sample_query_tops_with_score_one(store):
    answer = answer_query(SAMPLE_QUERY, store)
    assert answer.results[0].figure_id == "013"
    assert answer.results[0].score == 1
