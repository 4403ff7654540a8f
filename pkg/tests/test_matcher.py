import random
import time

import pytest

from figsearch.construction import compile_figure
from figsearch.inference import infer
from figsearch.matcher import count_embeddings, find_embeddings, is_embedding, query_order
from figsearch.ontology import (
    ARMS,
    RIGHT,
    SYMMETRIC,
    UNCONSTRAINED,
    Concept,
    ConceptKind,
    GraphBuilder,
    OntoGraph,
    Ratio,
    RelationKind,
)

from conftest import medians_figure

BT = RelationKind.BELONGS_TO
KINDS = [ConceptKind.POINT, ConceptKind.SEGMENT, ConceptKind.LINE, ConceptKind.CIRCLE]


def random_graph(rnd, n_nodes, n_edges, prefix="n", max_total=None):
    b = GraphBuilder()
    names = [f"{prefix}{i:02d}" for i in range(n_nodes)]
    for name in names:
        kind = rnd.choice(KINDS + [ConceptKind.POINT, ConceptKind.SEGMENT])
        b.add_node(name, Concept(kind))
    for _ in range(n_edges if n_nodes > 1 else 0):
        a, c = rnd.sample(names, 2)
        ka, kc = b.nodes[a].kind, b.nodes[c].kind
        options = []
        if ka is ConceptKind.POINT and kc is not ConceptKind.POINT:
            options += [BT, BT]
        if ka is ConceptKind.SEGMENT and kc is ConceptKind.LINE:
            options.append(BT)
        if ka is ConceptKind.POINT and kc is ConceptKind.CIRCLE:
            options.append(RelationKind.IS_CENTER_OF)
        if ka is ConceptKind.SEGMENT and kc is ConceptKind.CIRCLE:
            options.append(RelationKind.IS_RADIUS_OF)
        if ka in (ConceptKind.SEGMENT, ConceptKind.LINE) and kc in (ConceptKind.SEGMENT, ConceptKind.LINE):
            options += [RelationKind.IS_PARALLEL_TO, RelationKind.IS_PERPENDICULAR_TO]
        room = max_total is None or len(b.nodes) < max_total
        if ka is kc is ConceptKind.SEGMENT and room and rnd.random() < 0.3:
            b.add_ratio(a, c, 1)
            continue
        if options:
            b.add_relation(a, c, rnd.choice(options))
    return b.build()


def random_subquery(rnd, figure, max_nodes):
    """A relabelled random induced piece of ``figure`` with some edges dropped."""
    concepts = [n for n in figure.nodes if not isinstance(figure.nodes[n], Ratio)]
    keep = set(rnd.sample(concepts, min(len(concepts), rnd.randint(1, max_nodes))))
    ratios = [r for r in figure.ratio_nodes() if set(figure.arms(r)) <= keep]
    for r in ratios:
        if len(keep) < max_nodes:
            keep.add(r)
    drop_edges = [e for e in figure.edges if e.kind not in ARMS and rnd.random() < 0.2]
    piece = figure.without(nodes=set(figure.nodes) - keep, edges=drop_edges)
    rename = {n: f"q{i:02d}" for i, n in enumerate(rnd.sample(sorted(piece.nodes), len(piece.nodes)))}
    return relabel(piece, rename)


def relabel(graph, rename):
    b = GraphBuilder()
    for n, p in graph.nodes.items():
        if not isinstance(p, Ratio):
            b.add_node(rename[n], p)
    for r in graph.ratio_nodes():
        nom, den = graph.arms(r)
        b.add_ratio(rename[nom], rename[den], graph.nodes[r].value, node=rename[r])
    for e in graph.edges:
        if e.kind not in ARMS:
            b.add_relation(rename[e.src], rename[e.dst], e.kind)
    return b.build()


def oracle_embeddings(query, figure):
    """Every injective kind-, attribute- and edge-preserving map, by plain enumeration."""
    fedges = {(e.src, e.dst, e.kind) for e in figure.edges}

    def node_ok(q, f):
        a, b = query.nodes[q], figure.nodes[f]
        if isinstance(a, Ratio) or isinstance(b, Ratio):
            return isinstance(a, Ratio) and isinstance(b, Ratio) and a.value == b.value
        if a.kind is not b.kind:
            return False
        return a.angle is None or a.angle.tag == "unconstrained" or a.angle == b.angle

    def edge_ok(e, m):
        s, d = m[e.src], m[e.dst]
        if e.kind in SYMMETRIC:
            return (s, d, e.kind) in fedges or (d, s, e.kind) in fedges
        if e.kind in ARMS and query.nodes[e.src].value == 1:
            return any((s, d, k) in fedges for k in ARMS)
        return (s, d, e.kind) in fedges

    order = sorted(query.nodes)
    results = []

    def extend(i, m, used):
        if i == len(order):
            if all(edge_ok(e, m) for e in query.edges):
                results.append(dict(m))
            return
        q = order[i]
        for f in sorted(figure.nodes):
            if f in used or not node_ok(q, f):
                continue
            m[q] = f
            placed = set(order[: i + 1])
            if all(edge_ok(e, m) for e in query.edges if e.src in placed and e.dst in placed):
                used.add(f)
                extend(i + 1, m, used)
                used.discard(f)
            del m[q]

    extend(0, {}, set())
    return results


def as_set(embeddings):
    return {frozenset(e.items()) for e in embeddings}


def test_matcher_equals_exhaustive_enumeration_on_500_cases():
    rnd = random.Random(7)
    start = time.perf_counter()
    mismatches = 0
    nonempty = 0
    for case in range(500):
        figure = random_graph(rnd, rnd.randint(3, 14), rnd.randint(0, 24), max_total=14)
        if case % 3 == 0:
            query = random_graph(rnd, rnd.randint(1, 8), rnd.randint(0, 10), prefix="q", max_total=8)
        else:
            query = random_subquery(rnd, figure, 8)
        assert len(query.nodes) <= 8
        found = find_embeddings(query, figure, limit=10**6)
        expected = oracle_embeddings(query, figure)
        nonempty += bool(expected)
        mismatches += as_set(found) != as_set(expected)
        assert all(is_embedding(query, figure, e) for e in found)
    assert mismatches == 0
    assert nonempty > 250
    assert time.perf_counter() - start < 60


def test_label_permutation_invariance_on_100_cases():
    rnd = random.Random(11)
    for _ in range(100):
        figure = random_graph(rnd, rnd.randint(3, 12), rnd.randint(2, 20))
        query = random_subquery(rnd, figure, 6)
        names = sorted(figure.nodes)
        shuffled = rnd.sample(names, len(names))
        rename = {n: f"z{shuffled.index(n):02d}" for n in names}
        moved = relabel(figure, rename)
        qnames = sorted(query.nodes)
        qrename = dict(zip(qnames, rnd.sample([f"p{i:02d}" for i in range(len(qnames))], len(qnames))))
        moved_query = relabel(query, qrename)
        base = as_set(find_embeddings(query, figure, limit=10**6))
        after = as_set(find_embeddings(moved_query, moved, limit=10**6))
        mapped = {frozenset((qrename[q], rename[f]) for q, f in e) for e in base}
        assert after == mapped


def test_limit_truncates_deterministically():
    g = infer(compile_figure(medians_figure()))
    all_of_them = find_embeddings(g, g, limit=100)
    assert len(all_of_them) == 2  # identity and the reflection swapping B and C
    assert find_embeddings(g, g, limit=1) == all_of_them[:1]
    assert count_embeddings(g, g) == 2
    with pytest.raises(ValueError):
        find_embeddings(g, g, limit=0)


def test_empty_query_embeds_once():
    assert find_embeddings(OntoGraph(), OntoGraph()) == [{}]


def test_census_prunes_figures_with_too_few_nodes():
    q = OntoGraph({"a": Concept(ConceptKind.CIRCLE)})
    f = OntoGraph({"p": Concept(ConceptKind.POINT)})
    assert find_embeddings(q, f) == []


def test_non_induced_matching_allows_extra_figure_edges():
    b = GraphBuilder()
    for n in ("A", "B"):
        b.add_node(n, Concept(ConceptKind.POINT))
    b.add_node("s", Concept(ConceptKind.SEGMENT))
    b.add_relation("A", "s", BT)
    query = b.build()
    b.add_relation("B", "s", BT)
    figure = b.build()
    assert len(find_embeddings(query, figure)) == 2


def test_symmetric_and_ratio_edges_match_in_either_direction():
    b = GraphBuilder()
    b.add_node("x", Concept(ConceptKind.SEGMENT))
    b.add_node("y", Concept(ConceptKind.LINE))
    b.add_relation("x", "y", RelationKind.IS_PARALLEL_TO)
    b.add_node("u", Concept(ConceptKind.SEGMENT))
    b.add_ratio("x", "u", 1, node="r")
    figure = b.build()
    q = GraphBuilder()
    q.add_node("u", Concept(ConceptKind.SEGMENT))
    q.add_node("x", Concept(ConceptKind.SEGMENT))
    q.add_ratio("u", "x", 1, node="r")
    assert len(find_embeddings(q.build(), figure)) == 2


def test_right_angle_query_needs_right_angle():
    right = OntoGraph({"a": Concept(ConceptKind.ANGLE, angle=RIGHT)})
    free = OntoGraph({"a": Concept(ConceptKind.ANGLE, angle=UNCONSTRAINED)})
    assert find_embeddings(free, right) == [{"a": "a"}]
    assert find_embeddings(right, free) == []


def test_loose_linear_lets_segments_match_lines():
    q = OntoGraph({"s": Concept(ConceptKind.SEGMENT)})
    f = OntoGraph({"l": Concept(ConceptKind.LINE)})
    assert find_embeddings(q, f) == []
    assert find_embeddings(q, f, loose_linear=True) == [{"s": "l"}]


def test_query_order_is_connected_first():
    g = infer(compile_figure(medians_figure()))
    order = query_order(g)
    assert sorted(order) == sorted(g.nodes)
    neighbours = {n: set() for n in g.nodes}
    for e in g.edges:
        neighbours[e.src].add(e.dst)
        neighbours[e.dst].add(e.src)
    for i, n in enumerate(order[1:], 1):
        assert neighbours[n] & set(order[:i])
