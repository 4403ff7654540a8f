import pickle
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from figsearch.ontology import (
    RIGHT,
    STRAIGHT,
    UNCONSTRAINED,
    AngleValue,
    Concept,
    ConceptKind,
    DomainViolation,
    Edge,
    GraphBuilder,
    OntoGraph,
    RelationKind,
    UnknownNode,
    add_concept,
    add_ratio,
    add_relation,
    graph_problems,
    graph_to_dot,
    kind_census,
)

P = Concept(ConceptKind.POINT)
S = Concept(ConceptKind.SEGMENT)
L = Concept(ConceptKind.LINE)
C = Concept(ConceptKind.CIRCLE)
BT = RelationKind.BELONGS_TO


def small_graph():
    b = GraphBuilder()
    for n in "AB":
        b.add_node(n, P, 0)
    b.add_node("A-B", S, 1)
    b.add_node("l", L, 2)
    b.add_node("m", L, 3)
    b.add_relation("A", "A-B", BT, 1)
    b.add_relation("B", "A-B", BT, 1)
    b.add_relation("A-B", "l", BT, 2)
    b.add_relation("m", "l", RelationKind.IS_PERPENDICULAR_TO, 3)
    return b.build()


def test_angle_value_normalizes_right_and_straight():
    assert AngleValue.numeric(90) is RIGHT
    assert AngleValue.numeric(180) is STRAIGHT
    assert AngleValue.numeric("45/2").degrees == Fraction(45, 2)
    for bad in (0, 360, -5, 400):
        with pytest.raises(ValueError):
            AngleValue.numeric(bad)


def test_unconstrained_query_angle_accepts_any_value():
    assert UNCONSTRAINED.compatible_with(RIGHT)
    assert UNCONSTRAINED.compatible_with(AngleValue.numeric(30))
    assert not RIGHT.compatible_with(UNCONSTRAINED)
    assert RIGHT.compatible_with(RIGHT)


def test_angle_payload_requires_value():
    with pytest.raises(ValueError):
        Concept(ConceptKind.ANGLE)
    with pytest.raises(ValueError):
        Concept(ConceptKind.POINT, angle=RIGHT)


@pytest.mark.parametrize(
    "src, dst, kind",
    [
        (P, P, BT),
        (L, S, BT),
        (C, L, BT),
        (P, L, RelationKind.IS_PARALLEL_TO),
        (P, C, RelationKind.IS_RADIUS_OF),
        (S, C, RelationKind.IS_CENTER_OF),
    ],
)
def test_domain_violations_are_rejected(src, dst, kind):
    b = GraphBuilder()
    b.add_node("x", src)
    b.add_node("y", dst)
    with pytest.raises(DomainViolation):
        b.add_relation("x", "y", kind)


def test_allowed_domains():
    b = GraphBuilder()
    for n, p in {"A": P, "O": P, "s": S, "t": S, "l": L, "c": C}.items():
        b.add_node(n, p)
    b.add_relation("A", "s", BT)
    b.add_relation("s", "l", BT)
    b.add_relation("O", "c", RelationKind.IS_CENTER_OF)
    b.add_relation("t", "c", RelationKind.IS_RADIUS_OF)
    b.add_relation("s", "t", RelationKind.IS_PARALLEL_TO)
    b.add_relation("l", "s", RelationKind.IS_PERPENDICULAR_TO)
    assert graph_problems(b.build()) == []


def test_unknown_nodes_and_self_edges():
    b = GraphBuilder()
    b.add_node("A", P)
    with pytest.raises(UnknownNode):
        b.add_relation("A", "nope", BT)
    b.add_node("l", L)
    with pytest.raises(DomainViolation):
        b.add_relation("l", "l", RelationKind.IS_PARALLEL_TO)


def test_symmetric_edges_are_stored_once():
    g = small_graph()
    again = add_relation(g, "l", "m", RelationKind.IS_PERPENDICULAR_TO)
    assert again.edges == g.edges
    assert Edge("l", "m", RelationKind.IS_PERPENDICULAR_TO) in g


def test_add_relation_is_idempotent_and_keeps_first_provenance():
    g = small_graph()
    g2 = add_relation(g, "A", "A-B", BT, 9)
    assert g2 == g


def test_ratio_requires_same_kind_arms():
    g = add_concept(small_graph(), "B-C", S)
    g = add_concept(g, "C", P)
    r = add_ratio(g, "A-B", "B-C")
    (node,) = r.ratio_nodes()
    assert r.arms(node) == ("A-B", "B-C")
    with pytest.raises(DomainViolation):
        add_ratio(g, "A", "A-B")
    with pytest.raises(DomainViolation):
        add_ratio(g, "A-B", "A-B")


def test_arms_cannot_be_added_as_plain_relations():
    g = add_concept(small_graph(), "B-C", S)
    with pytest.raises(DomainViolation):
        add_relation(g, "A-B", "B-C", RelationKind.RATIO_NOMINATOR)


def test_without_drops_incident_edges_and_dangling_ratios():
    g = add_ratio(add_concept(small_graph(), "C-D", S), "A-B", "C-D", 1, 4)
    reduced = g.without(nodes=["C-D"])
    assert reduced.ratio_nodes() == []
    assert graph_problems(reduced) == []
    assert "A-B" in reduced
    no_l = g.without(nodes=["l"])
    assert all("l" not in (e.src, e.dst) for e in no_l.edges)


def test_census_and_fit():
    g = small_graph()
    census = kind_census(g)
    assert census[ConceptKind.POINT] == 2
    assert census[ConceptKind.LINE] == 2
    assert census[BT] == 3
    assert census.fits_in(census)
    smaller = kind_census(g.without(nodes=["m"]))
    assert smaller.fits_in(census)
    assert not census.fits_in(smaller)


def test_loose_linear_census_pools_lines_and_segments():
    seg_query = kind_census(OntoGraph({"x": S, "y": S}))
    figure = kind_census(OntoGraph({"x": S, "l": L}))
    assert not seg_query.fits_in(figure)
    assert seg_query.fits_in(figure, loose_linear=True)


def test_graph_is_immutable_and_picklable():
    g = small_graph()
    with pytest.raises(TypeError):
        g.nodes["Z"] = P
    assert pickle.loads(pickle.dumps(g)) == g


def test_dot_export_marks_highlighted_nodes():
    dot = graph_to_dot(small_graph(), highlight=["A"])
    assert '"A" [label="A", shape=ellipse, style=bold' in dot
    assert '"A-B" [label="A-B", shape=box];' in dot
    assert "dir=none" in dot


@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5)), max_size=20))
def test_builder_never_produces_invalid_graphs(pairs):
    b = GraphBuilder()
    for i in range(6):
        b.add_node(f"p{i}", P)
        b.add_node(f"s{i}", S)
    for a, c in pairs:
        b.add_relation(f"p{a}", f"s{c}", BT)
        if a != c:
            b.add_relation(f"s{a}", f"s{c}", RelationKind.IS_PARALLEL_TO)
    g = b.build()
    assert graph_problems(g) == []
    assert len(g.edges) == len(set(g.edges))
