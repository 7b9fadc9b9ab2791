"""Query parsing, validation, serialization, and execution ordering."""

from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fedkg.errors import QueryInvalid, QuerySyntax
from fedkg.query import (
    QueryGraph,
    is_curie,
    parse_query,
    plan_order,
    serialize_query,
    validate_query,
)


def wrap(nodes: dict, edges: dict | None = None) -> dict:
    graph: dict = {"nodes": nodes}
    if edges is not None:
        graph["edges"] = edges
    return {"message": {"query_graph": graph}}


TWO_HOP = wrap(
    {
        "n0": {"ids": ["MONDO:0014109"], "categories": ["Disease"]},
        "n1": {"categories": ["Gene"]},
        "n2": {"categories": ["ChemicalEntity"]},
    },
    {
        "e0": {"subject": "n0", "object": "n1"},
        "e1": {"subject": "n1", "object": "n2"},
    },
)


def test_parse_two_hop():
    qg = parse_query(TWO_HOP)
    assert qg.node_ids() == ("n0", "n1", "n2")
    assert qg.edge_ids() == ("e0", "e1")
    assert qg.node("n0").pinned
    assert not qg.node("n1").pinned
    assert qg.node("n1").ids is None
    assert qg.edge("e0").predicates is None


def test_missing_categories_means_wildcard():
    qg = parse_query(wrap({"n0": {"ids": ["X:1"]}}))
    assert qg.node("n0").categories is None


def test_extras_preserved_through_round_trip():
    doc = wrap(
        {"n0": {"ids": ["X:1"], "is_set": True}},
        {},
    )
    qg = parse_query(doc)
    assert dict(qg.node("n0").extras) == {"is_set": True}
    assert serialize_query(qg) == doc


def test_serialize_round_trip_two_hop():
    qg = parse_query(TWO_HOP)
    assert serialize_query(qg) == TWO_HOP
    assert parse_query(serialize_query(qg)) == qg


@pytest.mark.parametrize(
    "document",
    [
        None,
        [],
        {},
        {"message": None},
        {"message": {}},
        {"message": {"query_graph": {}}},
        {"message": {"query_graph": {"nodes": []}}},
    ],
)
def test_structural_errors(document):
    with pytest.raises(QuerySyntax):
        parse_query(document)


def test_edge_requires_endpoints():
    with pytest.raises(QuerySyntax):
        parse_query(wrap({"n0": {"ids": ["X:1"]}}, {"e0": {"subject": "n0"}}))


def test_ids_must_be_strings():
    with pytest.raises(QuerySyntax):
        parse_query(wrap({"n0": {"ids": [1]}}))


def invalid_codes(document) -> set[str]:
    with pytest.raises(QueryInvalid) as exc:
        parse_query(document)
    return {v.code for v in exc.value.violations}


def test_bad_curie():
    assert "BadCurie" in invalid_codes(wrap({"n0": {"ids": ["no-colon"]}}))


def test_no_pinned_node():
    assert "NoPinnedNode" in invalid_codes(wrap({"n0": {"categories": ["Gene"]}}))


def test_dangling_edge_ref():
    assert "DanglingEdgeRef" in invalid_codes(
        wrap({"n0": {"ids": ["X:1"]}}, {"e0": {"subject": "n0", "object": "n9"}})
    )


def test_self_loop():
    assert "SelfLoop" in invalid_codes(
        wrap({"n0": {"ids": ["X:1"]}}, {"e0": {"subject": "n0", "object": "n0"}})
    )


def test_disconnected():
    assert "Disconnected" in invalid_codes(
        wrap({"n0": {"ids": ["X:1"]}, "n1": {"categories": ["Gene"]}}, {})
    )


def test_empty_query():
    assert "EmptyQuery" in invalid_codes(wrap({}))


def test_single_pinned_node_is_valid():
    qg = parse_query(wrap({"n0": {"ids": ["X:1"]}}))
    assert qg.edges == ()
    assert plan_order(qg).steps == ()


def test_is_curie():
    assert is_curie("MONDO:0014109")
    assert is_curie("DBSNP:rs121913527")
    assert not is_curie("nocolon")
    assert not is_curie("trailing:")
    assert not is_curie(123)


def test_plan_order_two_hop():
    qg = parse_query(TWO_HOP)
    assert plan_order(qg).steps == (("e0", "n0"), ("e1", "n1"))


def test_plan_order_reverse_start():
    # the pinned node sits on the object side of the only edge
    doc = wrap(
        {"n0": {"categories": ["Gene"]}, "n1": {"ids": ["X:1"]}},
        {"e0": {"subject": "n0", "object": "n1"}},
    )
    assert plan_order(parse_query(doc)).steps == (("e0", "n1"),)


def test_plan_order_constraint_edge_starts_from_subject():
    # triangle: e2 runs last with both ends bound, so it starts at its subject
    doc = wrap(
        {
            "n0": {"ids": ["X:1"]},
            "n1": {"categories": ["Gene"]},
            "n2": {"categories": ["Gene"]},
        },
        {
            "e0": {"subject": "n0", "object": "n1"},
            "e1": {"subject": "n0", "object": "n2"},
            "e2": {"subject": "n2", "object": "n1"},
        },
    )
    assert plan_order(parse_query(doc)).steps == (
        ("e0", "n0"),
        ("e1", "n0"),
        ("e2", "n2"),
    )


def test_plan_order_prefers_smaller_edge_id():
    doc = wrap(
        {"n0": {"ids": ["X:1"]}, "n1": {}, "n2": {}},
        {
            "e9": {"subject": "n0", "object": "n1"},
            "e1": {"subject": "n0", "object": "n2"},
        },
    )
    assert [eid for eid, _ in plan_order(parse_query(doc)).steps] == ["e1", "e9"]


def _check_order_invariants(qg: QueryGraph) -> None:
    order = plan_order(qg)
    assert sorted(eid for eid, _ in order.steps) == list(qg.edge_ids())
    bound = {n.qnode_id for n in qg.pinned_nodes()}
    for eid, start in order.steps:
        edge = qg.edge(eid)
        assert start in (edge.subject, edge.object)
        assert start in bound, f"step for {eid} starts at unbound {start}"
        bound.add(edge.subject)
        bound.add(edge.object)


@given(st.data())
def test_plan_order_invariants_on_random_connected_graphs(data):
    n_nodes = data.draw(st.integers(2, 6), label="n_nodes")
    node_ids = [f"n{i}" for i in range(n_nodes)]
    # random spanning tree keeps the graph connected
    edges = {}
    for i in range(1, n_nodes):
        parent = data.draw(st.integers(0, i - 1), label=f"parent{i}")
        flip = data.draw(st.booleans(), label=f"flip{i}")
        subject, obj = (node_ids[parent], node_ids[i])
        if flip:
            subject, obj = obj, subject
        edges[f"e{len(edges)}"] = {"subject": subject, "object": obj}
    extra = data.draw(st.integers(0, 2), label="extra")
    for _ in range(extra):
        a = data.draw(st.integers(0, n_nodes - 1), label="a")
        b = data.draw(st.integers(0, n_nodes - 1), label="b")
        if a != b:
            key = f"e{len(edges)}"
            edges[key] = {"subject": node_ids[a], "object": node_ids[b]}
    pinned = data.draw(st.integers(0, n_nodes - 1), label="pinned")
    nodes = {
        nid: ({"ids": ["X:1"]} if i == pinned else {})
        for i, nid in enumerate(node_ids)
    }
    qg = parse_query(wrap(nodes, edges))
    _check_order_invariants(qg)


def test_validate_query_direct():
    qg = parse_query(TWO_HOP)
    assert validate_query(qg) == []
