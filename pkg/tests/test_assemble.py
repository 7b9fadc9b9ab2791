"""Result assembly: joining record edges into complete sub-graphs."""

from __future__ import annotations

import pytest

from fedkg.assemble import ResultGraph, assemble, query_oriented_pair
from fedkg.executor import RecordEdge
from fedkg.planner import FORWARD, REVERSE
from fedkg.query import parse_query
from fedkg.resolve import EntityRecord, self_record


def wrap(nodes: dict, edges: dict) -> dict:
    return {"message": {"query_graph": {"nodes": nodes, "edges": edges}}}


def entity(canonical, *equivalents, label=""):
    return EntityRecord(
        canonical_id=canonical,
        equivalent_ids=(canonical, *equivalents),
        label=label or canonical,
    )


def record(qedge_id, subject, obj, direction=FORWARD, api_id="api", predicate="rel"):
    return RecordEdge(
        qedge_id=qedge_id,
        direction=direction,
        subject=subject,
        predicate=predicate,
        object=obj,
        api_id=api_id,
        source=f"infores:{api_id}",
    )


TWO_HOP = parse_query(
    wrap(
        {
            "n0": {"ids": ["D:1"]},
            "n1": {"categories": ["Gene"]},
            "n2": {"categories": ["Chem"]},
        },
        {
            "e0": {"subject": "n0", "object": "n1"},
            "e1": {"subject": "n1", "object": "n2"},
        },
    )
)

D1 = entity("D:1")
G1 = entity("G:1")
G2 = entity("G:2")
C1 = entity("C:1")
C2 = entity("C:2")


def test_query_oriented_pair():
    forward = record("e0", D1, G1, direction=FORWARD)
    reverse = record("e0", G1, D1, direction=REVERSE)
    assert query_oriented_pair(forward) == ("D:1", "G:1")
    assert query_oriented_pair(reverse) == ("D:1", "G:1")


def test_single_chain():
    results = assemble(
        {"e0": [record("e0", D1, G1)], "e1": [record("e1", G1, C1)]}, TWO_HOP
    )
    assert len(results) == 1
    result = results[0]
    assert result.binding_key() == ("D:1", "G:1", "C:1")
    assert result.node("n1") == G1
    assert len(result.edge_records("e0")) == 1
    assert result.score is None


def test_join_requires_shared_entity():
    # e1's record hangs off a different gene: no complete assignment exists
    results = assemble(
        {"e0": [record("e0", D1, G1)], "e1": [record("e1", G2, C1)]}, TWO_HOP
    )
    assert results == []


def test_branching_yields_multiple_results():
    results = assemble(
        {
            "e0": [record("e0", D1, G1)],
            "e1": [record("e1", G1, C1), record("e1", G1, C2)],
        },
        TWO_HOP,
    )
    assert [r.binding_key() for r in results] == [
        ("D:1", "G:1", "C:1"),
        ("D:1", "G:1", "C:2"),
    ]


def test_results_sorted_lexicographically_by_binding_key():
    results = assemble(
        {
            "e0": [record("e0", D1, G2), record("e0", D1, G1)],
            "e1": [
                record("e1", G2, C2),
                record("e1", G1, C2),
                record("e1", G2, C1),
                record("e1", G1, C1),
            ],
        },
        TWO_HOP,
    )
    keys = [r.binding_key() for r in results]
    assert keys == sorted(keys)
    assert len(results) == 4


def test_parallel_records_merge_into_one_binding():
    # the same assertion from two APIs supports one result, not two
    results = assemble(
        {
            "e0": [
                record("e0", D1, G1, api_id="ctd"),
                record("e0", D1, G1, api_id="biolink"),
            ],
            "e1": [record("e1", G1, C1)],
        },
        TWO_HOP,
    )
    assert len(results) == 1
    assert [r.api_id for r in results[0].edge_records("e0")] == ["ctd", "biolink"]


def test_canonical_join_across_namespaces():
    # records name the gene differently; they join on the canonical id
    gene_a = entity("NCBIGene:55768", "ENSEMBL:ENSG1")
    gene_b = entity("NCBIGene:55768", "ENSEMBL:ENSG1")
    results = assemble(
        {
            "e0": [record("e0", D1, gene_a)],
            "e1": [record("e1", gene_b, C1)],
        },
        TWO_HOP,
    )
    assert len(results) == 1
    assert results[0].node("n1").canonical_id == "NCBIGene:55768"


def test_reverse_records_join_in_query_orientation():
    # e1 was served in reverse: the op consumed the chemical and emitted the
    # gene, so the record's stored subject is the chemical-side input
    results = assemble(
        {
            "e0": [record("e0", D1, G1)],
            "e1": [record("e1", C1, G1, direction=REVERSE)],
        },
        TWO_HOP,
    )
    assert len(results) == 1
    assert results[0].binding_key() == ("D:1", "G:1", "C:1")


def test_missing_edge_entry_raises():
    with pytest.raises(KeyError):
        assemble({"e0": []}, TWO_HOP)


def test_empty_edge_records_yield_no_results():
    assert assemble({"e0": [], "e1": [record("e1", G1, C1)]}, TWO_HOP) == []


def test_triangle_requires_all_three_edges():
    qg = parse_query(
        wrap(
            {"n0": {"ids": ["D:1"]}, "n1": {}, "n2": {}},
            {
                "e0": {"subject": "n0", "object": "n1"},
                "e1": {"subject": "n0", "object": "n2"},
                "e2": {"subject": "n1", "object": "n2"},
            },
        )
    )
    base = {
        "e0": [record("e0", D1, G1), record("e0", D1, G2)],
        "e1": [record("e1", D1, C1)],
    }
    # only G1 connects to C1 on the closing edge
    results = assemble({**base, "e2": [record("e2", G1, C1)]}, qg)
    assert [r.binding_key() for r in results] == [("D:1", "G:1", "C:1")]
    # no closing edge support at all: nothing assembles
    assert assemble({**base, "e2": []}, qg) == []


def test_zero_edge_query_uses_pinned_entities():
    qg = parse_query(wrap({"n0": {"ids": ["D:1", "D:2"]}}, {}))
    resolved = entity("D:canonical", "D:1", label="thing")
    results = assemble({}, qg, pinned_entities={"n0": [resolved]})
    assert len(results) == 1
    assert results[0].node_bindings == (("n0", resolved),)
    assert results[0].edge_bindings == ()


def test_zero_edge_query_falls_back_to_self_records():
    qg = parse_query(wrap({"n0": {"ids": ["D:2", "D:1"]}}, {}))
    results = assemble({}, qg)
    assert [r.binding_key() for r in results] == [("D:1",), ("D:2",)]
    assert results[0].node("n0") == self_record("D:1")


def test_zero_edge_query_dedupes_on_canonical():
    qg = parse_query(wrap({"n0": {"ids": ["D:1", "D:2"]}}, {}))
    same = entity("D:x", "D:1", "D:2")
    results = assemble({}, qg, pinned_entities={"n0": [same, same]})
    assert len(results) == 1


def test_result_graph_lookups():
    result = ResultGraph(
        node_bindings=(("n0", D1),),
        edge_bindings=(("e0", (record("e0", D1, G1),)),),
    )
    assert result.node("n0") == D1
    assert result.edge_records("e0")[0].object == G1
    with pytest.raises(KeyError):
        result.node("nx")
    with pytest.raises(KeyError):
        result.edge_records("ex")
