"""Assembly: join per-edge records into complete result sub-graphs.

A result binds every query node to one entity and every query edge to the
records connecting its two bound entities. Entities join on canonical
identifier, so records from different APIs in different namespaces merge
when they resolve to the same thing.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Sequence

from .executor import RecordEdge
from .planner import FORWARD
from .query import QueryGraph
from .resolve import EntityRecord, self_record

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ResultGraph:
    """One complete match: node bindings, edge support, optional score."""

    node_bindings: tuple[tuple[str, EntityRecord], ...]
    edge_bindings: tuple[tuple[str, tuple[RecordEdge, ...]], ...]
    score: float | None = None

    def node(self, qnode_id: str) -> EntityRecord:
        for nid, record in self.node_bindings:
            if nid == qnode_id:
                return record
        raise KeyError(qnode_id)

    def edge_records(self, qedge_id: str) -> tuple[RecordEdge, ...]:
        for eid, records in self.edge_bindings:
            if eid == qedge_id:
                return records
        raise KeyError(qedge_id)

    def binding_key(self) -> tuple[str, ...]:
        """Canonical ids in query-node-id order; the tie-break sort key."""
        return tuple(
            record.canonical_id
            for _, record in sorted(self.node_bindings, key=lambda kv: kv[0])
        )


def query_oriented_pair(record: RecordEdge) -> tuple[str, str]:
    """(subject, object) canonical ids as the query edge reads them."""
    if record.direction == FORWARD:
        return (record.subject.canonical_id, record.object.canonical_id)
    return (record.object.canonical_id, record.subject.canonical_id)


def assemble(
    records: Mapping[str, Sequence[RecordEdge]],
    qg: QueryGraph,
    pinned_entities: Mapping[str, Sequence[EntityRecord]] | None = None,
) -> list[ResultGraph]:
    """Enumerate every complete, edge-supported assignment.

    ``records`` must have an entry (possibly empty) for every query edge.
    ``pinned_entities`` supplies the entities behind pinned nodes; it is
    only consulted for queries with no edges, where each pinned entity
    yields one single-node result.
    """
    edge_ids = qg.edge_ids()
    for eid in edge_ids:
        if eid not in records:
            raise KeyError(f"no record list for query edge {eid!r}")

    if not edge_ids:
        return _assemble_nodes_only(qg, pinned_entities)

    # canonical id -> representative record, first occurrence wins
    representative: dict[str, EntityRecord] = {}

    def remember(record: EntityRecord) -> None:
        representative.setdefault(record.canonical_id, record)

    # per edge: (subject canonical, object canonical) -> supporting records
    support: dict[str, dict[tuple[str, str], list[RecordEdge]]] = {}
    for eid in edge_ids:
        pairs: dict[tuple[str, str], list[RecordEdge]] = {}
        for record in records[eid]:
            remember(record.subject)
            remember(record.object)
            pairs.setdefault(query_oriented_pair(record), []).append(record)
        support[eid] = pairs

    # candidate entities per node: intersection over incident edges
    node_order = qg.node_ids()
    candidates: dict[str, set[str]] = {}
    for nid in node_order:
        sets: list[set[str]] = []
        for e in qg.edges:
            pairs = support[e.qedge_id]
            if e.subject == nid:
                sets.append({s for s, _ in pairs})
            if e.object == nid:
                sets.append({o for _, o in pairs})
        if not sets:
            candidates[nid] = set()
        else:
            common = sets[0]
            for s in sets[1:]:
                common = common & s
            candidates[nid] = common

    if any(not candidates[nid] for nid in node_order):
        return []

    results: list[ResultGraph] = []
    assignment: dict[str, str] = {}

    def consistent(nid: str) -> bool:
        for e in qg.edges:
            if e.subject in assignment and e.object in assignment:
                if nid in (e.subject, e.object):
                    pair = (assignment[e.subject], assignment[e.object])
                    if pair not in support[e.qedge_id]:
                        return False
        return True

    def descend(index: int) -> None:
        if index == len(node_order):
            node_bindings = tuple(
                (nid, representative[assignment[nid]]) for nid in node_order
            )
            edge_bindings = tuple(
                (
                    eid,
                    tuple(
                        support[eid][
                            (assignment[qg.edge(eid).subject], assignment[qg.edge(eid).object])
                        ]
                    ),
                )
                for eid in edge_ids
            )
            results.append(ResultGraph(node_bindings, edge_bindings))
            return
        nid = node_order[index]
        for canonical in sorted(candidates[nid]):
            assignment[nid] = canonical
            if consistent(nid):
                descend(index + 1)
            del assignment[nid]

    descend(0)
    # nodes enumerated in sorted id order with ascending candidates, so
    # results are already lexicographic by binding key
    return results


def _assemble_nodes_only(
    qg: QueryGraph,
    pinned_entities: Mapping[str, Sequence[EntityRecord]] | None,
) -> list[ResultGraph]:
    # a valid edgeless query has exactly one node, and it is pinned
    results: list[ResultGraph] = []
    for qnode in qg.nodes:
        entities: list[EntityRecord] = []
        if pinned_entities is not None and qnode.qnode_id in pinned_entities:
            entities = list(pinned_entities[qnode.qnode_id])
        elif qnode.ids:
            entities = [self_record(curie) for curie in qnode.ids]
        seen: set[str] = set()
        for entity in entities:
            if entity.canonical_id in seen:
                continue
            seen.add(entity.canonical_id)
            results.append(ResultGraph(((qnode.qnode_id, entity),), ()))
    results.sort(key=lambda r: r.binding_key())
    return results
