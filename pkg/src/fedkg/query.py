"""Query graphs: the small pattern a caller wants matched against the APIs.

The wire shape nests under ``message.query_graph`` with ``nodes`` and
``edges`` mappings. Nodes may pin concrete identifiers (``ids``) and
constrain semantic types (``categories``); edges constrain ``predicates``.
Absent constraint lists mean unconstrained.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping

from .errors import QueryInvalid, QuerySyntax, Violation

# CURIE shape: a namespace prefix, a colon, a non-empty local part.
_CURIE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.\-]*:\S+$")


def is_curie(value: object) -> bool:
    return isinstance(value, str) and _CURIE.match(value) is not None


@dataclass(frozen=True)
class QNode:
    qnode_id: str
    ids: tuple[str, ...] | None = None
    categories: tuple[str, ...] | None = None
    extras: tuple[tuple[str, object], ...] = ()

    @property
    def pinned(self) -> bool:
        return bool(self.ids)


@dataclass(frozen=True)
class QEdge:
    qedge_id: str
    subject: str
    object: str
    predicates: tuple[str, ...] | None = None
    extras: tuple[tuple[str, object], ...] = ()


@dataclass(frozen=True)
class QueryGraph:
    nodes: tuple[QNode, ...]
    edges: tuple[QEdge, ...]

    def node(self, qnode_id: str) -> QNode:
        for n in self.nodes:
            if n.qnode_id == qnode_id:
                return n
        raise KeyError(qnode_id)

    def edge(self, qedge_id: str) -> QEdge:
        for e in self.edges:
            if e.qedge_id == qedge_id:
                return e
        raise KeyError(qedge_id)

    def node_ids(self) -> tuple[str, ...]:
        return tuple(sorted(n.qnode_id for n in self.nodes))

    def edge_ids(self) -> tuple[str, ...]:
        return tuple(sorted(e.qedge_id for e in self.edges))

    def pinned_nodes(self) -> tuple[QNode, ...]:
        return tuple(n for n in self.nodes if n.pinned)


@dataclass(frozen=True)
class ExecutionOrder:
    """Edge identifiers paired with the endpoint execution starts from."""

    steps: tuple[tuple[str, str], ...] = ()


def _string_list(value: object, path: str) -> tuple[str, ...]:
    if not isinstance(value, list):
        raise QuerySyntax(path, "must be a list of strings")
    for entry in value:
        if not isinstance(entry, str):
            raise QuerySyntax(path, "must be a list of strings")
    return tuple(value)


def parse_query(document: object) -> QueryGraph:
    """Parse and fully validate a query document.

    Raises QuerySyntax for structural problems and QueryInvalid (with every
    violation) for semantic ones.
    """
    if not isinstance(document, Mapping):
        raise QuerySyntax("", "query document must be a mapping")
    message = document.get("message")
    if not isinstance(message, Mapping):
        raise QuerySyntax("message", "missing or not a mapping")
    graph = message.get("query_graph")
    if not isinstance(graph, Mapping):
        raise QuerySyntax("message/query_graph", "missing or not a mapping")
    nodes_raw = graph.get("nodes")
    if not isinstance(nodes_raw, Mapping):
        raise QuerySyntax("message/query_graph/nodes", "missing or not a mapping")
    edges_raw = graph.get("edges", {})
    if not isinstance(edges_raw, Mapping):
        raise QuerySyntax("message/query_graph/edges", "must be a mapping")

    nodes: list[QNode] = []
    for qnode_id, raw in nodes_raw.items():
        path = f"message/query_graph/nodes/{qnode_id}"
        if not isinstance(qnode_id, str) or not qnode_id:
            raise QuerySyntax(path, "node key must be a non-empty string")
        if not isinstance(raw, Mapping):
            raise QuerySyntax(path, "node must be a mapping")
        ids = _string_list(raw["ids"], f"{path}/ids") if "ids" in raw else None
        categories = (
            _string_list(raw["categories"], f"{path}/categories")
            if "categories" in raw
            else None
        )
        extras = tuple(
            (k, raw[k]) for k in raw if k not in ("ids", "categories")
        )
        nodes.append(QNode(qnode_id, ids, categories, extras))

    edges: list[QEdge] = []
    for qedge_id, raw in edges_raw.items():
        path = f"message/query_graph/edges/{qedge_id}"
        if not isinstance(qedge_id, str) or not qedge_id:
            raise QuerySyntax(path, "edge key must be a non-empty string")
        if not isinstance(raw, Mapping):
            raise QuerySyntax(path, "edge must be a mapping")
        subject = raw.get("subject")
        obj = raw.get("object")
        if not isinstance(subject, str) or not subject:
            raise QuerySyntax(f"{path}/subject", "required string")
        if not isinstance(obj, str) or not obj:
            raise QuerySyntax(f"{path}/object", "required string")
        predicates = (
            _string_list(raw["predicates"], f"{path}/predicates")
            if "predicates" in raw
            else None
        )
        extras = tuple(
            (k, raw[k]) for k in raw if k not in ("subject", "object", "predicates")
        )
        edges.append(QEdge(qedge_id, subject, obj, predicates, extras))

    qg = QueryGraph(tuple(nodes), tuple(edges))
    violations = validate_query(qg)
    if violations:
        raise QueryInvalid(violations)
    return qg


def validate_query(qg: QueryGraph) -> list[Violation]:
    violations: list[Violation] = []
    if not qg.nodes:
        violations.append(Violation("EmptyQuery", "at least one node is required", "nodes"))
        return violations

    node_ids = {n.qnode_id for n in qg.nodes}
    for n in qg.nodes:
        where = f"nodes/{n.qnode_id}"
        if n.ids is not None:
            if not n.ids:
                violations.append(Violation("EmptyIds", "ids present but empty", where))
            for curie in n.ids:
                if not is_curie(curie):
                    violations.append(
                        Violation("BadCurie", f"{curie!r} is not a CURIE", f"{where}/ids")
                    )
        if n.categories is not None and not n.categories:
            violations.append(Violation("EmptyCategories", "categories present but empty", where))

    for e in qg.edges:
        where = f"edges/{e.qedge_id}"
        for end, label in ((e.subject, "subject"), (e.object, "object")):
            if end not in node_ids:
                violations.append(
                    Violation("DanglingEdgeRef", f"{label} {end!r} is not a node", f"{where}/{label}")
                )
        if e.subject == e.object:
            violations.append(Violation("SelfLoop", "subject and object must differ", where))
        if e.predicates is not None and not e.predicates:
            violations.append(Violation("EmptyPredicates", "predicates present but empty", where))

    if not any(n.pinned for n in qg.nodes):
        violations.append(
            Violation("NoPinnedNode", "at least one node must pin identifiers", "nodes")
        )

    # connectivity over the undirected shape, seeded from any one node
    if len(qg.nodes) > 1 and not any(
        v.code == "DanglingEdgeRef" for v in violations
    ):
        adjacency: dict[str, set[str]] = {n.qnode_id: set() for n in qg.nodes}
        for e in qg.edges:
            if e.subject in adjacency and e.object in adjacency:
                adjacency[e.subject].add(e.object)
                adjacency[e.object].add(e.subject)
        start = qg.nodes[0].qnode_id
        seen = {start}
        stack = [start]
        while stack:
            for nxt in adjacency[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        if seen != node_ids:
            missing = ", ".join(sorted(node_ids - seen))
            violations.append(
                Violation("Disconnected", f"nodes unreachable from the rest: {missing}", "nodes")
            )

    return violations


def serialize_query(qg: QueryGraph) -> dict:
    nodes: dict = {}
    for n in qg.nodes:
        entry: dict = {}
        if n.ids is not None:
            entry["ids"] = list(n.ids)
        if n.categories is not None:
            entry["categories"] = list(n.categories)
        entry.update({k: v for k, v in n.extras})
        nodes[n.qnode_id] = entry
    edges: dict = {}
    for e in qg.edges:
        entry = {"subject": e.subject, "object": e.object}
        if e.predicates is not None:
            entry["predicates"] = list(e.predicates)
        entry.update({k: v for k, v in e.extras})
        edges[e.qedge_id] = entry
    return {"message": {"query_graph": {"nodes": nodes, "edges": edges}}}


def plan_order(qg: QueryGraph) -> ExecutionOrder:
    """Deterministic edge order: every step starts from an already-bound node.

    Bound nodes start as the pinned set and grow as edges execute. Among the
    edges currently reachable, the smallest identifier goes first. When both
    endpoints are already bound the step starts from the subject.
    """
    bound = {n.qnode_id for n in qg.nodes if n.pinned}
    remaining = {e.qedge_id: e for e in qg.edges}
    steps: list[tuple[str, str]] = []
    while remaining:
        ready = [
            eid
            for eid, e in remaining.items()
            if e.subject in bound or e.object in bound
        ]
        if not ready:
            # unreachable for validated queries: they are connected and pinned
            raise QueryInvalid(
                [Violation("Unorderable", "no edge touches a bound node", "edges")]
            )
        eid = min(ready)
        e = remaining.pop(eid)
        if e.subject in bound:
            start = e.subject
        else:
            start = e.object
        steps.append((eid, start))
        bound.add(e.subject)
        bound.add(e.object)
    return ExecutionOrder(tuple(steps))
