"""Query planning: match each query edge to the operations that can serve it.

An edge can be served in two directions. Forward, the bound node is the
query edge's subject and operations are matched as written. Reverse, the
bound node is the object, so the operation's input side must match the
object end; the record produced still reads in the operation's own
subject-to-object direction, and assembly reorients it.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import QueryInvalid, Violation
from .metakg import MetaEdge, MetaKG, lookup
from .query import ExecutionOrder, QEdge, QueryGraph, plan_order

FORWARD = "forward"
REVERSE = "reverse"


@dataclass(frozen=True)
class InvocationSpec:
    """One operation chosen to serve one query edge from a given side."""

    qedge_id: str
    direction: str  # FORWARD or REVERSE
    meta_edge: MetaEdge

    @property
    def input_namespace(self) -> str:
        return self.meta_edge.input_namespace

    def to_dict(self) -> dict:
        return {
            "qedge_id": self.qedge_id,
            "direction": self.direction,
            "api_id": self.meta_edge.api_id,
            "op_id": self.meta_edge.op_id,
            "subject_type": self.meta_edge.subject_type,
            "predicate": self.meta_edge.predicate,
            "object_type": self.meta_edge.object_type,
            "input_namespace": self.meta_edge.input_namespace,
            "output_namespace": self.meta_edge.output_namespace,
        }


@dataclass(frozen=True)
class QueryPlan:
    order: ExecutionOrder
    specs: tuple[tuple[str, tuple[InvocationSpec, ...]], ...]  # qedge id -> specs

    def for_edge(self, qedge_id: str) -> tuple[InvocationSpec, ...]:
        for eid, specs in self.specs:
            if eid == qedge_id:
                return specs
        raise KeyError(qedge_id)

    @property
    def unsatisfiable_edges(self) -> tuple[str, ...]:
        return tuple(eid for eid, specs in self.specs if not specs)

    @property
    def is_satisfiable(self) -> bool:
        return not self.unsatisfiable_edges

    def to_dict(self) -> dict:
        return {
            "order": [
                {"qedge_id": eid, "start": start} for eid, start in self.order.steps
            ],
            "edges": {eid: [s.to_dict() for s in specs] for eid, specs in self.specs},
            "unsatisfiable_edges": list(self.unsatisfiable_edges),
        }


def plan_edge(
    qedge: QEdge, start_node: str, qg: QueryGraph, metakg: MetaKG
) -> list[InvocationSpec]:
    """Operations able to serve one query edge starting from start_node.

    The start node's categories constrain the operation input side and the
    far node's categories constrain the output side; the edge's predicates
    must match exactly. Results keep the meta-knowledge-graph order, which
    sorts by API then operation.
    """
    if start_node == qedge.subject:
        direction = FORWARD
        far = qedge.object
    elif start_node == qedge.object:
        direction = REVERSE
        far = qedge.subject
    else:
        raise QueryInvalid(
            [
                Violation(
                    "BadStartNode",
                    f"{start_node!r} is not an endpoint of {qedge.qedge_id!r}",
                    f"edges/{qedge.qedge_id}",
                )
            ]
        )
    input_cats = qg.node(start_node).categories
    output_cats = qg.node(far).categories
    edges = lookup(
        metakg,
        subject_types=input_cats,
        predicates=qedge.predicates,
        object_types=output_cats,
    )
    return [InvocationSpec(qedge.qedge_id, direction, e) for e in edges]


def plan_query(qg: QueryGraph, metakg: MetaKG) -> QueryPlan:
    order = plan_order(qg)
    specs = []
    for eid, start in order.steps:
        qedge = qg.edge(eid)
        specs.append((eid, tuple(plan_edge(qedge, start, qg, metakg))))
    return QueryPlan(order=order, specs=tuple(specs))
