"""The engine: wire every stage together and run whole queries.

Configuration strings select providers: ``fixture:<path>`` or ``http:<url>``
for the resolver, ``fixture:<path>`` for counts, ``simnet:<path>`` or
``live`` for the transport. The registry directory must hold
``vocabulary.yaml`` next to the annotation documents and may hold
``hierarchy.yaml``.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .assemble import ResultGraph, assemble
from .clock import Clock
from .errors import ConfigError, FedkgError, MalformedResponse, NoUsableInputs
from .executor import ExecutionPolicy, RecordEdge, build_subqueries, execute, extract_records
from .metakg import MetaKG, build_metakg, export_metakg
from .planner import QueryPlan, plan_query
from .query import QueryGraph, parse_query
from .registry import Registry, load_registry_dir
from .resolve import (
    CachingResolver,
    EntityRecord,
    FileFixtureResolver,
    HttpResolverProvider,
    NullResolver,
    ResolverProvider,
    resolve,
)
from .scoring import CountsProvider, FileFixtureCounts, NullCounts, rank, score_results
from .simnet import load_scenario_file
from .transport import LiveTransport, Transport
from .vocab import TypeHierarchy, TypeVocabulary

logger = logging.getLogger(__name__)

VOCABULARY_FILE = "vocabulary.yaml"
HIERARCHY_FILE = "hierarchy.yaml"


class UnsatisfiablePlan(FedkgError):
    """Raised in strict mode when some query edge has no usable operation."""

    def __init__(self, edges: tuple[str, ...]):
        super().__init__(f"no operations can serve query edges: {', '.join(edges)}")
        self.edges = edges


def canonical_json(document: object) -> str:
    """Stable serialization: sorted keys, no whitespace, ASCII only."""
    return json.dumps(document, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


@dataclass(frozen=True)
class EngineConfig:
    registry_dir: str
    hierarchy_path: str | None = None
    resolver: str = "none"
    counts: str = "none"
    transport: str = "none"
    allow_live: bool = False
    policy: ExecutionPolicy = field(default_factory=ExecutionPolicy)


@dataclass(frozen=True)
class RunOutcome:
    document: dict
    plan: QueryPlan


def _split_provider(value: str) -> tuple[str, str]:
    kind, _, arg = value.partition(":")
    return kind, arg


class Engine:
    def __init__(
        self,
        registry: Registry,
        metakg: MetaKG,
        vocab: TypeVocabulary,
        resolver: ResolverProvider,
        counts: CountsProvider,
        transport: Transport | None,
        policy: ExecutionPolicy | None = None,
        clock: Clock | None = None,
    ):
        self.registry = registry
        self.metakg = metakg
        self.vocab = vocab
        self.resolver = resolver
        self.counts = counts
        self.transport = transport
        self.policy = policy if policy is not None else ExecutionPolicy()
        self.clock = clock

    @classmethod
    def from_config(cls, config: EngineConfig, clock: Clock | None = None) -> "Engine":
        registry_dir = Path(config.registry_dir)
        vocab_path = registry_dir / VOCABULARY_FILE
        if not vocab_path.is_file():
            raise ConfigError(f"missing {VOCABULARY_FILE} in {registry_dir}")
        vocab = TypeVocabulary.load(vocab_path)

        if config.hierarchy_path is not None:
            hierarchy = TypeHierarchy.load(config.hierarchy_path)
        elif (registry_dir / HIERARCHY_FILE).is_file():
            hierarchy = TypeHierarchy.load(registry_dir / HIERARCHY_FILE)
        else:
            hierarchy = TypeHierarchy({})

        registry = load_registry_dir(registry_dir, vocab)
        metakg = build_metakg(registry, hierarchy=hierarchy, vocab=vocab)

        kind, arg = _split_provider(config.resolver)
        if kind == "none" and not arg:
            provider: ResolverProvider = NullResolver()
        elif kind == "fixture" and arg:
            provider = FileFixtureResolver(arg, vocab.namespace_priority)
        elif kind == "http" and arg:
            provider = HttpResolverProvider(arg)
        else:
            raise ConfigError(f"bad resolver spec {config.resolver!r}")
        resolver = CachingResolver(provider)

        kind, arg = _split_provider(config.counts)
        if kind == "none" and not arg:
            counts: CountsProvider = NullCounts()
        elif kind == "fixture" and arg:
            counts = FileFixtureCounts(arg)
        else:
            raise ConfigError(f"bad counts spec {config.counts!r}")

        kind, arg = _split_provider(config.transport)
        transport: Transport | None
        if kind == "none" and not arg:
            transport = None
        elif kind == "simnet" and arg:
            transport = load_scenario_file(arg, clock=clock)
        elif kind == "live" and not arg:
            if not config.allow_live:
                raise ConfigError("live transport requires allow_live")
            transport = LiveTransport()
        else:
            raise ConfigError(f"bad transport spec {config.transport!r}")

        return cls(
            registry=registry,
            metakg=metakg,
            vocab=vocab,
            resolver=resolver,
            counts=counts,
            transport=transport,
            policy=config.policy,
            clock=clock,
        )

    def explain(self, query_document: object) -> dict:
        qg = parse_query(query_document)
        return plan_query(qg, self.metakg).to_dict()

    def metakg_export(self) -> dict:
        return export_metakg(self.metakg)

    def run(self, query_document: object, strict: bool = False) -> RunOutcome:
        qg = parse_query(query_document)
        plan = plan_query(qg, self.metakg)
        if strict and not plan.is_satisfiable:
            raise UnsatisfiablePlan(plan.unsatisfiable_edges)
        if qg.edges and self.transport is None:
            raise ConfigError("no transport configured; cannot execute query edges")

        # entities bound to each query node so far, by canonical id
        node_entities: dict[str, dict[str, EntityRecord]] = {
            n.qnode_id: {} for n in qg.nodes
        }
        pinned_entities: dict[str, list[EntityRecord]] = {}
        for qnode in qg.pinned_nodes():
            resolved = resolve(list(qnode.ids or ()), self.resolver)
            per: dict[str, EntityRecord] = {}
            for curie in qnode.ids or ():
                record = resolved[curie]
                per.setdefault(record.canonical_id, record)
            node_entities[qnode.qnode_id] = per
            pinned_entities[qnode.qnode_id] = list(per.values())

        records_by_edge: dict[str, list[RecordEdge]] = {eid: [] for eid in qg.edge_ids()}
        bound = {n.qnode_id for n in qg.pinned_nodes()}

        for eid, start in plan.order.steps:
            qedge = qg.edge(eid)
            far = qedge.object if start == qedge.subject else qedge.subject
            is_constraint = far in bound
            inputs = sorted(
                node_entities[start].values(), key=lambda r: r.canonical_id
            )
            collected: list[RecordEdge] = []
            if inputs:
                subqueries = []
                for spec in plan.for_edge(eid):
                    try:
                        subqueries.extend(
                            build_subqueries(spec, inputs, self.registry)
                        )
                    except NoUsableInputs as exc:
                        logger.info("edge %s: %s", eid, exc)
                outcomes = execute(subqueries, self.transport, self.policy, self.clock)
                for outcome in outcomes:
                    if not outcome.ok:
                        failure = outcome.failure
                        logger.warning(
                            "edge %s: %s/%s failed (%s after %d attempts)",
                            eid,
                            outcome.subquery.spec.meta_edge.api_id,
                            outcome.subquery.spec.meta_edge.op_id,
                            failure.kind if failure else "unknown",
                            outcome.attempts,
                        )
                        continue
                    try:
                        collected.extend(
                            extract_records(
                                outcome.response.body,
                                outcome.subquery.spec,
                                outcome.subquery.input_records,
                                self.registry,
                                self.resolver,
                            )
                        )
                    except MalformedResponse as exc:
                        logger.warning("edge %s: %s", eid, exc)

            if is_constraint:
                # both ends already bound: records only confirm pairs, the
                # far side is filtered instead of extended
                allowed = set(node_entities[far])
                collected = [
                    r for r in collected if r.object.canonical_id in allowed
                ]
            else:
                for record in collected:
                    node_entities[far].setdefault(
                        record.object.canonical_id, record.object
                    )
            records_by_edge[eid].extend(collected)
            bound.add(start)
            bound.add(far)

        results = assemble(records_by_edge, qg, pinned_entities)
        ranked = rank(score_results(results, self.counts))
        return RunOutcome(document=build_results_document(ranked, qg), plan=plan)


def _kg_edge_id(record: RecordEdge) -> str:
    key = "|".join(
        (
            record.subject.canonical_id,
            record.predicate,
            record.object.canonical_id,
            record.api_id,
            record.source,
        )
    )
    return hashlib.sha1(key.encode("utf-8")).hexdigest()[:12]


def build_results_document(results: list[ResultGraph], qg: QueryGraph) -> dict:
    """The response document: ranked results plus the touched knowledge graph."""
    kg_nodes: dict[str, dict] = {}
    kg_edges: dict[str, dict] = {}

    def note_node(record: EntityRecord) -> None:
        if record.canonical_id not in kg_nodes:
            kg_nodes[record.canonical_id] = {
                "name": record.label,
                "categories": sorted(record.semantic_types),
                "equivalent_identifiers": list(record.equivalent_ids),
            }

    out_results = []
    for result in results:
        node_bindings: dict[str, list] = {}
        for nid, record in sorted(result.node_bindings):
            note_node(record)
            node_bindings[nid] = [{"id": record.canonical_id}]
        edge_bindings: dict[str, list] = {}
        for eid, records in sorted(result.edge_bindings):
            ids = []
            for rec in records:
                note_node(rec.subject)
                note_node(rec.object)
                edge_id = _kg_edge_id(rec)
                if edge_id not in kg_edges:
                    kg_edges[edge_id] = {
                        "subject": rec.subject.canonical_id,
                        "predicate": rec.predicate,
                        "object": rec.object.canonical_id,
                        "api_id": rec.api_id,
                        "source": rec.source,
                        "attributes": {
                            name: list(values) for name, values in rec.attributes
                        },
                    }
                ids.append({"id": edge_id})
            edge_bindings[eid] = ids
        out_results.append(
            {
                "node_bindings": node_bindings,
                "edge_bindings": edge_bindings,
                "score": result.score if result.score is not None else 0.0,
            }
        )
    return {
        "results": out_results,
        "knowledge_graph": {"nodes": kg_nodes, "edges": kg_edges},
    }
