"""Sub-query construction and bounded-concurrency execution.

Planning picked operations; this module turns bound entities into concrete
requests (rendering templates, batching where supported), runs them through
a transport with a concurrency cap, per-attempt deadline, and retry policy,
and extracts record edges from response bodies.

Failures stay in-band: every sub-query produces an outcome holding either a
response or a failure, so one flaky API degrades results instead of
aborting the query.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

from .clock import Clock, RealClock
from .errors import (
    FedkgError,
    MalformedResponse,
    NoUsableInputs,
    TransportError,
    TransportTimeout,
)
from .planner import InvocationSpec
from .registry import Registry
from .resolve import EntityRecord, ResolverProvider, aliases_in_namespace, resolve
from .respath import evaluate_path
from .templates import FilterCall, Placeholder, render_template
from .transport import HttpRequestSpec, HttpResponse, Transport

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExecutionPolicy:
    max_concurrency: int = 4
    timeout_ms: int = 5000
    max_retries: int = 2
    retry_backoff_ms: int = 100

    def __post_init__(self) -> None:
        if self.max_concurrency < 1:
            raise ValueError("max_concurrency must be at least 1")
        if self.timeout_ms < 1:
            raise ValueError("timeout_ms must be at least 1")
        if self.max_retries < 0 or self.retry_backoff_ms < 0:
            raise ValueError("retry settings must be non-negative")


@dataclass(frozen=True)
class SubQuery:
    """One concrete request plus the inputs it was rendered from."""

    spec: InvocationSpec
    input_values: tuple[str, ...]  # bare alias values, in input order
    input_records: tuple[EntityRecord, ...]  # entities behind those values
    request: HttpRequestSpec


@dataclass(frozen=True)
class RecordEdge:
    """One extracted assertion, stored in the operation's own orientation.

    The subject is always the input entity the sub-query was built from,
    even when the operation served the query edge in reverse; ``direction``
    says how to read the record against its query edge.
    """

    qedge_id: str
    direction: str  # planner.FORWARD or planner.REVERSE
    subject: EntityRecord
    predicate: str
    object: EntityRecord
    api_id: str
    source: str
    attributes: tuple[tuple[str, tuple[object, ...]], ...] = ()


@dataclass(frozen=True)
class Failure:
    kind: str  # "timeout", "http_status", or "transport"
    attempts: int
    status: int | None = None
    detail: str = ""


@dataclass(frozen=True)
class SubQueryOutcome:
    subquery: SubQuery
    attempts: int
    response: HttpResponse | None = None
    failure: Failure | None = None

    @property
    def ok(self) -> bool:
        return self.response is not None


def apply_filter_chain(value: str, filters: Sequence[FilterCall], namespace: str) -> str:
    """Run one alias value through a placeholder's filter chain.

    rmPrefix strips a leading CURIE prefix (the operation's input namespace
    by default); wrapPrefix prepends one. Values arrive as bare aliases, so
    rmPrefix on a bare value is a no-op.
    """
    out = value
    for call in filters:
        if call.name == "rmPrefix":
            prefix = (call.args[0] if call.args else namespace) + ":"
            if out.startswith(prefix):
                out = out[len(prefix):]
        elif call.name == "wrapPrefix":
            prefix = (call.args[0] if call.args else namespace) + ":"
            if not out.startswith(prefix):
                out = prefix + out
        else:
            raise ValueError(f"unknown filter {call.name!r}")  # validated upstream
    return out


def build_subqueries(
    spec: InvocationSpec,
    inputs: Sequence[EntityRecord],
    registry: Registry,
) -> list[SubQuery]:
    """Render requests for the given entities, batching where supported.

    Entities with no alias in the operation's input namespace are skipped
    (logged); if none remain, NoUsableInputs is raised so the caller can
    record the whole spec as unusable.
    """
    op = registry.operation(spec.meta_edge.api_id, spec.meta_edge.op_id)
    doc = registry.document(spec.meta_edge.api_id)
    namespace = spec.input_namespace

    pairs: list[tuple[str, EntityRecord]] = []
    for record in inputs:
        aliases = aliases_in_namespace(record, namespace)
        if not aliases:
            logger.info(
                "skipping %s: no alias in namespace %s for %s/%s",
                record.canonical_id, namespace, op.op_id, spec.meta_edge.api_id,
            )
            continue
        # one alias per entity keeps request counts predictable
        pairs.append((aliases[0], record))
    if not pairs:
        raise NoUsableInputs(
            f"no inputs usable by {spec.meta_edge.api_id}/{op.op_id} in {namespace}"
        )

    if op.support_batch:
        chunk_size = op.batch_size if op.batch_size is not None else len(pairs)
    else:
        chunk_size = 1

    out: list[SubQuery] = []
    for i in range(0, len(pairs), chunk_size):
        chunk = pairs[i : i + chunk_size]
        values = tuple(v for v, _ in chunk)
        records = tuple(r for _, r in chunk)

        def fill(placeholder: Placeholder) -> str:
            rendered = [
                apply_filter_chain(v, placeholder.filters, namespace) for v in values
            ]
            return op.batch_separator.join(rendered)

        path = render_template(op.path_template, fill)
        params = tuple(
            (name, render_template(template, fill)) for name, template in op.parameters
        )
        body = (
            render_template(op.request_body_template, fill)
            if op.request_body_template is not None
            else None
        )
        request = HttpRequestSpec(
            method=op.method,
            url=doc.server_url.rstrip("/") + path,
            params=params,
            body=body,
        )
        out.append(SubQuery(spec, values, records, request))
    return out


def _attempt(
    subquery: SubQuery, transport: Transport, policy: ExecutionPolicy, clock: Clock
) -> SubQueryOutcome:
    request = replace(subquery.request, timeout_ms=policy.timeout_ms)
    attempts = 0
    while True:
        attempts += 1
        retry_allowed = attempts <= policy.max_retries
        try:
            response = transport.send(request)
        except TransportTimeout as exc:
            if retry_allowed:
                clock.sleep(policy.retry_backoff_ms / 1000.0)
                continue
            return SubQueryOutcome(
                subquery, attempts, failure=Failure("timeout", attempts, detail=str(exc))
            )
        except (TransportError, FedkgError, OSError) as exc:
            # no retry below the HTTP layer: the request may have side effects
            return SubQueryOutcome(
                subquery, attempts, failure=Failure("transport", attempts, detail=str(exc))
            )
        if 200 <= response.status < 300:
            return SubQueryOutcome(subquery, attempts, response=response)
        if response.status >= 500 and retry_allowed:
            clock.sleep(policy.retry_backoff_ms / 1000.0)
            continue
        return SubQueryOutcome(
            subquery,
            attempts,
            failure=Failure("http_status", attempts, status=response.status),
        )


def execute(
    subqueries: Sequence[SubQuery],
    transport: Transport,
    policy: ExecutionPolicy | None = None,
    clock: Clock | None = None,
) -> list[SubQueryOutcome]:
    """Run every sub-query, preserving input order in the outcomes."""
    policy = policy if policy is not None else ExecutionPolicy()
    clock = clock if clock is not None else RealClock()
    if not subqueries:
        return []
    with ThreadPoolExecutor(max_workers=policy.max_concurrency) as pool:
        futures = [
            pool.submit(_attempt, sq, transport, policy, clock) for sq in subqueries
        ]
        return [f.result() for f in futures]


def _scalar_to_id(value: object) -> str:
    """Canonical text for an extracted identifier value."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if value.is_integer():
            return str(int(value))
        return repr(value)
    return str(value)


def extract_records(
    response_body: object,
    spec: InvocationSpec,
    inputs: Sequence[EntityRecord],
    registry: Registry,
    resolver: ResolverProvider,
) -> list[RecordEdge]:
    """Pull record edges out of one successful response body.

    Each extracted identifier is resolved and paired with every input
    entity of the sub-query; duplicates (after canonicalization) collapse.
    Extraction order is deterministic: namespaces in declaration order,
    values in document order.
    """
    if not isinstance(response_body, (Mapping, list)):
        raise MalformedResponse(
            f"response body must be a structured document, got {type(response_body).__name__}"
        )
    op = registry.operation(spec.meta_edge.api_id, spec.meta_edge.op_id)
    doc = registry.document(spec.meta_edge.api_id)
    mapping = doc.mapping(op.response_mapping_ref)

    curies: list[str] = []
    seen_curies: set[str] = set()
    for namespace, path in mapping.id_paths:
        for value in evaluate_path(response_body, path):
            curie = f"{namespace}:{_scalar_to_id(value)}"
            if curie not in seen_curies:
                seen_curies.add(curie)
                curies.append(curie)
    if not curies:
        return []

    resolved = resolve(curies, resolver)
    objects: list[EntityRecord] = []
    seen_canonical: set[str] = set()
    for curie in curies:
        record = resolved[curie]
        if record.canonical_id not in seen_canonical:
            seen_canonical.add(record.canonical_id)
            objects.append(record)

    attributes = []
    for name, path in mapping.attribute_paths:
        values = tuple(evaluate_path(response_body, path))
        if values:
            attributes.append((name, values))
    attributes_t = tuple(attributes)

    out = []
    for input_record in inputs:
        for obj in objects:
            out.append(
                RecordEdge(
                    qedge_id=spec.qedge_id,
                    direction=spec.direction,
                    subject=input_record,
                    predicate=op.predicate,
                    object=obj,
                    api_id=spec.meta_edge.api_id,
                    source=op.source,
                    attributes=attributes_t,
                )
            )
    return out
