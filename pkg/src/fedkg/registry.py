"""Annotation documents: API descriptions with operation and mapping extensions.

A document is an OpenAPI-shaped mapping carrying two vendor extensions:
``x-bte-kgs-operations`` declares graph operations (input/output bindings,
predicate, request templates) grouped under named keys and referenced from
path items; ``x-bte-response-mapping`` declares how identifiers and
attributes are pulled out of response bodies with dot-paths.

Parsing is tolerant: every problem is collected as a Violation so a caller
can report all of them at once. ``parse_registry`` turns violations into
``DocumentInvalid``.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import yaml

from .errors import DocumentInvalid, Violation
from .respath import path_is_valid
from .templates import KNOWN_FILTERS, PLACEHOLDER_SOURCE, Template, parse_template
from .vocab import TypeVocabulary

logger = logging.getLogger(__name__)

OPERATIONS_KEY = "x-bte-kgs-operations"
MAPPING_KEY = "x-bte-response-mapping"

# OpenAPI-style path parameter slot: tight braces around an identifier.
# Template placeholders like "{ queryInputs | rmPrefix() }" never match.
_PATH_SLOT = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")

_SUPPORTED_METHODS = ("get", "post")


@dataclass(frozen=True)
class TypeBinding:
    """One side of an operation: a semantic type carried in an id namespace."""

    semantic_type: str
    id_namespace: str


@dataclass(frozen=True)
class ResponseMapping:
    """Dot-paths for pulling identifiers and attributes out of a response.

    Keys without a colon name an id namespace; keys with a colon (such as
    ``biolink:source_web_page``) name a pass-through attribute.
    """

    id_paths: tuple[tuple[str, str], ...] = ()
    attribute_paths: tuple[tuple[str, str], ...] = ()

    def to_dict(self) -> dict:
        out: dict = {}
        for ns, path in self.id_paths:
            out[ns] = path
        for name, path in self.attribute_paths:
            out[name] = path
        return out


@dataclass(frozen=True)
class Operation:
    """One invokable edge source: a parameterized request plus its meaning."""

    op_id: str
    method: str  # "get" or "post"
    path_template: Template  # path with parameter templates already inlined
    parameters: tuple[tuple[str, Template], ...]  # query parameters, in order
    request_body_template: Template | None
    inputs: tuple[TypeBinding, ...]
    outputs: tuple[TypeBinding, ...]
    predicate: str
    source: str
    support_batch: bool
    batch_size: int | None
    batch_separator: str
    response_mapping_ref: str

    def templates(self) -> Iterator[tuple[str, Template]]:
        """Every template on this operation, labeled by where it sits."""
        yield "path", self.path_template
        for name, template in self.parameters:
            yield f"parameters/{name}", template
        if self.request_body_template is not None:
            yield "requestBody", self.request_body_template

    def to_dict(self) -> dict:
        out: dict = {"supportBatch": self.support_batch}
        if self.batch_size is not None:
            out["batchSize"] = self.batch_size
        if self.batch_separator != ",":
            out["batchSeparator"] = self.batch_separator
        out["inputs"] = [
            {"id": b.id_namespace, "semantic": b.semantic_type} for b in self.inputs
        ]
        out["outputs"] = [
            {"id": b.id_namespace, "semantic": b.semantic_type} for b in self.outputs
        ]
        out["predicate"] = self.predicate
        if self.source:
            out["source"] = self.source
        if self.parameters:
            out["parameters"] = {name: t.raw for name, t in self.parameters}
        if self.request_body_template is not None:
            out["requestBody"] = self.request_body_template.raw
        out["response_mapping"] = {
            "$ref": f"#/components/{MAPPING_KEY}/{self.response_mapping_ref}"
        }
        return out


@dataclass(frozen=True)
class AnnotationDocument:
    """A parsed API description."""

    api_id: str
    title: str
    server_url: str
    operations: tuple[Operation, ...]
    response_mappings: tuple[tuple[str, ResponseMapping], ...]

    def operation(self, op_id: str) -> Operation:
        for op in self.operations:
            if op.op_id == op_id:
                return op
        raise KeyError(f"no operation {op_id!r} in api {self.api_id!r}")

    def mapping(self, name: str) -> ResponseMapping:
        for key, m in self.response_mappings:
            if key == name:
                return m
        raise KeyError(f"no response mapping {name!r} in api {self.api_id!r}")

    def mapping_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.response_mappings)

    def to_dict(self) -> dict:
        """Normalized document form; parse(to_dict(doc)) reproduces doc."""
        paths: dict = {}
        groups: dict = {}
        for op in self.operations:
            groups[op.op_id] = [op.to_dict()]
            item = paths.setdefault(op.path_template.raw, {})
            entry = item.setdefault(op.method, {OPERATIONS_KEY: []})
            entry[OPERATIONS_KEY].append(
                {"$ref": f"#/components/{OPERATIONS_KEY}/{op.op_id}"}
            )
        return {
            "openapi": "3.0.3",
            "info": {"title": self.title, "x-api-id": self.api_id},
            "servers": [{"url": self.server_url}],
            "paths": paths,
            "components": {
                OPERATIONS_KEY: groups,
                MAPPING_KEY: {name: m.to_dict() for name, m in self.response_mappings},
            },
        }


class Registry:
    """Every parsed annotation document, indexed by API identifier."""

    def __init__(self, documents: Sequence[AnnotationDocument]):
        self._documents = tuple(sorted(documents, key=lambda d: d.api_id))
        self._by_id: dict[str, AnnotationDocument] = {}
        for doc in self._documents:
            if doc.api_id in self._by_id:
                raise ValueError(f"duplicate api id {doc.api_id!r}")
            self._by_id[doc.api_id] = doc

    @property
    def documents(self) -> tuple[AnnotationDocument, ...]:
        return self._documents

    @property
    def api_count(self) -> int:
        return len(self._documents)

    @property
    def operation_count(self) -> int:
        return sum(len(d.operations) for d in self._documents)

    def document(self, api_id: str) -> AnnotationDocument:
        return self._by_id[api_id]

    def operation(self, api_id: str, op_id: str) -> Operation:
        return self._by_id[api_id].operation(op_id)

    def iter_operations(self) -> Iterator[tuple[AnnotationDocument, Operation]]:
        for doc in self._documents:
            for op in doc.operations:
                yield doc, op

    def to_documents(self) -> list[dict]:
        return [doc.to_dict() for doc in self._documents]


def _ref_name(value: object, prefix: str) -> str | None:
    """Accept {"$ref": "#/components/<prefix>/<name>"} or a bare name."""
    if isinstance(value, str):
        return value.rsplit("/", 1)[-1] if value.startswith("#/") else value
    if isinstance(value, Mapping) and isinstance(value.get("$ref"), str):
        ref = value["$ref"]
        head, _, name = ref.rpartition("/")
        if head == f"#/components/{prefix}" and name:
            return name
    return None


def _parse_bindings(
    raw: object, where: str, violations: list[Violation]
) -> tuple[TypeBinding, ...]:
    if raw is None:
        return ()
    if not isinstance(raw, list):
        violations.append(Violation("MalformedBinding", "must be a list", where))
        return ()
    out = []
    for i, entry in enumerate(raw):
        if (
            not isinstance(entry, Mapping)
            or not isinstance(entry.get("id"), str)
            or not isinstance(entry.get("semantic"), str)
        ):
            violations.append(
                Violation(
                    "MalformedBinding",
                    "binding needs string fields 'id' and 'semantic'",
                    f"{where}/{i}",
                )
            )
            continue
        out.append(TypeBinding(entry["semantic"], entry["id"]))
    return tuple(out)


def _parse_mapping(raw: object, where: str, violations: list[Violation]) -> ResponseMapping:
    id_paths: list[tuple[str, str]] = []
    attribute_paths: list[tuple[str, str]] = []
    if not isinstance(raw, Mapping):
        violations.append(Violation("MalformedMapping", "must be a mapping", where))
        return ResponseMapping()
    for key, value in raw.items():
        if not isinstance(key, str) or not isinstance(value, str):
            violations.append(
                Violation("MalformedMapping", "entries map string to path string", f"{where}/{key}")
            )
            continue
        if ":" in key:
            attribute_paths.append((key, value))
        else:
            id_paths.append((key, value))
    return ResponseMapping(tuple(id_paths), tuple(attribute_paths))


def _inline_path_parameters(
    path: str,
    params: dict[str, str],
    where: str,
    violations: list[Violation],
) -> tuple[str, dict[str, str]]:
    """Substitute {name} slots with their parameter templates.

    Returns the combined path template text and the parameters left over
    for the query string.
    """
    used: set[str] = set()

    def replace(m: re.Match) -> str:
        name = m.group(1)
        if name in params:
            used.add(name)
            return params[name]
        if name == PLACEHOLDER_SOURCE:
            return m.group(0)  # a tight "{queryInputs}" placeholder, not a slot
        violations.append(
            Violation("UnboundPathParameter", f"no parameter named {name!r}", where)
        )
        return m.group(0)

    combined = _PATH_SLOT.sub(replace, path)
    leftover = {k: v for k, v in params.items() if k not in used}
    return combined, leftover


def _parse_operation(
    raw: object,
    op_id: str,
    method: str,
    path: str,
    where: str,
    violations: list[Violation],
) -> Operation | None:
    if not isinstance(raw, Mapping):
        violations.append(Violation("MalformedOperation", "must be a mapping", where))
        return None

    inputs = _parse_bindings(raw.get("inputs"), f"{where}/inputs", violations)
    outputs = _parse_bindings(raw.get("outputs"), f"{where}/outputs", violations)

    predicate = raw.get("predicate")
    predicate = predicate if isinstance(predicate, str) else ""

    source = raw.get("source")
    source = source if isinstance(source, str) else ""

    support_batch = bool(raw.get("supportBatch", False))
    batch_size = raw.get("batchSize")
    if batch_size is not None and (
        not isinstance(batch_size, int) or isinstance(batch_size, bool) or batch_size <= 0
    ):
        violations.append(
            Violation("BadBatchSize", "batchSize must be a positive integer", where)
        )
        batch_size = None
    batch_separator = raw.get("batchSeparator", ",")
    batch_separator = batch_separator if isinstance(batch_separator, str) else ","

    raw_params = raw.get("parameters", {})
    params: dict[str, str] = {}
    if isinstance(raw_params, Mapping):
        for name, value in raw_params.items():
            if not isinstance(name, str) or not isinstance(value, str):
                violations.append(
                    Violation(
                        "MalformedParameters",
                        "parameters map names to template strings",
                        f"{where}/parameters",
                    )
                )
                continue
            params[name] = value
    elif raw_params is not None:
        violations.append(
            Violation("MalformedParameters", "must be a mapping", f"{where}/parameters")
        )

    combined_path, leftover = _inline_path_parameters(path, params, where, violations)
    path_template = parse_template(combined_path)
    parameters = tuple((name, parse_template(value)) for name, value in leftover.items())

    body_raw = raw.get("requestBody")
    body_template = None
    if isinstance(body_raw, str):
        body_template = parse_template(body_raw)
    elif body_raw is not None:
        violations.append(
            Violation("MalformedOperation", "requestBody must be a string", f"{where}/requestBody")
        )

    ref = _ref_name(raw.get("response_mapping"), MAPPING_KEY)
    if ref is None and raw.get("response_mapping") is not None:
        violations.append(
            Violation(
                "MalformedOperation",
                "response_mapping must be a $ref into the mapping components",
                f"{where}/response_mapping",
            )
        )

    return Operation(
        op_id=op_id,
        method=method,
        path_template=path_template,
        parameters=parameters,
        request_body_template=body_template,
        inputs=inputs,
        outputs=outputs,
        predicate=predicate,
        source=source,
        support_batch=support_batch,
        batch_size=batch_size,
        batch_separator=batch_separator,
        response_mapping_ref=ref or "",
    )


def parse_document(data: object) -> tuple[AnnotationDocument | None, list[Violation]]:
    """Build the document model, collecting structural violations.

    Returns (None, violations) when no usable model can be built at all.
    Violations that the model can still represent (an empty predicate, a
    malformed template) are left for validate_document so every problem is
    reported exactly once.
    """
    violations: list[Violation] = []
    if not isinstance(data, Mapping):
        return None, [Violation("MalformedDocument", "document must be a mapping")]

    info = data.get("info")
    info = info if isinstance(info, Mapping) else {}
    api_id = info.get("x-api-id")
    if not isinstance(api_id, str) or not api_id.strip():
        violations.append(Violation("MissingApiId", "info.x-api-id must be a non-empty string", "info"))
        return None, violations
    api_id = api_id.strip()
    title = info.get("title")
    title = title if isinstance(title, str) else ""

    server_url = ""
    servers = data.get("servers")
    if isinstance(servers, list) and servers:
        first = servers[0]
        if isinstance(first, Mapping) and isinstance(first.get("url"), str):
            server_url = first["url"]

    components = data.get("components")
    components = components if isinstance(components, Mapping) else {}

    groups_raw = components.get(OPERATIONS_KEY, {})
    if not isinstance(groups_raw, Mapping):
        violations.append(
            Violation("MalformedDocument", "operation components must be a mapping", f"components/{OPERATIONS_KEY}")
        )
        groups_raw = {}

    mappings_raw = components.get(MAPPING_KEY, {})
    if not isinstance(mappings_raw, Mapping):
        violations.append(
            Violation("MalformedDocument", "mapping components must be a mapping", f"components/{MAPPING_KEY}")
        )
        mappings_raw = {}

    response_mappings = tuple(
        (str(name), _parse_mapping(raw, f"components/{MAPPING_KEY}/{name}", violations))
        for name, raw in mappings_raw.items()
    )

    # walk path items to find where each operation group is mounted
    mounts: dict[str, tuple[str, str]] = {}  # group -> (path, method)
    paths = data.get("paths")
    paths = paths if isinstance(paths, Mapping) else {}
    for path, item in paths.items():
        if not isinstance(item, Mapping):
            violations.append(Violation("MalformedDocument", "path item must be a mapping", f"paths/{path}"))
            continue
        for method, op_item in item.items():
            if not isinstance(op_item, Mapping) or OPERATIONS_KEY not in op_item:
                continue
            where = f"paths/{path}/{method}"
            if method not in _SUPPORTED_METHODS:
                violations.append(
                    Violation("UnsupportedMethod", f"method {method!r} cannot carry operations", where)
                )
                continue
            refs = op_item.get(OPERATIONS_KEY)
            if not isinstance(refs, list):
                violations.append(Violation("MalformedOperation", "operation refs must be a list", where))
                continue
            for ref in refs:
                group = _ref_name(ref, OPERATIONS_KEY)
                if group is None:
                    violations.append(Violation("MalformedOperation", f"bad operation ref {ref!r}", where))
                    continue
                if group not in groups_raw:
                    violations.append(
                        Violation("UnknownOperationRef", f"no operation group {group!r}", where)
                    )
                    continue
                if group in mounts:
                    violations.append(
                        Violation("DuplicateOperationRef", f"group {group!r} referenced twice", where)
                    )
                    continue
                mounts[group] = (str(path), method)

    operations: list[Operation] = []
    for group, raw_ops in groups_raw.items():
        where = f"components/{OPERATIONS_KEY}/{group}"
        if group not in mounts:
            violations.append(
                Violation("UnreferencedOperation", f"group {group!r} is not referenced by any path", where)
            )
            continue
        path, method = mounts[group]
        if not isinstance(raw_ops, list):
            violations.append(Violation("MalformedOperation", "group must hold a list", where))
            continue
        for i, raw_op in enumerate(raw_ops):
            op_id = group if len(raw_ops) == 1 else f"{group}-{i}"
            op = _parse_operation(raw_op, op_id, method, path, f"{where}/{i}", violations)
            if op is not None:
                operations.append(op)

    doc = AnnotationDocument(
        api_id=api_id,
        title=title,
        server_url=server_url,
        operations=tuple(operations),
        response_mappings=response_mappings,
    )
    return doc, violations


def validate_document(
    doc: AnnotationDocument, vocab: TypeVocabulary | None = None
) -> list[Violation]:
    """Check every model-level rule; with a vocabulary, also check membership."""
    violations: list[Violation] = []
    if not doc.server_url:
        violations.append(Violation("MissingServerUrl", "servers[0].url is required", "servers"))

    mapping_names = set(doc.mapping_names())

    for op in doc.operations:
        where = f"operations/{op.op_id}"
        if not op.inputs:
            violations.append(Violation("EmptyInputs", "at least one input binding", f"{where}/inputs"))
        if not op.outputs:
            violations.append(Violation("EmptyOutputs", "at least one output binding", f"{where}/outputs"))
        if not op.predicate:
            violations.append(Violation("MissingPredicate", "predicate is required", where))
        if op.batch_size is not None and not op.support_batch:
            violations.append(
                Violation("BatchSizeWithoutBatchSupport", "batchSize requires supportBatch", where)
            )

        seen_in: set[str] = set()
        for b in op.inputs:
            if b.semantic_type in seen_in:
                violations.append(
                    Violation("DuplicateInputType", f"input type {b.semantic_type!r} repeated", f"{where}/inputs")
                )
            seen_in.add(b.semantic_type)
        seen_out: set[str] = set()
        for b in op.outputs:
            if b.semantic_type in seen_out:
                violations.append(
                    Violation("DuplicateOutputType", f"output type {b.semantic_type!r} repeated", f"{where}/outputs")
                )
            seen_out.add(b.semantic_type)

        has_placeholder = False
        for label, template in op.templates():
            t_where = f"{where}/{label}"
            if template.error is not None:
                violations.append(
                    Violation("BadTemplate", f"{template.error} (offset {template.error_position})", t_where)
                )
                continue
            has_placeholder = has_placeholder or template.has_placeholder
            for call in template.filter_calls():
                if call.name not in KNOWN_FILTERS:
                    violations.append(Violation("UnknownFilter", f"no filter named {call.name!r}", t_where))
        if not has_placeholder:
            violations.append(
                Violation("NoInputPlaceholder", "no template references the input placeholder", where)
            )

        if not op.response_mapping_ref:
            violations.append(Violation("MissingMappingRef", "response_mapping is required", where))
        elif op.response_mapping_ref not in mapping_names:
            violations.append(
                Violation(
                    "DanglingMappingRef",
                    f"no response mapping named {op.response_mapping_ref!r}",
                    where,
                )
            )

        if vocab is not None:
            for b in (*op.inputs, *op.outputs):
                if b.semantic_type not in vocab.semantic_types:
                    violations.append(
                        Violation("UnknownSemanticType", f"{b.semantic_type!r} not in vocabulary", where)
                    )
                if b.id_namespace not in vocab.id_namespaces:
                    violations.append(
                        Violation("UnknownNamespace", f"{b.id_namespace!r} not in vocabulary", where)
                    )

    for name, mapping in doc.response_mappings:
        where = f"components/{MAPPING_KEY}/{name}"
        for key, path in (*mapping.id_paths, *mapping.attribute_paths):
            if not path_is_valid(path):
                violations.append(Violation("BadPath", f"bad dot-path {path!r}", f"{where}/{key}"))
        if vocab is not None:
            for ns, _ in mapping.id_paths:
                if ns not in vocab.id_namespaces:
                    violations.append(
                        Violation("UnknownNamespace", f"{ns!r} not in vocabulary", f"{where}/{ns}")
                    )

    return violations


def check_document(
    data: object, vocab: TypeVocabulary | None = None
) -> tuple[str, list[Violation]]:
    """Parse plus validate; returns the api id (or a placeholder) and all violations."""
    doc, violations = parse_document(data)
    if doc is None:
        api_id = ""
        if isinstance(data, Mapping):
            info = data.get("info")
            if isinstance(info, Mapping) and isinstance(info.get("x-api-id"), str):
                api_id = info["x-api-id"]
        return api_id or "<unknown>", violations
    return doc.api_id, violations + validate_document(doc, vocab)


def parse_registry(
    documents: Sequence[object], vocab: TypeVocabulary | None = None
) -> Registry:
    """Parse raw documents into a Registry, rejecting the first invalid one."""
    docs: list[AnnotationDocument] = []
    seen: set[str] = set()
    for data in documents:
        doc, violations = parse_document(data)
        if doc is not None:
            violations = violations + validate_document(doc, vocab)
            if doc.api_id in seen:
                violations.append(
                    Violation("DuplicateApiId", f"api id {doc.api_id!r} already used", "info")
                )
        if violations:
            api_id = doc.api_id if doc is not None else "<unknown>"
            raise DocumentInvalid(api_id, violations)
        assert doc is not None
        seen.add(doc.api_id)
        docs.append(doc)
    return Registry(docs)


RESERVED_BASENAMES = ("vocabulary", "hierarchy")


def read_registry_files(path: Path | str) -> list[tuple[str, object]]:
    """Load raw documents from a directory, sorted by file name."""
    root = Path(path)
    if not root.is_dir():
        raise FileNotFoundError(f"registry directory {root} does not exist")
    out: list[tuple[str, object]] = []
    for file in sorted(root.iterdir()):
        if file.suffix.lower() not in (".yaml", ".yml", ".json"):
            continue
        if file.stem in RESERVED_BASENAMES:
            continue
        with open(file, "r", encoding="utf-8") as fh:
            out.append((file.name, yaml.safe_load(fh)))
    return out


def load_registry_dir(path: Path | str, vocab: TypeVocabulary | None = None) -> Registry:
    files = read_registry_files(path)
    logger.info("loading %d annotation documents from %s", len(files), path)
    return parse_registry([data for _, data in files], vocab)
