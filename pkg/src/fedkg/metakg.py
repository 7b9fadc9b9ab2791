"""The meta-knowledge graph: which typed edges the registry can produce.

Every operation contributes one meta-edge per (input binding, output
binding) pair. Lookups expand type constraints through the hierarchy so an
edge registered for a subtype answers a query phrased with its ancestor.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import UnknownType
from .registry import Registry
from .vocab import EMPTY_HIERARCHY, TypeHierarchy, TypeVocabulary


@dataclass(frozen=True)
class MetaEdge:
    """One way to get from a subject type to an object type via an API call."""

    subject_type: str
    predicate: str
    object_type: str
    api_id: str
    op_id: str
    input_namespace: str
    output_namespace: str

    @property
    def triple(self) -> tuple[str, str, str]:
        return (self.subject_type, self.predicate, self.object_type)


class MetaKG:
    """All meta-edges, deterministically ordered, with a pair index."""

    def __init__(
        self,
        edges: Sequence[MetaEdge],
        hierarchy: TypeHierarchy | None = None,
        vocab: TypeVocabulary | None = None,
    ):
        self.edges: tuple[MetaEdge, ...] = tuple(
            sorted(
                edges,
                key=lambda e: (
                    e.api_id,
                    e.op_id,
                    e.subject_type,
                    e.object_type,
                    e.input_namespace,
                    e.output_namespace,
                ),
            )
        )
        seen: set[tuple[str, str, str, str, str]] = set()
        for e in self.edges:
            key = (e.subject_type, e.predicate, e.object_type, e.api_id, e.op_id)
            if key in seen:
                raise ValueError(f"duplicate meta-edge {key}")
            seen.add(key)
        self.nodes: frozenset[str] = frozenset(
            t for e in self.edges for t in (e.subject_type, e.object_type)
        )
        self.hierarchy = hierarchy if hierarchy is not None else EMPTY_HIERARCHY
        self.vocab = vocab

    def __len__(self) -> int:
        return len(self.edges)

    def known_types(self) -> frozenset[str]:
        """Types a constraint may legally name."""
        known = self.nodes | self.hierarchy.types()
        if self.vocab is not None:
            known = known | self.vocab.semantic_types
        return frozenset(known)


def build_metakg(
    registry: Registry,
    hierarchy: TypeHierarchy | None = None,
    vocab: TypeVocabulary | None = None,
) -> MetaKG:
    edges = []
    for doc, op in registry.iter_operations():
        for inp in op.inputs:
            for out in op.outputs:
                edges.append(
                    MetaEdge(
                        subject_type=inp.semantic_type,
                        predicate=op.predicate,
                        object_type=out.semantic_type,
                        api_id=doc.api_id,
                        op_id=op.op_id,
                        input_namespace=inp.id_namespace,
                        output_namespace=out.id_namespace,
                    )
                )
    return MetaKG(edges, hierarchy=hierarchy, vocab=vocab)


def lookup(
    metakg: MetaKG,
    subject_types: Iterable[str] | None = None,
    predicates: Iterable[str] | None = None,
    object_types: Iterable[str] | None = None,
) -> list[MetaEdge]:
    """Meta-edges matching the given constraints; None means unconstrained.

    Subject and object constraints are expanded through the hierarchy, so a
    constraint matches edges registered for any descendant type. Naming a
    type nobody knows raises UnknownType rather than silently matching
    nothing.
    """
    known = metakg.known_types()
    for group in (subject_types, object_types):
        if group is not None:
            for name in group:
                if name not in known:
                    raise UnknownType(name)

    subj_ok = None if subject_types is None else metakg.hierarchy.expand(subject_types)
    obj_ok = None if object_types is None else metakg.hierarchy.expand(object_types)
    pred_ok = None if predicates is None else set(predicates)

    out = []
    for edge in metakg.edges:
        if subj_ok is not None and edge.subject_type not in subj_ok:
            continue
        if obj_ok is not None and edge.object_type not in obj_ok:
            continue
        if pred_ok is not None and edge.predicate not in pred_ok:
            continue
        out.append(edge)
    return out


def export_metakg(metakg: MetaKG) -> dict:
    """Summary document: node types with namespaces, deduplicated edge triples."""
    prefixes: dict[str, set[str]] = {t: set() for t in metakg.nodes}
    provenance: dict[tuple[str, str, str], set[tuple[str, str]]] = {}
    for e in metakg.edges:
        prefixes[e.subject_type].add(e.input_namespace)
        prefixes[e.object_type].add(e.output_namespace)
        provenance.setdefault(e.triple, set()).add((e.api_id, e.op_id))
    return {
        "nodes": {
            t: {"id_prefixes": sorted(prefixes[t])} for t in sorted(metakg.nodes)
        },
        "edges": [
            {
                "subject": s,
                "predicate": p,
                "object": o,
                "provenance": [
                    {"api_id": a, "op_id": op} for a, op in sorted(provenance[(s, p, o)])
                ],
            }
            for s, p, o in sorted(provenance)
        ],
    }
