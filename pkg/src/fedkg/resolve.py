"""Identifier resolution: CURIEs to entities with equivalent identifiers.

Resolution is total: identifiers the provider does not know come back as
self-records (the identifier is its own canonical form and only alias).
Providers are pluggable; a TSV fixture backs tests and an HTTP provider
speaks to node-normalizer style services.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import requests

from .errors import ResolverUnavailable

logger = logging.getLogger(__name__)

DEFAULT_BATCH_SIZE = 1000


def split_curie(curie: str) -> tuple[str, str]:
    """Split NAMESPACE:value; the value may itself contain colons."""
    prefix, sep, value = curie.partition(":")
    if not sep or not prefix or not value:
        raise ValueError(f"not a CURIE: {curie!r}")
    return prefix, value


@dataclass(frozen=True)
class EntityRecord:
    """A resolved entity: canonical identifier plus everything it equals."""

    canonical_id: str
    equivalent_ids: tuple[str, ...]
    label: str = ""
    semantic_types: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.canonical_id not in self.equivalent_ids:
            raise ValueError("canonical id must be among the equivalent ids")
        if len(set(self.equivalent_ids)) != len(self.equivalent_ids):
            raise ValueError("equivalent ids must be unique")


def self_record(curie: str) -> EntityRecord:
    return EntityRecord(canonical_id=curie, equivalent_ids=(curie,), label=curie)


def aliases_in_namespace(record: EntityRecord, namespace: str) -> list[str]:
    """Bare local values of the record's identifiers in one namespace."""
    out = []
    prefix = namespace + ":"
    for curie in record.equivalent_ids:
        if curie.startswith(prefix):
            out.append(curie[len(prefix):])
    return out


def pick_canonical(curies: Sequence[str], namespace_priority: Sequence[str]) -> str:
    """Choose the canonical identifier: preferred namespace, then lexicographic."""
    if not curies:
        raise ValueError("cannot pick a canonical id from nothing")
    rank = {ns: i for i, ns in enumerate(namespace_priority)}

    def key(curie: str) -> tuple[int, str]:
        ns = curie.partition(":")[0]
        return (rank.get(ns, len(rank)), curie)

    return min(curies, key=key)


class ResolverProvider:
    """Contract: map each requested CURIE to a record, or omit unknowns."""

    def resolve(self, curies: Sequence[str]) -> dict[str, EntityRecord]:
        raise NotImplementedError


class NullResolver(ResolverProvider):
    """Knows nothing; every identifier falls back to a self-record."""

    def resolve(self, curies: Sequence[str]) -> dict[str, EntityRecord]:
        return {}


class FileFixtureResolver(ResolverProvider):
    """TSV-backed resolver.

    Rows are ``group_id<TAB>curie<TAB>label<TAB>semantic_types`` where
    semantic_types is comma-separated; rows sharing a group_id are the same
    entity. Lines starting with '#' and blank lines are skipped.
    """

    def __init__(self, path: Path | str, namespace_priority: Sequence[str] = ()):
        groups: dict[str, list[tuple[str, str, tuple[str, ...]]]] = {}
        owner: dict[str, str] = {}
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line.strip() or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) < 2:
                    raise ValueError(f"{path}:{lineno}: expected tab-separated columns")
                group_id, curie = parts[0], parts[1]
                label = parts[2] if len(parts) > 2 else ""
                types = (
                    tuple(t for t in parts[3].split(",") if t) if len(parts) > 3 else ()
                )
                split_curie(curie)  # raises on malformed identifiers
                if curie in owner and owner[curie] != group_id:
                    raise ValueError(
                        f"{path}:{lineno}: {curie} already belongs to group {owner[curie]!r}"
                    )
                owner[curie] = group_id
                groups.setdefault(group_id, []).append((curie, label, types))

        self._records: dict[str, EntityRecord] = {}
        for members in groups.values():
            curies = []
            seen: set[str] = set()
            for curie, _, _ in members:
                if curie not in seen:
                    seen.add(curie)
                    curies.append(curie)
            canonical = pick_canonical(curies, namespace_priority)
            label = ""
            for curie, member_label, _ in members:
                if curie == canonical and member_label:
                    label = member_label
                    break
            if not label:
                label = next((l for _, l, _ in members if l), canonical)
            types: list[str] = []
            for _, _, member_types in members:
                for t in member_types:
                    if t not in types:
                        types.append(t)
            record = EntityRecord(
                canonical_id=canonical,
                equivalent_ids=tuple(curies),
                label=label,
                semantic_types=tuple(types),
            )
            for curie in curies:
                self._records[curie] = record

    def resolve(self, curies: Sequence[str]) -> dict[str, EntityRecord]:
        return {c: self._records[c] for c in curies if c in self._records}


class HttpResolverProvider(ResolverProvider):
    """Resolver backed by a node-normalizer style HTTP endpoint.

    POSTs ``{"curies": [...]}`` and expects a mapping from each requested
    CURIE to either null or an object with ``id.identifier``, ``id.label``,
    ``equivalent_identifiers`` (objects with ``identifier``), and ``type``.
    """

    def __init__(
        self,
        url: str,
        session: requests.Session | None = None,
        timeout_s: float = 30.0,
    ):
        self.url = url
        self.session = session or requests.Session()
        self.timeout_s = timeout_s

    def resolve(self, curies: Sequence[str]) -> dict[str, EntityRecord]:
        if not curies:
            return {}
        try:
            response = self.session.post(
                self.url, json={"curies": list(curies)}, timeout=self.timeout_s
            )
            response.raise_for_status()
            payload = response.json()
        except requests.RequestException as exc:
            raise ResolverUnavailable(f"resolver request failed: {exc}") from exc
        except ValueError as exc:
            raise ResolverUnavailable(f"resolver returned non-JSON: {exc}") from exc
        if not isinstance(payload, Mapping):
            raise ResolverUnavailable("resolver response must be a mapping")
        out: dict[str, EntityRecord] = {}
        for curie in curies:
            entry = payload.get(curie)
            if not isinstance(entry, Mapping):
                continue
            ident = entry.get("id")
            ident = ident if isinstance(ident, Mapping) else {}
            canonical = ident.get("identifier")
            if not isinstance(canonical, str) or not canonical:
                continue
            label = ident.get("label")
            label = label if isinstance(label, str) else ""
            equivalents = []
            for eq in entry.get("equivalent_identifiers", ()):
                if isinstance(eq, Mapping) and isinstance(eq.get("identifier"), str):
                    if eq["identifier"] not in equivalents:
                        equivalents.append(eq["identifier"])
            if canonical not in equivalents:
                equivalents.insert(0, canonical)
            types = tuple(
                t for t in entry.get("type", ()) if isinstance(t, str)
            )
            out[curie] = EntityRecord(
                canonical_id=canonical,
                equivalent_ids=tuple(equivalents),
                label=label,
                semantic_types=types,
            )
        return out


class CachingResolver(ResolverProvider):
    """Thread-safe per-identifier cache in front of another provider."""

    def __init__(self, provider: ResolverProvider):
        self._provider = provider
        self._cache: dict[str, EntityRecord] = {}
        self._lock = threading.Lock()

    def resolve(self, curies: Sequence[str]) -> dict[str, EntityRecord]:
        with self._lock:
            missing = [c for c in dict.fromkeys(curies) if c not in self._cache]
        if missing:
            fetched = self._provider.resolve(missing)
            with self._lock:
                # concurrent fetches of the same key write equal immutable
                # records, so last-write-wins is safe
                self._cache.update(fetched)
        with self._lock:
            return {c: self._cache[c] for c in curies if c in self._cache}


def resolve(
    ids: Sequence[str],
    provider: ResolverProvider,
    batch_size: int = DEFAULT_BATCH_SIZE,
) -> dict[str, EntityRecord]:
    """Resolve every identifier, filling unknowns with self-records."""
    unique = list(dict.fromkeys(ids))
    for curie in unique:
        split_curie(curie)
    out: dict[str, EntityRecord] = {}
    for i in range(0, len(unique), batch_size):
        chunk = unique[i : i + batch_size]
        try:
            out.update(provider.resolve(chunk))
        except ResolverUnavailable:
            raise
        except Exception as exc:
            raise ResolverUnavailable(f"resolver provider failed: {exc}") from exc
    for curie in unique:
        if curie not in out:
            out[curie] = self_record(curie)
    return out
