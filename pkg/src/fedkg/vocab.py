"""Semantic-type vocabulary and the configurable type hierarchy."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import yaml

from .errors import HierarchyInvalid


@dataclass(frozen=True)
class TypeVocabulary:
    """The closed sets of semantic types and identifier namespaces.

    ``namespace_priority`` orders namespaces from most to least preferred
    for picking canonical identifiers; namespaces missing from it rank
    after all listed ones, alphabetically.
    """

    semantic_types: frozenset[str]
    id_namespaces: frozenset[str]
    namespace_priority: tuple[str, ...] = ()

    @classmethod
    def from_dict(cls, data: Mapping) -> "TypeVocabulary":
        return cls(
            semantic_types=frozenset(data.get("semantic_types", ())),
            id_namespaces=frozenset(data.get("id_namespaces", ())),
            namespace_priority=tuple(data.get("namespace_priority", ())),
        )

    @classmethod
    def load(cls, path: Path | str) -> "TypeVocabulary":
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, Mapping):
            raise ValueError(f"vocabulary file {path} must hold a mapping")
        return cls.from_dict(data)


class TypeHierarchy:
    """A child-to-parent forest over semantic types.

    Used to expand a type constraint to the constraint plus all of its
    descendants. Every type not mentioned here simply has no descendants.
    """

    def __init__(self, parents: Mapping[str, str] | None = None):
        self._parents: dict[str, str] = dict(parents or {})
        self._children: dict[str, list[str]] = {}
        for child, parent in self._parents.items():
            if not isinstance(child, str) or not isinstance(parent, str):
                raise HierarchyInvalid("hierarchy entries must map type name to type name")
            self._children.setdefault(parent, []).append(child)
        for kids in self._children.values():
            kids.sort()
        self._check_acyclic()

    def _check_acyclic(self) -> None:
        for start in self._parents:
            seen = {start}
            node = start
            while node in self._parents:
                node = self._parents[node]
                if node in seen:
                    raise HierarchyInvalid(f"cycle through type {node!r}")
                seen.add(node)

    def types(self) -> frozenset[str]:
        """Every type mentioned as child or parent."""
        return frozenset(self._parents) | frozenset(self._children)

    def parent(self, name: str) -> str | None:
        return self._parents.get(name)

    def descendants(self, name: str) -> frozenset[str]:
        """The type itself plus everything below it."""
        out = {name}
        queue = deque([name])
        while queue:
            for child in self._children.get(queue.popleft(), ()):
                if child not in out:
                    out.add(child)
                    queue.append(child)
        return frozenset(out)

    def expand(self, names: Iterable[str]) -> frozenset[str]:
        out: set[str] = set()
        for name in names:
            out |= self.descendants(name)
        return frozenset(out)

    @classmethod
    def load(cls, path: Path | str) -> "TypeHierarchy":
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, Mapping):
            raise HierarchyInvalid(f"hierarchy file {path} must hold a mapping")
        return cls(data)


EMPTY_HIERARCHY = TypeHierarchy({})
