"""Dot-paths into response documents, with implicit mapping over lists.

A path like ``links.url`` walks nested mappings; whenever the current value
is a list, the rest of the path is applied to each element and the results
are concatenated in document order. Missing keys contribute nothing.
"""

from __future__ import annotations

import re

_SEGMENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_\-]*$")

Scalar = (str, int, float)


def parse_path(path: str) -> tuple[str, ...]:
    """Split a dot-path into segments, rejecting empty or malformed ones."""
    if not isinstance(path, str) or not path:
        raise ValueError("path must be a non-empty string")
    segments = tuple(path.split("."))
    for seg in segments:
        if not _SEGMENT.match(seg):
            raise ValueError(f"bad path segment {seg!r} in {path!r}")
    return segments


def path_is_valid(path: object) -> bool:
    try:
        parse_path(path)  # type: ignore[arg-type]
    except ValueError:
        return False
    return True


def _is_scalar(value: object) -> bool:
    # bool is an int subclass but a boolean is not an identifier or attribute value
    return isinstance(value, Scalar) and not isinstance(value, bool)


def evaluate_path(document: object, path: str | tuple[str, ...]) -> list:
    """Collect every scalar the path reaches, in document order."""
    segments = parse_path(path) if isinstance(path, str) else path
    current: list = [document]
    for seg in segments:
        next_level: list = []
        for node in current:
            candidates = node if isinstance(node, list) else [node]
            for cand in candidates:
                if isinstance(cand, dict) and seg in cand:
                    next_level.append(cand[seg])
        current = next_level
    out: list = []
    for node in current:
        # one level of flattening at the leaves: a path ending on a list of
        # scalars yields those scalars, not the list
        leaves = node if isinstance(node, list) else [node]
        for leaf in leaves:
            if _is_scalar(leaf):
                out.append(leaf)
    return out
