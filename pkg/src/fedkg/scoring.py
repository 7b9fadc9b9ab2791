"""Result scoring from literature co-occurrence counts.

The distance between two entities is the normalized Google distance over
occurrence counts in a corpus of known size. A record edge scores
1 / (1 + distance); a result averages its best per-edge scores. Unknown
pairs and provider failures degrade to a zero contribution rather than
failing the query.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from .assemble import ResultGraph, query_oriented_pair
from .errors import DomainError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OccurrenceCounts:
    """How often two terms occur in a corpus, alone and together."""

    count_x: int
    count_y: int
    count_both: int
    corpus_size: int


def ngd(counts: OccurrenceCounts) -> float:
    """Normalized Google distance; infinity when the terms never co-occur.

    Preconditions: the corpus is larger than one document, each term occurs
    at least once and at most corpus_size times, and the joint count cannot
    exceed either individual count.
    """
    fx, fy, fxy, n = (
        counts.count_x,
        counts.count_y,
        counts.count_both,
        counts.corpus_size,
    )
    if n < 2:
        raise DomainError("corpus_size must be at least 2")
    if fx < 1 or fy < 1:
        raise DomainError("each term must occur at least once")
    if fx > n or fy > n:
        raise DomainError("term counts cannot exceed the corpus size")
    if fxy < 0 or fxy > min(fx, fy):
        raise DomainError("joint count must sit within [0, min(count_x, count_y)]")
    if fxy == 0:
        return math.inf
    log_fx, log_fy, log_fxy, log_n = (
        math.log(fx),
        math.log(fy),
        math.log(fxy),
        math.log(n),
    )
    denominator = log_n - min(log_fx, log_fy)
    if denominator == 0.0:
        # both terms are in every document: distance collapses to zero when
        # they always co-occur and is unbounded otherwise
        return 0.0 if fxy == n else math.inf
    return (max(log_fx, log_fy) - log_fxy) / denominator


def distance_to_score(distance: float) -> float:
    """Map a distance in [0, inf] onto a score in (0, 1]; inf scores zero."""
    if math.isinf(distance):
        return 0.0
    return 1.0 / (1.0 + distance)


class CountsProvider:
    """Contract: co-occurrence counts for a pair, or None when unknown."""

    def counts(self, x: str, y: str) -> OccurrenceCounts | None:
        raise NotImplementedError


class NullCounts(CountsProvider):
    """Knows nothing; every pair is unknown."""

    def counts(self, x: str, y: str) -> OccurrenceCounts | None:
        return None


class FileFixtureCounts(CountsProvider):
    """TSV-backed counts.

    A header line ``# corpus_size=N`` (or ``# N=...``) sets the corpus
    size; data rows are ``x<TAB>y<TAB>count_x<TAB>count_y<TAB>count_both``.
    Lookups are symmetric: (y, x) answers with the roles swapped.
    """

    def __init__(self, path: Path | str):
        self.corpus_size: int | None = None
        self._pairs: dict[tuple[str, str], tuple[int, int, int]] = {}
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                if line.startswith("#"):
                    text = line.lstrip("#").strip()
                    for key in ("corpus_size=", "N="):
                        if text.startswith(key):
                            self.corpus_size = int(text[len(key):].strip())
                    continue
                parts = line.split("\t")
                if len(parts) != 5:
                    raise ValueError(f"{path}:{lineno}: expected 5 tab-separated columns")
                x, y = parts[0], parts[1]
                fx, fy, fxy = int(parts[2]), int(parts[3]), int(parts[4])
                if (x, y) in self._pairs or (y, x) in self._pairs:
                    raise ValueError(f"{path}:{lineno}: duplicate pair ({x}, {y})")
                self._pairs[(x, y)] = (fx, fy, fxy)
        if self.corpus_size is None:
            raise ValueError(f"{path}: missing '# corpus_size=N' header line")

    def counts(self, x: str, y: str) -> OccurrenceCounts | None:
        assert self.corpus_size is not None
        if (x, y) in self._pairs:
            fx, fy, fxy = self._pairs[(x, y)]
            return OccurrenceCounts(fx, fy, fxy, self.corpus_size)
        if (y, x) in self._pairs:
            fy, fx, fxy = self._pairs[(y, x)]
            return OccurrenceCounts(fx, fy, fxy, self.corpus_size)
        return None


def score_result(result: ResultGraph, provider: CountsProvider) -> float:
    """Mean over query edges of the best record score on each edge.

    The pair scored for a record is its query-oriented canonical ids.
    Unknown pairs, invalid counts, and provider errors contribute zero.
    """
    if not result.edge_bindings:
        return 1.0
    edge_scores: list[float] = []
    for _, records in result.edge_bindings:
        best = 0.0
        for record in records:
            x, y = query_oriented_pair(record)
            try:
                counts = provider.counts(x, y)
            except Exception:
                logger.warning("counts provider failed for (%s, %s)", x, y, exc_info=True)
                counts = None
            if counts is None:
                continue
            try:
                best = max(best, distance_to_score(ngd(counts)))
            except DomainError:
                logger.warning("invalid counts for (%s, %s): %s", x, y, counts)
        edge_scores.append(best)
    return sum(edge_scores) / len(edge_scores)


def score_results(
    results: Sequence[ResultGraph], provider: CountsProvider
) -> list[ResultGraph]:
    return [replace(r, score=score_result(r, provider)) for r in results]


def rank(results: Sequence[ResultGraph]) -> list[ResultGraph]:
    """Best score first; equal scores fall back to the binding key."""
    return sorted(
        results,
        key=lambda r: (-(r.score if r.score is not None else 0.0), r.binding_key()),
    )
