"""Clock abstraction so latency and backoff are testable without real waiting."""

from __future__ import annotations

import threading
import time


class Clock:
    """Time source used by the executor and the simulated network."""

    def monotonic(self) -> float:
        raise NotImplementedError

    def sleep(self, seconds: float) -> None:
        raise NotImplementedError


class RealClock(Clock):
    """Wall-clock time; sleeps actually block the calling thread."""

    def monotonic(self) -> float:
        return time.monotonic()

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            time.sleep(seconds)


class FastClock(Clock):
    """Advances instantly on sleep.

    Concurrency semantics differ from a real clock: sleeping threads do not
    yield for the sleep duration, so interleaving-sensitive tests should use
    RealClock with small delays instead.
    """

    def __init__(self) -> None:
        self._now = 0.0
        self._lock = threading.Lock()

    def monotonic(self) -> float:
        with self._lock:
            return self._now

    def sleep(self, seconds: float) -> None:
        with self._lock:
            self._now += max(seconds, 0.0)
