"""Deterministic simulated API network.

A scenario document declares APIs with base URLs, routes, seeded latency,
and a failure plan keyed by per-API call index. The network implements the
transport contract, so the executor cannot tell it from a live one, and it
keeps an append-only call log that tests use to check ordering, retries,
and the in-flight maximum.
"""

from __future__ import annotations

import logging
import random
import re
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import yaml

from .clock import Clock, RealClock
from .errors import ScenarioInvalid, TransportTimeout
from .transport import HttpRequestSpec, HttpResponse, Transport

logger = logging.getLogger(__name__)

_CAPTURE = "{value}"


def _compile_pattern(pattern: str) -> re.Pattern:
    if pattern.count(_CAPTURE) > 1:
        raise ScenarioInvalid(f"route pattern {pattern!r} may capture at most one value")
    if _CAPTURE in pattern:
        head, tail = pattern.split(_CAPTURE, 1)
        return re.compile(re.escape(head) + r"([^/&?#]+)" + re.escape(tail) + r"$")
    return re.compile(re.escape(pattern) + r"$")


@dataclass(frozen=True)
class SimRoute:
    """One URL pattern with canned responses keyed by the captured value."""

    method: str
    pattern: str
    regex: re.Pattern
    responders: Mapping[str, object]
    status: int = 200
    default_status: int = 404


@dataclass(frozen=True)
class FailDirective:
    """Force an outcome for specific per-API call indexes (None = every call)."""

    call_indexes: frozenset[int] | None
    status: int | None = None
    timeout: bool = False

    def applies(self, call_index: int) -> bool:
        return self.call_indexes is None or call_index in self.call_indexes


@dataclass(frozen=True)
class SimApi:
    api_id: str
    base_url: str
    latency_range_ms: tuple[float, float]
    routes: tuple[SimRoute, ...]
    fail_plan: tuple[FailDirective, ...]


@dataclass(frozen=True)
class CallRecord:
    """One observed request, with global begin/end sequence numbers."""

    api_id: str
    call_index: int
    method: str
    url: str
    outcome: str  # "timeout" or the status code as a string
    route_pattern: str | None
    begin_seq: int
    end_seq: int
    latency_ms: float


class SimNetwork(Transport):
    """Transport over a scenario. Thread-safe; all mutation sits under one lock."""

    def __init__(self, apis: Sequence[SimApi], seed: int = 0, clock: Clock | None = None):
        seen_urls: set[str] = set()
        seen_ids: set[str] = set()
        for api in apis:
            if api.base_url in seen_urls:
                raise ScenarioInvalid(f"duplicate base_url {api.base_url!r}")
            if api.api_id in seen_ids:
                raise ScenarioInvalid(f"duplicate api_id {api.api_id!r}")
            seen_urls.add(api.base_url)
            seen_ids.add(api.api_id)
        # longest prefix first so nested base URLs route to the deeper API
        self._apis = tuple(sorted(apis, key=lambda a: -len(a.base_url)))
        self.seed = seed
        self.clock = clock if clock is not None else RealClock()
        self._lock = threading.Lock()
        self._seq = 0
        self._counts: dict[str, int] = {}
        self.call_log: list[CallRecord] = []

    def _latency_ms(self, api: SimApi, call_index: int) -> float:
        lo, hi = api.latency_range_ms
        if lo == hi:
            return lo
        rng = random.Random(f"{self.seed}|{api.api_id}|{call_index}")
        return rng.uniform(lo, hi)

    def _next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def send(self, request: HttpRequestSpec) -> HttpResponse:
        full_url = request.full_url
        method = request.method.lower()
        with self._lock:
            begin = self._next_seq()
            api = next((a for a in self._apis if full_url.startswith(a.base_url)), None)
            if api is None:
                end = self._next_seq()
                self.call_log.append(
                    CallRecord("", -1, method, full_url, "404", None, begin, end, 0.0)
                )
                return HttpResponse(404, None)
            call_index = self._counts.get(api.api_id, 0)
            self._counts[api.api_id] = call_index + 1
            latency = self._latency_ms(api, call_index)

        remainder = full_url[len(api.base_url):]
        directive = next(
            (d for d in api.fail_plan if d.applies(call_index)), None
        )

        timed_out = False
        status: int = 404
        body: object = None
        pattern: str | None = None

        if directive is not None and directive.timeout:
            timed_out = True
        else:
            if directive is not None:
                status = directive.status or 500
            else:
                for route in api.routes:
                    if route.method != method:
                        continue
                    m = route.regex.match(remainder)
                    if m is None:
                        continue
                    pattern = route.pattern
                    captured = m.group(1) if m.groups() else ""
                    if captured in route.responders:
                        status = route.status
                        body = route.responders[captured]
                    else:
                        status = route.default_status
                    break
            if request.timeout_ms is not None and latency > request.timeout_ms:
                timed_out = True

        if timed_out:
            wait_ms = latency
            if request.timeout_ms is not None:
                wait_ms = min(wait_ms, float(request.timeout_ms))
            self.clock.sleep(wait_ms / 1000.0)
            with self._lock:
                end = self._next_seq()
                self.call_log.append(
                    CallRecord(
                        api.api_id, call_index, method, full_url,
                        "timeout", pattern, begin, end, latency,
                    )
                )
            raise TransportTimeout(
                f"{api.api_id} call {call_index} exceeded {request.timeout_ms} ms"
            )

        self.clock.sleep(latency / 1000.0)
        with self._lock:
            end = self._next_seq()
            self.call_log.append(
                CallRecord(
                    api.api_id, call_index, method, full_url,
                    str(status), pattern, begin, end, latency,
                )
            )
        return HttpResponse(status, body)

    def calls_to(self, api_id: str) -> list[CallRecord]:
        with self._lock:
            return [r for r in self.call_log if r.api_id == api_id]

    def max_inflight(self) -> int:
        """Largest number of calls whose begin/end intervals overlap."""
        with self._lock:
            events = []
            for r in self.call_log:
                events.append((r.begin_seq, 1))
                events.append((r.end_seq, -1))
        events.sort()
        peak = current = 0
        for _, delta in events:
            current += delta
            peak = max(peak, current)
        return peak


def assert_max_inflight(network: SimNetwork, limit: int) -> int:
    """Check the observed in-flight peak against a limit; returns the peak."""
    peak = network.max_inflight()
    if peak > limit:
        raise AssertionError(f"observed {peak} in-flight calls, limit was {limit}")
    return peak


def _parse_latency(raw: object, where: str) -> tuple[float, float]:
    if raw is None:
        return (0.0, 0.0)
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        if raw < 0:
            raise ScenarioInvalid(f"{where}: latency must be non-negative")
        return (float(raw), float(raw))
    if (
        isinstance(raw, (list, tuple))
        and len(raw) == 2
        and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw)
    ):
        lo, hi = float(raw[0]), float(raw[1])
        if lo < 0 or hi < lo:
            raise ScenarioInvalid(f"{where}: latency range must satisfy 0 <= min <= max")
        return (lo, hi)
    raise ScenarioInvalid(f"{where}: latency_ms must be a number or [min, max]")


def _parse_fail(raw: object, where: str) -> tuple[FailDirective, ...]:
    if raw is None:
        return ()
    if not isinstance(raw, list):
        raise ScenarioInvalid(f"{where}: fail must be a list")
    out = []
    for i, entry in enumerate(raw):
        if not isinstance(entry, Mapping):
            raise ScenarioInvalid(f"{where}/{i}: fail entry must be a mapping")
        calls = entry.get("calls", "all")
        if calls == "all":
            indexes = None
        elif isinstance(calls, list) and all(
            isinstance(c, int) and not isinstance(c, bool) for c in calls
        ):
            indexes = frozenset(calls)
        else:
            raise ScenarioInvalid(f"{where}/{i}: calls must be 'all' or a list of integers")
        timeout = bool(entry.get("timeout", False))
        status = entry.get("status")
        if status is not None and (not isinstance(status, int) or isinstance(status, bool)):
            raise ScenarioInvalid(f"{where}/{i}: status must be an integer")
        if timeout == (status is not None):
            raise ScenarioInvalid(f"{where}/{i}: exactly one of status or timeout")
        out.append(FailDirective(indexes, status, timeout))
    return tuple(out)


def _parse_routes(raw: object, where: str) -> tuple[SimRoute, ...]:
    if raw is None:
        return ()
    if not isinstance(raw, list):
        raise ScenarioInvalid(f"{where}: routes must be a list")
    out = []
    seen: set[tuple[str, str]] = set()
    for i, entry in enumerate(raw):
        if not isinstance(entry, Mapping):
            raise ScenarioInvalid(f"{where}/{i}: route must be a mapping")
        method = entry.get("method", "GET")
        if not isinstance(method, str):
            raise ScenarioInvalid(f"{where}/{i}: method must be a string")
        method = method.lower()
        pattern = entry.get("path")
        if not isinstance(pattern, str) or not pattern:
            raise ScenarioInvalid(f"{where}/{i}: path is required")
        key = (method, pattern)
        if key in seen:
            raise ScenarioInvalid(f"{where}/{i}: duplicate route {method.upper()} {pattern}")
        seen.add(key)
        responders: dict[str, object] = {}
        if "responses" in entry:
            raw_responses = entry["responses"]
            if not isinstance(raw_responses, Mapping):
                raise ScenarioInvalid(f"{where}/{i}: responses must be a mapping")
            responders.update({str(k): v for k, v in raw_responses.items()})
        if "response" in entry:
            responders[""] = entry["response"]
        status = entry.get("status", 200)
        default_status = entry.get("default_status", 404)
        for label, value in (("status", status), ("default_status", default_status)):
            if not isinstance(value, int) or isinstance(value, bool):
                raise ScenarioInvalid(f"{where}/{i}: {label} must be an integer")
        out.append(
            SimRoute(
                method=method,
                pattern=pattern,
                regex=_compile_pattern(pattern),
                responders=responders,
                status=status,
                default_status=default_status,
            )
        )
    return tuple(out)


def load_scenario(document: object, clock: Clock | None = None) -> SimNetwork:
    if not isinstance(document, Mapping):
        raise ScenarioInvalid("scenario must be a mapping")
    seed = document.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ScenarioInvalid("seed must be an integer")
    apis_raw = document.get("apis")
    if not isinstance(apis_raw, list) or not apis_raw:
        raise ScenarioInvalid("apis must be a non-empty list")
    apis = []
    for i, entry in enumerate(apis_raw):
        where = f"apis/{i}"
        if not isinstance(entry, Mapping):
            raise ScenarioInvalid(f"{where}: api must be a mapping")
        api_id = entry.get("api_id")
        base_url = entry.get("base_url")
        if not isinstance(api_id, str) or not api_id:
            raise ScenarioInvalid(f"{where}: api_id is required")
        if not isinstance(base_url, str) or not base_url:
            raise ScenarioInvalid(f"{where}: base_url is required")
        apis.append(
            SimApi(
                api_id=api_id,
                base_url=base_url.rstrip("/"),
                latency_range_ms=_parse_latency(entry.get("latency_ms"), where),
                routes=_parse_routes(entry.get("routes"), f"{where}/routes"),
                fail_plan=_parse_fail(entry.get("fail"), f"{where}/fail"),
            )
        )
    return SimNetwork(apis, seed=seed, clock=clock)


def load_scenario_file(path: Path | str, clock: Clock | None = None) -> SimNetwork:
    with open(path, "r", encoding="utf-8") as fh:
        document = yaml.safe_load(fh)
    return load_scenario(document, clock=clock)
