"""HTTP request/response value types and the transport contract.

Query parameter values are rendered upstream by the template engine and
must reach the wire verbatim, so the full URL is composed by plain string
joining with no re-encoding.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import requests

from .errors import TransportError, TransportTimeout

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HttpRequestSpec:
    """A fully rendered request: method, bare URL, ordered query parameters."""

    method: str
    url: str  # absolute URL without a query string
    params: tuple[tuple[str, str], ...] = ()
    headers: tuple[tuple[str, str], ...] = ()
    body: str | None = None
    timeout_ms: int | None = None

    @property
    def full_url(self) -> str:
        if not self.params:
            return self.url
        query = "&".join(f"{k}={v}" for k, v in self.params)
        return f"{self.url}?{query}"


@dataclass(frozen=True)
class HttpResponse:
    """Status plus the parsed body document (None when not structured)."""

    status: int
    body: object = None


class Transport:
    """Contract: deliver a request, produce a response or raise.

    Implementations raise TransportTimeout when the deadline passes and
    TransportError for failures below the HTTP layer; an HTTP error status
    is a normal response, not an exception.
    """

    def send(self, request: HttpRequestSpec) -> HttpResponse:
        raise NotImplementedError


class LiveTransport(Transport):
    """Real network transport. Only used when explicitly enabled."""

    def __init__(self, session: requests.Session | None = None):
        self.session = session or requests.Session()

    def send(self, request: HttpRequestSpec) -> HttpResponse:
        timeout_s = request.timeout_ms / 1000.0 if request.timeout_ms else None
        try:
            raw = self.session.request(
                request.method.upper(),
                request.full_url,
                headers=dict(request.headers) or None,
                data=request.body,
                timeout=timeout_s,
            )
        except requests.Timeout as exc:
            raise TransportTimeout(str(exc)) from exc
        except requests.RequestException as exc:
            raise TransportError(str(exc)) from exc
        try:
            body = raw.json()
        except json.JSONDecodeError:
            body = None
        except ValueError:
            body = None
        return HttpResponse(status=raw.status_code, body=body)
