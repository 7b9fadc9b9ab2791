"""HTTP service: POST /v1/query and GET /v1/meta_knowledge_graph.

Responses are canonical JSON bytes, identical to what the CLI writes for
the same query. Error statuses: 400 for malformed or invalid queries, 422
for well-formed queries no operation can serve, 500 with an opaque
incident id for anything unexpected.
"""

from __future__ import annotations

import asyncio
import logging
import uuid

from fastapi import FastAPI, Request, Response
from starlette.concurrency import run_in_threadpool

from .engine import Engine, UnsatisfiablePlan, canonical_json
from .errors import QueryInvalid, QuerySyntax, UnknownType

logger = logging.getLogger(__name__)

_MEDIA_TYPE = "application/json"


def _error(status: int, code: str, message: str) -> Response:
    payload = {"error": {"code": code, "message": message}}
    return Response(
        content=canonical_json(payload), status_code=status, media_type=_MEDIA_TYPE
    )


def create_app(engine: Engine, max_inflight_queries: int = 8) -> FastAPI:
    app = FastAPI(title="fedkg", docs_url=None, redoc_url=None)
    gate = asyncio.Semaphore(max_inflight_queries)

    @app.post("/v1/query")
    async def query(request: Request) -> Response:
        try:
            body = await request.json()
        except Exception:
            return _error(400, "BadRequest", "request body must be JSON")
        async with gate:
            try:
                outcome = await run_in_threadpool(engine.run, body, True)
            except (QuerySyntax, QueryInvalid, UnknownType) as exc:
                return _error(400, type(exc).__name__, str(exc))
            except UnsatisfiablePlan as exc:
                return _error(422, "UnsatisfiablePlan", str(exc))
            except Exception:
                incident = uuid.uuid4().hex[:12]
                logger.exception("query failed; incident %s", incident)
                return _error(500, "Internal", f"internal error; incident {incident}")
        return Response(
            content=canonical_json(outcome.document), media_type=_MEDIA_TYPE
        )

    @app.get("/v1/meta_knowledge_graph")
    async def meta_knowledge_graph() -> Response:
        document = await run_in_threadpool(engine.metakg_export)
        return Response(content=canonical_json(document), media_type=_MEDIA_TYPE)

    return app
