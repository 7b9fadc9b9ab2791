"""HTTP service endpoints over the simulated network."""

from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from fedkg.engine import canonical_json
from fedkg.service import create_app

from conftest import make_fig1_engine


@pytest.fixture()
def client():
    return TestClient(create_app(make_fig1_engine()))


def test_query_success_bytes_are_canonical(client, fig1_query):
    response = client.post("/v1/query", json=fig1_query)
    assert response.status_code == 200
    assert response.headers["content-type"].startswith("application/json")
    engine = make_fig1_engine()
    expected = canonical_json(engine.run(fig1_query, strict=True).document)
    assert response.content == expected.encode("ascii")


def test_query_rejects_non_json_body(client):
    response = client.post(
        "/v1/query", content=b"not json", headers={"content-type": "application/json"}
    )
    assert response.status_code == 400
    assert response.json()["error"]["code"] == "BadRequest"


def test_query_syntax_error_is_400(client):
    response = client.post("/v1/query", json={"message": {}})
    assert response.status_code == 400
    assert response.json()["error"]["code"] == "QuerySyntax"


def test_query_invalid_is_400(client):
    document = {
        "message": {
            "query_graph": {
                "nodes": {"n0": {"categories": ["Gene"]}},
                "edges": {},
            }
        }
    }
    response = client.post("/v1/query", json=document)
    assert response.status_code == 400
    assert response.json()["error"]["code"] == "QueryInvalid"


def test_query_unknown_type_is_400(client):
    document = {
        "message": {
            "query_graph": {
                "nodes": {
                    "n0": {"ids": ["X:1"], "categories": ["NotAType"]},
                    "n1": {},
                },
                "edges": {"e0": {"subject": "n0", "object": "n1"}},
            }
        }
    }
    response = client.post("/v1/query", json=document)
    assert response.status_code == 400
    assert response.json()["error"]["code"] == "UnknownType"


def test_query_unsatisfiable_is_422(client):
    document = {
        "message": {
            "query_graph": {
                "nodes": {
                    "n0": {"ids": ["MONDO:1"], "categories": ["Disease"]},
                    "n1": {"categories": ["Disease"]},
                },
                "edges": {
                    "e0": {"subject": "n0", "object": "n1", "predicates": ["related_to"]}
                },
            }
        }
    }
    response = client.post("/v1/query", json=document)
    assert response.status_code == 422
    assert response.json()["error"]["code"] == "UnsatisfiablePlan"


def test_internal_error_is_500_with_incident(fig1_query):
    engine = make_fig1_engine()

    def explode(*args, **kwargs):
        raise RuntimeError("wires crossed")

    engine.run = explode
    client = TestClient(create_app(engine), raise_server_exceptions=False)
    response = client.post("/v1/query", json=fig1_query)
    assert response.status_code == 500
    error = response.json()["error"]
    assert error["code"] == "Internal"
    assert "incident" in error["message"]
    # internals never leak into the response
    assert "wires crossed" not in response.text


def test_meta_knowledge_graph_endpoint(client):
    response = client.get("/v1/meta_knowledge_graph")
    assert response.status_code == 200
    engine = make_fig1_engine()
    assert response.content == canonical_json(engine.metakg_export()).encode("ascii")


def test_docs_disabled(client):
    assert client.get("/docs").status_code == 404
