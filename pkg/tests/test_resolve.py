"""Identifier resolution: fixtures, HTTP provider, caching, totality."""

from __future__ import annotations

import threading

import pytest
import requests

from fedkg.errors import ResolverUnavailable
from fedkg.resolve import (
    CachingResolver,
    EntityRecord,
    FileFixtureResolver,
    HttpResolverProvider,
    NullResolver,
    aliases_in_namespace,
    pick_canonical,
    resolve,
    self_record,
    split_curie,
)

from conftest import FIXTURES

PRIORITY = ("MONDO", "NCBIGene", "CHEBI", "DBSNP", "DOID", "ENSEMBL")


@pytest.fixture(scope="module")
def fixture_resolver():
    return FileFixtureResolver(FIXTURES / "entities.tsv", namespace_priority=PRIORITY)


def test_split_curie():
    assert split_curie("NCBIGene:55768") == ("NCBIGene", "55768")
    assert split_curie("a:b:c") == ("a", "b:c")
    for bad in ("nocolon", ":x", "x:", ""):
        with pytest.raises(ValueError):
            split_curie(bad)


def test_entity_record_invariants():
    with pytest.raises(ValueError):
        EntityRecord(canonical_id="X:1", equivalent_ids=("X:2",))
    with pytest.raises(ValueError):
        EntityRecord(canonical_id="X:1", equivalent_ids=("X:1", "X:1"))


def test_self_record():
    rec = self_record("X:1")
    assert rec.canonical_id == "X:1"
    assert rec.equivalent_ids == ("X:1",)
    assert rec.label == "X:1"


def test_aliases_in_namespace():
    rec = EntityRecord(
        canonical_id="NCBIGene:55768",
        equivalent_ids=("NCBIGene:55768", "ENSEMBL:ENSG00000151092"),
    )
    assert aliases_in_namespace(rec, "NCBIGene") == ["55768"]
    assert aliases_in_namespace(rec, "ENSEMBL") == ["ENSG00000151092"]
    assert aliases_in_namespace(rec, "CHEBI") == []


def test_pick_canonical():
    curies = ["ENSEMBL:ENSG1", "NCBIGene:9"]
    assert pick_canonical(curies, PRIORITY) == "NCBIGene:9"
    # unknown namespaces fall back to lexicographic order
    assert pick_canonical(["Z:1", "A:2"], ()) == "A:2"
    with pytest.raises(ValueError):
        pick_canonical([], PRIORITY)


def test_fixture_grouping(fixture_resolver):
    out = fixture_resolver.resolve(["ENSEMBL:ENSG00000151092"])
    rec = out["ENSEMBL:ENSG00000151092"]
    assert rec.canonical_id == "NCBIGene:55768"
    assert set(rec.equivalent_ids) == {"NCBIGene:55768", "ENSEMBL:ENSG00000151092"}
    assert rec.label == "NGLY1"
    assert rec.semantic_types == ("Gene",)
    # both members map to the same record object
    assert fixture_resolver.resolve(["NCBIGene:55768"])["NCBIGene:55768"] == rec


def test_fixture_unknown_omitted(fixture_resolver):
    assert fixture_resolver.resolve(["MADEUP:1"]) == {}


def test_fixture_duplicate_curie_across_groups(tmp_path):
    path = tmp_path / "dup.tsv"
    path.write_text("g1\tX:1\tone\ng2\tX:1\ttwo\n")
    with pytest.raises(ValueError, match="already belongs"):
        FileFixtureResolver(path)


def test_fixture_malformed_line(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("only-one-column\n")
    with pytest.raises(ValueError, match="tab-separated"):
        FileFixtureResolver(path)


def test_resolve_total_with_null_provider():
    out = resolve(["X:1", "Y:2", "X:1"], NullResolver())
    assert set(out) == {"X:1", "Y:2"}
    assert out["X:1"] == self_record("X:1")


def test_resolve_rejects_bare_ids():
    with pytest.raises(ValueError):
        resolve(["notacurie"], NullResolver())


def test_resolve_mixes_known_and_unknown(fixture_resolver):
    out = resolve(["CHEBI:17234", "MADEUP:1"], fixture_resolver)
    assert out["CHEBI:17234"].label == "glucose"
    assert out["MADEUP:1"] == self_record("MADEUP:1")


class CountingProvider(NullResolver):
    def __init__(self, inner):
        self.inner = inner
        self.calls: list[list[str]] = []

    def resolve(self, curies):
        self.calls.append(list(curies))
        return self.inner.resolve(curies)


def test_resolve_batching(fixture_resolver):
    counting = CountingProvider(fixture_resolver)
    ids = ["CHEBI:17234", "CHEBI:28757", "CHEBI:15377"]
    resolve(ids, counting, batch_size=2)
    assert counting.calls == [ids[:2], ids[2:]]


def test_caching_resolver_fetches_once(fixture_resolver):
    counting = CountingProvider(fixture_resolver)
    caching = CachingResolver(counting)
    first = caching.resolve(["CHEBI:17234"])
    second = caching.resolve(["CHEBI:17234"])
    assert first == second
    assert counting.calls == [["CHEBI:17234"]]
    # unknown ids are not cached as absent; they are retried
    caching.resolve(["MADEUP:1"])
    caching.resolve(["MADEUP:1"])
    assert counting.calls[1:] == [["MADEUP:1"], ["MADEUP:1"]]


def test_caching_resolver_thread_safety(fixture_resolver):
    caching = CachingResolver(fixture_resolver)
    errors: list[Exception] = []

    def worker():
        try:
            for _ in range(50):
                out = caching.resolve(["CHEBI:17234", "NCBIGene:358"])
                assert out["CHEBI:17234"].label == "glucose"
        except Exception as exc:  # noqa: BLE001 - collected for the assertion
            errors.append(exc)

    threads = [threading.Thread(target=worker) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors


class FakeResponse:
    def __init__(self, payload, status=200):
        self._payload = payload
        self.status_code = status

    def raise_for_status(self):
        if self.status_code >= 400:
            raise requests.HTTPError(f"{self.status_code}")

    def json(self):
        if isinstance(self._payload, Exception):
            raise self._payload
        return self._payload


class FakeSession:
    def __init__(self, payload, status=200, exc=None):
        self.payload = payload
        self.status = status
        self.exc = exc
        self.requests: list[dict] = []

    def post(self, url, json=None, timeout=None):
        self.requests.append({"url": url, "json": json, "timeout": timeout})
        if self.exc is not None:
            raise self.exc
        return FakeResponse(self.payload, self.status)


NORMALIZER_PAYLOAD = {
    "NCBIGene:55768": {
        "id": {"identifier": "NCBIGene:55768", "label": "NGLY1"},
        "equivalent_identifiers": [
            {"identifier": "NCBIGene:55768"},
            {"identifier": "ENSEMBL:ENSG00000151092"},
        ],
        "type": ["Gene"],
    },
    "MADEUP:1": None,
}


def test_http_provider_parses_normalizer_shape():
    session = FakeSession(NORMALIZER_PAYLOAD)
    provider = HttpResolverProvider("http://resolver.test/normalize", session=session)
    out = provider.resolve(["NCBIGene:55768", "MADEUP:1"])
    assert session.requests[0]["json"] == {"curies": ["NCBIGene:55768", "MADEUP:1"]}
    assert set(out) == {"NCBIGene:55768"}
    rec = out["NCBIGene:55768"]
    assert rec.canonical_id == "NCBIGene:55768"
    assert rec.equivalent_ids == ("NCBIGene:55768", "ENSEMBL:ENSG00000151092")
    assert rec.label == "NGLY1"
    assert rec.semantic_types == ("Gene",)


def test_http_provider_inserts_missing_canonical():
    payload = {
        "X:1": {
            "id": {"identifier": "Y:1"},
            "equivalent_identifiers": [{"identifier": "X:1"}],
        }
    }
    provider = HttpResolverProvider("http://r.test", session=FakeSession(payload))
    rec = provider.resolve(["X:1"])["X:1"]
    assert rec.equivalent_ids == ("Y:1", "X:1")


def test_http_provider_empty_request_short_circuits():
    session = FakeSession({})
    provider = HttpResolverProvider("http://r.test", session=session)
    assert provider.resolve([]) == {}
    assert session.requests == []


@pytest.mark.parametrize(
    "session",
    [
        FakeSession(None, exc=requests.ConnectionError("refused")),
        FakeSession(None, exc=requests.Timeout("slow")),
        FakeSession({}, status=503),
        FakeSession(ValueError("not json")),
        FakeSession(["not", "a", "mapping"]),
    ],
)
def test_http_provider_failures_raise_unavailable(session):
    provider = HttpResolverProvider("http://r.test", session=session)
    with pytest.raises(ResolverUnavailable):
        provider.resolve(["X:1"])


def test_resolver_unavailable_propagates_through_resolve():
    session = FakeSession(None, exc=requests.ConnectionError("refused"))
    provider = HttpResolverProvider("http://r.test", session=session)
    with pytest.raises(ResolverUnavailable):
        resolve(["X:1"], provider)
