"""Shared test fixtures: paths, parsed registries, and engine builders."""

from __future__ import annotations

import json
from pathlib import Path

import pytest
import yaml

from fedkg.engine import Engine, EngineConfig
from fedkg.executor import ExecutionPolicy
from fedkg.metakg import build_metakg
from fedkg.registry import load_registry_dir
from fedkg.vocab import TypeHierarchy, TypeVocabulary

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES = REPO_ROOT / "fixtures"
REGISTRY_DIR = FIXTURES / "registry"
TEST_DATA = Path(__file__).resolve().parent / "data"
COUNTS_REGISTRY = TEST_DATA / "registry_counts"

# one line per acceptance criterion, printed after the run so the verdicts
# survive pytest's output capture
ACCEPTANCE_RESULTS: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def registry_dir() -> Path:
    return REGISTRY_DIR


@pytest.fixture(scope="session")
def vocab() -> TypeVocabulary:
    return TypeVocabulary.load(REGISTRY_DIR / "vocabulary.yaml")


@pytest.fixture(scope="session")
def hierarchy() -> TypeHierarchy:
    return TypeHierarchy.load(REGISTRY_DIR / "hierarchy.yaml")


@pytest.fixture(scope="session")
def registry(vocab):
    return load_registry_dir(REGISTRY_DIR, vocab)


@pytest.fixture(scope="session")
def metakg(registry, hierarchy, vocab):
    return build_metakg(registry, hierarchy=hierarchy, vocab=vocab)


@pytest.fixture(scope="session")
def counts_registry():
    vocab = TypeVocabulary.load(COUNTS_REGISTRY / "vocabulary.yaml")
    return load_registry_dir(COUNTS_REGISTRY, vocab)


@pytest.fixture(scope="session")
def fig1_query() -> dict:
    return json.loads((FIXTURES / "fig1_query.json").read_text())


@pytest.fixture(scope="session")
def litvar_query() -> dict:
    return json.loads((FIXTURES / "litvar_query.json").read_text())


def fig1_config(**overrides) -> EngineConfig:
    base = dict(
        registry_dir=str(REGISTRY_DIR),
        resolver=f"fixture:{FIXTURES / 'entities.tsv'}",
        counts=f"fixture:{FIXTURES / 'cooccurrence.tsv'}",
        transport=f"simnet:{FIXTURES / 'fig1_ngly1.yaml'}",
    )
    base.update(overrides)
    return EngineConfig(**base)


def make_fig1_engine(**overrides) -> Engine:
    return Engine.from_config(fig1_config(**overrides))


def load_yaml(path: Path):
    with open(path, "r", encoding="utf-8") as fh:
        return yaml.safe_load(fh)


@pytest.fixture()
def fig1_engine() -> Engine:
    return make_fig1_engine()


@pytest.fixture()
def litvar_engine() -> Engine:
    return make_fig1_engine(
        transport=f"simnet:{FIXTURES / 'scenario_litvar.yaml'}",
        policy=ExecutionPolicy(timeout_ms=2000),
    )
