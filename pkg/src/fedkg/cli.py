"""Command-line entry points.

Option values resolve in precedence order: explicit flag, then environment
variable (FEDKG_<OPTION>), then a --config file (flat mapping of option
names to values), then the built-in default.

Exit codes: 0 success, 1 runtime failure, 2 invalid input or configuration,
3 strict mode with an unsatisfiable query.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click
import yaml

from .engine import Engine, EngineConfig, UnsatisfiablePlan, canonical_json
from .errors import (
    ConfigError,
    DocumentInvalid,
    FedkgError,
    HierarchyInvalid,
    QueryInvalid,
    QuerySyntax,
    ScenarioInvalid,
    UnknownType,
    Violation,
)
from .executor import ExecutionPolicy
from .metakg import build_metakg, export_metakg
from .registry import check_document, load_registry_dir, read_registry_files
from .vocab import TypeHierarchy, TypeVocabulary

logger = logging.getLogger(__name__)

_INPUT_ERRORS = (
    QuerySyntax,
    QueryInvalid,
    UnknownType,
    DocumentInvalid,
    ConfigError,
    ScenarioInvalid,
    HierarchyInvalid,
    FileNotFoundError,
    ValueError,
)

_SUBCOMMANDS = ("query", "serve", "validate-registry", "export-metakg")


def _fail(code: int, error_code: str, message: str) -> None:
    payload = {"error": {"code": error_code, "message": message}}
    click.echo(json.dumps(payload), err=True)
    sys.exit(code)


def _engine_options(fn):
    options = [
        click.option(
            "--registry",
            "registry_dir",
            required=True,
            type=click.Path(exists=True, file_okay=False),
            help="Directory of annotation documents plus vocabulary.yaml.",
        ),
        click.option(
            "--hierarchy",
            "hierarchy_path",
            type=click.Path(exists=True, dir_okay=False),
            default=None,
            help="Type hierarchy file (default: hierarchy.yaml in the registry).",
        ),
        click.option("--resolver", default="none", show_default=True,
                     help="Identifier resolver: none, fixture:<tsv>, or http:<url>."),
        click.option("--counts", default="none", show_default=True,
                     help="Co-occurrence counts: none or fixture:<tsv>."),
        click.option("--transport", default="none", show_default=True,
                     help="Transport: simnet:<scenario.yaml> or live."),
        click.option("--max-concurrency", default=4, show_default=True,
                     type=click.IntRange(min=1)),
        click.option("--timeout-ms", default=5000, show_default=True,
                     type=click.IntRange(min=1)),
        click.option("--max-retries", default=2, show_default=True,
                     type=click.IntRange(min=0)),
        click.option("--allow-live", is_flag=True,
                     help="Permit the live network transport."),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _build_engine(
    registry_dir: str,
    hierarchy_path: str | None,
    resolver: str,
    counts: str,
    transport: str,
    max_concurrency: int,
    timeout_ms: int,
    max_retries: int,
    allow_live: bool,
) -> Engine:
    config = EngineConfig(
        registry_dir=registry_dir,
        hierarchy_path=hierarchy_path,
        resolver=resolver,
        counts=counts,
        transport=transport,
        allow_live=allow_live,
        policy=ExecutionPolicy(
            max_concurrency=max_concurrency,
            timeout_ms=timeout_ms,
            max_retries=max_retries,
        ),
    )
    return Engine.from_config(config)


def _config_defaults(group: click.Group, data: dict) -> dict:
    """Translate config keys (flag spellings) into per-command default maps."""
    values = {str(k).replace("-", "_"): v for k, v in data.items()}
    defaults: dict[str, dict] = {}
    for name in _SUBCOMMANDS:
        command = group.commands[name]
        per_command: dict[str, object] = {}
        for param in command.params:
            spellings = {param.name}
            spellings.update(
                opt.lstrip("-").replace("-", "_") for opt in param.opts
            )
            for spelling in spellings:
                if spelling in values:
                    per_command[param.name] = values[spelling]
        defaults[name] = per_command
    return defaults


@click.group(context_settings={"auto_envvar_prefix": "FEDKG"})
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="YAML or JSON file with default option values.",
)
@click.pass_context
def main(ctx: click.Context, config_path: str | None) -> None:
    """Federated knowledge-graph query engine."""
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    if config_path:
        with open(config_path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, dict):
            _fail(2, "ConfigError", f"config file {config_path} must hold a mapping")
        ctx.default_map = _config_defaults(ctx.command, data)


@main.command()
@_engine_options
@click.option("--input", "input_file", required=True, type=click.File("r"),
              help="Query document (JSON); '-' reads stdin.")
@click.option("--output", "output_file", type=click.File("w"), default="-",
              help="Where to write the response document.")
@click.option("--explain", is_flag=True,
              help="Print the query plan instead of executing.")
@click.option("--strict", is_flag=True,
              help="Exit 3 when some query edge has no usable operation.")
def query(
    registry_dir, hierarchy_path, resolver, counts, transport,
    max_concurrency, timeout_ms, max_retries, allow_live,
    input_file, output_file, explain, strict,
):
    """Execute (or explain) a query document."""
    try:
        query_document = json.load(input_file)
    except json.JSONDecodeError as exc:
        _fail(2, "BadInput", f"query input is not JSON: {exc}")
    try:
        engine = _build_engine(
            registry_dir, hierarchy_path, resolver, counts, transport,
            max_concurrency, timeout_ms, max_retries, allow_live,
        )
        if explain:
            output_file.write(canonical_json(engine.explain(query_document)))
            return
        outcome = engine.run(query_document, strict=strict)
    except UnsatisfiablePlan as exc:
        _fail(3, "UnsatisfiablePlan", str(exc))
    except _INPUT_ERRORS as exc:
        _fail(2, type(exc).__name__, str(exc))
    except FedkgError as exc:
        _fail(1, type(exc).__name__, str(exc))
    # exact canonical bytes, no trailing newline: byte-identical to the
    # HTTP service response for the same query
    output_file.write(canonical_json(outcome.document))


@main.command("validate-registry")
@click.option("--registry", "registry_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--output", "output_file", type=click.File("w"), default="-")
def validate_registry(registry_dir, output_file):
    """Check every annotation document; exit 2 if any violation is found."""
    root = Path(registry_dir)
    vocab_path = root / "vocabulary.yaml"
    vocab = TypeVocabulary.load(vocab_path) if vocab_path.is_file() else None
    try:
        files = read_registry_files(root)
    except (OSError, yaml.YAMLError) as exc:
        _fail(2, "BadRegistry", str(exc))
    report = {"apis": [], "violation_count": 0}
    seen: dict[str, str] = {}
    for filename, data in files:
        api_id, violations = check_document(data, vocab)
        if api_id in seen:
            violations = violations + [
                Violation("DuplicateApiId", f"also declared in {seen[api_id]}", "info")
            ]
        else:
            seen[api_id] = filename
        report["apis"].append(
            {
                "file": filename,
                "api_id": api_id,
                "violations": [v.to_dict() for v in violations],
            }
        )
        report["violation_count"] += len(violations)
    report["valid"] = report["violation_count"] == 0
    output_file.write(canonical_json(report))
    if not report["valid"]:
        sys.exit(2)


@main.command("export-metakg")
@click.option("--registry", "registry_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--hierarchy", "hierarchy_path",
              type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--output", "output_file", type=click.File("w"), default="-")
def export_metakg_command(registry_dir, hierarchy_path, output_file):
    """Write the meta-knowledge-graph summary document."""
    root = Path(registry_dir)
    try:
        vocab_path = root / "vocabulary.yaml"
        vocab = TypeVocabulary.load(vocab_path) if vocab_path.is_file() else None
        if hierarchy_path is not None:
            hierarchy = TypeHierarchy.load(hierarchy_path)
        elif (root / "hierarchy.yaml").is_file():
            hierarchy = TypeHierarchy.load(root / "hierarchy.yaml")
        else:
            hierarchy = TypeHierarchy({})
        registry = load_registry_dir(root, vocab)
        metakg = build_metakg(registry, hierarchy=hierarchy, vocab=vocab)
    except _INPUT_ERRORS as exc:
        _fail(2, type(exc).__name__, str(exc))
    output_file.write(canonical_json(export_metakg(metakg)))


@main.command()
@_engine_options
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8080, show_default=True, type=int)
@click.option("--max-inflight-queries", default=8, show_default=True,
              type=click.IntRange(min=1))
@click.option("--drain-timeout", default=10.0, show_default=True, type=float,
              help="Seconds to let in-flight queries finish on shutdown.")
def serve(
    registry_dir, hierarchy_path, resolver, counts, transport,
    max_concurrency, timeout_ms, max_retries, allow_live,
    host, port, max_inflight_queries, drain_timeout,
):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    try:
        engine = _build_engine(
            registry_dir, hierarchy_path, resolver, counts, transport,
            max_concurrency, timeout_ms, max_retries, allow_live,
        )
    except _INPUT_ERRORS as exc:
        _fail(2, type(exc).__name__, str(exc))
    app = create_app(engine, max_inflight_queries=max_inflight_queries)
    uvicorn.run(
        app, host=host, port=port, timeout_graceful_shutdown=drain_timeout
    )


if __name__ == "__main__":
    main()
