"""Operator command line: validate, stats, run, score, analyze, report.

Exit codes: 0 ok, 1 domain violations, 2 input errors, 3 backend errors.
Flags mirror an optional JSON config file; flags win on conflict.
"""

from __future__ import annotations

import csv
import io
import json
import os
import sys
from pathlib import Path

import click

from evidx import __version__
from evidx.corpus import descriptive_stats, load_corpus
from evidx.engine import Regime
from evidx.gateway import (
    ENV_API_BASE,
    ENV_API_KEY,
    ENV_JUDGE_MODEL,
    BackendError,
    Gateway,
    GoldEchoMock,
    http_transport,
)
from evidx.pipeline import (
    RunConfig,
    analyze_scores,
    load_scored,
    preflight_replay,
    render_reports,
    run_queries,
    score_predictions,
)
from evidx.schema import load_gold, validate_records

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_INPUT = 2
EXIT_BACKEND = 3


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise click.ClickException(f"cannot read config {path}: {exc}")


def _effective(flag, config: dict, key: str, default=None):
    if flag is not None:
        return flag
    return config.get(key, default)


def _regimes(value: str) -> tuple[Regime, ...]:
    if value == "both":
        return (Regime.PER_PAPER, Regime.GLOBAL)
    if value == "per-paper":
        return (Regime.PER_PAPER,)
    if value == "global":
        return (Regime.GLOBAL,)
    raise click.ClickException(f"unknown regime {value!r} (use per-paper, global, or both)")


def _build_run_config(config_file, corpus_dir, gold, out, model, backend, cache, regime, query_filter, judge_model, parallel) -> RunConfig:
    cfg = _load_config(config_file)
    corpus_dir = _effective(corpus_dir, cfg, "corpus")
    gold = _effective(gold, cfg, "gold")
    out = _effective(out, cfg, "out")
    if not corpus_dir or not gold or not out:
        raise click.ClickException("--corpus, --gold, and --out are required (flag or config)")
    query_ids = _effective(query_filter, cfg, "queries")
    if isinstance(query_ids, str):
        query_ids = tuple(q.strip() for q in query_ids.split(",") if q.strip())
    elif isinstance(query_ids, list):
        query_ids = tuple(query_ids)
    cache_dir = _effective(cache, cfg, "cache")
    return RunConfig(
        corpus_dir=Path(corpus_dir),
        gold_file=Path(gold),
        out_dir=Path(out),
        model=_effective(model, cfg, "model", "mock-model"),
        backend=_effective(backend, cfg, "backend", "mock"),
        cache_dir=Path(cache_dir) if cache_dir else None,
        regimes=_regimes(_effective(regime, cfg, "regime", "both")),
        query_ids=query_ids,
        judge_model=_effective(judge_model, cfg, "judge_model", os.environ.get(ENV_JUDGE_MODEL)),
        parallel=int(_effective(parallel, cfg, "parallel", 1)),
    )


def _build_gateway(config: RunConfig, corpus) -> Gateway:
    if config.backend == "mock":
        return Gateway(
            backend="mock",
            model=config.model,
            cache=config.cache_dir,
            mock_fn=GoldEchoMock(corpus.gold),
            judge_model=config.judge_model,
        )
    if config.backend == "replay":
        return Gateway(
            backend="replay",
            model=config.model,
            cache=config.cache_dir,
            judge_model=config.judge_model,
        )
    base = os.environ.get(ENV_API_BASE)
    if not base:
        raise BackendError(f"live backend requires {ENV_API_BASE}")
    return Gateway(
        backend="live",
        model=config.model,
        cache=config.cache_dir,
        transport=http_transport(base, os.environ.get(ENV_API_KEY, "")),
        judge_model=config.judge_model,
    )


def _common_options(fn):
    fn = click.option("--config", "config_file", type=click.Path(), default=None, help="JSON config mirroring the flags; flags win.")(fn)
    fn = click.option("--corpus", "corpus_dir", type=click.Path(), default=None, help="Directory of <doc_id>.md files.")(fn)
    fn = click.option("--gold", type=click.Path(), default=None, help="Gold annotation JSON for the domain.")(fn)
    fn = click.option("--out", type=click.Path(), default=None, help="Output directory for artifacts.")(fn)
    fn = click.option("--model", default=None, help="Extraction model name.")(fn)
    fn = click.option("--backend", type=click.Choice(["mock", "replay", "live"]), default=None)(fn)
    fn = click.option("--cache", type=click.Path(), default=None, help="Completion cache directory.")(fn)
    fn = click.option("--regime", type=click.Choice(["per-paper", "global", "both"]), default=None)(fn)
    fn = click.option("--queries", "query_filter", default=None, help="Comma-separated query ids to run.")(fn)
    fn = click.option("--judge-model", default=None, help="Judge model (defaults to the extraction model).")(fn)
    fn = click.option("--parallel", type=int, default=None, help="Concurrent (query, regime) cells.")(fn)
    return fn


@click.group()
@click.version_option(version=__version__)
def main() -> None:
    """Deterministic evaluation harness for schema-constrained evidence extraction."""


@main.command()
@click.option("--gold", type=click.Path(), required=True)
def validate(gold: str) -> None:
    """Validate a gold annotation file; exit 0 only if every record is valid."""
    try:
        _, records = load_gold(gold)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        click.echo(f"error: cannot parse {gold}: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    report = validate_records(records)
    for violation in report.violations:
        click.echo(f"violation: {violation.path}: {violation.message}")
    for warning in report.warnings:
        click.echo(f"warning: {warning.path}: {warning.message}")
    if report.violations:
        click.echo(f"{len(report.violations)} violation(s) in {len(records)} record(s)")
        sys.exit(EXIT_VIOLATIONS)
    click.echo(f"ok: {len(records)} record(s) valid")


@main.command()
@click.option("--gold", type=click.Path(), required=True)
@click.option("--format", "fmt", type=click.Choice(["md", "csv", "json"]), default="md")
def stats(gold: str, fmt: str) -> None:
    """Descriptive statistics of per-document schema-atom counts."""
    try:
        domain, records = load_gold(gold)
        rows = descriptive_stats(records)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    if fmt == "json":
        click.echo(
            json.dumps(
                {
                    "domain": domain,
                    "documents": len(records),
                    "metrics": [vars(r) for r in rows],
                    "note": "variables counts distinct normalized names",
                },
                indent=2,
                sort_keys=True,
            )
        )
        return
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["metric", "min", "median", "max", "total"])
        for r in rows:
            writer.writerow([r.metric, r.minimum, r.median, r.maximum, r.total])
        click.echo(buf.getvalue(), nl=False)
        return
    click.echo(f"# {domain} ({len(records)} documents)")
    click.echo("| metric | min | median | max | total |")
    click.echo("| --- | --- | --- | --- | --- |")
    for r in rows:
        click.echo(f"| {r.metric} | {r.minimum} | {r.median} | {r.maximum} | {r.total} |")
    click.echo("(variables counts distinct normalized names)")


def _prepare(config_file, corpus_dir, gold, out, model, backend, cache, regime, query_filter, judge_model, parallel):
    config = _build_run_config(
        config_file, corpus_dir, gold, out, model, backend, cache, regime, query_filter, judge_model, parallel
    )
    corpus = load_corpus(config.corpus_dir, config.gold_file)
    gateway = _build_gateway(config, corpus)
    return config, corpus, gateway


@main.command()
@_common_options
def run(**kwargs) -> None:
    """Execute every selected (query, regime, document) cell."""
    try:
        config, corpus, gateway = _prepare(**kwargs)
        if config.backend == "replay":
            missing = preflight_replay(corpus, gateway, config)
            if missing:
                click.echo("replay preflight failed; missing cache entries:", err=True)
                for item in missing:
                    click.echo(f"  {item}", err=True)
                sys.exit(EXIT_BACKEND)
        summary = run_queries(corpus, gateway, config)
    except BackendError as exc:
        click.echo(f"backend error: {exc}", err=True)
        sys.exit(EXIT_BACKEND)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    click.echo(summary.describe(gateway))


@main.command()
@_common_options
def score(**kwargs) -> None:
    """Score prediction files against gold; writes score files and oracle answers."""
    try:
        config, corpus, gateway = _prepare(**kwargs)
        scored = score_predictions(corpus, gateway, config)
    except BackendError as exc:
        click.echo(f"backend error: {exc}", err=True)
        sys.exit(EXIT_BACKEND)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    if not scored:
        click.echo("no prediction files found", err=True)
        sys.exit(EXIT_INPUT)
    for sq in scored:
        click.echo(
            f"{sq.domain}/{sq.model}/{sq.regime}/{sq.query_id}: "
            f"P={sq.prf.precision:.3f} R={sq.prf.recall:.3f} F1={sq.prf.f1:.3f}"
        )
    click.echo(f"scored {len(scored)} cells; judge calls: {gateway.judge_calls}; network calls: {gateway.network_calls}")


@main.command()
@click.option("--out", type=click.Path(), required=True)
@click.option("--domain", default=None, help="Restrict to one domain.")
def analyze(out: str, domain: str | None) -> None:
    """Build the failure taxonomy from score files (similarity-only matching)."""
    scored = load_scored(Path(out), domain)
    if not scored:
        click.echo("no score files found", err=True)
        sys.exit(EXIT_INPUT)
    taxonomies = analyze_scores(scored, Path(out))
    for name, payload in taxonomies.items():
        swaps = payload["role_swaps"]
        drift = payload["binding_drift"]
        click.echo(
            f"{name}: swaps {swaps['count']}/{swaps['denominator']} ({swaps['ratio_text']}), "
            f"drift {drift['count']}/{drift['denominator']} ({drift['ratio_text']})"
        )


@main.command()
@click.option("--out", type=click.Path(), required=True)
def report(out: str) -> None:
    """Render rollup tables, per-query CSV, and the regime-delta CSV."""
    scored = load_scored(Path(out))
    if not scored:
        click.echo("no score files found", err=True)
        sys.exit(EXIT_INPUT)
    written = render_reports(scored, Path(out))
    for path in written:
        click.echo(f"wrote {path}")


if __name__ == "__main__":
    main()
