"""Run, score, analyze, and report phases over on-disk artifacts.

Phases are decoupled through files so scoring can be re-run (for example with
different judge settings) without re-querying a backend: ``run`` writes one
prediction file per (query, regime), ``score`` writes one score file next to
it plus the domain's oracle answers, ``analyze`` writes the failure taxonomy,
and ``report`` renders rollup tables.  All artifacts are written atomically
and are byte-deterministic for a fixed cache state.
"""

from __future__ import annotations

import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from evidx import oracle, queries
from evidx.analysis import build_taxonomy, taxonomy_markdown, taxonomy_to_dict
from evidx.corpus import Corpus
from evidx.engine import (
    ParsedResponse,
    RawResponse,
    Regime,
    build_aggregation_prompt,
    extract_scalar,
    parse_response,
    render_prompt,
    rewrite_per_document,
)
from evidx.gateway import Gateway
from evidx.matching import MatchDecision, MatchReport, match_tuples, sort_tuples
from evidx.metrics import (
    PRF,
    ScoredQuery,
    delta_csv,
    prf,
    regime_delta,
    rollup,
    scalar_score,
)
from evidx.queries import QuerySpec
from evidx.schema import StudyTuple

REGIMES = (Regime.PER_PAPER, Regime.GLOBAL)


@dataclass
class RunConfig:
    corpus_dir: Path
    gold_file: Path
    out_dir: Path
    model: str = "mock-model"
    backend: str = "mock"
    cache_dir: Path | None = None
    regimes: tuple[Regime, ...] = REGIMES
    query_ids: tuple[str, ...] | None = None
    judge_model: str | None = None
    parallel: int = 1

    def selected_queries(self) -> list[QuerySpec]:
        specs = queries.registry()
        if self.query_ids is None:
            return specs
        wanted = set(self.query_ids)
        unknown = wanted - {s.id for s in specs}
        if unknown:
            raise ValueError(f"unknown query id(s): {sorted(unknown)}")
        return [s for s in specs if s.id in wanted]


def safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", name)


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def write_json(path: Path, obj) -> None:
    write_atomic(path, json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n")


def _row_sort_key(row: dict) -> tuple:
    return (row.get("doc", 0), [(k, v is not None, str(v)) for k, v in sorted(row.items()) if k != "doc"])


def tuples_to_rows(tuples: Sequence[StudyTuple]) -> list[dict]:
    return sorted((t.as_row() for t in tuples), key=_row_sort_key)


def row_to_tuple(row: dict, spec: QuerySpec) -> StudyTuple:
    return StudyTuple(
        doc_id=int(row["doc"]),
        query_id=spec.id,
        fields=tuple((s, row.get(s)) for s in spec.slots),
    )


def prediction_dir(out_dir: Path, domain: str, model: str, regime: Regime | str) -> Path:
    regime_name = regime.value if isinstance(regime, Regime) else regime
    return Path(out_dir) / safe_name(domain) / safe_name(model) / regime_name


# ---------------------------------------------------------------------------
# Run phase


@dataclass
class RunSummary:
    domain: str
    model: str
    cells: int = 0  # (query, regime, doc) evaluations, aggregations included
    completions: int = 0
    files: list[Path] = field(default_factory=list)

    def describe(self, gateway: Gateway) -> str:
        return (
            f"run[{self.domain}/{self.model}]: {self.cells} cells, "
            f"{self.completions} completions, {gateway.network_calls} network calls, "
            f"{len(self.files)} prediction files"
        )


def _run_one(
    spec: QuerySpec,
    regime: Regime,
    corpus: Corpus,
    gateway: Gateway,
) -> tuple[dict, int, int]:
    """Execute one (query, regime) pair; returns (record, cells, completions)."""
    base = {
        "query_id": spec.id,
        "regime": regime.value,
        "model": gateway.model,
        "domain": corpus.domain,
    }
    if regime is Regime.GLOBAL:
        bundle = render_prompt(spec, regime, corpus)
        key, text = gateway.complete_text(bundle.prompt_text)
        if spec.scalar:
            record = dict(
                base,
                kind="scalar",
                prompt_key=key,
                raw_text=text,
                value=extract_scalar(text),
                warnings=[],
            )
        else:
            parsed = parse_response(RawResponse(key, text), spec, regime, valid_doc_ids=corpus.doc_ids)
            record = dict(
                base,
                kind="tuples",
                prompt_key=key,
                raw_text=text,
                tuples=tuples_to_rows(parsed.tuples),
                warnings=parsed.warnings,
            )
        return record, 1, 1

    variant = rewrite_per_document(spec)
    cells = []
    merged = ParsedResponse()
    per_doc_outputs = []
    completions = 0
    for doc in corpus.documents:
        bundle = render_prompt(variant, regime, corpus, doc.doc_id)
        key, text = gateway.complete_text(bundle.prompt_text)
        completions += 1
        cells.append({"doc_id": doc.doc_id, "prompt_key": key, "raw_text": text})
        if spec.scalar:
            per_doc_outputs.append((doc.doc_id, text))
        else:
            parsed = parse_response(RawResponse(key, text), variant, regime, doc_id=doc.doc_id)
            merged.tuples.extend(parsed.tuples)
            merged.warnings.extend(f"doc {doc.doc_id}: {w}" for w in parsed.warnings)

    if spec.scalar:
        agg_prompt = build_aggregation_prompt(per_doc_outputs, spec)
        agg_key, agg_text = gateway.complete_text(agg_prompt)
        completions += 1
        record = dict(
            base,
            kind="scalar",
            prompt_key=agg_key,
            raw_text=agg_text,
            value=extract_scalar(agg_text),
            cells=cells,
            warnings=[],
        )
        return record, len(cells) + 1, completions

    record = dict(
        base,
        kind="tuples",
        prompt_key=None,
        cells=cells,
        tuples=tuples_to_rows(merged.tuples),
        warnings=merged.warnings,
    )
    return record, len(cells), completions


def run_queries(corpus: Corpus, gateway: Gateway, config: RunConfig) -> RunSummary:
    """Execute every selected (query, regime) pair and write prediction files."""
    summary = RunSummary(domain=corpus.domain, model=gateway.model)
    tasks = [(spec, regime) for spec in config.selected_queries() for regime in config.regimes]

    def execute(task):
        spec, regime = task
        return task, _run_one(spec, regime, corpus, gateway)

    if config.parallel > 1:
        with ThreadPoolExecutor(max_workers=config.parallel) as pool:
            results = list(pool.map(execute, tasks))
    else:
        results = [execute(t) for t in tasks]

    for (spec, regime), (record, cells, completions) in sorted(
        results, key=lambda item: (item[0][1].value, item[0][0].id)
    ):
        summary.cells += cells
        summary.completions += completions
        path = prediction_dir(config.out_dir, corpus.domain, gateway.model, regime) / f"{spec.id}.json"
        write_json(path, record)
        summary.files.append(path)
    return summary


def preflight_replay(corpus: Corpus, gateway: Gateway, config: RunConfig) -> list[str]:
    """All prompt keys a run would need, restricted to those missing from the
    cache.  Aggregation keys depend on cached per-document responses; if those
    are missing the aggregation is reported as unresolvable."""
    missing: list[str] = []
    assert gateway.cache is not None
    for spec in config.selected_queries():
        for regime in config.regimes:
            if regime is Regime.GLOBAL:
                bundle = render_prompt(spec, regime, corpus)
                key = gateway.key_for(bundle.prompt_text)
                if not gateway.cache.has(key):
                    missing.append(f"{spec.id}/{regime.value}: {key}")
                continue
            variant = rewrite_per_document(spec)
            per_doc_outputs = []
            unresolved = False
            for doc in corpus.documents:
                bundle = render_prompt(variant, regime, corpus, doc.doc_id)
                key = gateway.key_for(bundle.prompt_text)
                hit = gateway.cache.get(key)
                if hit is None:
                    missing.append(f"{spec.id}/{regime.value}/doc{doc.doc_id}: {key}")
                    unresolved = True
                else:
                    per_doc_outputs.append((doc.doc_id, hit.response))
            if spec.scalar:
                if unresolved:
                    missing.append(f"{spec.id}/{regime.value}/aggregation: unresolvable (per-doc keys missing)")
                else:
                    agg_key = gateway.key_for(build_aggregation_prompt(per_doc_outputs, spec))
                    if not gateway.cache.has(agg_key):
                        missing.append(f"{spec.id}/{regime.value}/aggregation: {agg_key}")
    return missing


# ---------------------------------------------------------------------------
# Score phase


def gold_tuples_for(corpus: Corpus, spec: QuerySpec) -> set[StudyTuple]:
    from evidx.schema import project_gold

    if spec.level == "C":
        return oracle.derived_gold_tuples(corpus.gold, spec.id)
    out: set[StudyTuple] = set()
    for record in corpus.gold:
        out |= project_gold(record, spec)
    return out


def oracle_value_for(corpus: Corpus, query_id: str):
    answers = oracle.oracle_answers(corpus.gold)
    return answers[query_id].value


def _score_record(record: dict, corpus: Corpus, gateway: Gateway) -> tuple[ScoredQuery, dict]:
    spec = queries.get(record["query_id"])
    domain, model, regime = record["domain"], record["model"], record["regime"]

    if record["kind"] == "scalar":
        value = oracle_value_for(corpus, spec.id)
        sq = scalar_score(domain, model, regime, spec.id, record.get("value"), value)
        payload = {
            "query_id": spec.id,
            "regime": regime,
            "model": model,
            "domain": domain,
            "kind": "scalar",
            "predicted_value": record.get("value"),
            "oracle_value": value,
            "counts": {"correct": sq.correct, "predicted": sq.predicted, "gold": sq.gold},
            "prf": {"precision": sq.prf.precision, "recall": sq.prf.recall, "f1": sq.prf.f1},
            "judge_keys": [],
        }
        return sq, payload

    preds = [row_to_tuple(row, spec) for row in record["tuples"]]
    golds = sort_tuples(gold_tuples_for(corpus, spec))
    report = match_tuples(preds, golds, gateway, spec, regime)
    sq = ScoredQuery(
        domain=domain,
        model=model,
        regime=regime,
        query_id=spec.id,
        prf=prf(report.correct, report.predicted, report.gold),
        correct=report.correct,
        predicted=report.predicted,
        gold=report.gold,
        kind="tuples",
        report=report,
        preds=preds,
        golds=golds,
    )
    payload = {
        "query_id": spec.id,
        "regime": regime,
        "model": model,
        "domain": domain,
        "kind": "tuples",
        "counts": {"correct": report.correct, "predicted": report.predicted, "gold": report.gold},
        "prf": {"precision": sq.prf.precision, "recall": sq.prf.recall, "f1": sq.prf.f1},
        "decisions": [
            {
                "pred_index": d.pred_index,
                "gold_index": d.gold_index,
                "slots": [[slot, outcome] for slot, outcome in d.slots],
                "verdict": d.verdict,
            }
            for d in report.decisions
        ],
        "unmatched_gold": report.unmatched_gold,
        "judge_keys": report.judge_keys,
        "preds": tuples_to_rows_preserving(preds),
        "golds": [t.as_row() for t in golds],
    }
    return sq, payload


def tuples_to_rows_preserving(tuples: Sequence[StudyTuple]) -> list[dict]:
    """Rows in index order (decision indices refer to this order)."""
    return [t.as_row() for t in tuples]


def score_predictions(corpus: Corpus, gateway: Gateway, config: RunConfig) -> list[ScoredQuery]:
    """Score every prediction file for this corpus/model; write score files
    and the domain's oracle answers."""
    scored = []
    for regime in config.regimes:
        pdir = prediction_dir(config.out_dir, corpus.domain, config.model, regime)
        if not pdir.is_dir():
            continue
        for path in sorted(pdir.glob("*.json")):
            if path.name.endswith(".score.json"):
                continue
            record = json.loads(path.read_text(encoding="utf-8"))
            sq, payload = _score_record(record, corpus, gateway)
            write_json(path.with_name(f"{sq.query_id}.score.json"), payload)
            scored.append(sq)

    answers = oracle.oracle_answers(corpus.gold)
    oracle_payload = {
        qid: {
            "scope": ans.scope,
            "value": ans.value,
            "covered": ans.covered,
            "excluded": ans.excluded,
        }
        for qid, ans in answers.items()
    }
    write_json(Path(config.out_dir) / safe_name(corpus.domain) / "oracle.json", oracle_payload)
    return scored


def load_scored(out_dir: Path, domain: str | None = None) -> list[ScoredQuery]:
    """Rebuild ScoredQuery objects from score files on disk."""
    out_dir = Path(out_dir)
    scored = []
    for path in sorted(out_dir.glob("*/*/*/*.score.json")):
        payload = json.loads(path.read_text(encoding="utf-8"))
        if domain is not None and payload["domain"] != domain:
            continue
        spec = queries.get(payload["query_id"])
        counts = payload["counts"]
        p = PRF(payload["prf"]["precision"], payload["prf"]["recall"], payload["prf"]["f1"])
        if payload["kind"] == "scalar":
            scored.append(
                ScoredQuery(
                    domain=payload["domain"],
                    model=payload["model"],
                    regime=payload["regime"],
                    query_id=spec.id,
                    prf=p,
                    correct=counts["correct"],
                    predicted=counts["predicted"],
                    gold=counts["gold"],
                    kind="scalar",
                    predicted_value=payload.get("predicted_value"),
                    oracle_value=payload.get("oracle_value"),
                )
            )
            continue
        preds = [row_to_tuple(row, spec) for row in payload["preds"]]
        golds = [row_to_tuple(row, spec) for row in payload["golds"]]
        report = MatchReport(
            query_id=spec.id,
            regime=payload["regime"],
            decisions=[
                MatchDecision(
                    pred_index=d["pred_index"],
                    gold_index=d["gold_index"],
                    slots=tuple((s, o) for s, o in d["slots"]),
                    verdict=d["verdict"],
                )
                for d in payload["decisions"]
            ],
            unmatched_gold=list(payload["unmatched_gold"]),
            correct=counts["correct"],
            predicted=counts["predicted"],
            gold=counts["gold"],
            judge_keys=list(payload["judge_keys"]),
        )
        scored.append(
            ScoredQuery(
                domain=payload["domain"],
                model=payload["model"],
                regime=payload["regime"],
                query_id=spec.id,
                prf=p,
                correct=counts["correct"],
                predicted=counts["predicted"],
                gold=counts["gold"],
                kind="tuples",
                report=report,
                preds=preds,
                golds=golds,
            )
        )
    return scored


# ---------------------------------------------------------------------------
# Analyze phase


def analyze_scores(scored: Sequence[ScoredQuery], out_dir: Path, gateway: Gateway | None = None) -> dict:
    """Build and write the per-domain failure taxonomy."""
    taxonomies = {}
    for domain in sorted({sq.domain for sq in scored}):
        report = build_taxonomy(domain, list(scored), gateway)
        payload = taxonomy_to_dict(report)
        write_json(Path(out_dir) / safe_name(domain) / "taxonomy.json", payload)
        write_atomic(Path(out_dir) / safe_name(domain) / "taxonomy.md", taxonomy_markdown(report))
        taxonomies[domain] = payload
    return taxonomies


# ---------------------------------------------------------------------------
# Report phase


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def report_markdown(scored: Sequence[ScoredQuery]) -> str:
    """F1 by extraction group across domains, models, and input regimes."""
    groups = list(queries.GROUPS)
    group_rollups = {(r.keys): r for r in rollup(scored, "group")}
    all_query = {r.keys: r for r in rollup(scored, "all_query")}
    all_group = {r.keys: r for r in rollup(scored, "all_group")}
    cells = sorted({(sq.domain, sq.model) for sq in scored})
    regimes = sorted({sq.regime for sq in scored})

    lines = ["# F1 by extraction group", ""]
    lines.append(
        "All(q) is the unweighted mean over queries; All(g) the mean over the six "
        "groups. Stored JSON keeps full precision; this table rounds to 2 decimals."
    )
    lines.append("")
    header = ["domain", "model"]
    for regime in regimes:
        header += [f"{g} [{regime}]" for g in groups] + [f"All(q) [{regime}]", f"All(g) [{regime}]"]
    lines.append("| " + " | ".join(header) + " |")
    lines.append("| " + " | ".join(["---"] * len(header)) + " |")
    for domain, model in cells:
        row = [domain, model]
        for regime in regimes:
            for g in groups:
                r = group_rollups.get((domain, model, regime, g))
                row.append(_fmt(r.prf.f1) if r else "-")
            aq = all_query.get((domain, model, regime))
            ag = all_group.get((domain, model, regime))
            row.append(_fmt(aq.prf.f1) + ("*" if aq and aq.partial else "") if aq else "-")
            row.append(_fmt(ag.prf.f1) + ("*" if ag and ag.partial else "") if ag else "-")
        lines.append("| " + " | ".join(row) + " |")
    lines.append("")
    lines.append("(*) partial: the cell is missing registry queries.")
    lines.append("")
    return "\n".join(lines)


def per_query_csv(scored: Sequence[ScoredQuery]) -> str:
    import csv
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["domain", "model", "regime", "query_id", "precision", "recall", "f1", "correct", "predicted", "gold"])
    for sq in sorted(scored, key=lambda s: (s.domain, s.model, s.regime, s.query_id)):
        writer.writerow(
            [
                sq.domain,
                sq.model,
                sq.regime,
                sq.query_id,
                repr(sq.prf.precision),
                repr(sq.prf.recall),
                repr(sq.prf.f1),
                sq.correct,
                sq.predicted,
                sq.gold,
            ]
        )
    return buf.getvalue()


def rollup_tree(scored: Sequence[ScoredQuery]) -> dict:
    tree: dict = {}
    for level in ("query", "group", "family", "domain", "regime", "all_query", "all_group"):
        tree[level] = [
            {
                "keys": list(r.keys),
                "precision": r.prf.precision,
                "recall": r.prf.recall,
                "f1": r.prf.f1,
                "children": r.children,
                "partial": r.partial,
            }
            for r in rollup(scored, level)
        ]
    return tree


def render_reports(scored: Sequence[ScoredQuery], out_dir: Path) -> list[Path]:
    out_dir = Path(out_dir)
    written = []

    write_atomic(out_dir / "report.md", report_markdown(scored))
    written.append(out_dir / "report.md")
    write_atomic(out_dir / "per_query.csv", per_query_csv(scored))
    written.append(out_dir / "per_query.csv")
    write_json(out_dir / "rollup.json", rollup_tree(scored))
    written.append(out_dir / "rollup.json")

    regimes = {sq.regime for sq in scored}
    if {Regime.PER_PAPER.value, Regime.GLOBAL.value} <= regimes:
        per_paper = [r for r in rollup(scored, "all_query") if r.keys[2] == Regime.PER_PAPER.value]
        global_ = [r for r in rollup(scored, "all_query") if r.keys[2] == Regime.GLOBAL.value]
        rows = regime_delta(per_paper, global_)
        write_atomic(out_dir / "fig2_delta.csv", delta_csv(rows))
        written.append(out_dir / "fig2_delta.csv")
    return written
