"""Tuple-level precision/recall/F1, derived-answer grading, and rollups.

Rollups are macro averages: the unweighted arithmetic mean of child precision,
recall, and F1 independently.  A single overall figure depends on the
averaging granularity, so it is emitted at both (mean over queries and mean
over groups), always labeled.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

from evidx import queries
from evidx.matching import MatchReport, numbers_equal, to_number
from evidx.schema import StudyTuple


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float

    def rounded(self, digits: int = 2) -> tuple[float, float, float]:
        return (round(self.precision, digits), round(self.recall, digits), round(self.f1, digits))


def prf(correct: int, predicted: int, gold: int) -> PRF:
    """P = correct/predicted, R = correct/gold, F1 = harmonic mean.

    Zero denominators yield 0 by convention.  ``correct`` exceeding either
    denominator is a programming error upstream, not a data condition.
    """
    assert correct >= 0 and predicted >= 0 and gold >= 0
    assert correct <= min(predicted, gold), (
        f"correct={correct} exceeds predicted={predicted}/gold={gold}"
    )
    p = correct / predicted if predicted else 0.0
    r = correct / gold if gold else 0.0
    f1 = 2 * p * r / (p + r) if (p + r) else 0.0
    return PRF(p, r, f1)


def score_derived(predicted_value, oracle_value) -> bool:
    """Exact numerical equality after decimal canonicalization.

    Unparseable or missing predictions are wrong, never errors.
    """
    if oracle_value is None:
        return predicted_value is None or to_number(predicted_value) is None
    if predicted_value is None:
        return False
    return numbers_equal(predicted_value, oracle_value)


@dataclass
class ScoredQuery:
    """One scored (domain, model, regime, query) cell with its audit trail."""

    domain: str
    model: str
    regime: str
    query_id: str
    prf: PRF
    correct: int
    predicted: int
    gold: int
    kind: str = "tuples"  # "tuples" | "scalar"
    report: MatchReport | None = None
    preds: list[StudyTuple] = field(default_factory=list)
    golds: list[StudyTuple] = field(default_factory=list)
    predicted_value: object = None
    oracle_value: object = None

    @property
    def group(self) -> str:
        return queries.get(self.query_id).group


def scalar_score(
    domain: str,
    model: str,
    regime: str,
    query_id: str,
    predicted_value,
    oracle_value,
) -> ScoredQuery:
    """Degenerate PRF for a corpus-level scalar: 1/1/1 on equality else 0."""
    ok = score_derived(predicted_value, oracle_value)
    correct = 1 if ok else 0
    return ScoredQuery(
        domain=domain,
        model=model,
        regime=regime,
        query_id=query_id,
        prf=prf(correct, 1, 1),
        correct=correct,
        predicted=1,
        gold=1,
        kind="scalar",
        predicted_value=predicted_value,
        oracle_value=oracle_value,
    )


# ---------------------------------------------------------------------------
# Rollups


@dataclass(frozen=True)
class Rollup:
    level: str
    keys: tuple[str, ...]
    prf: PRF
    children: int
    partial: bool = False


def _mean_prf(items: Sequence[PRF]) -> PRF:
    # fsum: exact, hence invariant to child order.
    n = len(items)
    return PRF(
        math.fsum(x.precision for x in items) / n,
        math.fsum(x.recall for x in items) / n,
        math.fsum(x.f1 for x in items) / n,
    )


def _cell(score: ScoredQuery) -> tuple[str, str, str]:
    return (score.domain, score.model, score.regime)


def rollup(scores: Sequence[ScoredQuery], level: str) -> list[Rollup]:
    """Macro-averaged rollups at one level.

    Levels: "query" (identity), "group" (O1..MC per cell), "family" (O/M per
    cell), "domain" (per-cell query macro), "regime" (query macro per
    (model, regime) across domains), "all_query" and "all_group" (the overall
    figure per cell at both granularities).  A rollup is partial when a
    contributing cell is missing registry queries.
    """
    expected_ids = {spec.id for spec in queries.registry()}
    by_cell: dict[tuple[str, str, str], list[ScoredQuery]] = {}
    for s in scores:
        by_cell.setdefault(_cell(s), []).append(s)

    if level == "regime":
        # Across domains: one rollup per (model, regime).
        buckets: dict[tuple[str, str], list[PRF]] = {}
        partial_keys: set[tuple[str, str]] = set()
        for cell, cell_scores in by_cell.items():
            key = (cell[1], cell[2])
            buckets.setdefault(key, []).extend(s.prf for s in cell_scores)
            if {s.query_id for s in cell_scores} != expected_ids:
                partial_keys.add(key)
        return [
            Rollup("regime", key, _mean_prf(buckets[key]), len(buckets[key]), key in partial_keys)
            for key in sorted(buckets)
        ]

    out: list[Rollup] = []
    for cell in sorted(by_cell):
        cell_scores = by_cell[cell]
        partial = {s.query_id for s in cell_scores} != expected_ids
        if level == "query":
            for s in sorted(cell_scores, key=lambda s: s.query_id):
                out.append(Rollup("query", cell + (s.query_id,), s.prf, 1))
            continue
        if level in ("group", "family"):
            keyfn = (lambda s: s.group) if level == "group" else (lambda s: queries.get(s.query_id).family)
            buckets: dict[str, list[PRF]] = {}
            for s in cell_scores:
                buckets.setdefault(keyfn(s), []).append(s.prf)
            for name in sorted(buckets):
                out.append(Rollup(level, cell + (name,), _mean_prf(buckets[name]), len(buckets[name]), partial))
            continue
        if level == "domain" or level == "all_query":
            out.append(Rollup(level, cell, _mean_prf([s.prf for s in cell_scores]), len(cell_scores), partial))
            continue
        if level == "all_group":
            buckets = {}
            for s in cell_scores:
                buckets.setdefault(s.group, []).append(s.prf)
            group_means = [_mean_prf(buckets[g]) for g in sorted(buckets)]
            out.append(Rollup(level, cell, _mean_prf(group_means), len(group_means), partial))
            continue
        raise ValueError(f"unknown rollup level {level!r}")
    return out


# ---------------------------------------------------------------------------
# Regime deltas


@dataclass(frozen=True)
class DeltaRow:
    domain: str
    model: str
    f1_per_paper: float
    f1_global: float

    @property
    def drop(self) -> float:
        return self.f1_per_paper - self.f1_global


def regime_delta(per_paper: Sequence[Rollup], global_: Sequence[Rollup]) -> list[DeltaRow]:
    """Per (domain, model): F1 under per-paper minus F1 under global input."""

    def index(rollups: Sequence[Rollup]) -> dict[tuple[str, str], float]:
        return {(r.keys[0], r.keys[1]): r.prf.f1 for r in rollups}

    pp, gl = index(per_paper), index(global_)
    if set(pp) != set(gl):
        raise ValueError(f"regime key mismatch: {sorted(set(pp) ^ set(gl))}")
    return [DeltaRow(d, m, pp[(d, m)], gl[(d, m)]) for d, m in sorted(pp)]


def delta_csv(rows: Sequence[DeltaRow]) -> str:
    """Plot-ready CSV of the per-paper -> global F1 change, 2-decimal values."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["domain", "model", "f1_per_paper", "f1_global", "drop"])
    for row in rows:
        writer.writerow(
            [row.domain, row.model, f"{row.f1_per_paper:.2f}", f"{row.f1_global:.2f}", f"{row.drop:.2f}"]
        )
    return buf.getvalue()
