"""Brute-force ground truth for the derived statistical queries.

Every answer is a deterministic function of the gold records alone; this is
the reference both for grading model answers and for cross-checking the rest
of the scoring plumbing.  A document's sample size N is the sum of its
recorded sample-size entries; documents without any entry are excluded from
mean/median/count with an explicit coverage note.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import Sequence

from evidx import queries
from evidx.schema import GoldRecord, StudyTuple, make_tuple, project_gold
from evidx.textnorm import normalize

STRONG_PAIR_THRESHOLD = 0.7
COUNT_THRESHOLD = 100


@dataclass(frozen=True)
class DerivedAnswer:
    query_id: str
    scope: str  # "corpus" | "per_document"
    value: object
    covered: int | None = None
    excluded: int | None = None


def per_doc_sample_total(record: GoldRecord) -> int | None:
    """The document's sample size: sum of recorded entries, None if none."""
    if not record.sample_sizes:
        return None
    return sum(record.sample_sizes)


# Shared arithmetic over plain value lists, so the mock aggregator and the
# gold-based oracle go through one code path.

def count_gt_values(values: Sequence[int | None], threshold: int = COUNT_THRESHOLD) -> int:
    return sum(1 for v in values if v is not None and v > threshold)


def mean_values(values: Sequence[int | None]) -> float | None:
    present = [v for v in values if v is not None]
    if not present:
        return None
    return sum(present) / len(present)


def median_values(values: Sequence[int | None]) -> float | None:
    present = [v for v in values if v is not None]
    if not present:
        return None
    return statistics.median(present)


def oracle_count_gt(gold: Sequence[GoldRecord], threshold: int = COUNT_THRESHOLD) -> int:
    """O_C_Q1: documents whose sample-size total strictly exceeds threshold."""
    return count_gt_values([per_doc_sample_total(r) for r in gold], threshold)


def oracle_mean(gold: Sequence[GoldRecord]) -> float | None:
    """O_C_Q2: mean of per-document N; None if no document reports N."""
    return mean_values([per_doc_sample_total(r) for r in gold])


def oracle_median(gold: Sequence[GoldRecord]) -> float | None:
    """O_C_Q3: median of per-document N (even count: midpoint average)."""
    return median_values([per_doc_sample_total(r) for r in gold])


PER_DOC_COUNT_KINDS = ("methods", "variables", "iv", "dv")

_KIND_TO_QUERY = {"methods": "M_C_Q1", "variables": "M_C_Q2", "iv": "M_C_Q3", "dv": "M_C_Q4"}


def oracle_per_doc_counts(gold: Sequence[GoldRecord], kind: str) -> list[tuple[int, int]]:
    """M_C_Q1-Q4: per-document counts over normalized-distinct names."""
    out = []
    for record in gold:
        if kind == "methods":
            n = len({normalize(a.method) for a in record.associations})
        elif kind == "variables":
            n = len(project_gold(record, queries.get("M_L1_Q2")))
        elif kind == "iv":
            n = len({normalize(v.name) for v in record.variables if v.role == "IV"})
        elif kind == "dv":
            n = len({normalize(v.name) for v in record.variables if v.role == "DV"})
        else:
            raise ValueError(f"unknown count kind {kind!r}")
        out.append((record.doc_id, n))
    return out


def oracle_strong_pairs(
    gold: Sequence[GoldRecord],
    threshold: float = STRONG_PAIR_THRESHOLD,
    absolute: bool = False,
) -> set[tuple[int, str, str]]:
    """M_C_Q5: (doc_id, iv, dv) for associations with effect value > threshold.

    Strict comparison on the signed value as recorded; ``absolute`` switches to
    |value| > threshold for the alternative reading, off by default.
    """
    pairs: set[tuple[int, str, str]] = set()
    seen: set[tuple[int, str, str]] = set()
    for record in gold:
        for assoc in record.associations:
            value = abs(assoc.effect.value) if absolute else assoc.effect.value
            if value > threshold:
                key = (record.doc_id, normalize(assoc.iv), normalize(assoc.dv))
                if key not in seen:
                    seen.add(key)
                    pairs.add((record.doc_id, assoc.iv, assoc.dv))
    return pairs


def count_tuples(gold: Sequence[GoldRecord], kind: str) -> set[StudyTuple]:
    """Per-document count answers as a gold tuple set for matching."""
    spec = queries.get(_KIND_TO_QUERY[kind])
    return {
        make_tuple(doc_id, spec, {"count": n})
        for doc_id, n in oracle_per_doc_counts(gold, kind)
    }


def strong_pair_tuples(gold: Sequence[GoldRecord]) -> set[StudyTuple]:
    spec = queries.get("M_C_Q5")
    return {
        make_tuple(doc_id, spec, {"IV": iv, "DV": dv})
        for doc_id, iv, dv in oracle_strong_pairs(gold)
    }


def derived_gold_tuples(gold: Sequence[GoldRecord], query_id: str) -> set[StudyTuple]:
    """Gold tuple set for a per-document derived query (M_C_*)."""
    if query_id == "M_C_Q5":
        return strong_pair_tuples(gold)
    for kind, qid in _KIND_TO_QUERY.items():
        if qid == query_id:
            return count_tuples(gold, kind)
    raise ValueError(f"{query_id} has no per-document derived gold")


def oracle_answers(gold: Sequence[GoldRecord]) -> dict[str, DerivedAnswer]:
    """All derived answers keyed by query id, ready for serialization."""
    totals = [per_doc_sample_total(r) for r in gold]
    covered = sum(1 for t in totals if t is not None)
    excluded = len(totals) - covered
    answers = {
        "O_C_Q1": DerivedAnswer("O_C_Q1", "corpus", oracle_count_gt(gold), covered, excluded),
        "O_C_Q2": DerivedAnswer("O_C_Q2", "corpus", oracle_mean(gold), covered, excluded),
        "O_C_Q3": DerivedAnswer("O_C_Q3", "corpus", oracle_median(gold), covered, excluded),
    }
    for kind in PER_DOC_COUNT_KINDS:
        qid = _KIND_TO_QUERY[kind]
        answers[qid] = DerivedAnswer(qid, "per_document", oracle_per_doc_counts(gold, kind))
    answers["M_C_Q5"] = DerivedAnswer(
        "M_C_Q5", "per_document", sorted(oracle_strong_pairs(gold))
    )
    return answers
