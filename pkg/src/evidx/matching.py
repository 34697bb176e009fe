"""Two-stage matching of predicted tuples against gold tuples.

Stage one restricts candidates to the same source document (attribution is
enforced, never fuzzy).  Stage two verifies every slot independently: text
slots pass on character-level similarity >= 0.95 or, below that, on an LLM
judge verdict; numeric slots require exact equality after decimal
canonicalization and never consult the judge; null matches only null.
Assignment is greedy one-to-one over candidate pairs ranked by mean slot
similarity with deterministic tie-breaks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from evidx.queries import QuerySpec
from evidx.schema import StudyTuple, Value
from evidx.textnorm import normalize, similarity

SIM_THRESHOLD = 0.95

# Slot outcomes that count as a pass.
PASS_OUTCOMES = frozenset({"exact-sim", "judge-yes", "numeric-exact", "null-null"})


@dataclass(frozen=True)
class MatchDecision:
    pred_index: int
    gold_index: int | None
    slots: tuple[tuple[str, str], ...]  # (slot, outcome)
    verdict: str  # "correct" | "spurious"


@dataclass
class MatchReport:
    query_id: str
    regime: str
    decisions: list[MatchDecision]
    unmatched_gold: list[int]
    correct: int
    predicted: int
    gold: int
    judge_keys: list[str] = field(default_factory=list)


def to_number(value: Value) -> float | int | None:
    """Canonical numeric form; None when the value is not a number."""
    if value is None or isinstance(value, bool):
        return None
    if isinstance(value, (int, float)):
        return value
    s = str(value).strip().replace(",", "")
    if not s:
        return None
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return None


def numbers_equal(a: Value, b: Value) -> bool:
    na, nb = to_number(a), to_number(b)
    if na is None or nb is None:
        return False
    return float(na) == float(nb)


def slot_match(
    pred_value: Value,
    gold_value: Value,
    numeric: bool,
    gateway=None,
    context: str = "",
) -> str:
    """Outcome of comparing one slot; see PASS_OUTCOMES for the pass set.

    ``gateway`` supplies the judge for borderline text values; with no gateway
    the comparison is similarity-only and borderline values fail.
    """
    if pred_value is None and gold_value is None:
        return "null-null"
    if pred_value is None or gold_value is None:
        return "fail"
    if numeric:
        return "numeric-exact" if numbers_equal(pred_value, gold_value) else "fail"
    a, b = str(pred_value), str(gold_value)
    if similarity(normalize(a), normalize(b)) >= SIM_THRESHOLD:
        return "exact-sim"
    if gateway is None:
        return "fail"
    return "judge-yes" if gateway.judge_equivalence(a, b, context) else "fail"


def _candidate_score(pred: StudyTuple, gold: StudyTuple, spec: QuerySpec | None) -> float:
    """Mean per-slot similarity used only for ranking candidate pairs."""
    scores = []
    for (slot, pv), (_, gv) in zip(pred.fields, gold.fields):
        numeric = spec.numeric(slot) if spec is not None else False
        if pv is None and gv is None:
            scores.append(1.0)
        elif pv is None or gv is None:
            scores.append(0.0)
        elif numeric:
            scores.append(1.0 if numbers_equal(pv, gv) else 0.0)
        else:
            scores.append(similarity(normalize(str(pv)), normalize(str(gv))))
    return sum(scores) / len(scores) if scores else 1.0


def verify_pair(
    pred: StudyTuple,
    gold: StudyTuple,
    spec: QuerySpec | None,
    gateway=None,
) -> tuple[bool, tuple[tuple[str, str], ...]]:
    """Run slot_match on every slot; the pair passes iff every slot passes."""
    outcomes = []
    ok = True
    for (slot, pv), (_, gv) in zip(pred.fields, gold.fields):
        numeric = spec.numeric(slot) if spec is not None else False
        context = f"{pred.query_id}/{slot}"
        outcome = slot_match(pv, gv, numeric, gateway, context)
        outcomes.append((slot, outcome))
        if outcome not in PASS_OUTCOMES:
            ok = False
    return ok, tuple(outcomes)


def sort_tuples(tuples) -> list[StudyTuple]:
    """Canonical deterministic ordering (None sorts before any value)."""

    def key(t: StudyTuple):
        return (t.doc_id, [(s, v is not None, str(v)) for s, v in t.fields])

    return sorted(tuples, key=key)


def match_tuples(
    preds: Sequence[StudyTuple],
    golds: set[StudyTuple] | Sequence[StudyTuple],
    gateway=None,
    spec: QuerySpec | None = None,
    regime: str = "",
) -> MatchReport:
    """Assign predictions to gold tuples and count correct ones.

    Candidate pairs are restricted to equal doc_id, ranked by mean slot
    similarity (descending; ties by pred then gold index), and assigned
    greedily one-to-one.  A pair only consumes its two sides when every slot
    passes verification; failed pairs leave both sides available.
    """
    preds = list(preds)
    gold_list = sort_tuples(golds)
    if spec is not None:
        query_id = spec.id
    elif preds:
        query_id = preds[0].query_id
    else:
        query_id = gold_list[0].query_id if gold_list else ""

    judge_before = len(gateway.judge_log) if gateway is not None else 0

    candidates = []
    for pi, pred in enumerate(preds):
        for gi, gold in enumerate(gold_list):
            if pred.doc_id != gold.doc_id:
                continue
            candidates.append((-_candidate_score(pred, gold, spec), pi, gi))
    candidates.sort()

    assigned: dict[int, tuple[int, tuple[tuple[str, str], ...]]] = {}
    used_gold: set[int] = set()
    for _, pi, gi in candidates:
        if pi in assigned or gi in used_gold:
            continue
        ok, outcomes = verify_pair(preds[pi], gold_list[gi], spec, gateway)
        if ok:
            assigned[pi] = (gi, outcomes)
            used_gold.add(gi)

    decisions = []
    for pi in range(len(preds)):
        if pi in assigned:
            gi, outcomes = assigned[pi]
            decisions.append(MatchDecision(pi, gi, outcomes, "correct"))
        else:
            decisions.append(MatchDecision(pi, None, (), "spurious"))

    judge_keys = [entry["key"] for entry in gateway.judge_log[judge_before:]] if gateway is not None else []

    return MatchReport(
        query_id=query_id,
        regime=regime,
        decisions=decisions,
        unmatched_gold=sorted(set(range(len(gold_list))) - used_gold),
        correct=len(assigned),
        predicted=len(preds),
        gold=len(gold_list),
        judge_keys=judge_keys,
    )
