from __future__ import annotations

import math

from evidx import queries
from evidx.analysis import (
    amplification_report,
    build_taxonomy,
    detect_binding_drift,
    detect_role_swaps,
    format_ratio,
    recall_by_density,
    taxonomy_markdown,
    taxonomy_to_dict,
)
from evidx.matching import match_tuples, sort_tuples
from evidx.metrics import PRF, ScoredQuery, prf
from evidx.schema import make_tuple

Q5 = queries.get("M_L2_Q5")
Q4 = queries.get("M_L2_Q4")
Q6 = queries.get("M_L2_Q6")


def t5(doc, iv, dv, method):
    return make_tuple(doc, Q5, {"IV": iv, "DV": dv, "A": method})


def t4(doc, iv, dv):
    return make_tuple(doc, Q4, {"IV": iv, "DV": dv})


def t6(doc, iv, dv, method, cond, effect):
    return make_tuple(doc, Q6, {"IV": iv, "DV": dv, "A": method, "C": cond, "E": effect})


def scored_from(query, preds, golds, regime="per-paper", domain="d", model="m"):
    golds = sort_tuples(set(golds))
    report = match_tuples(preds, golds, None, query, regime)
    return ScoredQuery(
        domain=domain,
        model=model,
        regime=regime,
        query_id=query.id,
        prf=prf(report.correct, report.predicted, report.gold),
        correct=report.correct,
        predicted=report.predicted,
        gold=report.gold,
        report=report,
        preds=list(preds),
        golds=golds,
    )


# -- format_ratio ---------------------------------------------------------------


def test_ratio_formatting_matches_published_rounding():
    assert format_ratio(688, 4430) == "15.5%"
    assert format_ratio(518, 2403) == "21.6%"
    assert format_ratio(3, 10) == "30.0%"
    assert format_ratio(0, 0) == "0.0%"


# -- role swaps -------------------------------------------------------------------


def test_exact_swap_is_detected():
    golds = [t4(1, "alpha", "beta")]
    preds = [t4(1, "beta", "alpha")]
    sq = scored_from(Q4, preds, golds)
    result = detect_role_swaps([sq])
    assert (result.count, result.denominator) == (1, 1)


def test_partial_exchange_is_not_a_swap():
    golds = [t4(1, "alpha", "beta")]
    preds = [t4(1, "beta", "charlie")]
    sq = scored_from(Q4, preds, golds)
    result = detect_role_swaps([sq])
    assert (result.count, result.denominator) == (0, 1)


def test_swap_requires_same_document():
    golds = [t4(1, "alpha", "beta")]
    preds = [t4(2, "beta", "alpha")]
    sq = scored_from(Q4, preds, golds)
    assert detect_role_swaps([sq]).count == 0


def test_swap_on_full_tuples_ignores_condition_and_effect():
    golds = [t6(1, "alpha", "beta", "pearson correlation", "winter", 0.41)]
    preds = [t6(1, "beta", "alpha", "pearson correlation", None, 0.99)]
    sq = scored_from(Q6, preds, golds)
    assert detect_role_swaps([sq]).count == 1


def test_swap_checks_method_for_method_bound_tuples():
    golds = [t5(1, "alpha", "beta", "pearson correlation")]
    preds = [t5(1, "beta", "alpha", "linear regression")]
    sq = scored_from(Q5, preds, golds)
    assert detect_role_swaps([sq]).count == 0


# -- binding drift ------------------------------------------------------------------


def test_wrong_method_on_real_pair_is_drift():
    golds = [t5(1, "alpha", "beta", "pearson correlation")]
    preds = [t5(1, "alpha", "beta", "linear regression")]
    sq = scored_from(Q5, preds, golds)
    result = detect_binding_drift([sq])
    assert (result.count, result.denominator) == (1, 1)


def test_wrong_pair_is_not_drift():
    golds = [t5(1, "alpha", "beta", "pearson correlation")]
    preds = [t5(1, "alpha", "charlie", "pearson correlation")]
    sq = scored_from(Q5, preds, golds)
    assert detect_binding_drift([sq]).count == 0


def test_drift_scope_is_per_paper_only():
    golds = [t5(1, "alpha", "beta", "pearson correlation")]
    preds = [t5(1, "alpha", "beta", "linear regression")]
    sq = scored_from(Q5, preds, golds, regime="global")
    result = detect_binding_drift([sq])
    assert result.denominator == 0 and result.count == 0


# -- constructed taxonomy fixture -----------------------------------------------------


def planted_fixture():
    """Ten spurious predictions: 3 planted swaps, 2 planted drifts, 5 noise."""
    golds = [
        t5(1, "alpha", "bravo", "pearson correlation"),
        t5(1, "charlie", "delta", "pearson correlation"),
        t5(1, "echo", "foxtrot", "linear regression"),
        t5(1, "bravo", "alpha", "linear regression"),  # reverse direction also annotated
        t5(1, "golf", "hotel", "pearson correlation"),
        t5(1, "india", "juliet", "pearson correlation"),
    ]
    preds = [
        # swaps (the first also has its own pair in gold: precedence keeps it a swap)
        t5(1, "bravo", "alpha", "pearson correlation"),
        t5(1, "delta", "charlie", "pearson correlation"),
        t5(1, "foxtrot", "echo", "linear regression"),
        # drifts
        t5(1, "golf", "hotel", "linear regression"),
        t5(1, "india", "juliet", "structural equation modeling"),
        # noise
        t5(1, "kilo", "lima", "pearson correlation"),
        t5(1, "mike", "november", "linear regression"),
        t5(1, "oscar", "papa", "pearson correlation"),
        t5(1, "quebec", "romeo", "pearson correlation"),
        t5(1, "sierra", "tango", "linear regression"),
    ]
    return scored_from(Q5, preds, golds)


def test_planted_fixture_counts_and_precedence():
    sq = planted_fixture()
    assert all(d.verdict == "spurious" for d in sq.report.decisions)
    swaps = detect_role_swaps([sq])
    assert (swaps.count, swaps.denominator) == (3, 10)
    assert swaps.ratio_text == "30.0%"
    swap_keys = {(i.domain, i.model, i.regime, i.query_id, i.pred_index) for i in swaps.instances}
    drift = detect_binding_drift([sq], exclude=swap_keys)
    assert (drift.count, drift.denominator) == (2, 10)
    assert drift.ratio_text == "20.0%"
    # Without precedence the first swap would double as drift.
    drift_all = detect_binding_drift([sq])
    assert drift_all.count == 3


def test_taxonomy_report_and_rendering():
    sq = planted_fixture()
    report = build_taxonomy("d", [sq])
    payload = taxonomy_to_dict(report)
    assert payload["role_swaps"]["ratio_text"] == "30.0%"
    assert payload["binding_drift"]["ratio_text"] == "20.0%"
    text = taxonomy_markdown(report)
    assert "30.0%" in text and "20.0%" in text
    # every instance references a decision in the audit trail
    for inst in report.swaps.instances + report.drift.instances:
        assert inst.pred_index in {d.pred_index for d in sq.report.decisions}


# -- recall by density ---------------------------------------------------------------


def _density_fixture():
    golds = []
    preds = []
    # doc 1: 4 gold tuples, 2 recovered -> recall 0.5 (bucket 1-5)
    # doc 2: 5 gold tuples, 2 recovered -> recall 0.4 (bucket 1-5, mean 0.45)
    # doc 3: 50 gold tuples, 16 recovered -> recall 0.32 (bucket >=31)
    for doc, total, hit in ((1, 4, 2), (2, 5, 2), (3, 50, 16)):
        for i in range(total):
            gold = t6(doc, f"ivar {doc}-{i}", f"ovar {doc}-{i}", "pearson correlation", None, round(0.01 * i, 2))
            golds.append(gold)
            if i < hit:
                preds.append(gold)
    return scored_from(Q6, preds, golds)


def test_density_buckets_engineered_decline():
    sq = _density_fixture()
    result = recall_by_density(sq)
    by_label = {b.label: b for b in result.buckets}
    assert math.isclose(by_label["1-5"].mean_recall, 0.45, abs_tol=1e-12)
    assert by_label["1-5"].papers == 2
    assert math.isclose(by_label[">=31"].mean_recall, 0.32, abs_tol=1e-12)
    assert by_label[">=31"].papers == 1
    # empty middle buckets are omitted with a note
    assert any("6-10" in n for n in result.notes)
    # bucket paper counts partition all scored documents
    assert sum(b.papers for b in result.buckets) == 3


def test_zero_prediction_dense_paper_recall_zero():
    golds = [
        t6(1, f"ivar {i}", f"ovar {i}", "pearson correlation", None, 0.5) for i in range(40)
    ]
    sq = scored_from(Q6, [], golds)
    result = recall_by_density(sq)
    assert result.buckets == [] or all(b.mean_recall == 0.0 for b in result.buckets)
    bucket = {b.label: b for b in recall_by_density(sq).buckets}
    assert bucket[">=31"].mean_recall == 0.0


# -- amplification ----------------------------------------------------------------------


def _cell_scores(success: bool, upstream_f1: float, regime="per-paper"):
    derived = ScoredQuery(
        domain="d",
        model="m",
        regime=regime,
        query_id="O_C_Q1",
        prf=PRF(1.0, 1.0, 1.0) if success else PRF(0.0, 0.0, 0.0),
        correct=int(success),
        predicted=1,
        gold=1,
        kind="scalar",
    )
    upstream = ScoredQuery(
        domain="d",
        model="m",
        regime=regime,
        query_id="O_L1_Q2",
        prf=PRF(upstream_f1, upstream_f1, upstream_f1),
        correct=0,
        predicted=0,
        gold=0,
    )
    return [derived, upstream]


def test_amplification_success_rate():
    scores = _cell_scores(True, 0.66) + _cell_scores(False, 0.66, regime="global")
    rows = {r.derived_id: r for r in amplification_report(scores)}
    row = rows["O_C_Q1"]
    assert row.success_rate == 0.5
    assert math.isclose(row.upstream_f1, 0.66, abs_tol=1e-12)
    assert row.upstream_id == "O_L1_Q2"


def test_perfect_extraction_means_no_amplification():
    scores = _cell_scores(True, 1.0)
    row = amplification_report(scores)[0]
    assert row.success_rate == 1.0
    assert row.upstream_f1 == 1.0


def test_missing_upstream_marks_partial():
    derived_only = _cell_scores(True, 1.0)[:1]
    row = amplification_report(derived_only)[0]
    assert row.partial
