from __future__ import annotations

import pytest

from evidx import oracle, queries
from evidx.corpus import descriptive_stats
from evidx.schema import AssociationEntry, EffectSize, VariableEntry, project_gold

from . import oracles_bf as bf
from .conftest import DOMAINS, make_record


def _records_with_totals(totals):
    records = []
    for i, n in enumerate(totals, start=1):
        sizes = () if n is None else (n,)
        records.append(make_record(doc_id=i, sample_sizes=sizes))
    return records


def test_count_strictly_greater():
    records = _records_with_totals([50, 150, 101])
    assert oracle.oracle_count_gt(records) == 2


def test_count_boundary_excluded():
    records = _records_with_totals([100, 100, 100])
    assert oracle.oracle_count_gt(records) == 0


def test_mean_median_basics():
    records = _records_with_totals([10, 20, 30])
    assert oracle.oracle_mean(records) == 20
    assert oracle.oracle_median(records) == 20


def test_even_count_median_is_midpoint():
    records = _records_with_totals([1, 2, 3, 4])
    assert oracle.oracle_median(records) == 2.5


def test_null_documents_excluded_with_undefined_marker():
    records = _records_with_totals([None, 40])
    assert oracle.oracle_mean(records) == 40
    answers = oracle.oracle_answers(records)
    assert answers["O_C_Q2"].covered == 1
    assert answers["O_C_Q2"].excluded == 1
    all_null = _records_with_totals([None, None])
    assert oracle.oracle_mean(all_null) is None
    assert oracle.oracle_median(all_null) is None


def test_social_science_mean_is_forced_by_total(corpora):
    gold = list(corpora["social_science"].gold)
    assert sum(t for t in (oracle.per_doc_sample_total(r) for r in gold)) == 4599
    assert oracle.oracle_mean(gold) == 4599 / 11


def test_per_doc_counts_on_role_overlap():
    record = make_record(
        variables=(
            VariableEntry("A", "IV"),
            VariableEntry("B", "DV"),
            VariableEntry("A", "DV"),
        ),
        associations=(
            AssociationEntry("A", "B", "Pearson correlation", None, EffectSize("r", 0.2)),
        ),
    )
    assert oracle.oracle_per_doc_counts([record], "variables") == [(1, 2)]
    assert oracle.oracle_per_doc_counts([record], "iv") == [(1, 1)]
    assert oracle.oracle_per_doc_counts([record], "dv") == [(1, 2)]


def test_repeated_method_counts_once():
    record = make_record(
        associations=tuple(
            AssociationEntry("body mass index", "axial length", "Pearson correlation", c, EffectSize("r", v))
            for c, v in ((None, 0.1), ("s1", 0.2), ("s2", 0.3))
        ),
    )
    assert oracle.oracle_per_doc_counts([record], "methods") == [(1, 1)]


def test_strong_pairs_signed_strict():
    record = make_record(
        variables=(
            VariableEntry("x1", "IV"),
            VariableEntry("x2", "IV"),
            VariableEntry("x3", "IV"),
            VariableEntry("y", "DV"),
        ),
        associations=(
            AssociationEntry("x1", "y", "Pearson correlation", None, EffectSize("r", 0.71)),
            AssociationEntry("x2", "y", "Pearson correlation", None, EffectSize("r", 0.70)),
            AssociationEntry("x3", "y", "Pearson correlation", None, EffectSize("r", -0.9)),
        ),
    )
    assert oracle.oracle_strong_pairs([record]) == {(1, "x1", "y")}
    assert oracle.oracle_strong_pairs([record], absolute=True) == {(1, "x1", "y"), (1, "x3", "y")}


def test_strong_pairs_empty_associations():
    record = make_record(associations=())
    assert oracle.oracle_strong_pairs([record]) == set()


def test_civil_strong_pairs_match_exhaustive_scan(corpora):
    gold = list(corpora["civil_engineering"].gold)
    assert oracle.oracle_strong_pairs(gold) == bf.bf_strong_pairs(gold)
    # The built-in boundary trio: 0.71 in, 0.70 and -0.9 out.
    doc1 = [p for p in oracle.oracle_strong_pairs(gold) if p[0] == 1]
    assert doc1 == [(1, "floor area", "annual energy use intensity")]


@pytest.mark.parametrize("domain", DOMAINS)
def test_derived_answers_match_bruteforce(corpora, domain):
    gold = list(corpora[domain].gold)
    assert oracle.oracle_count_gt(gold) == bf.bf_count_gt(gold)
    assert oracle.oracle_mean(gold) == bf.bf_mean(gold)
    assert oracle.oracle_median(gold) == bf.bf_median(gold)
    assert oracle.oracle_strong_pairs(gold) == bf.bf_strong_pairs(gold)


@pytest.mark.parametrize("domain", DOMAINS)
def test_cross_module_identities(corpora, domain):
    gold = list(corpora[domain].gold)
    # Per-document variable counts equal the role-agnostic projection size.
    spec = queries.get("M_L1_Q2")
    for record in gold:
        counts = dict(oracle.oracle_per_doc_counts([record], "variables"))
        assert counts[record.doc_id] == len(project_gold(record, spec))
    # Oracle totals agree with the descriptive statistics table.
    stats = {r.metric: r for r in descriptive_stats(gold)}
    assert stats["statistical_methods"].total == sum(
        n for _, n in oracle.oracle_per_doc_counts(gold, "methods")
    )
    assert stats["variables"].total == sum(
        n for _, n in oracle.oracle_per_doc_counts(gold, "variables")
    )


def test_bounds_against_document_count(corpora):
    for corpus in corpora.values():
        gold = list(corpus.gold)
        assert oracle.oracle_count_gt(gold) <= len(gold)
        totals = [oracle.per_doc_sample_total(r) for r in gold if r.sample_sizes]
        assert min(totals) <= oracle.oracle_median(gold) <= max(totals)
        assert min(totals) <= oracle.oracle_mean(gold) <= max(totals)


def test_strong_pairs_subset_of_gold_pairs(corpora):
    spec = queries.get("M_L2_Q4")
    for corpus in corpora.values():
        pairs = {
            (t.doc_id, t.value("IV"), t.value("DV"))
            for record in corpus.gold
            for t in project_gold(record, spec)
        }
        assert oracle.oracle_strong_pairs(list(corpus.gold)) <= pairs
