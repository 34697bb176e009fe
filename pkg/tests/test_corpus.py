from __future__ import annotations

import json

import pytest

from evidx.corpus import (
    CorpusError,
    build_global_input,
    descriptive_stats,
    load_corpus,
)
from evidx.schema import AssociationEntry, EffectSize, VariableEntry

from .conftest import FIXTURES, make_record


def _write_corpus(tmp_path, docs: dict[int, str], gold_docs: list[dict]):
    docs_dir = tmp_path / "docs"
    docs_dir.mkdir()
    for doc_id, text in docs.items():
        (docs_dir / f"{doc_id}.md").write_text(text, encoding="utf-8")
    gold_path = tmp_path / "gold.json"
    gold_path.write_text(json.dumps({"domain": "t", "documents": gold_docs}), encoding="utf-8")
    return docs_dir, gold_path


def _gold_doc(doc_id: int) -> dict:
    return {
        "doc_id": doc_id,
        "doi": f"10.0/{doc_id}",
        "populations": ["adults"],
        "geolocations": ["Germany"],
        "sample_sizes": [10],
        "variables": [
            {"name": "a", "role": "IV", "scale": None, "unit": None},
            {"name": "b", "role": "DV", "scale": None, "unit": None},
        ],
        "associations": [
            {"iv": "a", "dv": "b", "method": "Pearson correlation", "condition": None,
             "effect": {"family": "r", "value": 0.5}}
        ],
    }


def test_load_corpus_roundtrip(tmp_path):
    docs_dir, gold = _write_corpus(tmp_path, {1: "# one", 2: "# two"}, [_gold_doc(1), _gold_doc(2)])
    corpus = load_corpus(docs_dir, gold)
    assert corpus.doc_ids == (1, 2)
    assert corpus.document(2).markdown == "# two"


def test_load_corpus_missing_markdown(tmp_path):
    docs_dir, gold = _write_corpus(tmp_path, {1: "# one"}, [_gold_doc(1), _gold_doc(2)])
    with pytest.raises(CorpusError, match=r"\[2\]"):
        load_corpus(docs_dir, gold)


def test_load_corpus_orphan_markdown(tmp_path):
    docs_dir, gold = _write_corpus(tmp_path, {1: "# one", 3: "# three"}, [_gold_doc(1)])
    with pytest.raises(CorpusError, match="no gold record"):
        load_corpus(docs_dir, gold)


def test_load_corpus_duplicate_doc_id(tmp_path):
    docs_dir, gold = _write_corpus(tmp_path, {1: "# one"}, [_gold_doc(1), _gold_doc(1)])
    with pytest.raises(CorpusError, match="duplicate doc_id"):
        load_corpus(docs_dir, gold)


def test_global_input_headers_in_order(tmp_path):
    docs_dir, gold = _write_corpus(tmp_path, {2: "beta", 1: "alpha"}, [_gold_doc(1), _gold_doc(2)])
    text = build_global_input(load_corpus(docs_dir, gold))
    assert text.index("=== DOCUMENT [1] ===") < text.index("=== DOCUMENT [2] ===")
    assert text.count("=== DOCUMENT [") == 2


def test_global_input_single_document(tmp_path):
    docs_dir, gold = _write_corpus(tmp_path, {1: "body text"}, [_gold_doc(1)])
    assert build_global_input(load_corpus(docs_dir, gold)) == "=== DOCUMENT [1] ===\nbody text"


def test_global_input_bytes_match_manual_concatenation(agricultural):
    # Independent byte oracle: join the headered parts by hand.
    parts = []
    for doc in agricultural.documents:
        raw = (FIXTURES / "agricultural" / "docs" / f"{doc.doc_id}.md").read_text(encoding="utf-8")
        parts.append(f"=== DOCUMENT [{doc.doc_id}] ===\n" + raw)
    expected = "\n\n".join(parts)
    built = build_global_input(agricultural)
    assert built == expected
    assert built.count("=== DOCUMENT [") == 11


def test_token_estimate_is_quarter_of_chars(agricultural):
    doc = agricultural.documents[0]
    assert doc.token_estimate == len(doc.markdown) // 4


def test_stats_hand_case_method_counts():
    methods = [1, 2, 2, 5]
    records = []
    pool = ["Pearson correlation", "linear regression", "Spearman correlation",
            "logistic regression", "structural equation modeling"]
    for i, count in enumerate(methods, start=1):
        variables = (VariableEntry("x", "IV"), VariableEntry("y", "DV"))
        associations = tuple(
            AssociationEntry("x", "y", pool[j], None, EffectSize("r", 0.1)) for j in range(count)
        )
        records.append(make_record(doc_id=i, variables=variables, associations=associations))
    row = {r.metric: r for r in descriptive_stats(records)}["statistical_methods"]
    assert (row.minimum, row.median, row.maximum, row.total) == (1, 2.0, 5, 10)


def test_stats_single_document_degenerate():
    rows = descriptive_stats([make_record(sample_sizes=(120,))])
    row = {r.metric: r for r in rows}["sample_size"]
    assert row.minimum == row.median == row.maximum == row.total == 120


def test_stats_medical_fixture_reproduces_reference_numbers(medical):
    row = {r.metric: r for r in descriptive_stats(list(medical.gold))}["sample_size"]
    assert row.minimum == 184
    assert row.median == 5417
    assert row.maximum == 1323052
    assert row.total == 1391776


def test_stats_totals_are_sums_of_per_doc_counts(corpora):
    for corpus in corpora.values():
        for row in descriptive_stats(list(corpus.gold)):
            assert row.minimum <= row.median <= row.maximum
            assert row.total >= row.maximum


def test_stats_require_records():
    with pytest.raises(CorpusError):
        descriptive_stats([])
