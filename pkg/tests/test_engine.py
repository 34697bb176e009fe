from __future__ import annotations

import pytest

from evidx import queries
from evidx.engine import (
    PER_DOC_ATOM_TEXT,
    RawResponse,
    Regime,
    aggregate_per_paper,
    build_aggregation_prompt,
    extract_scalar,
    parse_response,
    render_prompt,
    rewrite_per_document,
    serialize_rows,
    serialize_tuples,
)
from evidx.schema import project_gold

from .conftest import mock_gateway


def raw(text: str) -> RawResponse:
    return RawResponse(prompt_key="k", text=text)


# -- rewriting ----------------------------------------------------------------


def test_scalar_rewrite_asks_for_atoms():
    for qid in ("O_C_Q1", "O_C_Q2", "O_C_Q3"):
        variant = rewrite_per_document(queries.get(qid))
        assert variant.id == qid
        assert variant.slots == ("N",)
        assert not variant.scalar
        assert variant.text == PER_DOC_ATOM_TEXT


def test_list_rewrite_preserves_pattern():
    variant = rewrite_per_document(queries.get("M_L1_Q1"))
    assert variant.pattern == ("i", "A")
    assert variant.slots == ("A",)
    assert variant.text.startswith("From the following document, extract")


def test_per_document_derived_rewrite_rescopes():
    variant = rewrite_per_document(queries.get("M_C_Q1"))
    assert variant.text.startswith("For the following document, count")
    assert variant.slots == ("count",)


def test_rewrite_then_reglobalize_pattern_unchanged():
    spec = queries.get("O_L1_Q1")
    assert rewrite_per_document(spec).pattern == spec.pattern


# -- rendering ----------------------------------------------------------------


def test_render_is_deterministic(agricultural):
    spec = queries.get("M_L2_Q6")
    a = render_prompt(spec, Regime.GLOBAL, agricultural)
    b = render_prompt(spec, Regime.GLOBAL, agricultural)
    assert a.prompt_text == b.prompt_text


def test_global_prompt_contains_all_headers(agricultural):
    bundle = render_prompt(queries.get("M_L2_Q6"), Regime.GLOBAL, agricultural)
    assert bundle.prompt_text.count("=== DOCUMENT [") == 11


def test_per_paper_prompt_contains_only_one_document(agricultural):
    bundle = render_prompt(queries.get("O_L1_Q2"), Regime.PER_PAPER, agricultural, doc_id=3)
    assert bundle.prompt_text.count("=== DOCUMENT [") == 1
    assert "=== DOCUMENT [3] ===" in bundle.prompt_text
    assert agricultural.document(3).markdown in bundle.prompt_text


def test_per_paper_prompt_independent_of_other_documents(tmp_path):
    import json as _json

    from evidx.corpus import load_corpus

    gold = {
        "domain": "t",
        "documents": [
            {
                "doc_id": i,
                "doi": f"10.0/{i}",
                "populations": ["p"],
                "geolocations": ["Spain"],
                "sample_sizes": [5],
                "variables": [
                    {"name": "x", "role": "IV"},
                    {"name": "y", "role": "DV"},
                ],
                "associations": [
                    {"iv": "x", "dv": "y", "method": "m", "condition": None,
                     "effect": {"family": "r", "value": 0.5}}
                ],
            }
            for i in (1, 2)
        ],
    }
    spec = queries.get("O_L1_Q1")
    prompts = []
    for doc2_text in ("# second draft A", "# second draft B, fully rewritten"):
        docs = tmp_path / f"docs-{len(prompts)}"
        docs.mkdir()
        (docs / "1.md").write_text("# first, never changes")
        (docs / "2.md").write_text(doc2_text)
        gold_path = docs / "gold.json"
        gold_path.write_text(_json.dumps(gold))
        corpus = load_corpus(docs, gold_path)
        prompts.append(render_prompt(spec, Regime.PER_PAPER, corpus, doc_id=1).prompt_text)
    assert prompts[0] == prompts[1]


def test_regime_argument_contract(agricultural):
    with pytest.raises(ValueError):
        render_prompt(queries.get("O_L1_Q1"), Regime.PER_PAPER, agricultural)
    with pytest.raises(ValueError):
        render_prompt(queries.get("O_L1_Q1"), Regime.GLOBAL, agricultural, doc_id=1)
    with pytest.raises(KeyError):
        render_prompt(queries.get("O_L1_Q1"), Regime.PER_PAPER, agricultural, doc_id=99)


# -- parsing ------------------------------------------------------------------


def test_parse_direct_field_mapping():
    spec = queries.get("O_L1_Q1")
    parsed = parse_response(raw('{"doc": 2, "G": "Germany"}'), spec, Regime.GLOBAL, valid_doc_ids={1, 2})
    assert len(parsed.tuples) == 1
    assert parsed.tuples[0].doc_id == 2
    assert parsed.tuples[0].value("G") == "Germany"


def test_parse_drops_out_of_range_marker():
    spec = queries.get("O_L1_Q1")
    parsed = parse_response(
        raw('{"doc": "[12]", "G": "Spain"}'), spec, Regime.GLOBAL, valid_doc_ids=set(range(1, 12))
    )
    assert parsed.tuples == []
    assert any("out of range" in w for w in parsed.warnings)


def test_parse_thousands_separator():
    spec = queries.get("O_L1_Q2")
    parsed = parse_response(raw('{"doc": 1, "N": "5,417"}'), spec, Regime.GLOBAL, valid_doc_ids={1})
    assert parsed.tuples[0].value("N") == 5417


def test_parse_arity_mismatch_dropped():
    spec = queries.get("O_L2_Q1")  # wants P and N
    text = '{"doc": 1, "P": "adults"}\n{"doc": 1, "P": "adults", "N": 5, "G": "x"}'
    parsed = parse_response(raw(text), spec, Regime.GLOBAL, valid_doc_ids={1})
    assert parsed.tuples == []
    assert len(parsed.warnings) == 2


def test_parse_tolerates_prose_and_fences():
    spec = queries.get("O_L1_Q1")
    text = 'Here are the results:\n```json\n{"doc": 1, "G": "Kenya"}\n```\nDone.'
    parsed = parse_response(raw(text), spec, Regime.GLOBAL, valid_doc_ids={1})
    assert [t.value("G") for t in parsed.tuples] == ["Kenya"]


def test_per_paper_attribution_is_forced():
    spec = queries.get("O_L1_Q1")
    parsed = parse_response(raw('{"doc": 9, "G": "Japan"}'), spec, Regime.PER_PAPER, doc_id=4)
    assert parsed.tuples[0].doc_id == 4


def test_unparseable_response_yields_zero_tuples():
    spec = queries.get("O_L1_Q1")
    parsed = parse_response(raw("no structured content at all"), spec, Regime.GLOBAL, valid_doc_ids={1})
    assert parsed.tuples == []
    assert parsed.warnings


def test_parse_never_emits_unknown_doc_ids(corpora):
    spec = queries.get("O_L1_Q1")
    text = "\n".join(
        ['{"doc": 1, "G": "a"}', '{"doc": 40, "G": "b"}', '{"doc": 2, "G": "c"}']
    )
    corpus = corpora["medical"]
    parsed = parse_response(raw(text), spec, Regime.GLOBAL, valid_doc_ids=corpus.doc_ids)
    assert {t.doc_id for t in parsed.tuples} <= set(corpus.doc_ids)


@pytest.mark.parametrize("qid", [s.id for s in queries.registry() if not s.scalar])
def test_serialize_parse_roundtrip(corpora, qid):
    from evidx import oracle

    spec = queries.get(qid)
    corpus = corpora["civil_engineering"]
    if spec.level == "C":
        golds = oracle.derived_gold_tuples(corpus.gold, spec.id)
    else:
        golds = set()
        for record in corpus.gold:
            golds |= project_gold(record, spec)
    text = serialize_tuples(golds)
    parsed = parse_response(raw(text), spec, Regime.GLOBAL, valid_doc_ids=corpus.doc_ids)
    assert parsed.warnings == []
    assert set(parsed.tuples) == golds


# -- scalar extraction ----------------------------------------------------------


def test_extract_scalar_variants():
    assert extract_scalar('```json\n{"value": 2}\n```') == 2
    assert extract_scalar('{"value": 418.0909090909091}') == 418.0909090909091
    assert extract_scalar("20") == 20
    assert extract_scalar('{"value": null}') is None
    assert extract_scalar("no numbers here") is None


# -- aggregation ----------------------------------------------------------------


def _atom_lines(values):
    return [
        (doc, serialize_rows([{"doc": doc, "N": n}] if n is not None else [{"doc": doc, "N": None}]))
        for doc, n in values
    ]


def test_aggregation_count(agricultural):
    gw = mock_gateway(agricultural)
    outputs = _atom_lines([(1, 150), (2, 50), (3, 300)])
    answer = aggregate_per_paper(outputs, queries.get("O_C_Q1"), gw)
    assert extract_scalar(answer) == 2


def test_aggregation_single_document_mean(agricultural):
    gw = mock_gateway(agricultural)
    outputs = _atom_lines([(1, 777)])
    answer = aggregate_per_paper(outputs, queries.get("O_C_Q2"), gw)
    assert extract_scalar(answer) == 777


def test_aggregation_null_documents_excluded(agricultural):
    gw = mock_gateway(agricultural)
    outputs = _atom_lines([(1, 10), (2, None), (3, 30)])
    answer = aggregate_per_paper(outputs, queries.get("O_C_Q2"), gw)
    assert extract_scalar(answer) == 20


def test_aggregation_prompt_excludes_document_text(agricultural):
    outputs = _atom_lines([(1, 10)])
    prompt = build_aggregation_prompt(outputs, queries.get("O_C_Q3"))
    assert "=== DOCUMENT [" not in prompt
    assert "Per-document outputs:" in prompt
    with pytest.raises(ValueError):
        build_aggregation_prompt(outputs, queries.get("O_L1_Q1"))
