"""Prompt rendering, per-document query rewriting, and response parsing.

Prompts are pure functions of their inputs plus a fixed, versioned
instruction header; identical inputs yield identical bytes.  Model responses
are expected as JSON lines (one object per tuple, with a ``doc`` attribution
marker) inside an optional code fence; anything unparseable is dropped with a
warning and scored as a miss rather than repaired.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Sequence

from evidx.corpus import Corpus, build_global_input, format_document
from evidx.queries import QuerySpec
from evidx.schema import StudyTuple, Value

INSTRUCTION_VERSION = "v1"

INSTRUCTION_HEADER = (
    "You are an information extraction system for empirical association studies.\n"
    "Read the supplied document(s) and answer the query in exactly the requested\n"
    "output format. Report only facts stated in the documents; use null for\n"
    "values a document does not report. [instructions " + INSTRUCTION_VERSION + "]"
)

QUERY_LINE_FMT = "### Query [{query_id}]"
AGGREGATION_MARKER = "Per-document outputs:"
AGGREGATION_SECTION_FMT = "--- Document [{doc_id}] output ---"

_QUERY_LINE_RE = re.compile(r"^### Query \[([A-Za-z0-9_]+)\]$", re.M)
_DOC_HEADER_RE = re.compile(r"^=== DOCUMENT \[(\d+)\] ===$", re.M)
_AGG_SECTION_RE = re.compile(r"^--- Document \[(\d+)\] output ---$", re.M)
_FENCE_RE = re.compile(r"```(?:json)?\n(.*?)```", re.S)
_VALUE_OBJ_RE = re.compile(r'\{\s*"value"\s*:\s*(null|-?[0-9][0-9,]*(?:\.[0-9]+)?(?:[eE][+-]?[0-9]+)?)\s*\}')
_MARKER_RE = re.compile(r"^\[?(\d+)\]?$")


class Regime(Enum):
    PER_PAPER = "per-paper"
    GLOBAL = "global"


@dataclass(frozen=True)
class PromptBundle:
    query_id: str
    regime: Regime
    doc_id: int | None
    prompt_text: str
    instruction_header: str = INSTRUCTION_HEADER


@dataclass(frozen=True)
class RawResponse:
    prompt_key: str
    text: str
    meta: tuple[tuple[str, str], ...] = ()


@dataclass
class ParsedResponse:
    tuples: list[StudyTuple] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Per-document rewriting

PER_DOC_ATOM_TEXT = "Report this document's reported sample size (use null if unavailable)."


def rewrite_per_document(spec: QuerySpec) -> QuerySpec:
    """A single-document variant of the query, semantics preserved.

    List-style queries keep their tuple pattern and are re-scoped to "the
    following document".  Corpus-level scalar queries (O_C_*) are rewritten to
    emit the document's contributing sample-size atoms; the corpus math is
    deferred to the aggregation step.  Per-document derived queries (M_C_*)
    pass through re-scoped.
    """
    if spec.scalar:
        return replace(
            spec,
            pattern=("i", "N"),
            text=PER_DOC_ATOM_TEXT,
            slots=("N",),
            scalar=False,
        )
    text = spec.text
    if text.startswith("For each document, "):
        text = "For the following document, " + text[len("For each document, "):]
    else:
        text = "From the following document, " + text[0].lower() + text[1:]
    return replace(spec, text=text)


# ---------------------------------------------------------------------------
# Output-format contracts and prompt rendering


def _tuple_contract(spec: QuerySpec) -> str:
    keys = ", ".join(f'"{s}"' for s in spec.slots)
    return (
        "Output format: inside a ```json code fence, write one JSON object per line.\n"
        'Each object must have the key "doc" (the document number shown in the\n'
        f"DOCUMENT [k] header above it) and the keys {keys}.\n"
        "Use null for unavailable values. Write nothing else."
    )


def _scalar_contract() -> str:
    return (
        "Output format: inside a ```json code fence, write a single JSON object\n"
        '{"value": <number>}. Write nothing else.'
    )


def _query_block(spec: QuerySpec) -> str:
    return QUERY_LINE_FMT.format(query_id=spec.id) + "\n" + spec.text


def render_prompt(
    spec: QuerySpec,
    regime: Regime,
    corpus: Corpus,
    doc_id: int | None = None,
) -> PromptBundle:
    """Assemble header + document(s) + query + output contract.

    The per-paper regime requires a doc_id; the global regime forbids one.
    """
    if regime is Regime.PER_PAPER:
        if doc_id is None:
            raise ValueError("per-paper regime requires a doc_id")
        body = format_document(corpus.document(doc_id))
    else:
        if doc_id is not None:
            raise ValueError("global regime forbids a doc_id")
        body = build_global_input(corpus)

    contract = _scalar_contract() if spec.scalar else _tuple_contract(spec)
    prompt = "\n\n".join([INSTRUCTION_HEADER, body, _query_block(spec), contract])
    return PromptBundle(query_id=spec.id, regime=regime, doc_id=doc_id, prompt_text=prompt)


def build_aggregation_prompt(
    per_doc_outputs: Sequence[tuple[int, str]],
    spec: QuerySpec,
) -> str:
    """Prompt asking the model to combine per-document outputs into the final
    corpus-level answer.  No document text is included."""
    if not spec.scalar:
        raise ValueError(f"{spec.id} is not a corpus-level scalar query")
    sections = []
    for doc_id, text in per_doc_outputs:
        sections.append(AGGREGATION_SECTION_FMT.format(doc_id=doc_id) + "\n" + text)
    parts = [
        INSTRUCTION_HEADER,
        "The corpus-level query below was answered separately per document.\n"
        "Combine the per-document outputs into the final answer.",
        _query_block(spec),
        AGGREGATION_MARKER + "\n" + "\n".join(sections),
        _scalar_contract(),
    ]
    return "\n\n".join(parts)


def aggregate_per_paper(
    per_doc_outputs: Sequence[tuple[int, str]],
    spec: QuerySpec,
    gateway,
) -> str:
    """Run the aggregation step; returns the model's final answer text."""
    prompt = build_aggregation_prompt(per_doc_outputs, spec)
    _, text = gateway.complete_text(prompt)
    return text


# ---------------------------------------------------------------------------
# Serialization (used by the gold-echo mock and round-trip tests)


def _row_sort_key(row: dict) -> tuple:
    return (row.get("doc", 0), [(k, v is not None, str(v)) for k, v in row.items() if k != "doc"])


def serialize_rows(rows: Iterable[dict]) -> str:
    lines = [json.dumps(row, ensure_ascii=False) for row in sorted(rows, key=_row_sort_key)]
    return "```json\n" + "\n".join(lines) + "\n```"


def serialize_tuples(tuples: Iterable[StudyTuple]) -> str:
    return serialize_rows([t.as_row() for t in tuples])


def serialize_scalar(value) -> str:
    return "```json\n" + json.dumps({"value": value}) + "\n```"


# ---------------------------------------------------------------------------
# Response parsing


def _candidate_lines(text: str) -> list[str]:
    blocks = _FENCE_RE.findall(text)
    source = "\n".join(blocks) if blocks else text
    return [line.strip() for line in source.splitlines() if line.strip()]


def _coerce_doc(value) -> int | None:
    if isinstance(value, bool):
        return None
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if isinstance(value, str):
        m = _MARKER_RE.match(value.strip())
        if m:
            return int(m.group(1))
    return None


def _coerce_slot(value, numeric: bool) -> Value:
    if value is None:
        return None
    if numeric:
        if isinstance(value, bool):
            return str(value)
        if isinstance(value, (int, float)):
            return value
        s = str(value).strip().replace(",", "")
        try:
            return int(s)
        except ValueError:
            pass
        try:
            return float(s)
        except ValueError:
            return str(value)  # kept as-is; will fail numeric matching
    if isinstance(value, str):
        return value
    return json.dumps(value) if isinstance(value, (dict, list)) else str(value)


def parse_response(
    raw: RawResponse,
    spec: QuerySpec,
    regime: Regime,
    doc_id: int | None = None,
    valid_doc_ids: Iterable[int] | None = None,
) -> ParsedResponse:
    """Extract predicted tuples from a model response.

    Global regime: attribution is read from each line's ``doc`` marker; lines
    with a missing, malformed, or out-of-range marker are dropped and counted
    as warnings.  Per-paper regime: attribution is forced to the prompt's
    document regardless of the marker.  Arity-mismatched lines are dropped.
    Nothing here is fatal: an unparseable response yields zero tuples.
    """
    if regime is Regime.PER_PAPER and doc_id is None:
        raise ValueError("per-paper parsing requires the prompt's doc_id")
    valid = set(valid_doc_ids) if valid_doc_ids is not None else None
    expected = set(spec.slots)
    result = ParsedResponse()

    for line in _candidate_lines(raw.text):
        if not line.startswith("{"):
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            result.warnings.append(f"unparseable line: {line[:80]}")
            continue
        if not isinstance(obj, dict):
            result.warnings.append(f"non-object line: {line[:80]}")
            continue

        if regime is Regime.PER_PAPER:
            attributed = doc_id
        else:
            attributed = _coerce_doc(obj.get("doc"))
            if attributed is None:
                result.warnings.append(f"missing or invalid doc marker: {line[:80]}")
                continue
            if valid is not None and attributed not in valid:
                result.warnings.append(f"doc marker out of range: [{attributed}]")
                continue

        slots_present = set(obj) - {"doc"}
        if slots_present != expected:
            result.warnings.append(
                f"arity mismatch (got {sorted(slots_present)}, want {sorted(expected)}): {line[:80]}"
            )
            continue

        fields = tuple((s, _coerce_slot(obj[s], spec.numeric(s))) for s in spec.slots)
        result.tuples.append(StudyTuple(doc_id=attributed, query_id=spec.id, fields=fields))

    if not result.tuples and not result.warnings and raw.text.strip():
        result.warnings.append("no tuple lines found in response")
    return result


def extract_scalar(text: str):
    """The numeric answer of a corpus-level query, or None if unparseable."""
    m = _VALUE_OBJ_RE.search(text)
    if m:
        token = m.group(1)
        if token == "null":
            return None
        token = token.replace(",", "")
        try:
            return int(token)
        except ValueError:
            return float(token)
    stripped = text.strip().replace(",", "")
    try:
        return int(stripped)
    except ValueError:
        pass
    try:
        return float(stripped)
    except ValueError:
        return None


# Prompt introspection helpers shared with the deterministic mock backend.


def prompt_query_id(prompt: str) -> str | None:
    m = _QUERY_LINE_RE.search(prompt)
    return m.group(1) if m else None


def prompt_doc_ids(prompt: str) -> list[int]:
    return [int(x) for x in _DOC_HEADER_RE.findall(prompt)]


def is_aggregation_prompt(prompt: str) -> bool:
    return AGGREGATION_MARKER in prompt


def aggregation_sections(prompt: str) -> list[tuple[int, str]]:
    """(doc_id, output text) sections of an aggregation prompt."""
    tail = prompt.split(AGGREGATION_MARKER, 1)[1]
    matches = list(_AGG_SECTION_RE.finditer(tail))
    sections = []
    for i, m in enumerate(matches):
        end = matches[i + 1].start() if i + 1 < len(matches) else len(tail)
        sections.append((int(m.group(1)), tail[m.end():end]))
    return sections
