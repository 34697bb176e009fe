"""Corpus loading, global-regime input assembly, and descriptive statistics.

Expected on-disk layout per domain: ``<domain>/docs/<doc_id>.md`` article
files plus ``<domain>/gold.json`` annotations.  Markdown/gold doc_ids must be
a bijection; loading fails atomically on any mismatch.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from pathlib import Path

from evidx.schema import GoldRecord, load_gold
from evidx.textnorm import normalize

# Header preceding each document body; also used for single documents in the
# per-paper regime so attribution markers are uniform across regimes.
DOC_HEADER_FMT = "=== DOCUMENT [{doc_id}] ==="


class CorpusError(ValueError):
    """Raised for corpus/gold mismatches and malformed inputs."""


@dataclass(frozen=True)
class Document:
    doc_id: int
    markdown: str

    @property
    def token_estimate(self) -> int:
        # Heuristic: ~4 characters per token.
        return len(self.markdown) // 4


@dataclass(frozen=True)
class Corpus:
    domain: str
    documents: tuple[Document, ...]
    gold: tuple[GoldRecord, ...]

    @property
    def doc_ids(self) -> tuple[int, ...]:
        return tuple(d.doc_id for d in self.documents)

    def document(self, doc_id: int) -> Document:
        for d in self.documents:
            if d.doc_id == doc_id:
                return d
        raise KeyError(f"no document {doc_id} in corpus {self.domain!r}")

    def record(self, doc_id: int) -> GoldRecord:
        for r in self.gold:
            if r.doc_id == doc_id:
                return r
        raise KeyError(f"no gold record {doc_id} in corpus {self.domain!r}")


def load_corpus(corpus_dir: str | Path, gold_file: str | Path) -> Corpus:
    """Load ``<doc_id>.md`` files and the gold JSON into one corpus.

    Documents are sorted by doc_id.  Errors: a gold record without a markdown
    file, an orphan markdown file without gold, or a duplicate doc_id.
    """
    corpus_dir = Path(corpus_dir)
    if not corpus_dir.is_dir():
        raise CorpusError(f"corpus directory not found: {corpus_dir}")
    domain, records = load_gold(gold_file)

    gold_ids: dict[int, GoldRecord] = {}
    for r in records:
        if r.doc_id in gold_ids:
            raise CorpusError(f"duplicate doc_id {r.doc_id} in gold file {gold_file}")
        gold_ids[r.doc_id] = r

    md_files: dict[int, Path] = {}
    for path in sorted(corpus_dir.glob("*.md")):
        try:
            doc_id = int(path.stem)
        except ValueError:
            continue  # non-document markdown, e.g. a README
        md_files[doc_id] = path

    missing = sorted(set(gold_ids) - set(md_files))
    if missing:
        raise CorpusError(f"missing markdown for gold doc_id(s) {missing} in {corpus_dir}")
    orphans = sorted(set(md_files) - set(gold_ids))
    if orphans:
        raise CorpusError(f"markdown file(s) with no gold record: doc_id(s) {orphans}")

    documents = []
    for doc_id in sorted(md_files):
        text = md_files[doc_id].read_text(encoding="utf-8")
        if not text.strip():
            raise CorpusError(f"empty markdown for doc_id {doc_id}: {md_files[doc_id]}")
        documents.append(Document(doc_id=doc_id, markdown=text))

    gold_sorted = tuple(gold_ids[i] for i in sorted(gold_ids))
    return Corpus(domain=domain, documents=tuple(documents), gold=gold_sorted)


def format_document(doc: Document) -> str:
    return DOC_HEADER_FMT.format(doc_id=doc.doc_id) + "\n" + doc.markdown


def build_global_input(corpus: Corpus) -> str:
    """Concatenate all documents in doc_id order, each preceded by its header.

    Byte-for-byte deterministic for a given corpus regardless of the order in
    which files were discovered on disk.
    """
    if not corpus.documents:
        raise CorpusError(f"corpus {corpus.domain!r} has no documents")
    return "\n\n".join(format_document(d) for d in corpus.documents)


# ---------------------------------------------------------------------------
# Descriptive statistics


@dataclass(frozen=True)
class StatsRow:
    metric: str
    minimum: float
    median: float
    maximum: float
    total: float


STATS_METRICS = ("sample_size", "statistical_methods", "variables", "effect_sizes")


def _per_doc_values(record: GoldRecord, metric: str) -> int:
    if metric == "sample_size":
        return sum(record.sample_sizes)
    if metric == "statistical_methods":
        return len({normalize(a.method) for a in record.associations})
    if metric == "variables":
        # Distinct normalized variable names (role-agnostic union).
        return len({normalize(v.name) for v in record.variables})
    if metric == "effect_sizes":
        return len(record.associations)
    raise ValueError(f"unknown metric {metric!r}")


def descriptive_stats(gold: list[GoldRecord] | tuple[GoldRecord, ...]) -> list[StatsRow]:
    """Min/median/max/total of per-document counts (or sums) for each metric.

    Medians of an even number of documents are the midpoint of the two middle
    values.  "variables" counts distinct normalized names, role-agnostic.
    """
    if not gold:
        raise CorpusError("descriptive_stats requires a non-empty gold list")
    rows = []
    for metric in STATS_METRICS:
        values = [_per_doc_values(r, metric) for r in gold]
        rows.append(
            StatsRow(
                metric=metric,
                minimum=min(values),
                median=statistics.median(values),
                maximum=max(values),
                total=sum(values),
            )
        )
    return rows
