"""The closed registry of extraction and derived-statistics queries.

Queries come in two families (object-centric ``O`` and method-centric ``M``)
and three levels: ``L1`` single-property extraction, ``L2`` multi-property
binding, and ``C`` derived statistics computed over extracted atoms.  The
registry is immutable; identifiers, slot patterns, and query texts are fixed.
"""

from __future__ import annotations

from dataclasses import dataclass

# Slots whose values are compared as numbers (exact equality, never judged).
NUMERIC_SLOTS = frozenset({"N", "E", "count"})

GROUPS = ("O1", "O2", "OC", "M1", "M2", "MC")

_GROUP_SUFFIX = {"L1": "1", "L2": "2", "C": "C"}


@dataclass(frozen=True)
class QuerySpec:
    """One query of the suite.

    ``pattern`` lists the slot tokens as printed in the suite tables (the
    leading ``i`` is the document attribution marker).  ``slots`` are the
    machine-scored output slots, document marker excluded.  ``scalar`` marks
    corpus-level queries whose final answer is a single number.
    """

    id: str
    family: str  # "O" | "M"
    level: str  # "L1" | "L2" | "C"
    pattern: tuple[str, ...]
    text: str
    slots: tuple[str, ...]
    scalar: bool = False

    @property
    def group(self) -> str:
        return self.family + _GROUP_SUFFIX[self.level]

    def numeric(self, slot: str) -> bool:
        return slot in NUMERIC_SLOTS


_REGISTRY: tuple[QuerySpec, ...] = (
    # Object-centric single-property extraction.
    QuerySpec(
        id="O_L1_Q1",
        family="O",
        level="L1",
        pattern=("i", "G"),
        text="Extract the study geolocation as a country name.",
        slots=("G",),
    ),
    QuerySpec(
        id="O_L1_Q2",
        family="O",
        level="L1",
        pattern=("i", "N"),
        text="Extract the reported sample size (use null if unavailable).",
        slots=("N",),
    ),
    QuerySpec(
        id="O_L1_Q3",
        family="O",
        level="L1",
        pattern=("i", "P"),
        text="Extract the study population or unit of analysis.",
        slots=("P",),
    ),
    # Object-centric multi-property binding.
    QuerySpec(
        id="O_L2_Q1",
        family="O",
        level="L2",
        pattern=("i", "P", "N"),
        text="Extract each study population together with its sample size.",
        slots=("P", "N"),
    ),
    QuerySpec(
        id="O_L2_Q2",
        family="O",
        level="L2",
        pattern=("i", "P", "G"),
        text="Extract each study population together with the study country.",
        slots=("P", "G"),
    ),
    QuerySpec(
        id="O_L2_Q3",
        family="O",
        level="L2",
        pattern=("i", "P", "G", "N"),
        text="Extract each study population with both country and sample size.",
        slots=("P", "G", "N"),
    ),
    # Object-centric derived statistics (corpus-level scalars).
    QuerySpec(
        id="O_C_Q1",
        family="O",
        level="C",
        pattern=("N", "count"),
        text="Count documents with N > 100.",
        slots=(),
        scalar=True,
    ),
    QuerySpec(
        id="O_C_Q2",
        family="O",
        level="C",
        pattern=("N", "mean"),
        text="Compute the mean of N across all documents.",
        slots=(),
        scalar=True,
    ),
    QuerySpec(
        id="O_C_Q3",
        family="O",
        level="C",
        pattern=("N", "median"),
        text="Compute the median of N across all documents.",
        slots=(),
        scalar=True,
    ),
    # Method-centric single-property extraction.
    QuerySpec(
        id="M_L1_Q1",
        family="M",
        level="L1",
        pattern=("i", "A"),
        text="Extract the statistical method used to quantify associations.",
        slots=("A",),
    ),
    QuerySpec(
        id="M_L1_Q2",
        family="M",
        level="L1",
        pattern=("i", "V"),
        text="Extract all variables.",
        slots=("V",),
    ),
    QuerySpec(
        id="M_L1_Q3",
        family="M",
        level="L1",
        pattern=("i", "IV"),
        text="Extract all independent variables.",
        slots=("IV",),
    ),
    QuerySpec(
        id="M_L1_Q4",
        family="M",
        level="L1",
        pattern=("i", "DV"),
        text="Extract all dependent variables.",
        slots=("DV",),
    ),
    # Method-centric multi-property binding.
    QuerySpec(
        id="M_L2_Q1",
        family="M",
        level="L2",
        pattern=("i", "V", "S", "U"),
        text="Extract each variable together with its Scale and Unit.",
        slots=("V", "S", "U"),
    ),
    QuerySpec(
        id="M_L2_Q2",
        family="M",
        level="L2",
        pattern=("i", "IV", "S", "U"),
        text="Extract each independent variable with its Scale and Unit.",
        slots=("IV", "S", "U"),
    ),
    QuerySpec(
        id="M_L2_Q3",
        family="M",
        level="L2",
        pattern=("i", "DV", "S", "U"),
        text="Extract each dependent variable together with its Scale and Unit.",
        slots=("DV", "S", "U"),
    ),
    QuerySpec(
        id="M_L2_Q4",
        family="M",
        level="L2",
        pattern=("i", "IV", "DV"),
        text="Extract independent-dependent variable pairs.",
        slots=("IV", "DV"),
    ),
    QuerySpec(
        id="M_L2_Q5",
        family="M",
        level="L2",
        pattern=("i", "IV", "DV", "A"),
        text="Extract variable pairs together with the statistical method.",
        slots=("IV", "DV", "A"),
    ),
    QuerySpec(
        id="M_L2_Q6",
        family="M",
        level="L2",
        pattern=("i", "IV", "DV", "A", "C", "E"),
        text="Extract variable pairs, statistical method, effect size (conditions).",
        slots=("IV", "DV", "A", "C", "E"),
    ),
    # Method-centric derived statistics (per-document).
    QuerySpec(
        id="M_C_Q1",
        family="M",
        level="C",
        pattern=("i", "A", "count"),
        text="For each document, count reported statistical methods.",
        slots=("count",),
    ),
    QuerySpec(
        id="M_C_Q2",
        family="M",
        level="C",
        pattern=("i", "V", "count"),
        text="For each document, count unique variables (union of IV and DV).",
        slots=("count",),
    ),
    QuerySpec(
        id="M_C_Q3",
        family="M",
        level="C",
        pattern=("i", "IV", "count"),
        text="For each document, count independent variables.",
        slots=("count",),
    ),
    QuerySpec(
        id="M_C_Q4",
        family="M",
        level="C",
        pattern=("i", "DV", "count"),
        text="For each document, count dependent variables.",
        slots=("count",),
    ),
    QuerySpec(
        id="M_C_Q5",
        family="M",
        level="C",
        pattern=("i", "IV", "DV", "E"),
        text="List (IV, DV) pairs with E > 0.7.",
        slots=("IV", "DV"),
    ),
)

_BY_ID = {spec.id: spec for spec in _REGISTRY}


def registry() -> list[QuerySpec]:
    """All query specs in stable order: O_L1, O_L2, O_C, M_L1, M_L2, M_C."""
    return list(_REGISTRY)


def get(query_id: str) -> QuerySpec:
    try:
        return _BY_ID[query_id]
    except KeyError:
        raise KeyError(f"unknown query id: {query_id!r}") from None


def by_group(group: str) -> list[QuerySpec]:
    return [spec for spec in _REGISTRY if spec.group == group]
