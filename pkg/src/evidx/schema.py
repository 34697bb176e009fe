"""Study schema types, gold-record validation, and per-query gold projection.

A gold record holds one document's curated annotations: populations,
geolocations, sample sizes, role-tagged variables, and association entries
binding a variable pair to a statistical method, an optional condition, and a
reported effect size.  ``project_gold`` turns one record into the gold tuple
set for a list-style query; derived (level C) queries are answered by the
oracle module instead.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from evidx.queries import QuerySpec
from evidx.textnorm import normalize

Value = str | int | float | None

# Effect-size families with range constraints; anything else is treated as a
# free-text family and only its numeric type is checked.
KNOWN_EFFECT_FAMILIES = frozenset({"r", "beta", "R", "R2", "OR"})

ROLES = ("IV", "DV")


@dataclass(frozen=True)
class EffectSize:
    family: str
    value: float


@dataclass(frozen=True)
class VariableEntry:
    name: str
    role: str  # "IV" | "DV"
    scale: str | None = None
    unit: str | None = None


@dataclass(frozen=True)
class AssociationEntry:
    iv: str
    dv: str
    method: str
    condition: str | None
    effect: EffectSize


@dataclass(frozen=True)
class GoldRecord:
    doc_id: int
    doi: str
    populations: tuple[str, ...]
    geolocations: tuple[str, ...]
    sample_sizes: tuple[int, ...]
    variables: tuple[VariableEntry, ...]
    associations: tuple[AssociationEntry, ...]


@dataclass(frozen=True)
class StudyTuple:
    """A document-attributed ordered field record.

    Used both for projected gold tuples and for tuples parsed from model
    responses.  ``fields`` is an ordered (slot, value) sequence matching the
    query's output slots; document attribution always lives in ``doc_id``.
    """

    doc_id: int
    query_id: str
    fields: tuple[tuple[str, Value], ...]

    @property
    def slots(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.fields)

    def value(self, slot: str) -> Value:
        for name, val in self.fields:
            if name == slot:
                return val
        raise KeyError(slot)

    def as_row(self) -> dict[str, Value]:
        row: dict[str, Value] = {"doc": self.doc_id}
        row.update(self.fields)
        return row


# Alias: predictions share the tuple shape; the name records the role.
PredictedTuple = StudyTuple


def make_tuple(doc_id: int, spec: QuerySpec, values: Mapping[str, Value]) -> StudyTuple:
    """Build a tuple for ``spec`` from a slot->value mapping (order enforced)."""
    missing = [s for s in spec.slots if s not in values]
    if missing:
        raise ValueError(f"{spec.id}: missing slots {missing}")
    extra = [k for k in values if k not in spec.slots]
    if extra:
        raise ValueError(f"{spec.id}: unexpected slots {extra}")
    return StudyTuple(
        doc_id=doc_id,
        query_id=spec.id,
        fields=tuple((s, values[s]) for s in spec.slots),
    )


# ---------------------------------------------------------------------------
# Parsing the gold annotation JSON


def record_from_dict(data: Mapping[str, Any]) -> GoldRecord:
    def opt_text(v: Any) -> str | None:
        return None if v is None else str(v)

    variables = tuple(
        VariableEntry(
            name=str(v["name"]),
            role=str(v["role"]),
            scale=opt_text(v.get("scale")),
            unit=opt_text(v.get("unit")),
        )
        for v in data.get("variables", ())
    )
    associations = tuple(
        AssociationEntry(
            iv=str(a["iv"]),
            dv=str(a["dv"]),
            method=str(a["method"]),
            condition=opt_text(a.get("condition")),
            effect=EffectSize(
                family=str(a["effect"]["family"]),
                value=float(a["effect"]["value"]),
            ),
        )
        for a in data.get("associations", ())
    )
    return GoldRecord(
        doc_id=int(data["doc_id"]),
        doi=str(data.get("doi", "")),
        populations=tuple(str(p) for p in data.get("populations", ())),
        geolocations=tuple(str(g) for g in data.get("geolocations", ())),
        sample_sizes=tuple(int(n) for n in data.get("sample_sizes", ())),
        variables=variables,
        associations=associations,
    )


def load_gold(path: str | Path) -> tuple[str, list[GoldRecord]]:
    """Load one domain's gold file: {"domain": ..., "documents": [...]}."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    domain = str(data.get("domain", Path(path).stem))
    records = [record_from_dict(d) for d in data["documents"]]
    return domain, records


# ---------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Violation:
    path: str
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    warnings: list[Violation] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations


def validate_gold(record: GoldRecord) -> ValidationReport:
    """Check one record against the schema invariants.

    Violations are data, not errors: the report lists every broken invariant
    with a path to the offending field; a consistent record yields an empty
    violation list.  One-sided scale/unit pairs are reported as warnings.
    """
    report = ValidationReport()
    base = f"documents[doc_id={record.doc_id}]"

    if record.doc_id < 1:
        report.violations.append(Violation(f"{base}.doc_id", "doc_id must be a positive integer"))

    for j, n in enumerate(record.sample_sizes):
        if n < 0:
            report.violations.append(
                Violation(f"{base}.sample_sizes[{j}]", f"sample size must be non-negative, got {n}")
            )

    role_names: dict[str, set[str]] = {"IV": set(), "DV": set()}
    for j, var in enumerate(record.variables):
        path = f"{base}.variables[{j}]"
        if not normalize(var.name):
            report.violations.append(Violation(path + ".name", "variable name empty after normalization"))
        if var.role not in ROLES:
            report.violations.append(Violation(path + ".role", f"role must be IV or DV, got {var.role!r}"))
        else:
            role_names[var.role].add(normalize(var.name))
        if (var.scale is None) != (var.unit is None):
            report.warnings.append(
                Violation(path, "one-sided scale/unit pair (scale and unit are an atomic pair)")
            )

    for j, assoc in enumerate(record.associations):
        path = f"{base}.associations[{j}]"
        if normalize(assoc.iv) == normalize(assoc.dv):
            report.violations.append(Violation(path, f"iv and dv are identical after normalization: {assoc.iv!r}"))
        if normalize(assoc.iv) not in role_names["IV"]:
            report.violations.append(
                Violation(path + ".iv", f"{assoc.iv!r} not listed in variables with role IV")
            )
        if normalize(assoc.dv) not in role_names["DV"]:
            report.violations.append(
                Violation(path + ".dv", f"{assoc.dv!r} not listed in variables with role DV")
            )
        eff = assoc.effect
        epath = path + ".effect"
        if eff.family == "r" and not -1.0 <= eff.value <= 1.0:
            report.violations.append(Violation(epath, f"family r requires value in [-1, 1], got {eff.value}"))
        elif eff.family == "R2" and not 0.0 <= eff.value <= 1.0:
            report.violations.append(Violation(epath, f"family R2 requires value in [0, 1], got {eff.value}"))
        elif eff.family == "OR" and not eff.value > 0.0:
            report.violations.append(Violation(epath, f"family OR requires value > 0, got {eff.value}"))

    return report


def validate_records(records: Sequence[GoldRecord]) -> ValidationReport:
    """Validate every record plus cross-record doc_id uniqueness."""
    report = ValidationReport()
    seen: dict[int, int] = {}
    for idx, record in enumerate(records):
        sub = validate_gold(record)
        report.violations.extend(sub.violations)
        report.warnings.extend(sub.warnings)
        if record.doc_id in seen:
            report.violations.append(
                Violation(
                    f"documents[{idx}].doc_id",
                    f"duplicate doc_id {record.doc_id} (first seen at documents[{seen[record.doc_id]}])",
                )
            )
        else:
            seen[record.doc_id] = idx
    return report


# ---------------------------------------------------------------------------
# Projection of gold records into per-query tuple sets


def _dedup_by_key(items: Iterable[tuple[tuple, Mapping[str, Value]]]) -> list[Mapping[str, Value]]:
    """Keep the first item for each normalized key, preserving input order."""
    seen: set[tuple] = set()
    out: list[Mapping[str, Value]] = []
    for key, values in items:
        if key in seen:
            continue
        seen.add(key)
        out.append(values)
    return out


def _norm_key(value: Value) -> Value:
    return normalize(value) if isinstance(value, str) else value


def project_gold(record: GoldRecord, spec: QuerySpec) -> set[StudyTuple]:
    """The gold tuple set of ``record`` for one list-style query.

    Level C queries are rejected: derived ground truth is computed by the
    oracle module, not by projection.  Name-keyed projections de-duplicate on
    the normalized value, keeping the first surface form.  Co-reported
    population/geolocation/sample-size pairs for the O_L2 queries are aligned
    positionally: the k-th population pairs with the k-th entry of each
    sibling list, with null where the sibling list is shorter.
    """
    if spec.level == "C":
        raise ValueError(f"{spec.id} is a derived query; its ground truth lives in the oracle module")

    rows: list[Mapping[str, Value]]

    if spec.id == "O_L1_Q1":
        rows = _dedup_by_key(((_norm_key(g),), {"G": g}) for g in record.geolocations)
    elif spec.id == "O_L1_Q2":
        if record.sample_sizes:
            rows = _dedup_by_key(((n,), {"N": n}) for n in record.sample_sizes)
        else:
            rows = [{"N": None}]
    elif spec.id == "O_L1_Q3":
        rows = _dedup_by_key(((_norm_key(p),), {"P": p}) for p in record.populations)
    elif spec.id in ("O_L2_Q1", "O_L2_Q2", "O_L2_Q3"):
        rows = []
        for k, pop in enumerate(record.populations):
            n = record.sample_sizes[k] if k < len(record.sample_sizes) else None
            g = record.geolocations[k] if k < len(record.geolocations) else None
            if spec.id == "O_L2_Q1":
                rows.append({"P": pop, "N": n})
            elif spec.id == "O_L2_Q2":
                rows.append({"P": pop, "G": g})
            else:
                rows.append({"P": pop, "G": g, "N": n})
    elif spec.id == "M_L1_Q1":
        rows = _dedup_by_key(((_norm_key(a.method),), {"A": a.method}) for a in record.associations)
    elif spec.id == "M_L1_Q2":
        rows = _dedup_by_key(((_norm_key(v.name),), {"V": v.name}) for v in record.variables)
    elif spec.id in ("M_L1_Q3", "M_L1_Q4"):
        role = "IV" if spec.id == "M_L1_Q3" else "DV"
        slot = spec.slots[0]
        rows = _dedup_by_key(
            ((_norm_key(v.name),), {slot: v.name}) for v in record.variables if v.role == role
        )
    elif spec.id in ("M_L2_Q1", "M_L2_Q2", "M_L2_Q3"):
        role = {"M_L2_Q1": None, "M_L2_Q2": "IV", "M_L2_Q3": "DV"}[spec.id]
        slot = spec.slots[0]
        rows = _dedup_by_key(
            (
                (_norm_key(v.name), _norm_key(v.scale), _norm_key(v.unit)),
                {slot: v.name, "S": v.scale, "U": v.unit},
            )
            for v in record.variables
            if role is None or v.role == role
        )
    elif spec.id == "M_L2_Q4":
        rows = _dedup_by_key(
            ((_norm_key(a.iv), _norm_key(a.dv)), {"IV": a.iv, "DV": a.dv}) for a in record.associations
        )
    elif spec.id == "M_L2_Q5":
        rows = _dedup_by_key(
            (
                (_norm_key(a.iv), _norm_key(a.dv), _norm_key(a.method)),
                {"IV": a.iv, "DV": a.dv, "A": a.method},
            )
            for a in record.associations
        )
    elif spec.id == "M_L2_Q6":
        rows = [
            {"IV": a.iv, "DV": a.dv, "A": a.method, "C": a.condition, "E": a.effect.value}
            for a in record.associations
        ]
    else:
        raise ValueError(f"no projection rule for query {spec.id}")

    return {make_tuple(record.doc_id, spec, row) for row in rows}
