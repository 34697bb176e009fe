"""evidx: deterministic evaluation harness for schema-constrained evidence extraction.

The harness runs a tiered query suite over study corpora against LLM backends
(live, record/replay, or deterministic mock), scores document-attributed tuples
with a two-stage matching protocol, computes derived-statistics ground truth by
brute force, and diagnoses structural failure modes in the predictions.
"""

__version__ = "0.1.0"

from evidx.queries import QuerySpec, registry
from evidx.schema import (
    AssociationEntry,
    EffectSize,
    GoldRecord,
    StudyTuple,
    VariableEntry,
    project_gold,
    validate_gold,
)

__all__ = [
    "AssociationEntry",
    "EffectSize",
    "GoldRecord",
    "QuerySpec",
    "StudyTuple",
    "VariableEntry",
    "project_gold",
    "registry",
    "validate_gold",
]
