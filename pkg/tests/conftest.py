from __future__ import annotations

import random
from pathlib import Path

import pytest

from evidx.corpus import Corpus, load_corpus
from evidx.gateway import Gateway, GoldEchoMock
from evidx.schema import (
    AssociationEntry,
    EffectSize,
    GoldRecord,
    VariableEntry,
)

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"

DOMAINS = (
    "civil_engineering",
    "medical",
    "agricultural",
    "earth_environmental",
    "social_science",
)


def fixture_corpus(domain: str) -> Corpus:
    return load_corpus(FIXTURES / domain / "docs", FIXTURES / domain / "gold.json")


@pytest.fixture(scope="session")
def corpora() -> dict[str, Corpus]:
    return {d: fixture_corpus(d) for d in DOMAINS}


@pytest.fixture()
def agricultural(corpora) -> Corpus:
    return corpora["agricultural"]


@pytest.fixture()
def medical(corpora) -> Corpus:
    return corpora["medical"]


def mock_gateway(corpus: Corpus, **kwargs) -> Gateway:
    return Gateway(backend="mock", mock_fn=GoldEchoMock(corpus.gold), **kwargs)


def make_record(
    doc_id: int = 1,
    populations=("adults",),
    geolocations=("Germany",),
    sample_sizes=(120,),
    variables=None,
    associations=None,
) -> GoldRecord:
    if variables is None:
        variables = (
            VariableEntry("body mass index", "IV", "ratio", "kg/m2"),
            VariableEntry("axial length", "DV", "ratio", "mm"),
        )
    if associations is None:
        associations = (
            AssociationEntry(
                "body mass index", "axial length", "Pearson correlation", None, EffectSize("r", 0.42)
            ),
        )
    return GoldRecord(
        doc_id=doc_id,
        doi=f"10.0000/test.{doc_id}",
        populations=tuple(populations),
        geolocations=tuple(geolocations),
        sample_sizes=tuple(sample_sizes),
        variables=tuple(variables),
        associations=tuple(associations),
    )


METHOD_POOL = (
    "Pearson correlation",
    "Spearman correlation",
    "linear regression",
    "logistic regression",
    "structural equation modeling",
)


def random_gold(rng: random.Random, doc_id: int = 1) -> GoldRecord:
    """A structurally valid random record for property tests."""
    iv_names = [f"predictor {c}" for c in "abcde"[: rng.randint(1, 4)]]
    dv_names = [f"outcome {c}" for c in "vwxyz"[: rng.randint(1, 4)]]
    variables = []
    for name in iv_names:
        variables.append(VariableEntry(name, "IV", "ratio", "units") if rng.random() < 0.5 else VariableEntry(name, "IV"))
    for name in dv_names:
        variables.append(VariableEntry(name, "DV", "ordinal", "points") if rng.random() < 0.5 else VariableEntry(name, "DV"))
    if rng.random() < 0.3:
        # A name carrying both roles exercises the role-agnostic union.
        both = iv_names[0]
        variables.append(VariableEntry(both, "DV"))
    associations = []
    for _ in range(rng.randint(0, 5)):
        iv = rng.choice(iv_names)
        dv = rng.choice(dv_names)
        associations.append(
            AssociationEntry(
                iv,
                dv,
                rng.choice(METHOD_POOL),
                rng.choice((None, "subgroup A", "adjusted")),
                EffectSize("r", round(rng.uniform(-1, 1), 2)),
            )
        )
    sample_sizes = tuple(rng.randint(10, 5000) for _ in range(rng.randint(0, 3)))
    return GoldRecord(
        doc_id=doc_id,
        doi=f"10.0000/rand.{doc_id}",
        populations=tuple(f"population {i}" for i in range(rng.randint(1, 3))),
        geolocations=tuple(rng.sample(["Germany", "Brazil", "Japan", "Kenya"], rng.randint(1, 2))),
        sample_sizes=sample_sizes,
        variables=tuple(variables),
        associations=tuple(associations),
    )
