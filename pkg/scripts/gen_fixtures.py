#!/usr/bin/env python3
"""Regenerate the fixture corpora under fixtures/.

Each domain gets gold.json plus one markdown article per document, rendered
from the gold facts so the corpus is self-consistent.  Sample-size totals are
chosen so the per-document sums hit fixed min/median/max/total targets used by
the test suite (medical: median 5417, total 1391776; social: total 4599).
Run from the repository root: python scripts/gen_fixtures.py
"""

from __future__ import annotations

import json
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"

# (iv, dv, method, condition, family, value)
Assoc = tuple[str, str, str, str | None, str, float]

# Per-variable measurement attributes: name -> (scale, unit); absent -> nulls.
ATTRS = {
    # civil engineering
    "floor area": ("ratio", "m2"),
    "occupancy rate": ("ratio", "percent"),
    "building age": ("ratio", "years"),
    "number of rooms": ("ratio", "rooms"),
    "window-to-wall ratio": ("ratio", "fraction"),
    "annual energy use intensity": ("ratio", "kWh/m2"),
    "electricity consumption": ("ratio", "MWh"),
    "heating demand": ("ratio", "kWh/m2"),
    # medical
    "body mass index": ("ratio", "kg/m2"),
    "height": ("ratio", "cm"),
    "weight": ("ratio", "kg"),
    "axial length": ("ratio", "mm"),
    "spherical equivalent refraction": ("interval", "diopters"),
    # agricultural
    "soil water deficit": ("ratio", "percent"),
    "irrigation level": ("ratio", "mm"),
    "air temperature": ("interval", "celsius"),
    "leaf water potential": ("ratio", "MPa"),
    "grain yield": ("ratio", "t/ha"),
    "stomatal conductance": ("ratio", "mol/m2/s"),
    # earth & environmental
    "species richness": ("ratio", "species"),
    "canopy cover": ("ratio", "percent"),
    "stand age": ("ratio", "years"),
    "soil organic carbon": ("ratio", "Mg/ha"),
    "aboveground biomass carbon": ("ratio", "Mg/ha"),
    # social science: psychometric scores, scale/unit left null
}

DOMAINS: dict[str, dict] = {
    "civil_engineering": {
        "title": "Building characteristics and hotel energy use",
        "docs": [
            # (sample_sizes, populations, geolocations, associations)
            ([6], ["city-centre hotels"], ["Spain"], [
                ("floor area", "annual energy use intensity", "Pearson correlation", None, "r", 0.71),
                ("occupancy rate", "annual energy use intensity", "Pearson correlation", None, "r", 0.70),
                ("building age", "annual energy use intensity", "Pearson correlation", None, "r", -0.9),
            ]),
            ([10], ["resort hotels"], ["Greece"], [
                ("floor area", "electricity consumption", "multiple linear regression", "peak season", "beta", 0.62),
                ("occupancy rate", "electricity consumption", "multiple linear regression", "peak season", "beta", 0.48),
            ]),
            ([12], ["business hotels"], ["Italy"], [
                ("number of rooms", "electricity consumption", "Pearson correlation", None, "r", 0.83),
            ]),
            ([15], ["budget hotels"], ["Portugal"], [
                ("building age", "heating demand", "Pearson correlation", None, "r", 0.37),
                ("window-to-wall ratio", "heating demand", "Pearson correlation", None, "r", 0.44),
            ]),
            ([20], ["city-centre hotels"], ["Croatia"], [
                ("occupancy rate", "annual energy use intensity", "Pearson correlation", None, "r", 0.52),
                ("occupancy rate", "annual energy use intensity", "Spearman correlation", None, "r", 0.49),
            ]),
            ([12, 16], ["resort hotels", "city-centre hotels"], ["Spain", "Spain"], [
                ("floor area", "annual energy use intensity", "multiple linear regression", "summer months", "beta", 0.58),
                ("number of rooms", "annual energy use intensity", "multiple linear regression", "summer months", "beta", 0.41),
            ]),
            ([30], ["business hotels"], ["Italy"], [
                ("floor area", "electricity consumption", "Pearson correlation", None, "r", 0.76),
                ("building age", "electricity consumption", "Pearson correlation", None, "r", -0.21),
            ]),
            ([35], ["budget hotels"], ["Greece"], [
                ("window-to-wall ratio", "annual energy use intensity", "multiple linear regression", None, "beta", 0.33),
            ]),
            ([40], ["resort hotels"], ["Portugal"], [
                ("occupancy rate", "electricity consumption", "Pearson correlation", None, "r", 0.68),
                ("floor area", "electricity consumption", "Pearson correlation", None, "r", 0.79),
            ]),
            ([45], ["city-centre hotels"], ["Croatia"], [
                ("building age", "annual energy use intensity", "Spearman correlation", None, "r", 0.18),
                ("number of rooms", "heating demand", "Spearman correlation", None, "r", 0.55),
            ]),
            ([51], ["business hotels"], ["Spain"], [
                ("floor area", "annual energy use intensity", "multiple linear regression", "all seasons", "R2", 0.64),
            ]),
        ],
    },
    "medical": {
        "title": "Anthropometric indicators and ophthalmic outcomes",
        "docs": [
            ([184], ["school-aged children"], ["China"], [
                ("body mass index", "axial length", "Pearson correlation", None, "r", 0.21),
                ("height", "axial length", "Pearson correlation", None, "r", 0.43),
            ]),
            ([512], ["university students"], ["South Korea"], [
                ("body mass index", "spherical equivalent refraction", "linear regression", "adjusted for age and sex", "beta", -0.12),
            ]),
            ([1100], ["school-aged children"], ["Japan"], [
                ("height", "myopia prevalence", "logistic regression", None, "OR", 1.85),
                ("weight", "myopia prevalence", "logistic regression", None, "OR", 0.67),
            ]),
            ([3200], ["adult cohort"], ["Singapore"], [
                ("body mass index", "axial length", "linear regression", "adjusted for age and sex", "beta", 0.09),
                ("height", "axial length", "linear regression", "adjusted for age and sex", "beta", 0.31),
            ]),
            ([5417], ["school-aged children"], ["China"], [
                ("height", "axial length", "Pearson correlation", None, "r", 0.38),
                ("weight", "axial length", "Pearson correlation", None, "r", 0.24),
            ]),
            ([8000], ["adult cohort"], ["Taiwan"], [
                ("body mass index", "myopia prevalence", "logistic regression", "male participants", "OR", 0.91),
            ]),
            ([12000], ["university students"], ["China"], [
                ("height", "spherical equivalent refraction", "linear regression", None, "beta", -0.26),
                ("body mass index", "spherical equivalent refraction", "linear regression", None, "beta", 0.05),
            ]),
            ([38311], ["adult cohort"], ["South Korea"], [
                ("weight", "myopia prevalence", "logistic regression", "adjusted for age and sex", "OR", 1.12),
            ]),
            ([1323052], ["adult cohort"], ["China"], [
                ("height", "myopia prevalence", "logistic regression", None, "OR", 1.31),
                ("body mass index", "myopia prevalence", "logistic regression", None, "OR", 0.88),
            ]),
        ],
    },
    "agricultural": {
        "title": "Environmental stress and plant responses",
        "docs": [
            ([8], ["winter wheat plots"], ["Australia"], [
                ("soil water deficit", "grain yield", "linear regression", "drought treatment", "beta", -0.74),
            ]),
            ([10], ["maize field trials"], ["United States"], [
                ("irrigation level", "grain yield", "Pearson correlation", None, "r", 0.81),
                ("soil water deficit", "leaf water potential", "Pearson correlation", None, "r", -0.66),
            ]),
            ([15], ["tomato greenhouse plants"], ["Spain"], [
                ("air temperature", "stomatal conductance", "Pearson correlation", None, "r", -0.39),
            ]),
            ([20], ["winter wheat plots"], ["India"], [
                ("soil water deficit", "stomatal conductance", "linear regression", None, "beta", -0.57),
                ("irrigation level", "grain yield", "linear regression", None, "beta", 0.72),
            ]),
            ([30], ["maize field trials"], ["Brazil"], [
                ("irrigation level", "biomass accumulation", "Pearson correlation", "wet season", "r", 0.64),
            ]),
            ([45], ["tomato greenhouse plants"], ["Spain"], [
                ("air temperature", "leaf water potential", "Spearman correlation", None, "r", -0.48),
                ("soil water deficit", "leaf water potential", "Spearman correlation", None, "r", -0.71),
            ]),
            ([60], ["winter wheat plots"], ["Australia"], [
                ("irrigation level", "grain yield", "Pearson correlation", None, "r", 0.59),
            ]),
            ([90], ["maize field trials"], ["United States"], [
                ("soil water deficit", "grain yield", "Pearson correlation", "rainfed plots", "r", -0.62),
                ("air temperature", "grain yield", "Pearson correlation", "rainfed plots", "r", -0.35),
            ]),
            ([130], ["tomato greenhouse plants"], ["India"], [
                ("irrigation level", "stomatal conductance", "linear regression", None, "beta", 0.46),
            ]),
            ([231], ["winter wheat plots"], ["Brazil"], [
                ("soil water deficit", "biomass accumulation", "linear regression", None, "beta", -0.53),
                ("irrigation level", "biomass accumulation", "linear regression", None, "beta", 0.77),
            ]),
            ([232], ["maize field trials"], ["Australia"], [
                ("air temperature", "biomass accumulation", "Pearson correlation", None, "r", -0.28),
            ]),
        ],
    },
    "earth_environmental": {
        "title": "Carbon storage and biodiversity metrics",
        "docs": [
            ([131], ["temperate forest plots"], ["Germany"], [
                ("species richness", "soil organic carbon", "Pearson correlation", None, "r", 0.46),
            ]),
            ([1000], ["tropical forest inventory plots"], ["Brazil"], [
                ("species richness", "aboveground biomass carbon", "linear regression", None, "beta", 0.73),
                ("canopy cover", "aboveground biomass carbon", "linear regression", None, "beta", 0.52),
            ]),
            ([2000], ["grassland transects"], ["Kenya"], [
                ("species richness", "soil organic carbon", "Spearman correlation", None, "r", 0.33),
            ]),
            ([5000], ["temperate forest plots"], ["Canada"], [
                ("stand age", "aboveground biomass carbon", "Pearson correlation", None, "r", 0.84),
                ("canopy cover", "aboveground biomass carbon", "Pearson correlation", None, "r", 0.61),
            ]),
            ([8000], ["tropical forest inventory plots"], ["Indonesia"], [
                ("elevation", "soil organic carbon", "linear regression", "montane sites", "beta", 0.29),
            ]),
            ([9818], ["grassland transects"], ["Germany"], [
                ("species richness", "aboveground biomass carbon", "Pearson correlation", None, "r", 0.41),
            ]),
            ([10000], ["temperate forest plots"], ["Canada"], [
                ("canopy cover", "soil organic carbon", "Pearson correlation", None, "r", 0.56),
                ("stand age", "soil organic carbon", "Pearson correlation", None, "r", 0.49),
            ]),
            ([12000], ["tropical forest inventory plots"], ["Brazil"], [
                ("species richness", "aboveground biomass carbon", "Spearman correlation", "lowland sites", "r", 0.68),
            ]),
            ([14566], ["grassland transects"], ["Kenya"], [
                ("elevation", "aboveground biomass carbon", "linear regression", None, "beta", -0.37),
            ]),
            ([79555], ["temperate forest plots"], ["Germany"], [
                ("stand age", "soil organic carbon", "linear regression", None, "R2", 0.58),
                ("species richness", "soil organic carbon", "linear regression", None, "R2", 0.22),
            ]),
        ],
    },
    "social_science": {
        "title": "Compassion, well-being, and burnout",
        "docs": [
            ([37], ["registered nurses"], ["United Kingdom"], [
                ("self-compassion", "emotional exhaustion", "Pearson correlation", None, "r", -0.55),
            ]),
            ([50], ["secondary school teachers"], ["Canada"], [
                ("self-compassion", "psychological well-being", "Pearson correlation", None, "r", 0.72),
                ("mindfulness", "psychological well-being", "Pearson correlation", None, "r", 0.61),
            ]),
            ([80], ["undergraduate students"], ["Netherlands"], [
                ("compassion for others", "job satisfaction", "hierarchical regression", None, "beta", 0.28),
            ]),
            ([120], ["social workers"], ["Norway"], [
                ("self-compassion", "burnout", "Pearson correlation", None, "r", -0.63),
                ("mindfulness", "burnout", "Pearson correlation", None, "r", -0.41),
            ]),
            ([200], ["registered nurses"], ["Turkey"], [
                ("self-compassion", "emotional exhaustion", "hierarchical regression", "adjusted for tenure", "beta", -0.38),
            ]),
            ([150, 153], ["secondary school teachers", "registered nurses"], ["Canada", "Canada"], [
                ("self-compassion", "psychological well-being", "Pearson correlation", None, "r", 0.66),
                ("self-compassion", "psychological well-being", "structural equation modeling", None, "beta", 0.59),
            ]),
            ([310], ["undergraduate students"], ["United Kingdom"], [
                ("mindfulness", "psychological well-being", "Pearson correlation", None, "r", 0.47),
            ]),
            ([400], ["social workers"], ["Netherlands"], [
                ("compassion for others", "burnout", "Pearson correlation", None, "r", -0.29),
                ("self-compassion", "burnout", "Pearson correlation", None, "r", -0.58),
            ]),
            ([550], ["registered nurses"], ["Norway"], [
                ("self-compassion", "job satisfaction", "structural equation modeling", None, "beta", 0.44),
            ]),
            ([807], ["secondary school teachers"], ["Turkey"], [
                ("mindfulness", "emotional exhaustion", "hierarchical regression", "adjusted for tenure", "beta", -0.33),
                ("self-compassion", "psychological well-being", "hierarchical regression", "adjusted for tenure", "beta", 0.51),
            ]),
            ([1742], ["undergraduate students"], ["Canada"], [
                ("self-compassion", "psychological well-being", "Pearson correlation", None, "r", 0.74),
            ]),
        ],
    },
}


def build_gold(domain: str, spec: dict) -> dict:
    documents = []
    for idx, (sizes, pops, geos, assocs) in enumerate(spec["docs"], start=1):
        variables = []
        seen: set[tuple[str, str]] = set()
        for iv, dv, *_ in assocs:
            for name, role in ((iv, "IV"), (dv, "DV")):
                if (name, role) in seen:
                    continue
                seen.add((name, role))
                scale, unit = ATTRS.get(name, (None, None))
                variables.append({"name": name, "role": role, "scale": scale, "unit": unit})
        associations = [
            {
                "iv": iv,
                "dv": dv,
                "method": method,
                "condition": condition,
                "effect": {"family": family, "value": value},
            }
            for iv, dv, method, condition, family, value in assocs
        ]
        documents.append(
            {
                "doc_id": idx,
                "doi": f"10.0000/fixture.{domain}.{idx:03d}",
                "populations": pops,
                "geolocations": geos,
                "sample_sizes": sizes,
                "variables": variables,
                "associations": associations,
            }
        )
    return {"domain": domain, "documents": documents}


def render_markdown(domain_title: str, doc: dict) -> str:
    pops = ", ".join(doc["populations"])
    geos = ", ".join(doc["geolocations"])
    sizes = doc["sample_sizes"]
    n_text = " and ".join(f"{n:,}" for n in sizes) if sizes else "not reported"
    methods = sorted({a["method"] for a in doc["associations"]})

    lines = [
        f"# Study {doc['doc_id']}: {domain_title}",
        "",
        f"DOI: {doc['doi']}",
        "",
        "## Overview",
        "",
        f"This study analyses {pops} in {geos}. "
        f"The reported sample size is {n_text}.",
        "",
        "## Methods",
        "",
        f"Associations were quantified using {', '.join(methods)}. "
        "Measurement scales and units follow the source instruments.",
        "",
        "## Variables",
        "",
        "| Variable | Role | Scale | Unit |",
        "| --- | --- | --- | --- |",
    ]
    for var in doc["variables"]:
        lines.append(
            f"| {var['name']} | {var['role']} | {var['scale'] or '-'} | {var['unit'] or '-'} |"
        )
    lines += [
        "",
        "## Reported associations",
        "",
        "| Predictor | Outcome | Method | Effect | Condition |",
        "| --- | --- | --- | --- | --- |",
    ]
    for a in doc["associations"]:
        eff = f"{a['effect']['family']} = {a['effect']['value']}"
        cond = a["condition"] or "-"
        lines.append(f"| {a['iv']} | {a['dv']} | {a['method']} | {eff} | {cond} |")
    lines.append("")
    return "\n".join(lines)


def main() -> None:
    for domain, spec in DOMAINS.items():
        gold = build_gold(domain, spec)
        base = FIXTURES / domain
        docs_dir = base / "docs"
        docs_dir.mkdir(parents=True, exist_ok=True)
        (base / "gold.json").write_text(
            json.dumps(gold, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )
        for doc in gold["documents"]:
            path = docs_dir / f"{doc['doc_id']}.md"
            path.write_text(render_markdown(spec["title"], doc), encoding="utf-8")
        totals = [sum(d["sample_sizes"]) for d in gold["documents"]]
        print(f"{domain}: {len(gold['documents'])} docs, N totals {sorted(totals)} (sum {sum(totals)})")


if __name__ == "__main__":
    main()
