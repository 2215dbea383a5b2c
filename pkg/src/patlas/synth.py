"""Deterministic synthetic corpora and dyad panels with recorded truth.

Both generators draw from a counter-based Philox stream seeded by the
caller, so identical (seed, parameters) produce byte-identical files on
any platform. Outputs use the exact CSV schemas consumed by the
ingestion and panel builders, plus a ``truth.json`` with every planted
parameter and fact.

Panel generation covariate laws: distance uniform on [100, 15000] km
per unordered pair; binary ties Bernoulli (language 0.25, legal 0.30,
colonial 0.10, contiguity 0.15, trade agreement 0.30); religion index
uniform on [0, 1]; GDP and GDP per capita log-normal with a small
yearly drift; R&D share uniform on [0.5, 4.0]. Citations are Poisson
around exp(x'beta + time effect), with an optional probit selection
gate producing structural zeros.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from . import registry
from .errors import DataError
from .gravity import DEFAULT_OFFSET
from .indices import class_shares
from .selection import inverse_mills

#: Fixed country pool for synthetic panels (sorted before use).
PANEL_COUNTRY_POOL = sorted(
    """AR AT AU BE BR CA CH CL CN CO CZ DE DK EG ES FI FR GB GR HU ID IE IL IN
    IT JP KR MX MY NL NO NZ PH PL PT RO RU SA SE SG TH TR TW US VN ZA""".split()
)

#: Country pool for synthetic corpora; the planted proximity pair
#: (NO, PT) is deliberately excluded.
CORPUS_COUNTRY_POOL = sorted(
    "AU BR CA CH CN DE ES FR GB IL IN IT JP KR NL SE SG US".split()
)
PROXIMITY_PAIR = ("NO", "PT")
MONOPOLY_SECTOR = "99"
MONOPOLY_FIRM = "FMONO1"
NACE_POOL = ["20", "26", "27", "28", "46", "58", "61", "62", "63", "71", "72", "74"]
PANEL_CLASS_POOL = ["B60W", "G05B", "G06F", "G06N", "G06Q", "G06T", "G10L", "H04L"]

FIRST_PANEL_YEAR = 2015

#: Default structural truth: intercept plus six covariate slopes.
DEFAULT_BETA = {
    "const": 4.8,
    "log_distance": -0.6,
    "common_language": 0.4,
    "contiguous": 0.3,
    "rta": 0.25,
    "log_gdp_orig": 0.35,
    "log_gdp_dest": 0.25,
}

#: Default selection-mode truth: mild outcome slopes keep every dyad's
#: mean count high, so observed zeros are (almost surely) structural.
SELECTION_BETA = {
    "const": 2.7,
    "log_distance": -0.03,
    "common_language": 0.05,
    "contiguous": 0.04,
    "rta": 0.03,
    "log_gdp_orig": 0.05,
    "log_gdp_dest": 0.04,
}

#: Default first-stage truth: intercept plus six covariate slopes.
DEFAULT_GAMMA = {
    "const": 2.3,
    "log_distance": -0.25,
    "common_language": 0.4,
    "common_religion": 0.5,
    "colonial": 0.45,
    "contiguous": 0.3,
    "rta": 0.35,
}


@dataclass(frozen=True)
class TruthRecord:
    """Ground truth serialized alongside every generated dataset."""

    seed: int
    kind: str
    beta_true: dict | None = None
    gamma_true: dict | None = None
    delta_true: float | None = None
    time_effects: dict | None = None
    countries: tuple = ()
    eu_members: tuple = ()
    years: tuple = ()
    n_countries: int | None = None
    n_years: int | None = None
    n_firms: int | None = None
    n_patents: int | None = None
    n_classes: int | None = None
    family_counts: dict = field(default_factory=dict)
    planted: dict = field(default_factory=dict)
    n_rows: int | None = None
    structural_zeros: int | None = None

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def _month_str(index: int, day: int) -> str:
    return f"{index // 12:04d}-{index % 12 + 1:02d}-{day:02d}"


def _month_index(year: int, month: int) -> int:
    return year * 12 + (month - 1)


def _write_csv(df: pd.DataFrame, path: Path) -> None:
    df.to_csv(path, index=False, lineterminator="\n")


def _write_truth(truth: TruthRecord, path: Path) -> None:
    payload = json.dumps(truth.to_dict(), sort_keys=True, indent=2)
    path.write_text(payload + "\n", encoding="utf-8")


def gen_panel(
    out_dir,
    seed: int,
    beta_true: dict | None = None,
    n_countries: int = 20,
    n_years: int = 5,
    selection: tuple[dict, float] | None = None,
    time_effects: dict | None = None,
    mean_families: int = 4,
    offset: float = DEFAULT_OFFSET,
    cumulative_stock: bool = True,
) -> tuple[dict[str, Path], TruthRecord]:
    """Generate a full synthetic dataset for gravity estimation.

    Writes the corpus triplet plus bilateral and macro covariates and
    truth.json into ``out_dir``. ``selection=(gamma_true, delta_true)``
    adds a probit link gate: dyad-years failing the gate record zero
    citations regardless of the outcome draw.
    """
    if n_countries < 3 or n_years < 2:
        raise DataError(
            f"dimension too small: need n_countries >= 3 and n_years >= 2, "
            f"got {n_countries}, {n_years}"
        )
    if n_countries > len(PANEL_COUNTRY_POOL):
        raise DataError(f"n_countries above pool size {len(PANEL_COUNTRY_POOL)}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = _rng(seed)

    if beta_true is None:
        beta_true = dict(SELECTION_BETA if selection else DEFAULT_BETA)
    gamma_true = dict(selection[0]) if selection else None
    delta_true = float(selection[1]) if selection else None

    countries = sorted(PANEL_COUNTRY_POOL[:n_countries])
    # same membership definition the panel builder applies by default
    eu_members = tuple(c for c in countries if c in registry.EU27)
    years = list(range(FIRST_PANEL_YEAR, FIRST_PANEL_YEAR + n_years))

    # --- per-country draws (fixed order) ---
    z_gdp = rng.normal(0.0, 1.0, n_countries)
    z_pc = rng.normal(0.0, 1.0, n_countries)
    rd = rng.uniform(0.5, 4.0, n_countries)
    n_fam = 3 + rng.integers(0, 4, n_countries)

    # --- families ---
    fam_rows = []
    fam_meta: dict[str, list[tuple[int, tuple[str, ...]]]] = {}
    fam_counter = 0
    for ci, country in enumerate(countries):
        fam_meta[country] = []
        for f in range(int(n_fam[ci])):
            year = years[0] if f == 0 else years[int(rng.integers(0, n_years))]
            n_cls = 2 if rng.random() < 0.4 else 1
            picks = sorted(rng.choice(len(PANEL_CLASS_POOL), size=n_cls, replace=False))
            classes = tuple(PANEL_CLASS_POOL[p] for p in picks)
            fam_id = f"FAM{fam_counter:05d}"
            fam_counter += 1
            pub = _month_index(year, 1)
            fam_rows.append({
                "patent_id": f"P{fam_counter:05d}",
                "family_id": fam_id,
                "authority": country,
                "grant_date": _month_str(pub + 14, 1),
                "earliest_pub_date": _month_str(pub, 1),
                "cpc_classes": "|".join(classes),
                "applicant_id": f"FIRM{country}",
            })
            fam_meta[country].append((year, classes))

    applicants = pd.DataFrame({
        "applicant_id": [f"FIRM{c}" for c in countries],
        "name": [f"Firm {c}" for c in countries],
        "country": countries,
        "nace": "62",
        "incorporation_year": 2000,
        "parent_id": "",
        "parent_country": "",
    })

    # --- bilateral covariates (per unordered pair, symmetric) ---
    pair_cov = {}
    for a in range(n_countries):
        for b in range(a + 1, n_countries):
            pair_cov[(countries[a], countries[b])] = {
                "distance_km": float(rng.uniform(100.0, 15000.0)),
                "common_language": int(rng.random() < 0.25),
                "common_legal": int(rng.random() < 0.30),
                "common_religion": float(rng.uniform(0.0, 1.0)),
                "colonial": int(rng.random() < 0.10),
                "contiguous": int(rng.random() < 0.15),
                "rta": int(rng.random() < 0.30),
            }

    # --- time effects ---
    if time_effects is None:
        drawn = rng.normal(0.0, 0.2, n_years)
        mu_t = {years[0]: 0.0}
        for t, year in enumerate(years[1:], start=1):
            mu_t[year] = float(drawn[t])
    else:
        mu_t = {year: float(time_effects.get(year, 0.0)) for year in years}

    # --- macro table ---
    stocks = {}
    for ci, country in enumerate(countries):
        pub_years = [y for y, _ in fam_meta[country]]
        for t, year in enumerate(years):
            if cumulative_stock:
                stocks[(country, year)] = sum(1 for y in pub_years if y <= year)
            else:
                stocks[(country, year)] = sum(1 for y in pub_years if y == year)
    macro_vals = {
        (country, year): {
            "gdp": math.exp(2.2 + 0.8 * z_gdp[ci] + 0.03 * t),
            "gdp_pc": math.exp(1.0 + 0.5 * z_pc[ci] + 0.02 * t),
            "rd_share": float(rd[ci]),
        }
        for ci, country in enumerate(countries)
        for t, year in enumerate(years)
    }
    macro = pd.DataFrame([
        {
            "country": country,
            "year": year,
            **macro_vals[(country, year)],
            "ai_patent_stock": stocks[(country, year)],
        }
        for country in countries
        for year in years
    ])

    # --- static portfolio proximity from the same family classes ---
    portfolios = {
        c: class_shares([cls for _, cls in fam_meta[c]], class_level=4) for c in countries
    }
    def proximity(i: str, j: str) -> float:
        a, b = portfolios[i], portfolios[j]
        if not a or not b:
            return 0.0
        return math.fsum(min(a.get(k, 0.0), b.get(k, 0.0)) for k in sorted(set(a) | set(b)))

    # --- panel rows, gates, outcomes ---
    bil_rows = []
    row_payload = []
    for i in countries:
        for j in countries:
            if i == j:
                continue
            cov = pair_cov[(i, j) if i < j else (j, i)]
            eu_pair = int(i in eu_members and j in eu_members)
            for year in years:
                bil_rows.append({
                    "origin": i, "dest": j, "year": year, **cov, "eu_pair": eu_pair,
                })
                row_payload.append((i, j, year, cov, eu_pair))

    def column_value(name: str, i: str, j: str, year: int, cov: dict, eu_pair: int) -> float:
        if name == "const":
            return 1.0
        if name == "log_distance":
            return math.log(cov["distance_km"] + offset)
        if name in ("common_language", "common_legal", "common_religion",
                    "colonial", "contiguous", "rta"):
            return float(cov[name])
        if name == "log_gdp_orig":
            return math.log(macro_vals[(i, year)]["gdp"] + offset)
        if name == "log_gdp_dest":
            return math.log(macro_vals[(j, year)]["gdp"] + offset)
        if name == "log_gdp_pc_orig":
            return math.log(macro_vals[(i, year)]["gdp_pc"] + offset)
        if name == "log_gdp_pc_dest":
            return math.log(macro_vals[(j, year)]["gdp_pc"] + offset)
        if name == "rd_share_orig":
            return macro_vals[(i, year)]["rd_share"]
        if name == "rd_share_dest":
            return macro_vals[(j, year)]["rd_share"]
        if name == "log_ai_orig":
            return math.log(stocks[(i, year)] + offset)
        if name == "log_ai_dest":
            return math.log(stocks[(j, year)] + offset)
        if name == "proximity":
            return proximity(i, j)
        if name == "eu_orig":
            return float(i in eu_members)
        if name == "eu_dest":
            return float(j in eu_members)
        if name == "eu_both":
            return float(eu_pair)
        raise DataError(f"unknown truth coefficient name: {name!r}")

    gates = np.ones(len(row_payload), dtype=bool)
    eta_sel = None
    if selection:
        eta_sel = np.empty(len(row_payload))
        for r, (i, j, year, cov, eu_pair) in enumerate(row_payload):
            eta_sel[r] = math.fsum(
                g * column_value(name, i, j, year, cov, eu_pair)
                for name, g in gamma_true.items()
            )
        noise = rng.normal(0.0, 1.0, len(row_payload))
        gates = (eta_sel + noise) > 0.0

    eta = np.empty(len(row_payload))
    for r, (i, j, year, cov, eu_pair) in enumerate(row_payload):
        eta[r] = math.fsum(
            b * column_value(name, i, j, year, cov, eu_pair)
            for name, b in beta_true.items()
        ) + mu_t[year]
    if selection and delta_true:
        eta = eta + delta_true * inverse_mills(eta_sel)
    counts = rng.poisson(np.exp(eta))
    counts = np.where(gates, counts, 0)

    # --- expand counts into citation edges ---
    cite_rows = []
    counter = 0
    eligible_cache: dict[tuple[str, int], list[str]] = {}
    fam_ids = {}
    fam_counter = 0
    for country in countries:
        ids = []
        for (year, _cls) in fam_meta[country]:
            ids.append((year, f"FAM{fam_counter:05d}"))
            fam_counter += 1
        fam_ids[country] = ids
    for (i, j, year, _cov, _eu), y in zip(row_payload, counts):
        if y == 0:
            continue
        key = (j, year)
        if key not in eligible_cache:
            eligible_cache[key] = [f for (py, f) in fam_ids[j] if py <= year]
        eligible = eligible_cache[key]
        for _ in range(int(y)):
            cite_rows.append({
                "citing_family": f"CIT{counter:07d}",
                "cited_family": eligible[counter % len(eligible)],
                "citing_applicant_id": f"FIRM{i}",
                "citation_date": f"{year:04d}-{counter % 12 + 1:02d}-15",
            })
            counter += 1

    files = {
        "patents": out / "patents.csv",
        "applicants": out / "applicants.csv",
        "citations": out / "citations.csv",
        "bilateral": out / "bilateral.csv",
        "macro": out / "macro.csv",
        "truth": out / "truth.json",
    }
    _write_csv(pd.DataFrame(fam_rows), files["patents"])
    _write_csv(applicants, files["applicants"])
    cite_cols = ["citing_family", "cited_family", "citing_applicant_id", "citation_date"]
    _write_csv(pd.DataFrame(cite_rows, columns=cite_cols), files["citations"])
    _write_csv(pd.DataFrame(bil_rows), files["bilateral"])
    _write_csv(macro, files["macro"])

    truth = TruthRecord(
        seed=seed,
        kind="panel",
        beta_true=dict(beta_true),
        gamma_true=gamma_true,
        delta_true=delta_true,
        time_effects={str(y): v for y, v in mu_t.items()},
        countries=tuple(countries),
        eu_members=eu_members,
        years=tuple(years),
        n_countries=n_countries,
        n_years=n_years,
        family_counts={c: len(fam_meta[c]) for c in countries},
        n_rows=len(row_payload),
        structural_zeros=int((~gates).sum()),
    )
    _write_truth(truth, files["truth"])
    return files, truth


def gen_corpus(
    out_dir,
    seed: int,
    n_firms: int = 40,
    n_patents: int = 400,
    n_classes: int = 8,
) -> tuple[dict[str, Path], TruthRecord]:
    """Generate a synthetic corpus with planted index and survival facts.

    Plants: a country pair with portfolio overlap exactly 0.7, a
    single-firm sector (CR5 = 1), and an exact 30% share of families
    that are never cited, so the pooled survival plateau is known.
    """
    if n_firms < 1 or n_patents < 1 or n_classes < 1:
        raise DataError("zero dims: n_firms, n_patents, n_classes must all be >= 1")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = _rng(seed)

    class_pool = [f"C{k:03d}" for k in range(n_classes)]
    window_end_idx = _month_index(2023, 12)

    # --- random firms ---
    firm_rows = []
    firm_country = {}
    for f in range(n_firms):
        fid = f"F{f:04d}"
        country = CORPUS_COUNTRY_POOL[int(rng.integers(0, len(CORPUS_COUNTRY_POOL)))]
        nace = NACE_POOL[int(rng.integers(0, len(NACE_POOL)))]
        year = 1960 + int(rng.integers(0, 60))
        has_parent = rng.random() < 0.15
        parent_country = (
            CORPUS_COUNTRY_POOL[int(rng.integers(0, len(CORPUS_COUNTRY_POOL)))]
            if has_parent else ""
        )
        firm_rows.append({
            "applicant_id": fid,
            "name": f"Firm {f:04d}",
            "country": country,
            "nace": nace,
            "incorporation_year": year,
            "parent_id": f"PAR{f:04d}" if has_parent else "",
            "parent_country": parent_country,
        })
        firm_country[fid] = country

    # --- random patents (one family each) ---
    patent_rows = []
    family_meta = []  # (family_id, country, pub_index)
    for p in range(n_patents):
        fid = f"F{int(rng.integers(0, n_firms)):04d}"
        n_cls = 2 if (rng.random() < 0.35 and n_classes > 1) else 1
        picks = sorted(rng.choice(n_classes, size=n_cls, replace=False))
        classes = tuple(class_pool[k] for k in picks)
        pub = _month_index(2012, 1) + int(rng.integers(0, 96))
        grant = pub + 12 + int(rng.integers(0, 24))
        family_id = f"RF{p:05d}"
        patent_rows.append({
            "patent_id": f"RP{p:05d}",
            "family_id": family_id,
            "authority": firm_country[fid],
            "grant_date": _month_str(grant, 1),
            "earliest_pub_date": _month_str(pub, 1),
            "cpc_classes": "|".join(classes),
            "applicant_id": fid,
        })
        family_meta.append((family_id, firm_country[fid], pub))

    # --- planted proximity pair: shares (0.5, 0.3, 0.2) vs (0.2, 0.3, 0.5) ---
    planted_classes = ["G06N", "H04L", "G06F"]
    plant_spec = {PROXIMITY_PAIR[0]: (5, 3, 2), PROXIMITY_PAIR[1]: (2, 3, 5)}
    for country, counts in plant_spec.items():
        fid = f"F{country}PL"
        firm_rows.append({
            "applicant_id": fid, "name": f"Planted {country}", "country": country,
            "nace": "62", "incorporation_year": 2005, "parent_id": "", "parent_country": "",
        })
        firm_country[fid] = country
        k = 0
        for cls, reps in zip(planted_classes, counts):
            for _ in range(reps):
                pub = _month_index(2013, 3) + k
                family_id = f"PX{country}{k:02d}"
                patent_rows.append({
                    "patent_id": f"PP{country}{k:02d}",
                    "family_id": family_id,
                    "authority": country,
                    "grant_date": _month_str(pub + 18, 1),
                    "earliest_pub_date": _month_str(pub, 1),
                    "cpc_classes": cls,
                    "applicant_id": fid,
                })
                family_meta.append((family_id, country, pub))
                k += 1

    # --- planted monopoly sector ---
    firm_rows.append({
        "applicant_id": MONOPOLY_FIRM, "name": "Planted monopoly", "country": "US",
        "nace": MONOPOLY_SECTOR, "incorporation_year": 1998,
        "parent_id": "", "parent_country": "",
    })
    firm_country[MONOPOLY_FIRM] = "US"
    for k in range(7):
        pub = _month_index(2014, 1) + 2 * k
        family_id = f"PMONO{k:02d}"
        patent_rows.append({
            "patent_id": f"PM{k:02d}",
            "family_id": family_id,
            "authority": "US",
            "grant_date": _month_str(pub + 18, 1),
            "earliest_pub_date": _month_str(pub, 1),
            "cpc_classes": class_pool[k % n_classes],
            "applicant_id": MONOPOLY_FIRM,
        })
        family_meta.append((family_id, "US", pub))

    # --- citations with an exact never-cited share ---
    n_total = len(family_meta)
    n_uncited = round(0.3 * n_total)
    uncited_idx = set(rng.choice(n_total, size=n_uncited, replace=False).tolist())
    cite_rows = []
    counter = 0
    for idx, (family_id, _country, pub) in enumerate(family_meta):
        if idx in uncited_idx:
            continue
        n_cites = 1 + int(rng.integers(0, 3))
        # lags stay below every subject's censor time, keeping the
        # pooled plateau exactly the planted share
        first = pub + 1 + int(rng.integers(0, 30))
        for c in range(n_cites):
            when = min(first + 3 * c, window_end_idx)
            citing_firm = f"F{int(rng.integers(0, n_firms)):04d}"
            cite_rows.append({
                "citing_family": f"EXT{counter:06d}",
                "cited_family": family_id,
                "citing_applicant_id": citing_firm,
                "citation_date": _month_str(when, 10),
            })
            counter += 1

    # --- totals for comparative-advantage denominators ---
    ai_counts: dict[str, int] = {}
    for _fid, country, _pub in family_meta:
        ai_counts[country] = ai_counts.get(country, 0) + 1
    totals_rows = [
        {"country": c, "total_count": int(ai_counts[c] + rng.integers(20, 400))}
        for c in sorted(ai_counts)
    ]

    files = {
        "patents": out / "patents.csv",
        "applicants": out / "applicants.csv",
        "citations": out / "citations.csv",
        "totals": out / "totals.csv",
        "truth": out / "truth.json",
    }
    _write_csv(pd.DataFrame(patent_rows), files["patents"])
    _write_csv(pd.DataFrame(firm_rows), files["applicants"])
    cite_cols = ["citing_family", "cited_family", "citing_applicant_id", "citation_date"]
    _write_csv(pd.DataFrame(cite_rows, columns=cite_cols), files["citations"])
    _write_csv(pd.DataFrame(totals_rows, columns=["country", "total_count"]), files["totals"])

    truth = TruthRecord(
        seed=seed,
        kind="corpus",
        n_firms=n_firms,
        n_patents=n_patents,
        n_classes=n_classes,
        family_counts={c: ai_counts[c] for c in sorted(ai_counts)},
        planted={
            "proximity_pair": list(PROXIMITY_PAIR),
            "proximity_value": 0.7,
            "monopoly_sector": MONOPOLY_SECTOR,
            "monopoly_firm": MONOPOLY_FIRM,
            "monopoly_cr": 1.0,
            "n_families": n_total,
            "n_never_cited": n_uncited,
            "uncited_share": n_uncited / n_total,
            "window_end": "2023-12",
        },
    )
    _write_truth(truth, files["truth"])
    return files, truth
