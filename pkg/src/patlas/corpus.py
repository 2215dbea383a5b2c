"""Corpus ingestion, record linking, and EU aggregation.

Reads the three flat CSV tables (patents, applicants, citations),
validates rows against the documented schemas, links patents to
applicant attributes, collapses citations to deduplicated
family-to-family edges, and annotates everything with countries.

All tables are pandas DataFrames internally; row-level views are
available as frozen dataclasses for callers that prefer records.
"""

from __future__ import annotations

import dataclasses
import datetime as dt
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import pandas as pd

from . import registry
from .errors import DataError, SchemaError

PATENT_COLUMNS = [
    "patent_id", "family_id", "authority", "grant_date",
    "earliest_pub_date", "cpc_classes", "applicant_id",
]
APPLICANT_COLUMNS = [
    "applicant_id", "name", "country", "nace",
    "incorporation_year", "parent_id", "parent_country",
]
CITATION_COLUMNS = [
    "citing_family", "cited_family", "citing_applicant_id", "citation_date",
]

# Annotation columns added by link_records on top of the raw schemas.
_PATENT_LINK_COLUMNS = ["country", "nace", "parent_id", "parent_country", "linked"]

_NACE_RE = re.compile(r"^\d{2}$")
_YEAR_RE = re.compile(r"^\d{1,4}$")

MIN_INCORPORATION_YEAR = 1500


@dataclass(frozen=True)
class PatentRecord:
    """One granted patent document, optionally annotated by linking."""

    patent_id: str
    family_id: str
    authority: str
    grant_date: dt.date
    earliest_pub_date: dt.date
    cpc_classes: frozenset[str]
    applicant_id: str
    country: str = ""
    nace: str = ""
    parent_country: str = ""
    linked: bool = False


@dataclass(frozen=True)
class ApplicantRecord:
    applicant_id: str
    name: str
    country: str
    nace: str
    incorporation_year: int | None
    parent_id: str
    parent_country: str


@dataclass(frozen=True)
class CitationEdge:
    """A deduplicated family-to-family citation.

    ``cited_countries`` lists every country holding the cited family;
    ``cited_country`` is the alphabetically first of those (or blank),
    for callers that need a single label.
    """

    citing_family: str
    cited_family: str
    citing_country: str
    cited_country: str
    cited_countries: tuple[str, ...]
    citation_date: dt.date | None


@dataclass(frozen=True)
class RowViolation:
    file: str
    row: int  # 1-based data row, header excluded
    reason: str


@dataclass(frozen=True)
class LinkedCorpus:
    """Validated join of patents, applicants, and citations.

    ``families`` (built by :func:`link_records`) is the family-level
    view: class sets are the union over member patents and the family's
    country is the set of its applicants' countries.
    """

    patents: pd.DataFrame
    applicants: pd.DataFrame
    citations: pd.DataFrame
    eu_members: frozenset[str]
    missing_report: dict[str, Fraction]
    violations: tuple[RowViolation, ...]
    families: pd.DataFrame | None = None
    linked: bool = False

    def patent_records(self) -> Iterator[PatentRecord]:
        has_link = "country" in self.patents.columns
        for r in self.patents.itertuples(index=False):
            yield PatentRecord(
                patent_id=r.patent_id,
                family_id=r.family_id,
                authority=r.authority,
                grant_date=r.grant_date.date(),
                earliest_pub_date=r.earliest_pub_date.date(),
                cpc_classes=frozenset(r.cpc_classes),
                applicant_id=r.applicant_id,
                country=r.country if has_link else "",
                nace=r.nace if has_link else "",
                parent_country=r.parent_country if has_link else "",
                linked=bool(r.linked) if has_link else False,
            )

    def applicant_records(self) -> Iterator[ApplicantRecord]:
        for r in self.applicants.itertuples(index=False):
            year = None if pd.isna(r.incorporation_year) else int(r.incorporation_year)
            yield ApplicantRecord(
                applicant_id=r.applicant_id, name=r.name, country=r.country,
                nace=r.nace, incorporation_year=year,
                parent_id=r.parent_id, parent_country=r.parent_country,
            )

    def citation_edges(self) -> Iterator[CitationEdge]:
        if not self.linked:
            raise DataError("citation edges require a linked corpus; call link_records first")
        for r in self.citations.itertuples(index=False):
            when = None if pd.isna(r.citation_date) else r.citation_date.date()
            yield CitationEdge(
                citing_family=r.citing_family,
                cited_family=r.cited_family,
                citing_country=r.citing_country,
                cited_country=r.cited_countries[0] if r.cited_countries else "",
                cited_countries=r.cited_countries,
                citation_date=when,
            )


def _read_table(path, required: list[str], label: str) -> pd.DataFrame:
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except FileNotFoundError:
        raise SchemaError(f"{label}: cannot read {path}") from None
    except pd.errors.EmptyDataError:
        return pd.DataFrame({c: pd.Series(dtype=str) for c in required})
    missing = [c for c in required if c not in df.columns]
    if missing:
        raise SchemaError(f"{label}: malformed header, missing columns {missing}")
    df = df[required].copy()
    for c in required:
        df[c] = df[c].str.strip()
    return df


def _parse_dates(col: pd.Series) -> pd.Series:
    return pd.to_datetime(col.where(col != ""), format="ISO8601", errors="coerce")


def _normalize_classes(raw: str) -> tuple[str, ...]:
    seen = set()
    for token in raw.split("|"):
        token = token.strip().upper()
        if len(token) >= 4 and token.isalnum():
            seen.add(token)
    return tuple(sorted(seen))


class _Checker:
    """Accumulates per-row violations for one file."""

    def __init__(self, label: str, n_rows: int):
        self.label = label
        self.n_rows = n_rows
        self.items: list[tuple[int, str]] = []
        self.bad_rows: set[int] = set()

    def flag(self, mask: pd.Series, reason: str) -> None:
        for pos in mask.index[mask]:
            self.items.append((pos + 1, reason))
            self.bad_rows.add(pos)

    def finish(self, violations: list[RowViolation]) -> None:
        self.items.sort(key=lambda t: t[0])
        batch = [RowViolation(self.label, row, reason) for row, reason in self.items]
        if self.n_rows and len(self.bad_rows) * 2 > self.n_rows:
            detail = "; ".join(f"row {v.row}: {v.reason}" for v in batch[:20])
            raise DataError(
                f"{self.label}: {len(self.bad_rows)}/{self.n_rows} rows invalid (>50%): {detail}"
            )
        violations.extend(batch)


def load_corpus(patents_path, applicants_path, citations_path) -> LinkedCorpus:
    """Load and validate the three CSV tables.

    Row-level violations are collected (and reported on the returned
    corpus) rather than fatal, unless more than half of a file's rows
    are invalid. Rows missing essential keys or dates are dropped;
    rows with repairable field problems are retained with the field
    blanked or flagged.
    """
    violations: list[RowViolation] = []

    pat = _read_table(patents_path, PATENT_COLUMNS, "patents")
    app = _read_table(applicants_path, APPLICANT_COLUMNS, "applicants")
    cit = _read_table(citations_path, CITATION_COLUMNS, "citations")
    if len(pat) == 0:
        raise DataError("no patent rows")

    # --- patents ---
    chk = _Checker("patents", len(pat))
    pat["grant_date"] = _parse_dates(pat["grant_date"])
    pat["earliest_pub_date"] = _parse_dates(pat["earliest_pub_date"])
    drop = pd.Series(False, index=pat.index)
    for mask, reason in [
        (pat["patent_id"] == "", "empty patent_id"),
        (pat["family_id"] == "", "empty family_id"),
        (pat["grant_date"].isna(), "unparseable grant_date"),
        (pat["earliest_pub_date"].isna(), "unparseable earliest_pub_date"),
    ]:
        chk.flag(mask & ~drop, reason)
        drop |= mask
    pat["cpc_classes"] = pat["cpc_classes"].map(_normalize_classes)
    pat["flagged"] = pat["cpc_classes"].map(len).eq(0)
    chk.flag(pat["flagged"] & ~drop, "no valid technology classes")
    chk.finish(violations)
    pat = pat[~drop].reset_index(drop=True)
    if len(pat) == 0:
        raise DataError("no patent rows")

    # --- applicants ---
    chk = _Checker("applicants", len(app))
    drop = app["applicant_id"] == ""
    chk.flag(drop, "empty applicant_id")

    bad_country = (app["country"] != "") & ~app["country"].isin(registry.ISO_ALPHA2)
    # Unrecognized codes (e.g. supranational holders) are passed through
    # untranslated but still reported.
    chk.flag(bad_country & ~drop, "unrecognized country code")

    bad_nace = (app["nace"] != "") & ~app["nace"].str.fullmatch(_NACE_RE.pattern)
    chk.flag(bad_nace & ~drop, "nace not a 2-digit code")
    app.loc[bad_nace, "nace"] = ""

    year_str = app["incorporation_year"]
    is_blank = year_str == ""
    parseable = year_str.str.fullmatch(_YEAR_RE.pattern)
    year = pd.to_numeric(year_str.where(parseable & ~is_blank), errors="coerce").astype("Int64")
    current_year = dt.date.today().year
    in_range = ((year >= MIN_INCORPORATION_YEAR) & (year <= current_year)).fillna(False)
    bad_year = ~is_blank & ~(parseable & in_range)
    chk.flag(bad_year & ~drop, "invalid incorporation_year")
    app["incorporation_year"] = year.mask(bad_year)

    bad_parent = (app["parent_country"] != "") & ~app["parent_country"].isin(registry.ISO_ALPHA2)
    chk.flag(bad_parent & ~drop, "unrecognized parent_country code")
    chk.finish(violations)
    app = app[~drop].reset_index(drop=True)

    # --- citations ---
    chk = _Checker("citations", len(cit))
    raw_date = cit["citation_date"]
    parsed = _parse_dates(raw_date)
    bad_date = (raw_date != "") & parsed.isna()
    cit["citation_date"] = parsed
    drop = pd.Series(False, index=cit.index)
    for mask, reason in [
        (cit["citing_family"] == "", "empty citing_family"),
        (cit["cited_family"] == "", "empty cited_family"),
    ]:
        chk.flag(mask & ~drop, reason)
        drop |= mask
    chk.flag(bad_date & ~drop, "unparseable citation_date")
    known = set(pat["family_id"])
    orphan = ~cit["cited_family"].isin(known)
    chk.flag(orphan & ~drop, "cited family not in corpus")
    drop |= orphan
    chk.finish(violations)
    cit = cit[~drop].reset_index(drop=True)

    report = _missing_report(pat, app)
    return LinkedCorpus(
        patents=pat, applicants=app, citations=cit,
        eu_members=registry.EU27, missing_report=report,
        violations=tuple(violations),
    )


def _missing_report(pat: pd.DataFrame, app: pd.DataFrame) -> dict[str, Fraction]:
    report: dict[str, Fraction] = {}
    n = len(app)
    for field in ["name", "country", "nace", "parent_id", "parent_country"]:
        blank = int((app[field] == "").sum()) if n else 0
        report[field] = Fraction(blank, n) if n else Fraction(0, 1)
    if n:
        blank = int(app["incorporation_year"].isna().sum())
        report["incorporation_year"] = Fraction(blank, n)
    else:
        report["incorporation_year"] = Fraction(0, 1)
    known = set(app["applicant_id"])
    unlinked = int((~pat["applicant_id"].isin(known) | (pat["applicant_id"] == "")).sum())
    report["applicant"] = Fraction(unlinked, len(pat)) if len(pat) else Fraction(0, 1)
    return report


def _first_nonblank(series: pd.Series):
    for v in series:
        if isinstance(v, str):
            if v != "":
                return v
        elif not pd.isna(v):
            return v
    return series.iloc[0]


def _collapse_duplicate_applicants(app: pd.DataFrame) -> pd.DataFrame:
    if not app["applicant_id"].duplicated().any():
        return app
    named = app[app["country"] != ""]
    per_id = named.groupby("applicant_id")["country"].nunique()
    conflicts = sorted(per_id.index[per_id > 1])
    if conflicts:
        raise DataError(
            "duplicate applicant ids with conflicting countries: " + ", ".join(conflicts)
        )
    collapsed = app.groupby("applicant_id", as_index=False, sort=True).agg(_first_nonblank)
    return collapsed[APPLICANT_COLUMNS]


def link_records(corpus: LinkedCorpus) -> LinkedCorpus:
    """Annotate patents and citations with applicant attributes.

    Recomputes every derived column from the raw tables, so applying
    it twice yields the same corpus. Citations are collapsed to one
    edge per (citing_family, cited_family) pair, keeping the earliest
    citation date.
    """
    app = _collapse_duplicate_applicants(corpus.applicants)

    lookup = app.set_index("applicant_id")[["country", "nace", "parent_id", "parent_country"]]
    raw_cols = [c for c in PATENT_COLUMNS + ["flagged"] if c in corpus.patents.columns]
    pat = corpus.patents[raw_cols].copy()
    if "flagged" not in pat.columns:
        pat["flagged"] = pat["cpc_classes"].map(len).eq(0)
    pat = pat.merge(lookup, how="left", left_on="applicant_id", right_index=True)
    pat["linked"] = pat["applicant_id"].ne("") & pat["applicant_id"].isin(lookup.index)
    for c in ["country", "nace", "parent_id", "parent_country"]:
        pat[c] = pat[c].fillna("")
    # Parent-country view falls back to the applicant's own country.
    pat["owner_country"] = pat["parent_country"].where(pat["parent_country"] != "", pat["country"])

    fam = _build_families(pat)

    cit = corpus.citations[CITATION_COLUMNS].copy()
    cit = cit.sort_values(
        ["citing_family", "cited_family", "citation_date", "citing_applicant_id"],
        kind="stable", na_position="last",
    ).drop_duplicates(["citing_family", "cited_family"], keep="first").reset_index(drop=True)

    country_of = lookup["country"]
    cit["citing_country"] = cit["citing_applicant_id"].map(country_of).fillna("")
    owner_of = lookup["parent_country"].where(lookup["parent_country"] != "", lookup["country"])
    cit["citing_owner_country"] = cit["citing_applicant_id"].map(owner_of).fillna("")
    empty = tuple()
    cit["cited_countries"] = cit["cited_family"].map(fam["countries"]).map(
        lambda v: v if isinstance(v, tuple) else empty
    )
    cit["cited_owner_countries"] = cit["cited_family"].map(fam["owner_countries"]).map(
        lambda v: v if isinstance(v, tuple) else empty
    )

    return dataclasses.replace(
        corpus,
        patents=pat,
        applicants=app,
        citations=cit,
        families=fam,
        missing_report=_missing_report(pat, app),
        linked=True,
    )


def _build_families(pat: pd.DataFrame) -> pd.DataFrame:
    def distinct(values) -> tuple[str, ...]:
        return tuple(sorted({v for v in values if v}))

    grouped = pat.groupby("family_id", sort=True)
    fam = pd.DataFrame({
        "classes": grouped["cpc_classes"].agg(lambda col: tuple(sorted({c for t in col for c in t}))),
        "countries": grouped["country"].agg(distinct),
        "owner_countries": grouped["owner_country"].agg(distinct),
        "applicant_ids": grouped["applicant_id"].agg(distinct),
        "earliest_pub": grouped["earliest_pub_date"].min(),
        "earliest_grant": grouped["grant_date"].min(),
        "n_patents": grouped.size(),
    })
    return fam


def aggregate_eu(corpus: LinkedCorpus, members: frozenset[str] | set[str]) -> LinkedCorpus:
    """Attach an EU membership set enabling the "EU" pseudo-country.

    Member-level records remain untouched (dual view); aggregate
    counting helpers expose the pseudo-country, whose totals equal the
    sum of member totals under fractional attribution.
    """
    if not members:
        raise DataError("EU member set is empty")
    unknown = sorted(m for m in members if m not in registry.ISO_ALPHA2)
    if unknown:
        raise DataError("member code not in registry: " + ", ".join(unknown))
    return dataclasses.replace(corpus, eu_members=frozenset(members))


def family_country_weights(
    corpus: LinkedCorpus, *, attribution: str = "fractional", grouping: str = "applicant"
) -> pd.DataFrame:
    """Long table (family_id, country, weight) attributing families to countries.

    ``attribution="fractional"`` splits a multi-country family equally
    across its countries; ``"first"`` assigns full weight to the
    alphabetically first country. Families with no linked country are
    omitted (they still count toward world totals).
    """
    if not corpus.linked or corpus.families is None:
        raise DataError("country attribution requires a linked corpus")
    if attribution not in ("fractional", "first"):
        raise DataError(f"unknown attribution mode: {attribution!r}")
    col = {"applicant": "countries", "parent": "owner_countries"}.get(grouping)
    if col is None:
        raise DataError(f"unknown grouping: {grouping!r}")
    rows = []
    for family_id, countries in corpus.families[col].items():
        if not countries:
            continue
        if attribution == "first":
            rows.append((family_id, countries[0], 1.0))
        else:
            w = 1.0 / len(countries)
            rows.extend((family_id, c, w) for c in countries)
    return pd.DataFrame(rows, columns=["family_id", "country", "weight"])


def country_family_counts(
    corpus: LinkedCorpus,
    *,
    attribution: str = "fractional",
    grouping: str = "applicant",
    include_eu: bool = False,
) -> dict[str, float]:
    """Family counts per country, optionally with the EU pseudo-country row."""
    weights = family_country_weights(corpus, attribution=attribution, grouping=grouping)
    counts = weights.groupby("country")["weight"].sum().to_dict()
    if include_eu:
        if not corpus.eu_members:
            raise DataError("EU aggregate requested but no member set attached")
        counts[registry.EU_PSEUDO] = sum(counts.get(m, 0.0) for m in corpus.eu_members)
    return counts


def world_family_count(corpus: LinkedCorpus) -> int:
    """Total distinct families, including ones with no linked country."""
    if not corpus.linked or corpus.families is None:
        raise DataError("world count requires a linked corpus")
    return int(len(corpus.families))
