"""Specialization and concentration indices over a linked corpus.

Covers technology portfolio vectors, min-complement portfolio
proximity, revealed comparative advantage, CR_q concentration ratios,
country-by-country citation matrices, and foreign-citation shares.

All counting is at the patent-family level: a family's class set is
the union over member patents, and a family with m distinct truncated
classes contributes 1/m to each class.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import registry
from .corpus import LinkedCorpus
from .errors import DataError


@dataclass(frozen=True)
class PortfolioVector:
    """Distribution of a holder's patent families over technology classes."""

    holder: str
    shares: dict[str, float]
    support_size: int

    def __post_init__(self):
        if self.support_size != len(self.shares):
            raise DataError(f"support_size {self.support_size} != {len(self.shares)} classes")
        if any(p <= 0 for p in self.shares.values()):
            raise DataError("portfolio shares must be strictly positive")
        total = math.fsum(self.shares.values())
        if abs(total - 1.0) > 1e-12:
            raise DataError(f"portfolio shares sum to {total!r}, not 1")


@dataclass(frozen=True)
class CountryPatentCounts:
    """Patent counts for one holder: field-specific and all-field totals."""

    holder: str
    ai_count: float
    total_count: float | None = None

    def __post_init__(self):
        if self.ai_count < 0:
            raise DataError(f"negative ai_count for {self.holder}")
        if self.total_count is not None:
            if self.total_count < 0:
                raise DataError(f"negative total_count for {self.holder}")
            if self.ai_count > self.total_count:
                raise DataError(
                    f"ai_count exceeds total_count for {self.holder}: "
                    f"{self.ai_count} > {self.total_count}"
                )


@dataclass(frozen=True)
class SectorConcentration:
    sector: str
    total: float
    per_firm: dict[str, float]
    q: int
    cr: float


@dataclass(frozen=True)
class CitationMatrix:
    """Square table of citation counts: rows cite columns."""

    axis: tuple[str, ...]
    counts: np.ndarray
    grouping: str

    def total(self) -> float:
        return float(self.counts.sum())

    def row(self, country: str) -> np.ndarray:
        return self.counts[self.axis.index(country)]


def class_shares(class_tuples: list[tuple[str, ...]], class_level: int) -> dict[str, float]:
    """Share vector over truncated classes for a bag of family class sets.

    Each family splits a unit weight equally across its distinct
    truncated classes; families with no classes are skipped. Returns
    an empty dict when nothing contributes.
    """
    if class_level < 1:
        raise DataError(f"class_level must be >= 1, got {class_level}")
    weights: dict[str, float] = {}
    n_families = 0
    for classes in class_tuples:
        truncated = sorted({c[:class_level] for c in classes})
        if not truncated:
            continue
        n_families += 1
        w = 1.0 / len(truncated)
        for c in truncated:
            weights[c] = weights.get(c, 0.0) + w
    if n_families == 0:
        return {}
    return {c: weights[c] / n_families for c in sorted(weights)}


def _family_weights(corpus: LinkedCorpus, holder: str) -> list[tuple[str, ...]]:
    """Class tuples of the families attributable to ``holder``."""
    fam = corpus.families
    if holder == registry.EU_PSEUDO and corpus.eu_members:
        members = corpus.eu_members
        mask = fam["countries"].map(lambda cs: any(c in members for c in cs))
    elif holder in registry.ISO_ALPHA2:
        mask = fam["countries"].map(lambda cs: holder in cs)
    else:
        mask = fam["applicant_ids"].map(lambda ids: holder in ids)
    return list(fam.loc[mask, "classes"])


def portfolio_vector(corpus: LinkedCorpus, holder: str, class_level: int = 4) -> PortfolioVector:
    """Share of ``holder``'s families in each truncated technology class.

    ``holder`` may be a country code, the EU pseudo-country (when a
    member set is attached), or an applicant id. Classes are truncated
    to ``class_level`` characters; each family splits its unit weight
    equally across its distinct truncated classes.
    """
    if not corpus.linked or corpus.families is None:
        raise DataError("portfolio_vector requires a linked corpus")
    shares = class_shares(_family_weights(corpus, holder), class_level)
    if not shares:
        raise DataError(f"empty portfolio for holder {holder!r}")
    return PortfolioVector(holder=holder, shares=shares, support_size=len(shares))


def min_complement_proximity(a: PortfolioVector, b: PortfolioVector) -> float:
    """Portfolio overlap: sum of coordinate-wise minima of the two share vectors."""
    value = 0.0
    for key in sorted(set(a.shares) | set(b.shares)):
        value += min(a.shares.get(key, 0.0), b.shares.get(key, 0.0))
    return value


def rca(counts: CountryPatentCounts, world: CountryPatentCounts) -> float:
    """Revealed comparative advantage: the holder's field share over the world's.

    Values above one signal specialization in the field.
    """
    for c in (counts, world):
        if c.total_count is None:
            raise DataError(f"missing total_count for {c.holder}")
        if c.total_count == 0:
            raise DataError(f"total_count of {c.holder} is zero")
    if world.ai_count == 0:
        raise DataError(f"ai_count of {world.holder} is zero")
    return (counts.ai_count / counts.total_count) / (world.ai_count / world.total_count)


def concentration_ratio(per_firm: dict[str, float], q: int = 5, sector: str = "") -> SectorConcentration:
    """CR_q: share of a sector's patents held by its q most prolific firms.

    Ties at the q-th rank are broken deterministically by sorting on
    (count descending, firm id ascending) and taking the first q firms.
    """
    if not per_firm:
        raise DataError(f"empty sector {sector!r}")
    if q < 1:
        raise DataError(f"q must be >= 1, got {q}")
    if any(v < 0 for v in per_firm.values()):
        raise DataError(f"negative firm count in sector {sector!r}")
    total = math.fsum(per_firm.values())
    if total == 0:
        raise DataError(f"sector {sector!r} has zero patents")
    ranked = sorted(per_firm.items(), key=lambda kv: (-kv[1], kv[0]))
    top = math.fsum(count for _, count in ranked[:q])
    return SectorConcentration(sector=sector, total=total, per_firm=dict(per_firm), q=q, cr=top / total)


def sector_firm_counts(corpus: LinkedCorpus) -> dict[str, dict[str, float]]:
    """Family counts per firm, grouped by the firm's sector code.

    A family held by several firms splits equally across them. Firms
    without a sector code are left out of every sector table.
    """
    if not corpus.linked or corpus.families is None:
        raise DataError("sector counts require a linked corpus")
    nace_of = dict(zip(corpus.applicants["applicant_id"], corpus.applicants["nace"]))
    out: dict[str, dict[str, float]] = {}
    for firms in corpus.families["applicant_ids"]:
        if not firms:
            continue
        w = 1.0 / len(firms)
        for firm in firms:
            sector = nace_of.get(firm, "")
            if not sector:
                continue
            out.setdefault(sector, {})
            out[sector][firm] = out[sector].get(firm, 0.0) + w
    return {s: out[s] for s in sorted(out)}


def _expand_axis(corpus: LinkedCorpus, axis: list[str]) -> dict[str, str]:
    """Map each underlying country to its axis label, enforcing disjointness."""
    label_of: dict[str, str] = {}
    for label in axis:
        if label == registry.EU_PSEUDO:
            if not corpus.eu_members:
                raise DataError("EU axis entry requires an attached member set")
            members = sorted(corpus.eu_members)
        elif label in registry.ISO_ALPHA2:
            members = [label]
        else:
            raise DataError(f"unknown axis code: {label!r}")
        for m in members:
            if m in label_of:
                raise DataError(
                    f"axis entries overlap: {m} belongs to both {label_of[m]!r} and {label!r}"
                )
            label_of[m] = label
    return label_of


def citation_matrix(
    corpus: LinkedCorpus,
    axis: list[str] | tuple[str, ...],
    grouping: str = "applicant",
    attribution: str = "fractional",
) -> CitationMatrix:
    """Family-to-family citation counts between axis countries.

    Rows cite columns. A cited family spanning several countries is
    split fractionally across them (or assigned to the alphabetically
    first with ``attribution="first"``). The EU pseudo-country absorbs
    its members; intra-EU flows land on the diagonal.
    """
    if not corpus.linked:
        raise DataError("citation_matrix requires a linked corpus")
    if grouping not in ("applicant", "parent"):
        raise DataError(f"unknown grouping: {grouping!r}")
    if attribution not in ("fractional", "first"):
        raise DataError(f"unknown attribution mode: {attribution!r}")
    if len(set(axis)) != len(axis):
        raise DataError("axis contains repeated entries")
    label_of = _expand_axis(corpus, list(axis))
    index = {label: k for k, label in enumerate(axis)}
    n = len(axis)
    counts = np.zeros((n, n))

    citing_col = "citing_country" if grouping == "applicant" else "citing_owner_country"
    cited_col = "cited_countries" if grouping == "applicant" else "cited_owner_countries"
    for citing, cited in zip(corpus.citations[citing_col], corpus.citations[cited_col]):
        row_label = label_of.get(citing)
        if row_label is None or not cited:
            continue
        i = index[row_label]
        if attribution == "first":
            targets = [(cited[0], 1.0)]
        else:
            w = 1.0 / len(cited)
            targets = [(c, w) for c in cited]
        for country, weight in targets:
            col_label = label_of.get(country)
            if col_label is not None:
                counts[i, index[col_label]] += weight
    return CitationMatrix(axis=tuple(axis), counts=counts, grouping=grouping)


def foreign_citation_share(matrix: CitationMatrix, country: str) -> float:
    """Share of a country's outgoing citations that land abroad."""
    if country not in matrix.axis:
        raise DataError(f"{country!r} is not on the matrix axis")
    i = matrix.axis.index(country)
    row_sum = float(matrix.counts[i].sum())
    if row_sum == 0:
        raise DataError(f"zero citation row for {country!r}")
    return 1.0 - float(matrix.counts[i, i]) / row_sum
