"""First-citation lags and Kaplan-Meier survival curves.

Each patent family becomes one subject. The duration is the whole-month
difference between a reference month (earliest publication by default,
grant optionally) and the family's first citation; families not cited
by the window end are right-censored there.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .corpus import LinkedCorpus
from .errors import DataError

#: Sample-period end used when no window is given.
DEFAULT_WINDOW_END = (2023, 12)

#: Group label for families with no linked applicant country.
UNLINKED_GROUP = "UNLINKED"


@dataclass(frozen=True)
class LagRecord:
    family_id: str
    group: str
    duration: int
    event: bool


@dataclass(frozen=True)
class SurvivalStep:
    t: int      # months since reference
    d: int      # events at t
    n: int      # at risk just before t
    s: float    # survival after t


@dataclass(frozen=True)
class SurvivalCurve:
    group: str
    steps: tuple[SurvivalStep, ...]
    plateau: float
    subjects: int
    events: int


class LagResult(Sequence):
    """Sequence of LagRecord plus the count of excluded invalid families.

    A family whose first citation predates its reference month is
    inconsistent data: it is dropped from the sample and reported here.
    """

    def __init__(self, records: list[LagRecord], invalid_families: tuple[str, ...]):
        self._records = tuple(records)
        self.invalid_families = invalid_families
        self.excluded_invalid = len(invalid_families)

    def __len__(self) -> int:
        return len(self._records)

    def __getitem__(self, i):
        return self._records[i]

    def __iter__(self) -> Iterator[LagRecord]:
        return iter(self._records)


def _parse_month(value) -> tuple[int, int]:
    if isinstance(value, tuple):
        year, month = value
    elif isinstance(value, (dt.date, dt.datetime)):
        year, month = value.year, value.month
    elif isinstance(value, str):
        parts = value.split("-")
        if len(parts) < 2:
            raise DataError(f"cannot parse month from {value!r}; expected YYYY-MM")
        year, month = int(parts[0]), int(parts[1])
    else:
        raise DataError(f"cannot parse month from {value!r}")
    if not 1 <= month <= 12:
        raise DataError(f"month out of range in {value!r}")
    return int(year), int(month)


def _month_index(year: int, month: int) -> int:
    return year * 12 + (month - 1)


def first_citation_lags(
    corpus: LinkedCorpus,
    window_end=DEFAULT_WINDOW_END,
    origin: str = "publication",
) -> LagResult:
    """One lag record per family, right-censored at ``window_end``.

    ``origin`` selects the reference month: the family's earliest
    publication (default) or earliest grant. The group label is the
    alphabetically first applicant country of the family.
    """
    if not corpus.linked or corpus.families is None:
        raise DataError("first_citation_lags requires a linked corpus")
    if origin not in ("publication", "grant"):
        raise DataError(f"unknown origin: {origin!r}")
    end_y, end_m = _parse_month(window_end)
    end_idx = _month_index(end_y, end_m)

    fam = corpus.families
    ref_col = "earliest_pub" if origin == "publication" else "earliest_grant"
    ref = fam[ref_col]
    ref_idx = ref.dt.year.to_numpy() * 12 + (ref.dt.month.to_numpy() - 1)
    if len(ref_idx) and int(ref_idx.max()) > end_idx:
        raise DataError(
            f"window_end {end_y}-{end_m:02d} precedes the latest reference month in the corpus"
        )

    dated = corpus.citations.dropna(subset=["citation_date"])
    first = dated.groupby("cited_family")["citation_date"].min()
    first_idx = {
        fam_id: _month_index(ts.year, ts.month) for fam_id, ts in first.items()
    }

    records: list[LagRecord] = []
    invalid: list[str] = []
    for family_id, r_idx, countries in zip(fam.index, ref_idx, fam["countries"]):
        group = countries[0] if countries else UNLINKED_GROUP
        cite_idx = first_idx.get(family_id)
        if cite_idx is None or cite_idx > end_idx:
            records.append(LagRecord(family_id, group, end_idx - int(r_idx), False))
        elif cite_idx < r_idx:
            invalid.append(family_id)
        else:
            records.append(LagRecord(family_id, group, cite_idx - int(r_idx), True))
    return LagResult(records, tuple(invalid))


def km_estimate(lags) -> SurvivalCurve:
    """Product-limit survival estimate over the given lag records.

    Steps occur only at event times; censored subjects leave the risk
    set without creating a step. Tied events at one time aggregate
    into a single step.
    """
    records = list(lags)
    if not records:
        raise DataError("km_estimate requires at least one lag record")
    groups = {r.group for r in records}
    group = groups.pop() if len(groups) == 1 else "all"

    durations = np.array([r.duration for r in records], dtype=np.int64)
    events = np.array([r.event for r in records], dtype=bool)
    order = np.sort(durations)
    times = np.unique(durations[events])

    steps: list[SurvivalStep] = []
    s = 1.0
    for t in times:
        n = len(order) - int(np.searchsorted(order, t, side="left"))
        d = int(((durations == t) & events).sum())
        s *= 1.0 - d / n
        steps.append(SurvivalStep(t=int(t), d=d, n=n, s=s))
    return SurvivalCurve(
        group=group,
        steps=tuple(steps),
        plateau=steps[-1].s if steps else 1.0,
        subjects=len(records),
        events=int(events.sum()),
    )


def uncited_share(curve: SurvivalCurve) -> float:
    """Share of subjects never cited within the window: the curve's plateau."""
    return curve.plateau


def group_curves(lags) -> dict[str, SurvivalCurve]:
    """One survival curve per group label, keyed and ordered by group."""
    by_group: dict[str, list[LagRecord]] = {}
    for r in lags:
        by_group.setdefault(r.group, []).append(r)
    return {g: km_estimate(by_group[g]) for g in sorted(by_group)}
