"""Shared helpers: write small corpora as CSV files for the loaders."""

from __future__ import annotations

from pathlib import Path

import pytest

PATENT_HEADER = (
    "patent_id,family_id,authority,grant_date,earliest_pub_date,cpc_classes,applicant_id"
)
APPLICANT_HEADER = (
    "applicant_id,name,country,nace,incorporation_year,parent_id,parent_country"
)
CITATION_HEADER = "citing_family,cited_family,citing_applicant_id,citation_date"


def write_csv(path: Path, header: str, rows: list[str]) -> Path:
    path.write_text("\n".join([header] + rows) + "\n", encoding="utf-8")
    return path


def write_corpus(
    tmp_path: Path,
    patents: list[str],
    applicants: list[str],
    citations: list[str] | None = None,
) -> tuple[Path, Path, Path]:
    """Write the three corpus tables; rows are raw CSV strings."""
    p = write_csv(tmp_path / "patents.csv", PATENT_HEADER, patents)
    a = write_csv(tmp_path / "applicants.csv", APPLICANT_HEADER, applicants)
    c = write_csv(tmp_path / "citations.csv", CITATION_HEADER, citations or [])
    return p, a, c


def patent_row(
    patent_id: str,
    family_id: str,
    applicant_id: str = "",
    classes: str = "G06N",
    pub: str = "2015-01-01",
    grant: str = "2016-01-01",
    authority: str = "US",
) -> str:
    return f"{patent_id},{family_id},{authority},{grant},{pub},{classes},{applicant_id}"


def applicant_row(
    applicant_id: str,
    country: str = "US",
    nace: str = "62",
    name: str = "",
    year: str = "2000",
    parent_id: str = "",
    parent_country: str = "",
) -> str:
    name = name or f"Name {applicant_id}"
    return f"{applicant_id},{name},{country},{nace},{year},{parent_id},{parent_country}"


def citation_row(
    citing: str, cited: str, citing_applicant: str = "", date: str = "2018-06-15"
) -> str:
    return f"{citing},{cited},{citing_applicant},{date}"


BILATERAL_HEADER = (
    "origin,dest,year,distance_km,common_language,common_legal,"
    "common_religion,colonial,contiguous,rta,eu_pair"
)
MACRO_HEADER = "country,year,gdp,gdp_pc,rd_share,ai_patent_stock"


def bilateral_row(origin, dest, year, distance=1000.0, lang=0, legal=0,
                  religion=0.5, colonial=0, contig=0, rta=0, eu_pair=0):
    return (f"{origin},{dest},{year},{distance},{lang},{legal},{religion},"
            f"{colonial},{contig},{rta},{eu_pair}")


def macro_row(country, year, gdp=100.0, gdp_pc=30.0, rd=2.0, ai_stock=10.0):
    return f"{country},{year},{gdp},{gdp_pc},{rd},{ai_stock}"


@pytest.fixture
def linked(tmp_path):
    """Build a linked corpus from row lists."""

    def _build(patents, applicants, citations=None):
        from patlas import link_records, load_corpus

        p, a, c = write_corpus(tmp_path, patents, applicants, citations)
        return link_records(load_corpus(p, a, c))

    return _build
