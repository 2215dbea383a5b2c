import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from patlas import (
    CountryPatentCounts,
    DataError,
    PortfolioVector,
    aggregate_eu,
    citation_matrix,
    class_shares,
    concentration_ratio,
    foreign_citation_share,
    min_complement_proximity,
    portfolio_vector,
    rca,
    sector_firm_counts,
)

from conftest import applicant_row, citation_row, patent_row


def make_portfolio(holder, shares):
    return PortfolioVector(holder=holder, shares=shares, support_size=len(shares))


def test_class_shares_singleton():
    assert class_shares([("G06N",)], 4) == {"G06N": 1.0}


def test_class_shares_four_families():
    fams = [("G06N",), ("G06N",), ("H04L",), ("G06F",)]
    assert class_shares(fams, 4) == {"G06F": 0.25, "G06N": 0.25 + 0.25, "H04L": 0.25}


def test_class_shares_truncation_merges():
    # 4-char truncation folds subgroup variants into one class
    fams = [("G06N10",), ("G06N20",)]
    assert class_shares(fams, 4) == {"G06N": 1.0}
    assert class_shares(fams, 6) == {"G06N10": 0.5, "G06N20": 0.5}


def test_class_shares_splits_within_family():
    assert class_shares([("G06N", "H04L")], 4) == {"G06N": 0.5, "H04L": 0.5}


def test_portfolio_vector_from_corpus(linked):
    corpus = linked(
        [
            patent_row("P1", "F1", "A1", classes="G06N"),
            patent_row("P2", "F2", "A1", classes="H04L"),
        ],
        [applicant_row("A1", country="US")],
    )
    vec = portfolio_vector(corpus, "US")
    assert vec.shares == {"G06N": 0.5, "H04L": 0.5}
    assert vec.support_size == 2
    by_firm = portfolio_vector(corpus, "A1")
    assert by_firm.shares == vec.shares


def test_empty_portfolio_is_error(linked):
    corpus = linked([patent_row("P1", "F1", "A1")], [applicant_row("A1", country="US")])
    with pytest.raises(DataError, match="FR"):
        portfolio_vector(corpus, "FR")


def test_portfolio_shares_must_sum_to_one():
    with pytest.raises(DataError, match="sum"):
        make_portfolio("US", {"G06N": 0.5, "H04L": 0.4})


def test_proximity_identical_portfolios():
    a = make_portfolio("US", {"G06N": 0.6, "H04L": 0.4})
    assert min_complement_proximity(a, a) == pytest.approx(1.0, abs=1e-12)


def test_proximity_disjoint_portfolios():
    a = make_portfolio("US", {"G06N": 1.0})
    b = make_portfolio("CN", {"H04L": 1.0})
    assert min_complement_proximity(a, b) == 0.0


def test_proximity_hand_value():
    a = make_portfolio("NO", {"G06N": 0.5, "H04L": 0.3, "G06F": 0.2})
    b = make_portfolio("PT", {"G06N": 0.2, "H04L": 0.3, "G06F": 0.5})
    assert min_complement_proximity(a, b) == pytest.approx(0.7, abs=1e-15)


share_vectors = st.dictionaries(
    st.sampled_from(["G06N", "H04L", "G06F", "G16H", "B60W"]),
    st.integers(1, 50),
    min_size=1,
    max_size=5,
).map(lambda d: {k: v / sum(d.values()) for k, v in d.items()})


@settings(max_examples=200, deadline=None)
@given(a=share_vectors, b=share_vectors)
def test_proximity_properties(a, b):
    pa, pb = make_portfolio("A", a), make_portfolio("B", b)
    forward = min_complement_proximity(pa, pb)
    assert min_complement_proximity(pb, pa) == forward
    assert -1e-12 <= forward <= 1.0 + 1e-12
    # total-variation identity gives an independent oracle
    keys = set(a) | set(b)
    l1 = math.fsum(abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in sorted(keys))
    assert forward == pytest.approx(1.0 - 0.5 * l1, abs=1e-12)
    assert min_complement_proximity(pa, pa) == pytest.approx(1.0, abs=1e-12)


def test_rca_one_when_shares_match():
    country = CountryPatentCounts("DE", 10, 200)
    world = CountryPatentCounts("WORLD", 500, 10000)
    assert rca(country, world) == pytest.approx(1.0, abs=1e-12)


def test_rca_backsolves_specialization_ratio():
    country = CountryPatentCounts("KR", 43, 500)
    world = CountryPatentCounts("WORLD", 16716, 1_000_000)
    assert rca(country, world) == pytest.approx(5.15, abs=0.01)


def test_rca_zero_total_error():
    world = CountryPatentCounts("WORLD", 500, 10000)
    with pytest.raises(DataError, match="missing total_count"):
        rca(CountryPatentCounts("DE", 5), world)
    with pytest.raises(DataError, match="ai_count of WORLD"):
        rca(CountryPatentCounts("DE", 5, 10), CountryPatentCounts("WORLD", 0, 10000))


def test_counts_validation():
    with pytest.raises(DataError, match="exceeds"):
        CountryPatentCounts("DE", 11, 10)
    with pytest.raises(DataError, match="negative"):
        CountryPatentCounts("DE", -1, 10)


def test_cr_monopoly_is_one():
    conc = concentration_ratio({"FMONO1": 7.0}, q=5, sector="99")
    assert conc.cr == 1.0
    assert conc.total == 7.0


def test_cr_ten_equal_firms():
    per_firm = {f"F{i}": 10.0 for i in range(10)}
    assert concentration_ratio(per_firm, q=5).cr == pytest.approx(0.5, abs=1e-12)


def test_cr_ties_do_not_overcount():
    conc = concentration_ratio({"A": 5.0, "B": 5.0, "C": 5.0, "D": 5.0}, q=3)
    assert conc.cr == pytest.approx(0.75, abs=1e-12)


def test_cr_empty_sector_error():
    with pytest.raises(DataError, match="empty sector"):
        concentration_ratio({}, q=5, sector="62")
    with pytest.raises(DataError, match="zero patents"):
        concentration_ratio({"A": 0.0}, q=5, sector="62")


@settings(max_examples=100, deadline=None)
@given(
    counts=st.lists(st.floats(0.1, 100.0, allow_nan=False), min_size=1, max_size=12),
    q=st.integers(1, 12),
)
def test_cr_monotone_and_capped(counts, q):
    per_firm = {f"F{i}": c for i, c in enumerate(counts)}
    conc = concentration_ratio(per_firm, q=q)
    assert 0.0 < conc.cr <= 1.0 + 1e-12
    if q > 1:
        assert conc.cr >= concentration_ratio(per_firm, q=q - 1).cr - 1e-12
    assert concentration_ratio(per_firm, q=len(counts)).cr == pytest.approx(1.0, abs=1e-12)


def test_sector_firm_counts_splits_shared_families(linked):
    corpus = linked(
        [
            patent_row("P1", "F1", "A1"),
            patent_row("P2", "F1", "A2"),
            patent_row("P3", "F2", "A1"),
        ],
        [
            applicant_row("A1", nace="62"),
            applicant_row("A2", nace="20"),
            applicant_row("A3", nace=""),
        ],
    )
    by_sector = sector_firm_counts(corpus)
    assert by_sector["62"]["A1"] == pytest.approx(1.5)
    assert by_sector["20"]["A2"] == pytest.approx(0.5)
    assert "" not in by_sector


def _citation_fixture(linked):
    patents = [
        patent_row("PUS", "FUS", "AUS"),
        patent_row("PCN", "FCN", "ACN"),
        patent_row("PDE", "FDE", "ADE"),
    ]
    applicants = [
        applicant_row("AUS", country="US"),
        applicant_row("ACN", country="CN"),
        applicant_row("ADE", country="DE"),
    ]
    citations = [
        citation_row("X1", "FUS", citing_applicant="AUS"),
        citation_row("X2", "FCN", citing_applicant="AUS"),
        citation_row("X3", "FCN", citing_applicant="ACN"),
        citation_row("X4", "FCN", citing_applicant="ACN"),
        citation_row("X5", "FUS", citing_applicant="ADE"),
    ]
    return linked(patents, applicants, citations)


def test_citation_matrix_five_edges(linked):
    corpus = aggregate_eu(_citation_fixture(linked), {"DE"})
    mat = citation_matrix(corpus, ["US", "CN", "EU"])
    expected = np.array([[1.0, 1.0, 0.0], [0.0, 2.0, 0.0], [1.0, 0.0, 0.0]])
    assert np.array_equal(mat.counts, expected)
    assert mat.total() == 5.0
    assert np.array_equal(mat.row("CN"), expected[1])


def test_citation_matrix_single_self_cite(linked):
    corpus = linked(
        [patent_row("P1", "F1", "A1")],
        [applicant_row("A1", country="US")],
        [citation_row("X", "F1", citing_applicant="A1")],
    )
    mat = citation_matrix(corpus, ["US"])
    assert mat.counts[0, 0] == 1.0


def test_citation_matrix_fractional_split(linked):
    corpus = linked(
        [
            patent_row("P1", "F1", "A1"),
            patent_row("P2", "F1", "A2"),
        ],
        [applicant_row("A1", country="US"), applicant_row("A2", country="CN")],
        [citation_row("X", "F1", citing_applicant="A1")],
    )
    mat = citation_matrix(corpus, ["US", "CN"])
    assert mat.counts[0, 0] == pytest.approx(0.5)
    assert mat.counts[0, 1] == pytest.approx(0.5)
    first = citation_matrix(corpus, ["US", "CN"], attribution="first")
    assert first.counts[0, 0] == 0.0 and first.counts[0, 1] == 1.0


def test_citation_matrix_axis_validation(linked):
    corpus = _citation_fixture(linked)
    with pytest.raises(DataError, match="unknown axis code"):
        citation_matrix(corpus, ["US", "ZZ"])
    with pytest.raises(DataError, match="repeated"):
        citation_matrix(corpus, ["US", "US"])
    with pytest.raises(DataError, match="overlap"):
        citation_matrix(aggregate_eu(corpus, {"DE"}), ["DE", "EU"])
    with pytest.raises(DataError, match="grouping"):
        citation_matrix(corpus, ["US"], grouping="bogus")


def test_citation_matrix_conservation(linked):
    corpus = _citation_fixture(linked)
    mat = citation_matrix(corpus, ["US", "CN", "DE"])
    assert mat.total() == pytest.approx(len(corpus.citations), abs=1e-9)


def test_foreign_share_values(linked):
    corpus = aggregate_eu(_citation_fixture(linked), {"DE"})
    mat = citation_matrix(corpus, ["US", "CN", "EU"])
    assert foreign_citation_share(mat, "US") == pytest.approx(0.5)
    assert foreign_citation_share(mat, "CN") == 0.0
    assert foreign_citation_share(mat, "EU") == pytest.approx(1.0)


def test_foreign_share_errors():
    from patlas.indices import CitationMatrix

    empty = CitationMatrix(axis=("US", "CN"), counts=np.zeros((2, 2)), grouping="applicant")
    with pytest.raises(DataError, match="zero citation row"):
        foreign_citation_share(empty, "US")
    with pytest.raises(DataError, match="not on the matrix axis"):
        foreign_citation_share(empty, "FR")
