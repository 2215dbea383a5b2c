"""Dyad-year panel construction and PPML gravity estimation.

The panel crosses the bilateral covariate file with the macro file and
attaches family-level citation flows from the corpus. Estimation is
Poisson pseudo-maximum likelihood via iteratively reweighted least
squares, with dyad-clustered sandwich covariance.

All matrix accumulations go through ``np.einsum(..., optimize=False)``
(single-threaded C loops) so results are bit-identical regardless of
the BLAS thread count.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass
from typing import Iterator

import numpy as np
import pandas as pd
from scipy.linalg import qr
from scipy.special import xlogy

from . import registry
from .corpus import LinkedCorpus
from .errors import CollinearityWarning, ConvergenceError, DataError, FewClustersWarning, SchemaError
from .indices import class_shares

BILATERAL_COLUMNS = [
    "origin", "dest", "year", "distance_km", "common_language", "common_legal",
    "common_religion", "colonial", "contiguous", "rta", "eu_pair",
]
MACRO_COLUMNS = ["country", "year", "gdp", "gdp_pc", "rd_share", "ai_patent_stock"]

_BINARY_BILATERAL = ["common_language", "common_legal", "colonial", "contiguous", "rta", "eu_pair"]

DEFAULT_OFFSET = 0.0001

#: Regressor blocks for the four nested specification layouts.
BILATERAL_BLOCK = [
    "log_distance", "common_language", "common_legal", "common_religion",
    "colonial", "contiguous", "rta",
]
MACRO_BLOCK = [
    "log_gdp_orig", "log_gdp_dest", "log_gdp_pc_orig", "log_gdp_pc_dest",
    "rd_share_orig", "rd_share_dest",
]
AI_BLOCK = ["log_ai_orig", "log_ai_dest", "proximity"]
EU_BLOCK = ["eu_orig", "eu_dest", "eu_both"]

SPEC_BLOCKS = {
    1: BILATERAL_BLOCK,
    2: BILATERAL_BLOCK + MACRO_BLOCK,
    3: BILATERAL_BLOCK + MACRO_BLOCK + AI_BLOCK,
    4: BILATERAL_BLOCK + MACRO_BLOCK + AI_BLOCK + EU_BLOCK,
}

# Log-transformed design columns and the panel variable feeding each.
LOG_SOURCES = {
    "log_distance": "distance_km",
    "log_gdp_orig": "gdp_orig",
    "log_gdp_dest": "gdp_dest",
    "log_gdp_pc_orig": "gdp_pc_orig",
    "log_gdp_pc_dest": "gdp_pc_dest",
    "log_ai_orig": "ai_stock_orig",
    "log_ai_dest": "ai_stock_dest",
}


@dataclass(frozen=True)
class DyadObservation:
    origin: str
    dest: str
    year: int
    citations: float
    distance_km: float
    common_language: int
    common_legal: int
    common_religion: float
    colonial: int
    contiguous: int
    rta: int
    eu_orig: int
    eu_dest: int
    eu_pair: int
    gdp_orig: float
    gdp_dest: float
    gdp_pc_orig: float
    gdp_pc_dest: float
    rd_share_orig: float
    rd_share_dest: float
    ai_stock_orig: float
    ai_stock_dest: float
    proximity: float


@dataclass(frozen=True)
class DyadPanel:
    """Directed dyad-year panel with drop diagnostics.

    Iterating yields :class:`DyadObservation` rows; ``table`` is the
    underlying frame sorted by (origin, dest, year).
    """

    table: pd.DataFrame
    dropped: dict[str, float]

    def __len__(self) -> int:
        return len(self.table)

    def __iter__(self) -> Iterator[DyadObservation]:
        for r in self.table.itertuples(index=False):
            yield DyadObservation(**{f: getattr(r, f) for f in DyadObservation.__dataclass_fields__})

    def positive_subset(self) -> "DyadPanel":
        return DyadPanel(
            table=self.table[self.table["citations"] > 0].reset_index(drop=True),
            dropped=dict(self.dropped),
        )


@dataclass(frozen=True)
class DesignMatrix:
    y: np.ndarray
    X: np.ndarray
    columns: tuple[str, ...]
    cluster_ids: np.ndarray
    n_clusters: int
    cluster_kind: str
    row_keys: tuple[tuple[str, str, int], ...]
    offset: float

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.columns.index(name)]


@dataclass(frozen=True)
class FitResult:
    coefficients: dict[str, float]
    covariance: np.ndarray
    se: dict[str, float]
    clusters: int | None
    pseudo_r2: float | None
    iterations: int
    converged: bool
    n_obs: int
    deviance: float
    column_names: tuple[str, ...]
    deviance_trace: tuple[float, ...]
    dropped_columns: tuple[str, ...]


def _read_covariate_table(path, required: list[str], label: str, numeric: list[str]) -> pd.DataFrame:
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except FileNotFoundError:
        raise SchemaError(f"{label}: cannot read {path}") from None
    except pd.errors.EmptyDataError:
        raise SchemaError(f"{label}: empty file") from None
    missing = [c for c in required if c not in df.columns]
    if missing:
        raise SchemaError(f"{label}: malformed header, missing columns {missing}")
    df = df[required].copy()
    for c in numeric:
        parsed = pd.to_numeric(df[c].str.strip(), errors="coerce")
        if parsed.isna().any():
            row = int(parsed.index[parsed.isna()][0]) + 1
            raise DataError(f"{label}: unparseable numeric value in column {c!r}, row {row}")
        df[c] = parsed
    return df


def _check_binary(df: pd.DataFrame, cols: list[str], label: str) -> None:
    for c in cols:
        bad = ~df[c].isin([0, 1])
        if bad.any():
            row = int(df.index[bad][0]) + 1
            raise DataError(f"{label}: column {c!r} must be 0/1, row {row}")


def _country_portfolios(corpus: LinkedCorpus, countries: list[str], class_level: int, max_year=None):
    """Class-share vectors per country, skipping countries with no families."""
    fam = corpus.families
    if max_year is not None:
        fam = fam[fam["earliest_pub"].dt.year <= max_year]
    portfolios: dict[str, dict[str, float]] = {}
    for c in countries:
        mask = fam["countries"].map(lambda cs, c=c: c in cs)
        shares = class_shares(list(fam.loc[mask, "classes"]), class_level)
        if shares:
            portfolios[c] = shares
    return portfolios


def _proximity_lookup(corpus, countries: list[str], class_level: int, years, yearly: bool):
    """(origin, dest[, year]) → proximity. Countries without a portfolio score 0."""
    out: dict = {}
    def fill(portfolios, year=None):
        for i in countries:
            for j in countries:
                if i == j:
                    continue
                a, b = portfolios.get(i), portfolios.get(j)
                value = _min_overlap(a, b) if a and b else 0.0
                out[(i, j) if year is None else (i, j, year)] = value
    if yearly:
        for year in years:
            fill(_country_portfolios(corpus, countries, class_level, max_year=year), year)
    else:
        fill(_country_portfolios(corpus, countries, class_level))
    return out


def _min_overlap(a: dict[str, float], b: dict[str, float]) -> float:
    value = 0.0
    for key in sorted(set(a) | set(b)):
        value += min(a.get(key, 0.0), b.get(key, 0.0))
    return value


def build_panel(
    corpus: LinkedCorpus,
    bilateral_path,
    macro_path,
    *,
    attribution: str = "fractional",
    proximity_yearly: bool = False,
    class_level: int = 4,
) -> DyadPanel:
    """Assemble the directed dyad-year panel.

    One row per bilateral (origin, dest, year) with origin != dest and
    macro coverage on both sides; citation flows aggregate dated,
    country-attributed family citations, and dyads without flows keep
    an explicit zero. Dropped material is tallied in ``panel.dropped``.
    """
    if not corpus.linked or corpus.families is None:
        raise DataError("build_panel requires a linked corpus")
    bil = _read_covariate_table(
        bilateral_path, BILATERAL_COLUMNS, "bilateral",
        numeric=[c for c in BILATERAL_COLUMNS if c not in ("origin", "dest")],
    )
    mac = _read_covariate_table(
        macro_path, MACRO_COLUMNS, "macro",
        numeric=[c for c in MACRO_COLUMNS if c != "country"],
    )
    for df, cols in ((bil, ["origin", "dest"]), (mac, ["country"])):
        for c in cols:
            df[c] = df[c].str.upper()
    bad_codes = sorted(
        set(bil.loc[~bil["origin"].isin(registry.ISO_ALPHA2), "origin"])
        | set(bil.loc[~bil["dest"].isin(registry.ISO_ALPHA2), "dest"])
        | set(mac.loc[~mac["country"].isin(registry.ISO_ALPHA2), "country"])
    )
    if bad_codes:
        raise DataError("mismatched country codes in covariate files: " + ", ".join(bad_codes))
    _check_binary(bil, _BINARY_BILATERAL, "bilateral")
    religion = bil["common_religion"]
    if ((religion < 0) | (religion > 1)).any():
        row = int(religion.index[(religion < 0) | (religion > 1)][0]) + 1
        raise DataError(f"bilateral: common_religion outside [0,1], row {row}")
    bil["year"] = bil["year"].astype(np.int64)
    mac["year"] = mac["year"].astype(np.int64)
    if bil.duplicated(["origin", "dest", "year"]).any():
        raise DataError("bilateral: duplicate (origin, dest, year) rows")
    if mac.duplicated(["country", "year"]).any():
        raise DataError("macro: duplicate (country, year) rows")

    dropped: dict[str, float] = {}
    self_rows = bil["origin"] == bil["dest"]
    if self_rows.any():
        dropped["self_pair_covariates"] = float(self_rows.sum())
        bil = bil[~self_rows]

    orig_side = mac.rename(columns={
        "country": "origin", "gdp": "gdp_orig", "gdp_pc": "gdp_pc_orig",
        "rd_share": "rd_share_orig", "ai_patent_stock": "ai_stock_orig",
    })
    dest_side = mac.rename(columns={
        "country": "dest", "gdp": "gdp_dest", "gdp_pc": "gdp_pc_dest",
        "rd_share": "rd_share_dest", "ai_patent_stock": "ai_stock_dest",
    })
    panel = bil.merge(orig_side, on=["origin", "year"], how="inner")
    panel = panel.merge(dest_side, on=["dest", "year"], how="inner")
    lost = len(bil) - len(panel)
    if lost:
        dropped["missing_macro"] = float(lost)
    if panel.empty:
        raise DataError("empty panel: no bilateral rows have macro coverage on both sides")

    flows, flow_diag = _citation_flows(corpus, attribution)
    dropped.update(flow_diag)
    panel = panel.merge(flows, on=["origin", "dest", "year"], how="left")
    panel["citations"] = panel["citations"].fillna(0.0)
    covered = flows.merge(panel[["origin", "dest", "year"]], on=["origin", "dest", "year"])
    uncovered_w = float(flows["citations"].sum() - covered["citations"].sum())
    if uncovered_w > 1e-9 or len(flows) > len(covered):
        dropped["uncovered_flows"] = uncovered_w
        dropped["uncovered_cells"] = float(len(flows) - len(covered))

    members = corpus.eu_members
    panel["eu_orig"] = panel["origin"].isin(members).astype(np.int64)
    panel["eu_dest"] = panel["dest"].isin(members).astype(np.int64)

    countries = sorted(set(panel["origin"]) | set(panel["dest"]))
    years = sorted(set(panel["year"]))
    prox = _proximity_lookup(corpus, countries, class_level, years, proximity_yearly)
    if proximity_yearly:
        keys = zip(panel["origin"], panel["dest"], panel["year"])
    else:
        keys = zip(panel["origin"], panel["dest"])
    panel["proximity"] = [prox[k] for k in keys]

    for c in _BINARY_BILATERAL:
        panel[c] = panel[c].astype(np.int64)
    panel = panel.sort_values(["origin", "dest", "year"], kind="stable").reset_index(drop=True)
    order = [f for f in DyadObservation.__dataclass_fields__]
    return DyadPanel(table=panel[order], dropped=dropped)


def _citation_flows(corpus: LinkedCorpus, attribution: str):
    """Aggregate dated citation edges to (origin, dest, year) weights."""
    if attribution not in ("fractional", "first"):
        raise DataError(f"unknown attribution mode: {attribution!r}")
    diag: dict[str, float] = {}
    cit = corpus.citations
    undated = cit["citation_date"].isna()
    if undated.any():
        diag["undated_citations"] = float(undated.sum())
    cit = cit[~undated]
    unattributed = (cit["citing_country"] == "") | cit["cited_countries"].map(len).eq(0)
    if unattributed.any():
        diag["unattributed_citations"] = float(unattributed.sum())
    cit = cit[~unattributed]
    if cit.empty:
        flows = pd.DataFrame({"origin": [], "dest": [], "year": [], "citations": []})
        flows["year"] = flows["year"].astype(np.int64)
        return flows, diag

    if attribution == "first":
        dests = cit["cited_countries"].str[0]
        long = pd.DataFrame({
            "origin": cit["citing_country"].to_numpy(),
            "dest": dests.to_numpy(),
            "year": cit["citation_date"].dt.year.to_numpy(),
            "weight": 1.0,
        })
    else:
        lens = cit["cited_countries"].map(len).to_numpy()
        long = pd.DataFrame({
            "origin": np.repeat(cit["citing_country"].to_numpy(), lens),
            "dest": [c for cs in cit["cited_countries"] for c in cs],
            "year": np.repeat(cit["citation_date"].dt.year.to_numpy(), lens),
            "weight": np.repeat(1.0 / lens, lens),
        })
    self_flow = long["origin"] == long["dest"]
    if self_flow.any():
        diag["self_flows"] = float(long.loc[self_flow, "weight"].sum())
    long = long[~self_flow]
    flows = (
        long.groupby(["origin", "dest", "year"], as_index=False)["weight"].sum()
        .rename(columns={"weight": "citations"})
    )
    return flows, diag


def build_design(
    panel: DyadPanel,
    blocks: list[str],
    *,
    offset: float = DEFAULT_OFFSET,
    cluster: str = "ordered",
    origin_fe: bool = False,
    dest_fe: bool = False,
    binary_response: bool = False,
) -> DesignMatrix:
    """Assemble a named design matrix from panel variables.

    Distance, GDP, GDP per capita, and AI stocks enter as ln(x + offset);
    binary flags and the religion index enter untransformed; the count
    response stays in levels (or becomes the positive-flow indicator
    with ``binary_response``). Time dummies are always added; origin
    and destination dummies on request. The alphabetically first
    category of each dummy block is the dropped reference.
    """
    if offset <= 0:
        raise DataError(f"offset must be positive, got {offset}")
    if cluster not in ("ordered", "unordered"):
        raise DataError(f"cluster must be 'ordered' or 'unordered', got {cluster!r}")
    table = panel.table
    if table.empty:
        raise DataError("empty panel")

    n = len(table)
    cols: dict[str, np.ndarray] = {"const": np.ones(n)}
    for name in blocks:
        if name in LOG_SOURCES:
            src = LOG_SOURCES[name]
            x = table[src].to_numpy(dtype=float)
            if (x < 0).any():
                row = int(np.flatnonzero(x < 0)[0]) + 1
                raise DataError(f"negative covariate {src!r} at row {row}")
            cols[name] = np.log(x + offset)
        elif name == "eu_both":
            cols[name] = table["eu_pair"].to_numpy(dtype=float)
        else:
            cols[name] = table[name].to_numpy(dtype=float)

    years = sorted(set(table["year"]))
    for year in years[1:]:
        cols[f"year_{year}"] = (table["year"] == year).to_numpy(dtype=float)
    for enabled, prefix, key in ((origin_fe, "orig", "origin"), (dest_fe, "dest", "dest")):
        if not enabled:
            continue
        cats = sorted(set(table[key]))
        for cat in cats[1:]:
            cols[f"{prefix}_{cat}"] = (table[key] == cat).to_numpy(dtype=float)

    names, matrix = _drop_constant_columns(cols)
    cluster_ids, n_clusters = _cluster_ids(table, cluster)
    row_keys = tuple(zip(table["origin"], table["dest"], (int(t) for t in table["year"])))
    y = table["citations"].to_numpy(dtype=float)
    if binary_response:
        y = (y > 0).astype(float)
    return DesignMatrix(
        y=y,
        X=matrix,
        columns=names,
        cluster_ids=cluster_ids,
        n_clusters=n_clusters,
        cluster_kind=cluster,
        row_keys=row_keys,
        offset=offset,
    )


def transform_covariates(
    panel: DyadPanel,
    offset: float = DEFAULT_OFFSET,
    specification: int = 1,
    cluster: str = "ordered",
) -> DesignMatrix:
    """Design matrix for one of the four nested specification layouts.

    Specification 1 is the bilateral baseline with time, origin, and
    destination effects; 2 swaps country effects for macro controls;
    3 adds AI stocks and portfolio proximity; 4 adds the EU dummies.
    """
    if specification not in SPEC_BLOCKS:
        raise DataError(f"specification must be one of {sorted(SPEC_BLOCKS)}, got {specification}")
    fe = specification == 1
    return build_design(
        panel, SPEC_BLOCKS[specification],
        offset=offset, cluster=cluster, origin_fe=fe, dest_fe=fe,
    )


def _drop_constant_columns(cols: dict[str, np.ndarray]) -> tuple[tuple[str, ...], np.ndarray]:
    kept, dropped = [], []
    for name, x in cols.items():
        if name != "const" and np.ptp(x) == 0:
            dropped.append(name)
        else:
            kept.append(name)
    if dropped:
        warnings.warn(
            "dropping constant columns: " + ", ".join(dropped), CollinearityWarning, stacklevel=3
        )
    matrix = np.column_stack([cols[name] for name in kept])
    return tuple(kept), matrix


def _cluster_ids(table: pd.DataFrame, cluster: str) -> tuple[np.ndarray, int]:
    if cluster == "ordered":
        labels = [f"{o}>{d}" for o, d in zip(table["origin"], table["dest"])]
    else:
        labels = [f"{min(o, d)}|{max(o, d)}" for o, d in zip(table["origin"], table["dest"])]
    uniq = sorted(set(labels))
    index = {lab: k for k, lab in enumerate(uniq)}
    return np.array([index[lab] for lab in labels], dtype=np.int64), len(uniq)


def make_design(
    y: np.ndarray,
    X: np.ndarray,
    columns,
    cluster_ids=None,
    offset: float = DEFAULT_OFFSET,
) -> DesignMatrix:
    """Assemble a DesignMatrix from raw arrays (for tests and scripts)."""
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    if cluster_ids is None:
        cluster_ids = np.arange(len(y), dtype=np.int64)
    uniq, compact = np.unique(np.asarray(cluster_ids), return_inverse=True)
    return DesignMatrix(
        y=y, X=X, columns=tuple(columns),
        cluster_ids=compact.astype(np.int64), n_clusters=len(uniq),
        cluster_kind="ordered",
        row_keys=tuple(("", "", int(k)) for k in range(len(y))),
        offset=offset,
    )


def _prune_collinear(X: np.ndarray, names: tuple[str, ...]):
    """Drop linearly dependent columns via pivoted QR; returns kept/dropped."""
    n, k = X.shape
    if k == 0:
        raise DataError("design has no columns")
    # scale columns to unit norm for a meaningful rank threshold
    norms = np.sqrt(np.einsum("ij,ij->j", X, X, optimize=False))
    norms[norms == 0] = 1.0
    _, r, piv = qr(X / norms, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    threshold = max(n, k) * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
    rank = int((diag > threshold).sum())
    keep_idx = sorted(piv[:rank])
    drop_idx = sorted(piv[rank:])
    if drop_idx:
        dropped = tuple(names[i] for i in drop_idx)
        warnings.warn(
            "pruning collinear columns: " + ", ".join(dropped), CollinearityWarning, stacklevel=3
        )
    else:
        dropped = tuple()
    kept_names = tuple(names[i] for i in keep_idx)
    return X[:, keep_idx], kept_names, dropped


def _poisson_deviance(y: np.ndarray, mu: np.ndarray) -> float:
    return float(2.0 * np.sum(xlogy(y, y) - xlogy(y, mu) - y + mu))


def _mu(X: np.ndarray, beta: np.ndarray) -> np.ndarray:
    eta = np.einsum("ij,j->i", X, beta, optimize=False)
    return np.exp(np.clip(eta, -500.0, 500.0))


def _pseudo_r2_value(y: np.ndarray, mu: np.ndarray) -> float | None:
    if np.ptp(mu) == 0 or np.ptp(y) == 0:
        return None
    return float(np.corrcoef(y, mu)[0, 1] ** 2)


def ppml_fit(design: DesignMatrix, max_iter: int = 100, tol: float = 1e-8) -> FitResult:
    """Poisson pseudo-maximum likelihood via IRLS with step-halving.

    Stops when the largest coefficient change or the relative deviance
    change falls below ``tol``, then polishes until the score is at
    numerical zero so first-order conditions hold on every accepted fit.
    """
    y = np.asarray(design.y, dtype=float)
    if (y < 0).any():
        raise DataError("response contains negative values")
    if not (y > 0).any():
        raise DataError("all-zero response")

    X, names, dropped = _prune_collinear(design.X, design.columns)
    n, k = X.shape
    beta = np.zeros(k)
    if "const" in names:
        beta[names.index("const")] = math.log(float(y.mean()) + design.offset)

    mu = _mu(X, beta)
    dev = _poisson_deviance(y, mu)
    trace = [dev]
    converged = False
    iterations = 0
    for _ in range(max_iter):
        iterations += 1
        new_beta, new_dev = _irls_step(y, X, beta, dev)
        delta = float(np.max(np.abs(new_beta - beta)))
        rel_dev = abs(new_dev - dev) / (abs(dev) + tol)
        beta, dev = new_beta, new_dev
        trace.append(dev)
        if delta < tol or rel_dev < tol:
            converged = True
            break
    if not converged:
        raise ConvergenceError(
            f"PPML did not converge in {max_iter} iterations; deviance trace: "
            + ", ".join(f"{d:.6g}" for d in trace[-6:])
        )
    # polish: a converged deviance criterion may leave a small score;
    # extra quadratic steps push it to numerical zero
    for _ in range(iterations, max_iter):
        mu = _mu(X, beta)
        score = np.einsum("i,ij->j", y - mu, X, optimize=False)
        if float(np.max(np.abs(score))) <= 1e-7:
            break
        iterations += 1
        new_beta, new_dev = _irls_step(y, X, beta, dev)
        if float(np.max(np.abs(new_beta - beta))) == 0.0:
            break
        beta, dev = new_beta, new_dev
        trace.append(dev)

    mu = _mu(X, beta)
    A = np.einsum("i,ij,ik->jk", mu, X, X, optimize=False)
    cov = np.linalg.inv(A)
    cov = (cov + cov.T) / 2.0
    se = np.sqrt(np.diag(cov))
    return FitResult(
        coefficients={name: float(b) for name, b in zip(names, beta)},
        covariance=cov,
        se={name: float(s) for name, s in zip(names, se)},
        clusters=None,
        pseudo_r2=_pseudo_r2_value(y, mu),
        iterations=iterations,
        converged=True,
        n_obs=n,
        deviance=dev,
        column_names=names,
        deviance_trace=tuple(trace),
        dropped_columns=dropped,
    )


def _irls_step(y, X, beta, dev):
    eta = np.einsum("ij,j->i", X, beta, optimize=False)
    mu = np.exp(np.clip(eta, -500.0, 500.0))
    z = eta + (y - mu) / mu
    w = mu
    A = np.einsum("i,ij,ik->jk", w, X, X, optimize=False)
    b = np.einsum("i,ij->j", w * z, X, optimize=False)
    try:
        new_beta = np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        ridge = A + 1e-8 * np.eye(A.shape[0])
        new_beta = np.linalg.solve(ridge, b)
    new_dev = _poisson_deviance(y, _mu(X, new_beta))
    halvings = 0
    while new_dev > dev + 1e-10 * (1.0 + abs(dev)) and halvings < 30:
        new_beta = 0.5 * (new_beta + beta)
        new_dev = _poisson_deviance(y, _mu(X, new_beta))
        halvings += 1
    return new_beta, new_dev


def clustered_se(fit: FitResult, design: DesignMatrix) -> FitResult:
    """Dyad-clustered sandwich covariance with the G/(G-1) correction."""
    if not fit.converged:
        raise DataError("clustered_se requires a converged fit")
    idx = [design.columns.index(name) for name in fit.column_names]
    X = design.X[:, idx]
    y = np.asarray(design.y, dtype=float)
    beta = np.array([fit.coefficients[name] for name in fit.column_names])
    clusters = np.asarray(design.cluster_ids)
    G = int(design.n_clusters)
    k = X.shape[1]
    if G <= 1:
        raise DataError("clustered covariance needs at least 2 clusters")
    if G <= k:
        warnings.warn(
            f"few clusters: {G} clusters for {k} coefficients", FewClustersWarning, stacklevel=2
        )

    mu = _mu(X, beta)
    A = np.einsum("i,ij,ik->jk", mu, X, X, optimize=False)
    resid = y - mu
    S = np.zeros((G, k))
    np.add.at(S, clusters, X * resid[:, None])
    B = np.einsum("gj,gk->jk", S, S, optimize=False)
    A_inv = np.linalg.inv(A)
    V = A_inv @ B @ A_inv * (G / (G - 1.0))
    V = (V + V.T) / 2.0
    se = np.sqrt(np.diag(V))
    return dataclasses.replace(
        fit,
        covariance=V,
        se={name: float(s) for name, s in zip(fit.column_names, se)},
        clusters=G,
    )


def pseudo_r2(fit: FitResult, design: DesignMatrix) -> float | None:
    """Squared correlation between the response and fitted means."""
    if not fit.converged:
        raise DataError("pseudo_r2 requires a converged fit")
    idx = [design.columns.index(name) for name in fit.column_names]
    X = design.X[:, idx]
    beta = np.array([fit.coefficients[name] for name in fit.column_names])
    return _pseudo_r2_value(np.asarray(design.y, dtype=float), _mu(X, beta))


def marginal_effect(coefficient: float) -> float:
    """Percent change in expected counts implied by a coefficient: e^b - 1."""
    return math.expm1(coefficient)
