"""Two-step selection correction for the citation gravity model.

First stage: probit on the extensive margin (any citations vs none)
using the bilateral block without the legal-origin dummy, plus time,
origin, and destination effects. The fitted linear predictor yields
the inverse Mills ratio, which augments a PPML re-fit on the
positive-flow subsample; the IMR coefficient is the selection term.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtri

from .errors import CollinearityWarning, ConvergenceError, DataError, SeparationError
from .gravity import (
    DEFAULT_OFFSET,
    DesignMatrix,
    DyadPanel,
    FitResult,
    _prune_collinear,
    build_design,
    clustered_se,
    ppml_fit,
)

#: First-stage regressors (the bilateral block minus the legal dummy).
FIRST_STAGE_BLOCK = [
    "log_distance", "common_language", "common_religion", "colonial", "contiguous", "rta",
]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

#: Linear predictors past this magnitude with a still-improving
#: likelihood indicate perfect separation.
_SEPARATION_ETA = 40.0


@dataclass(frozen=True)
class SelectionFit:
    """First-stage probit estimates plus per-row inverse Mills ratios."""

    gamma: dict[str, float]
    covariance: np.ndarray
    se: dict[str, float]
    converged: bool
    iterations: int
    loglik: float
    imr: np.ndarray
    linear_predictor: np.ndarray
    row_keys: tuple
    column_names: tuple[str, ...]
    n_obs: int
    dropped_columns: tuple[str, ...]


def inverse_mills(z):
    """Standard-normal density over CDF, numerically stable in both tails.

    Computed as exp(log phi(z) - log Phi(z)); the log-CDF keeps the
    deep left tail (z below -30, down past -300) finite, where the
    ratio approaches -z.
    """
    z_arr = np.asarray(z, dtype=float)
    value = np.exp(-0.5 * z_arr * z_arr - _LOG_SQRT_2PI - log_ndtr(z_arr))
    if np.ndim(z) == 0:
        return float(value)
    return value


def first_stage_design(
    panel: DyadPanel,
    offset: float = DEFAULT_OFFSET,
    cluster: str = "ordered",
) -> DesignMatrix:
    """Extensive-margin design: 1{citations > 0} on the selection block."""
    return build_design(
        panel, FIRST_STAGE_BLOCK,
        offset=offset, cluster=cluster,
        origin_fe=True, dest_fe=True, binary_response=True,
    )


def _loglik(y: np.ndarray, eta: np.ndarray) -> float:
    return float(np.sum(y * log_ndtr(eta) + (1.0 - y) * log_ndtr(-eta)))


def _score_weights(y: np.ndarray, eta: np.ndarray):
    lam_pos = np.exp(-0.5 * eta * eta - _LOG_SQRT_2PI - log_ndtr(eta))
    lam_neg = np.exp(-0.5 * eta * eta - _LOG_SQRT_2PI - log_ndtr(-eta))
    s = y * lam_pos - (1.0 - y) * lam_neg
    w = lam_pos * lam_neg
    return s, w


def _separating_column(gamma: np.ndarray, X: np.ndarray, names: tuple[str, ...]) -> str:
    """Best culprit guess: the column whose coefficient moves eta the most."""
    best, best_reach = names[0], -1.0
    for k, name in enumerate(names):
        if name == "const":
            continue
        reach = abs(gamma[k]) * float(np.ptp(X[:, k]))
        if reach > best_reach:
            best, best_reach = name, reach
    return best


def probit_fit(design: DesignMatrix, max_iter: int = 100, tol: float = 1e-8) -> SelectionFit:
    """Probit MLE by Fisher scoring with step-halving.

    Uses a ridge fallback (1e-8 on the Hessian diagonal) when the
    information matrix is numerically singular, and raises
    :class:`SeparationError` naming the most likely separating column
    when the linear predictor diverges with an ever-improving
    likelihood.
    """
    y = np.asarray(design.y, dtype=float)
    if not np.isin(y, (0.0, 1.0)).all():
        raise DataError("probit response must be binary 0/1")
    share = float(y.mean())
    if share in (0.0, 1.0):
        raise DataError("single-class response: all outcomes are "
                        + ("positive" if share == 1.0 else "zero"))

    X, names, dropped = _prune_collinear(design.X, design.columns)
    n, k = X.shape
    gamma = np.zeros(k)
    if "const" in names:
        gamma[names.index("const")] = float(ndtri(share))

    eta = np.einsum("ij,j->i", X, gamma, optimize=False)
    loglik = _loglik(y, eta)
    converged = False
    iterations = 0
    for _ in range(max_iter):
        iterations += 1
        s, w = _score_weights(y, eta)
        score = np.einsum("i,ij->j", s, X, optimize=False)
        H = np.einsum("i,ij,ik->jk", w, X, X, optimize=False)
        try:
            step = np.linalg.solve(H, score)
        except np.linalg.LinAlgError:
            step = np.linalg.solve(H + 1e-8 * np.eye(k), score)
        new_gamma = gamma + step
        new_eta = np.einsum("ij,j->i", X, new_gamma, optimize=False)
        new_loglik = _loglik(y, new_eta)
        halvings = 0
        while new_loglik < loglik - 1e-12 * (1.0 + abs(loglik)) and halvings < 30:
            new_gamma = 0.5 * (new_gamma + gamma)
            new_eta = np.einsum("ij,j->i", X, new_gamma, optimize=False)
            new_loglik = _loglik(y, new_eta)
            halvings += 1
        if float(np.max(np.abs(new_eta))) > _SEPARATION_ETA and new_loglik >= loglik:
            culprit = _separating_column(new_gamma, X, names)
            raise SeparationError(
                f"perfect separation detected: linear predictor diverged; "
                f"likely separating column {culprit!r}",
                culprit=culprit,
            )
        delta = float(np.max(np.abs(new_gamma - gamma)))
        gamma, eta, loglik = new_gamma, new_eta, new_loglik
        if delta < tol:
            converged = True
            break
    if not converged:
        raise ConvergenceError(f"probit did not converge in {max_iter} iterations")
    # polish so the score is at numerical zero on every accepted fit
    for _ in range(iterations, max_iter):
        s, w = _score_weights(y, eta)
        score = np.einsum("i,ij->j", s, X, optimize=False)
        if float(np.max(np.abs(score))) <= 1e-7:
            break
        H = np.einsum("i,ij,ik->jk", w, X, X, optimize=False)
        try:
            step = np.linalg.solve(H, score)
        except np.linalg.LinAlgError:
            step = np.linalg.solve(H + 1e-8 * np.eye(k), score)
        if float(np.max(np.abs(step))) == 0.0:
            break
        gamma = gamma + step
        eta = np.einsum("ij,j->i", X, gamma, optimize=False)
        loglik = _loglik(y, eta)
        iterations += 1

    _, w = _score_weights(y, eta)
    H = np.einsum("i,ij,ik->jk", w, X, X, optimize=False)
    cov = np.linalg.inv(H)
    cov = (cov + cov.T) / 2.0
    se = np.sqrt(np.diag(cov))
    return SelectionFit(
        gamma={name: float(g) for name, g in zip(names, gamma)},
        covariance=cov,
        se={name: float(v) for name, v in zip(names, se)},
        converged=True,
        iterations=iterations,
        loglik=loglik,
        imr=inverse_mills(eta),
        linear_predictor=eta,
        row_keys=design.row_keys,
        column_names=names,
        n_obs=n,
        dropped_columns=dropped,
    )


def heckman_second_stage(
    panel: DyadPanel,
    selection: SelectionFit,
    specification: int = 1,
    offset: float = DEFAULT_OFFSET,
    cluster: str = "ordered",
    max_iter: int = 100,
    tol: float = 1e-8,
) -> FitResult:
    """IMR-augmented PPML on the positive-flow subsample.

    The design is the chosen specification layout plus one ``imr``
    regressor whose coefficient is the selection-correction term;
    covariance is dyad-clustered like every other gravity fit.
    """
    if (panel.table["citations"] <= 0).any():
        raise DataError("second stage requires the positive-flow subset; found zero-citation rows")
    if not selection.converged:
        raise DataError("first-stage probit did not converge")

    from .gravity import transform_covariates

    design = transform_covariates(panel, offset=offset, specification=specification, cluster=cluster)
    lam_of = dict(zip(selection.row_keys, selection.imr))
    try:
        lam = np.array([lam_of[key] for key in design.row_keys])
    except KeyError as exc:
        raise DataError(f"panel row {exc.args[0]!r} missing from the first-stage fit") from None
    if float(np.ptp(lam)) < 1e-12:
        raise DataError(
            "IMR column is constant (probit fitted probabilities all equal); "
            "the selection term is collinear with the intercept"
        )

    augmented = DesignMatrix(
        y=design.y,
        X=np.column_stack([design.X, lam]),
        columns=design.columns + ("imr",),
        cluster_ids=design.cluster_ids,
        n_clusters=design.n_clusters,
        cluster_kind=design.cluster_kind,
        row_keys=design.row_keys,
        offset=design.offset,
    )
    fit = ppml_fit(augmented, max_iter=max_iter, tol=tol)
    if "imr" not in fit.column_names:
        warnings.warn("selection term was pruned as collinear", CollinearityWarning, stacklevel=2)
    return clustered_se(fit, augmented)
