import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ndtr, ndtri

from patlas import (
    ConvergenceError,
    DataError,
    SeparationError,
    first_stage_design,
    gen_panel,
    heckman_second_stage,
    inverse_mills,
    probit_fit,
)
from patlas.gravity import build_panel, make_design
from patlas.synth import DEFAULT_GAMMA


def test_inverse_mills_at_zero():
    assert inverse_mills(0.0) == pytest.approx(0.7978845608, abs=1e-9)
    assert inverse_mills(0.0) == pytest.approx(math.sqrt(2 / math.pi), abs=1e-12)


def test_inverse_mills_reference_points():
    # phi(1)/Phi(1) and a far right tail that underflows to ~0
    assert inverse_mills(1.0) == pytest.approx(0.2876, abs=5e-5)
    assert inverse_mills(10.0) < 1e-20
    assert inverse_mills(10.0) >= 0.0


def test_inverse_mills_deep_left_tail():
    # naive phi/Phi is 0/0 here; the stable form tracks the -z asymptote
    for z in (-40.0, -100.0, -300.0):
        value = inverse_mills(z)
        assert math.isfinite(value)
        assert value == pytest.approx(-z, rel=0.05)
    for z in (-6.0, -8.0, -15.0):
        assert inverse_mills(z) == pytest.approx(-z, rel=0.2)


def test_inverse_mills_vector_matches_scalar():
    grid = np.linspace(-8, 8, 33)
    vec = inverse_mills(grid)
    assert vec.shape == grid.shape
    for z, v in zip(grid, vec):
        assert v == pytest.approx(inverse_mills(float(z)), abs=1e-14)


@settings(max_examples=200, deadline=None)
@given(st.floats(-300, 30, allow_nan=False))
def test_inverse_mills_positive_and_decreasing(z):
    value = inverse_mills(z)
    assert value > 0.0 or (z > 25 and value == 0.0)
    assert inverse_mills(z + 0.5) <= value + 1e-12


def test_probit_intercept_only_inverts_share():
    y = np.array([1.0] * 6 + [0.0] * 4)
    fit = probit_fit(make_design(y, np.ones((10, 1)), ["const"]))
    assert fit.gamma["const"] == pytest.approx(float(ndtri(0.6)), abs=1e-8)
    assert fit.converged


def test_probit_recovers_known_coefficients():
    rng = np.random.default_rng(42)
    n = 20_000
    x = rng.uniform(-2, 2, n)
    p = ndtr(0.5 - 1.0 * x)
    y = (rng.uniform(size=n) < p).astype(float)
    design = make_design(y, np.column_stack([np.ones(n), x]), ["const", "x"])
    fit = probit_fit(design)
    assert fit.gamma["const"] == pytest.approx(0.5, abs=0.05)
    assert fit.gamma["x"] == pytest.approx(-1.0, abs=0.05)
    assert fit.se["x"] < 0.05


def test_probit_response_validation():
    X = np.ones((4, 1))
    with pytest.raises(DataError, match="binary"):
        probit_fit(make_design(np.array([0.0, 1.0, 2.0, 0.0]), X, ["const"]))
    with pytest.raises(DataError, match="positive"):
        probit_fit(make_design(np.ones(4), X, ["const"]))
    with pytest.raises(DataError, match="zero"):
        probit_fit(make_design(np.zeros(4), X, ["const"]))


def test_probit_separation_names_column():
    x = np.linspace(-1, 1, 40)
    y = (x > 0).astype(float)
    design = make_design(y, np.column_stack([np.ones(40), x]), ["const", "x"])
    with pytest.raises(SeparationError, match="'x'") as err:
        probit_fit(design)
    assert err.value.culprit == "x"


def test_probit_unconverged_raises():
    rng = np.random.default_rng(13)
    n = 400
    x = rng.uniform(-2, 2, n)
    y = (rng.uniform(size=n) < ndtr(0.3 * x)).astype(float)
    design = make_design(y, np.column_stack([np.ones(n), x]), ["const", "x"])
    with pytest.raises(ConvergenceError, match="did not converge"):
        probit_fit(design, max_iter=1)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_probit_score_at_zero_property(seed):
    rng = np.random.default_rng(seed)
    n = 300
    x = rng.normal(0, 1, n)
    y = (rng.uniform(size=n) < ndtr(0.2 + 0.5 * x)).astype(float)
    if y.mean() in (0.0, 1.0):
        y[0] = 1.0 - y[0]
    fit = probit_fit(make_design(y, np.column_stack([np.ones(n), x]), ["const", "x"]))
    X = np.column_stack([np.ones(n), x])
    eta = X @ np.array([fit.gamma[c] for c in fit.column_names])
    lam_pos = inverse_mills(eta)
    lam_neg = inverse_mills(-eta)
    score = (y * lam_pos - (1 - y) * lam_neg) @ X
    assert np.max(np.abs(score)) <= 1e-6


def synth_selection_panel(tmp_path, seed=7, n_countries=12):
    files, truth = gen_panel(
        tmp_path / f"sel{seed}_{n_countries}", seed=seed, n_countries=n_countries,
        n_years=4, selection=(DEFAULT_GAMMA, 0.0),
    )
    # reuse the generated corpus end to end
    from patlas import link_records, load_corpus

    corpus = link_records(load_corpus(files["patents"], files["applicants"], files["citations"]))
    return build_panel(corpus, files["bilateral"], files["macro"]), truth


def test_first_stage_design_composition(tmp_path):
    panel, _ = synth_selection_panel(tmp_path)
    design = first_stage_design(panel)
    assert set(np.unique(design.y)) <= {0.0, 1.0}
    assert "common_legal" not in design.columns
    for name in ("log_distance", "common_language", "rta"):
        assert name in design.columns
    assert any(c.startswith("orig_") for c in design.columns)
    assert any(c.startswith("dest_") for c in design.columns)


def test_heckman_layout_adds_imr_row(tmp_path):
    panel, _ = synth_selection_panel(tmp_path)
    first = probit_fit(first_stage_design(panel))
    second = heckman_second_stage(panel.positive_subset(), first, specification=2)
    from patlas.gravity import SPEC_BLOCKS

    for name in SPEC_BLOCKS[2]:
        assert name in second.coefficients
    assert "imr" in second.coefficients
    assert second.clusters is not None
    assert second.converged


def test_heckman_requires_positive_subset(tmp_path):
    panel, _ = synth_selection_panel(tmp_path)
    first = probit_fit(first_stage_design(panel))
    if not (panel.table["citations"] == 0).any():
        pytest.skip("fixture produced no zero flows")
    with pytest.raises(DataError, match="positive-flow"):
        heckman_second_stage(panel, first, specification=2)


def test_heckman_rejects_constant_imr(tmp_path):
    panel, _ = synth_selection_panel(tmp_path)
    positive = panel.positive_subset()
    first = probit_fit(first_stage_design(panel))
    flat = type(first)(
        gamma=first.gamma, covariance=first.covariance, se=first.se,
        converged=True, iterations=first.iterations, loglik=first.loglik,
        imr=np.full_like(first.imr, 0.5), linear_predictor=first.linear_predictor,
        row_keys=first.row_keys, column_names=first.column_names,
        n_obs=first.n_obs, dropped_columns=first.dropped_columns,
    )
    with pytest.raises(DataError, match="constant"):
        heckman_second_stage(positive, flat, specification=2)


def test_heckman_rejects_unconverged_first_stage(tmp_path):
    panel, _ = synth_selection_panel(tmp_path)
    positive = panel.positive_subset()
    first = probit_fit(first_stage_design(panel))
    broken = type(first)(
        gamma=first.gamma, covariance=first.covariance, se=first.se,
        converged=False, iterations=first.iterations, loglik=first.loglik,
        imr=first.imr, linear_predictor=first.linear_predictor,
        row_keys=first.row_keys, column_names=first.column_names,
        n_obs=first.n_obs, dropped_columns=first.dropped_columns,
    )
    with pytest.raises(DataError, match="did not converge"):
        heckman_second_stage(positive, broken, specification=2)


def test_heckman_missing_rows_error(tmp_path):
    panel, _ = synth_selection_panel(tmp_path)
    positive = panel.positive_subset()
    # first stage fitted on a smaller panel lacks this panel's dyads
    other, _ = synth_selection_panel(tmp_path, seed=8, n_countries=8)
    first_other = probit_fit(first_stage_design(other))
    with pytest.raises(DataError, match="missing from the first-stage fit"):
        heckman_second_stage(positive, first_other, specification=2)
