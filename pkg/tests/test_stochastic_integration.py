import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from cyllevy import levy_drivers as ld
from cyllevy import rkhs
from cyllevy import stochastic_integration as si
from cyllevy.errors import CylLevyError, DimensionMismatch
from cyllevy.mc_stats import mc_mean

N = 100_000
GAUSS = ld.LevyTriplet1D(0.0, 1.0)


def comp_poisson(rate=1.0):
    return rkhs.unit_driver(ld.LevyTriplet1D(0.0, 0.0, ld.CompoundPoisson(rate, ld.PointMass(1.0))))


def series(Q, drivers):
    return rkhs.build_series_process(rkhs.factorize(Q), drivers)


def sign_first(j, hist):
    s = np.where(hist[:, 0, -1] >= 0, 1.0, -1.0)
    return s[:, None, None] * np.ones((1, 1, 1))


def test_zero_integrand_gives_zero():
    proc = series(np.eye(2), comp_poisson())
    phi = si.StepIntegrand.constant(np.zeros((2, 2)), 1.0, 3)
    out = si.integrate(phi, proc, [1.0, 2.0], 1, 50)
    assert np.array_equal(out, np.zeros(50))
    rep = si.ito_isometry_check(phi, proc, [1.0, 2.0], 200, 1)
    assert rep["lhs"] == 0.0 and rep["rhs"] == 0.0


def test_scalar_constant_integrand():
    proc = series(np.eye(1), comp_poisson(2.0))
    phi = si.StepIntegrand.constant([[1.0]], 2.0, 4)
    f = np.array([1.5])
    I = si.integrate(phi, proc, f, 2, N)
    assert mc_mean(I * I, 1.5 ** 2 * 2.0).passed
    assert si.isometry_exact(phi, proc.factor, f) == pytest.approx(4.5)


def test_scalar_integral_equals_scaled_driver():
    proc = series(np.eye(1), GAUSS)
    phi = si.StepIntegrand.constant([[1.0]], 1.0, 5)
    grid = np.linspace(0.0, 1.0, 6)
    I = si.integrate(phi, proc, [2.0], 3, 100, grid=grid)
    m = si.sample_drivers(proc, grid, 3, 100)
    np.testing.assert_allclose(I, 2.0 * m[:, 0, -1], rtol=0, atol=1e-13)


def test_identity_integrand_isometry():
    Q = np.array([[2.0, 0.5, 0.0], [0.5, 1.0, 0.2], [0.0, 0.2, 0.5]])
    fact = rkhs.factorize(Q)
    proc = rkhs.build_series_process(fact, (GAUSS, comp_poisson(), comp_poisson(3.0)))
    phi = si.StepIntegrand.constant(np.eye(3), 1.5, 3)
    f = np.array([1.0, -1.0, 2.0])
    rep = si.ito_isometry_check(phi, proc, f, N, 4)
    assert rep["rhs"] == pytest.approx(1.5 * np.sum((fact.i_Q.T @ f) ** 2), rel=1e-12)
    assert rep["pass"]


def test_scalar_isometry_exact_rhs_is_one():
    proc = series(np.eye(1), GAUSS)
    rep = si.ito_isometry_check(si.StepIntegrand.constant([[1.0]]), proc, [1.0], 1000, 5)
    assert rep["rhs"] == 1.0


def test_adapted_sign_integrand_isometry():
    proc = series(np.eye(1), comp_poisson())
    phi = si.StepIntegrand.adapted(np.linspace(0, 1, 9), sign_first, (1, 1))
    rep = si.ito_isometry_check(phi, proc, [1.0], N, 6)
    assert rep["mode"] == "adapted"
    # |sign| = 1, so the right side is exactly T
    assert rep["rhs"] == pytest.approx(1.0, abs=1e-12)
    assert rep["pass"]


def test_adapted_integrand_sees_only_the_past():
    seen = []

    def fn(j, hist):
        seen.append(hist.shape[2])
        return np.ones((hist.shape[0], 1, 1))

    proc = series(np.eye(1), GAUSS)
    phi = si.StepIntegrand.adapted(np.linspace(0, 1, 5), fn, (1, 1))
    si.integrate(phi, proc, [1.0], 1, 10)
    assert seen == [1, 2, 3, 4]


def test_adapted_shape_is_checked():
    proc = series(np.eye(1), GAUSS)
    phi = si.StepIntegrand.adapted([0.0, 1.0], lambda j, h: np.ones((h.shape[0], 2, 1)), (1, 1))
    with pytest.raises(CylLevyError):
        si.integrate(phi, proc, [1.0], 1, 10)


def test_dimension_checks():
    proc = series(np.eye(2), GAUSS)
    phi = si.StepIntegrand.constant(np.eye(3))
    with pytest.raises(DimensionMismatch):
        si.integrate(phi, proc, [1.0, 0.0, 0.0], 1, 5)
    with pytest.raises(DimensionMismatch):
        si.integrate(si.StepIntegrand.constant(np.eye(2)), proc, [1.0], 1, 5)


def test_breakpoints_must_lie_on_grid():
    proc = series(np.eye(1), GAUSS)
    phi = si.StepIntegrand(np.array([0.0, 0.3, 1.0]), np.ones((2, 1, 1)))
    with pytest.raises(CylLevyError):
        si.integrate(phi, proc, [1.0], 1, 5, grid=[0.0, 0.5, 1.0])


# --------------------------------------------------------------------------
# cross expectations


def test_uncorrelated_projections_have_zero_rhs():
    proc = series(np.eye(2), (GAUSS, comp_poisson()))
    bp = np.linspace(0, 1, 5)
    h = si.ScalarStep(bp, fn=lambda j, Y: np.tanh(Y[:, 0, -1]) + 1.0)
    rep = si.cross_expectation(h, h, proc, [1.0, 0.0], [0.0, 1.0], N, 7)
    assert rep["cov"] == 0.0 and rep["rhs"] == 0.0
    assert rep["pass"]


def test_unit_steps_same_driver():
    proc = series(np.eye(1), comp_poisson())
    h = si.ScalarStep([0.0, 0.5, 1.0], np.ones(2))
    rep = si.cross_expectation(h, h, proc, [1.0], [1.0], N, 8)
    assert rep["rhs"] == pytest.approx(1.0)
    assert rep["pass"]
    assert abs(rep["lhs"] - 1.0) <= 3 * rep["se"]


def test_zero_step_gives_zero():
    proc = series(np.eye(2), (GAUSS, GAUSS))
    h1 = si.ScalarStep([0.0, 1.0], np.ones(1))
    h0 = si.ScalarStep([0.0, 1.0], np.zeros(1))
    rep = si.cross_expectation(h1, h0, proc, [1.0, 0.0], [1.0, 1.0], 500, 9)
    assert rep["lhs"] == 0.0 and rep["rhs"] == 0.0


def test_correlated_adapted_cross_expectation():
    Q = np.array([[1.0, 0.6], [0.6, 1.0]])
    proc = series(Q, (GAUSS, comp_poisson()))
    bp = np.linspace(0, 2, 5)
    h1 = si.ScalarStep(bp, fn=lambda j, Y: np.where(Y[:, 0, -1] >= 0, 1.0, -1.0))
    h2 = si.ScalarStep(bp, values=np.array([1.0, 2.0, 0.5, -1.0]))
    rep = si.cross_expectation(h1, h2, proc, [1.0, 0.0], [0.0, 1.0], N, 10)
    assert rep["cov"] == pytest.approx(0.6, abs=1e-12)
    assert rep["pass"]


# --------------------------------------------------------------------------
# basis independence


def test_same_basis_has_zero_difference():
    fact = rkhs.factorize(np.diag([2.0, 1.0]))
    phi = si.StepIntegrand.constant(np.eye(2), 1.0, 2)
    rep = si.basis_independence_check(phi, fact, fact, (GAUSS, GAUSS), [1.0, 1.0], 500, 11)
    assert rep["lhs"] == 0.0 and rep["max_pathwise"] == 0.0 and rep["pass"]


def test_rotated_gaussian_basis_is_pathwise_equal():
    fact = rkhs.factorize(np.diag([2.0, 1.0]))
    c = np.cos(np.pi / 4)
    R = np.array([[c, -c], [c, c]])
    phi = si.StepIntegrand(np.linspace(0, 1, 4), np.stack([np.eye(2), [[1.0, 2.0], [0.0, 1.0]], [[0.5, 0.0], [-1.0, 3.0]]]))
    rep = si.basis_independence_check(phi, fact, fact.rotated(R), (GAUSS, GAUSS), [1.0, -2.0], 10_000, 12)
    assert rep["max_pathwise"] <= 1e-8
    assert rep["pass"]


def test_bases_of_different_covariances_rejected():
    with pytest.raises(CylLevyError):
        si.rotation_between(np.eye(2), np.diag([1.0, 2.0]))


# --------------------------------------------------------------------------
# properties


vec = hnp.arrays(np.float64, 2, elements=st.floats(-5, 5, allow_nan=False))
_PROC = series(np.array([[1.0, 0.3], [0.3, 0.5]]), (GAUSS, comp_poisson()))
_PHI = si.StepIntegrand(np.linspace(0, 1, 4), np.stack([np.eye(2), [[1.0, 2.0], [0.0, 1.0]], [[0.5, 0.0], [-1.0, 3.0]]]))
_DRV = si.sample_drivers(_PROC, _PHI.breakpoints, 13, 200)


@settings(max_examples=50, deadline=None)
@given(st.floats(-5, 5, allow_nan=False), vec, vec)
def test_linearity_in_the_functional(alpha, f, g):
    F = _PROC.factor
    lhs = si.partial_sums(_PHI, F, _DRV, alpha * f + g)[:, -1]
    a = si.partial_sums(_PHI, F, _DRV, f)[:, -1]
    b = si.partial_sums(_PHI, F, _DRV, g)[:, -1]
    scale = np.abs(alpha * a) + np.abs(b) + 1e-300
    assert np.max(np.abs(lhs - (alpha * a + b)) / scale) <= 1e-10


def test_zero_mean():
    assert si.zero_mean_check(_PHI, _PROC, [1.0, -0.5], N, 14)["pass"]


def test_doob_bound():
    rep = si.doob_check(_PHI, _PROC, [1.0, -0.5], N, 15)
    assert rep["pass"]
    adapted = si.StepIntegrand.adapted(np.linspace(0, 1, 9), lambda j, h: np.where(h[:, 0, -1] >= 0, 1.0, -1.0)[:, None, None] * np.eye(2), (2, 2))
    assert si.doob_check(adapted, _PROC, [1.0, 1.0], 20_000, 16)["pass"]
