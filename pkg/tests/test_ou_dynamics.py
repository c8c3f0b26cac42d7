import warnings

import numpy as np
import pytest

from cyllevy import levy_drivers as ld
from cyllevy import ou_dynamics as ou
from cyllevy import rkhs
from cyllevy.cyl_process import SeriesProcess
from cyllevy.errors import CylLevyError
from cyllevy.mc_stats import compare, mc_mean
from cyllevy.space_model import Semigroup

N = 100_000
GAUSS = ld.LevyTriplet1D(0.0, 1.0)
COMP_POISSON = rkhs.unit_driver(ld.LevyTriplet1D(0.0, 0.0, ld.CompoundPoisson(2.0, ld.Uniform(0.0, 1.0))))
A2 = np.array([[-1.0, 0.5], [-0.5, -2.0]])


def scenario(A=A2, C=None, drivers=(GAUSS, GAUSS), initial=None, T=1.0, dt=0.05, factor=None):
    d = np.asarray(A).shape[0]
    F = np.eye(len(drivers)) if factor is None else factor
    noise = SeriesProcess(F, tuple(drivers))
    C = np.eye(d, noise.dim) if C is None else C
    return ou.OUScenario(Semigroup.from_generator(A), C, noise, initial or ou.zero_initial(d), T, dt)


def test_noiseless_flow_is_the_semigroup():
    y0 = np.array([1.0, -2.0])
    sc = scenario(C=np.zeros((2, 2)), initial=ou.PointInitial(y0))
    Y, ts = ou.simulate(sc, 1, 5)
    a = np.array([0.7, 1.3])
    expected = np.array([y0 @ (sc.semigroup.matrix(t).T @ a) for t in ts])
    np.testing.assert_allclose(Y @ a, np.broadcast_to(expected, (5, len(ts))), rtol=0, atol=1e-12)


def test_zero_generator_collapses_to_noise():
    C = np.array([[1.0, 0.5], [0.0, 2.0]])
    sc = scenario(A=np.zeros((2, 2)), C=C, drivers=(GAUSS, COMP_POISSON), dt=0.1)
    Y, _ = ou.simulate(sc, 2, 200, [1.0], tags=("same",))
    drv = ou.sample_scenario_drivers(sc, 2, 200, tags=("same",))
    a = np.array([0.3, -1.0])
    # Y(t)a = M2(t)(C* a)
    np.testing.assert_allclose(Y[:, 0] @ a, (drv[:, :, -1] - drv[:, :, 0]) @ (C.T @ a), rtol=0, atol=1e-12)


def test_scenario_validation():
    with pytest.raises(CylLevyError):
        scenario(dt=0.3)
    with pytest.raises(CylLevyError):
        scenario(C=np.eye(3))
    with pytest.raises(CylLevyError):
        scenario().step_of(0.123)


def test_simulation_is_deterministic():
    sc = scenario(drivers=(GAUSS, COMP_POISSON))
    a, _ = ou.simulate(sc, 3, 20_000, [0.5, 1.0], workers=1)
    b, _ = ou.simulate(sc, 3, 20_000, [0.5, 1.0], workers=3)
    assert np.array_equal(a, b)


# --------------------------------------------------------------------------
# stationary variance and invariant laws


@pytest.mark.parametrize("driver", [GAUSS, COMP_POISSON])
def test_stationary_variance_is_half(driver):
    rep = ou.stationary_variance_check(1.0, driver, N, 4)
    assert rep["target"] == 0.5
    assert rep["norm_S_t_long"] <= 1e-4
    assert rep["pass"]


def scalar(driver=GAUSS, c=1.0, T=1.0, dt=0.01):
    return ou.scalar_scenario(1.0, driver, T, dt, c=c)


def test_invariant_gaussian_char():
    rep = ou.invariant_measure_estimate(scalar(), [[1.0]], N, 5, t=0.5)
    assert rep["exp_stable"] and rep["pass"]
    emp = rep["empirical"]
    for beta in (0.5, 1.0, 2.0):
        assert emp.report(np.array([beta]), target=np.exp(-beta ** 2 / 4)).passed


def test_invariant_of_noiseless_flow_is_dirac():
    rep = ou.invariant_measure_estimate(scalar(c=0.0), [[1.0]], 200, 6)
    assert np.array_equal(rep["empirical"].samples, np.zeros((200, 1)))


def test_invariant_poisson_driver_variance_half():
    rep = ou.invariant_measure_estimate(scalar(COMP_POISSON), [[1.0]], N, 7)
    x = rep["empirical"].samples[:, 0]
    assert mc_mean(x * x, 0.5).passed
    assert rep["pass"]


def test_long_time_law_is_stationary():
    sc = scalar(COMP_POISSON)
    _, t_long = ou.default_t_long(sc)
    long_sc = sc.with_(T=t_long + 1.0)
    Y, _ = ou.simulate(long_sc, 8, N, [t_long, t_long + 1.0])
    for beta in (0.7, 1.5):
        a = mc_mean(np.exp(1j * beta * Y[:, 0, 0]))
        b = mc_mean(np.exp(1j * beta * Y[:, 1, 0]))
        # the two times share paths, so compare with the paired difference
        d = mc_mean(np.exp(1j * beta * Y[:, 0, 0]) - np.exp(1j * beta * Y[:, 1, 0]), 0.0)
        assert d.passed
        assert compare(a, b)[0]


def test_unstable_semigroup_warns():
    sc = scenario(A=np.zeros((2, 2)), T=1.0, dt=0.1)
    with pytest.warns(RuntimeWarning):
        ou.invariant_measure_estimate(sc, [[1.0, 0.0]], 200, 9, t=0.5, t_long=1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(CylLevyError):
            ou.invariant_measure_estimate(sc, [[1.0, 0.0]], 200, 9)


def test_markov_given_present_ignores_past():
    # residual of exp(i beta Y(t)) against its Markov conditional mean is
    # uncorrelated with functions of Y(s/2)
    theta, dt, s, t = 1.0, 0.01, 0.6, 1.0
    sc = ou.scalar_scenario(theta, GAUSS, t, dt, ou.GaussianInitial([0.0], [[1.0]]))
    Y, _ = ou.simulate(sc, 10, N, [s / 2, s, t])
    n = int(round((t - s) / dt))
    var = dt * np.exp(-theta * dt) * np.sum(np.exp(-2 * theta * dt * np.arange(n)))
    for beta in (0.8, 1.6):
        cond = np.exp(1j * beta * np.exp(-theta * (t - s)) * Y[:, 1, 0] - 0.5 * beta ** 2 * var)
        r = np.exp(1j * beta * Y[:, 2, 0]) - cond
        assert mc_mean(r, 0.0).passed
        for g in (np.cos(Y[:, 0, 0]), np.tanh(Y[:, 0, 0])):
            assert mc_mean(r * g, 0.0).passed


# --------------------------------------------------------------------------
# weak formulation and flow


def test_weak_residual_trivial_case():
    sc = scenario(A=np.zeros((2, 2)), C=np.zeros((2, 2)), initial=ou.PointInitial([1.0, 2.0]), dt=0.05)
    assert ou.weak_residual(sc, [1.0, -1.0], 11, 0.1) == 0.0


def test_weak_residual_first_order():
    sc = ou.scalar_scenario(1.0, GAUSS, 1.0, 0.01, ou.PointInitial([1.0]))
    rep = ou.weak_residual_order(sc, [1.0], 12, 0.02)
    assert 1.7 <= rep["ratio"] <= 2.3 and rep["pass"]


def test_weak_residual_rejects_non_dividing_step():
    with pytest.raises(CylLevyError):
        ou.weak_residuals(scenario(dt=0.05), [1.0, 0.0], 1, [0.07])


def test_flow_identity_on_equal_times():
    sc = scenario()
    drv = ou.sample_scenario_drivers(sc, 13, 20)
    X = np.arange(40, dtype=float).reshape(20, 2)
    assert np.array_equal(ou.flow_apply(sc, 0.5, 0.5, X, drv), X)
    with pytest.raises(CylLevyError):
        ou.flow_apply(sc, 0.6, 0.5, X, drv)


def test_flow_from_zero_is_the_mild_solution():
    sc = scenario(drivers=(GAUSS, COMP_POISSON), initial=ou.GaussianInitial([1.0, 0.0], np.eye(2)))
    assert ou.flow_vs_recursion_error(sc, 14, 500) <= 1e-10


def test_flow_composition():
    sc = scenario(drivers=(GAUSS, COMP_POISSON), initial=ou.GaussianInitial([1.0, 0.0], np.eye(2)))
    assert ou.flow_composition_error(sc, 0.0, 0.5, 1.0, 15, 500) <= 1e-10
    assert ou.flow_composition_error(sc, 0.1, 0.35, 0.9, 15, 500) <= 1e-10


# --------------------------------------------------------------------------
# Mehler


def test_mehler_constant_test_function():
    rep = ou.mehler_check(scenario(), [[1.0, 0.0]], 0.5, [1.0, 1.0], 200, 16, arg_scale=0.0)
    for row in rep["arguments"]:
        assert row["cos"]["lhs"] == 1.0 and row["cos"]["rhs"] == 1.0
    assert rep["pass"]


def test_mehler_at_time_zero():
    b = np.array([0.4, -1.0])
    rep = ou.mehler_check(scenario(), [[1.0, 0.0], [0.5, 0.5]], 0.0, b, 200, 17)
    for row in rep["arguments"]:
        x = np.array(row["beta"]) @ np.array([b @ [1.0, 0.0], b @ [0.5, 0.5]])
        assert row["cos"]["lhs"] == pytest.approx(np.cos(x), abs=1e-14)
        assert row["cos"]["rhs"] == pytest.approx(np.cos(x), abs=1e-14)
        assert row["sin"]["lhs"] == pytest.approx(np.sin(x), abs=1e-14)


def test_mehler_identity():
    rep = ou.mehler_check(scenario(drivers=(GAUSS, COMP_POISSON)), [[1.0, 0.0], [0.3, -1.0]], 0.6, [1.0, -0.5], N, 18)
    assert rep["pass"]


# --------------------------------------------------------------------------
# radonification and the translation example


def test_radonification_exponential_total():
    d, t = 3, 0.7
    sc = scenario(A=-np.eye(d), drivers=(GAUSS,) * d)
    rep = ou.radonification_check(sc, t)
    assert rep["partial_sums"][-1] == pytest.approx(d * (1 - np.exp(-2 * t)) / 2, abs=1e-10)
    assert rep["van_loan_total"] == pytest.approx(d * (1 - np.exp(-2 * t)) / 2, abs=1e-12)
    assert rep["converged"] and rep["monotone"]


def test_radonification_without_noise():
    rep = ou.radonification_check(scenario(C=np.zeros((2, 2))), 1.0)
    assert rep["partial_sums"] == [0.0, 0.0]


def test_radonification_translation_grows_linearly():
    n, h, t = 8, 0.25, 1.5
    noise = SeriesProcess(np.eye(n), (GAUSS,) * n)
    sc = ou.OUScenario(Semigroup.translation(n, h), np.eye(n), noise, ou.zero_initial(n), 2.0, h)
    rep = ou.radonification_check(sc, t)
    np.testing.assert_allclose(rep["partial_sums"], t * np.arange(1, n + 1), rtol=1e-9)


def test_indicator_projection_is_not_exponential():
    rep = ou.non_ou_projection_demo(200, 19)
    assert rep["xi"] == 1
    assert rep["fit"]["relative_residual"] > 0.1
    assert rep["control"]["relative_residual"] < 1e-6
    assert rep["pass"]


def test_translation_path_is_shifted_indicator():
    ts, ys, _, _ = ou.translation_paths(200, 1.0)
    inside = (ts > 0.01) & (ts < 0.99)
    outside = ts > 1.01
    assert np.all(ys[inside] == 1.0) and np.all(ys[outside] == 0.0)


def test_constant_and_zero_paths_fit_trivially():
    ts = np.linspace(0, 2, 50)
    z, lam, res = ou.fit_exponential(ts, np.full(50, 1.5))
    assert res < 1e-8 and abs(lam) < 1e-8
    assert ou.fit_exponential(ts, np.zeros(50)) == (0.0, 0.0, 0.0)
