import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from cyllevy import levy_drivers as ld
from cyllevy.errors import CylLevyError
from cyllevy.mc_stats import compare, mc_mean

N = 100_000


def poisson_ones(rate):
    return ld.LevyTriplet1D(0.0, 0.0, ld.CompoundPoisson(rate, ld.PointMass(1.0)))


def test_brownian_increment_mean_zero():
    b = ld.sample_path(ld.LevyTriplet1D(0.0, 1.0), [0.0, 1.0], 1, N)
    r = mc_mean(b.values[:, 1], 0.0)
    assert r.passed
    assert r.se == pytest.approx(N ** -0.5, rel=0.02)


def test_poisson_mean_is_rate_times_t():
    b = ld.sample_path(poisson_ones(2.0), [0.0, 1.0], 2, N)
    assert mc_mean(b.values[:, 1], 2.0).passed


def test_pure_drift_is_deterministic():
    b = ld.sample_path(ld.LevyTriplet1D(5.0), [0.0, 1.0, 2.0], 3, 10)
    assert np.array_equal(b.values[:, -1], np.full(10, 10.0))


def test_paths_start_at_zero_and_reconstruct():
    tr = ld.LevyTriplet1D(0.3, 0.7, ld.CompoundPoisson(5.0, ld.Gaussian(0.2, 1.0)))
    b = ld.sample_path(tr, np.linspace(0, 2, 21), 4, 2000)
    assert np.array_equal(b.values[:, 0], np.zeros(2000))
    assert b.reconstruction_error() <= 1e-10


def test_infinite_activity_paths_reconstruct():
    tr = ld.LevyTriplet1D(0.0, 0.0, ld.InfiniteActivity(ld.PowerLawLevyMeasure(0.8, 1.0, 0.5, 3.0), eps=0.01))
    b = ld.sample_path(tr, np.linspace(0, 1, 11), 5, 500)
    assert b.reconstruction_error() <= 1e-10
    assert len(b.jump_size) and np.all(np.abs(b.jump_size) > 0.01)


def test_grid_must_increase_from_zero():
    for bad in ([0.0, 1.0, 1.0], [0.5, 1.0], [0.0, 2.0, 1.0]):
        with pytest.raises(CylLevyError):
            ld.sample_path(ld.LevyTriplet1D(0.0, 1.0), bad, 1, 2)


def test_truncation_level_must_be_positive():
    with pytest.raises(CylLevyError):
        ld.InfiniteActivity(ld.PowerLawLevyMeasure(0.5, 1.0, 1.0), eps=0.0)


def test_sampling_is_deterministic_across_workers():
    tr = ld.LevyTriplet1D(0.1, 0.5, ld.CompoundPoisson(3.0, ld.Uniform(-1.0, 2.0)))
    a = ld.sample_path(tr, np.linspace(0, 1, 5), 6, 20_000, workers=1)
    b = ld.sample_path(tr, np.linspace(0, 1, 5), 6, 20_000, workers=3)
    assert np.array_equal(a.values, b.values)
    assert np.array_equal(a.jump_time, b.jump_time)


def test_path_csv_columns(tmp_path):
    b = ld.sample_path(ld.LevyTriplet1D(0.0, 1.0), [0.0, 0.5, 1.0], 1, 2)
    b.to_csv(tmp_path / "p.csv")
    rows = list(csv.reader(open(tmp_path / "p.csv")))
    assert rows[0] == ["path_id", "time", "value"]
    assert len(rows) == 1 + 2 * 3
    assert float(rows[-1][2]) == b.values[1, 2]


# --------------------------------------------------------------------------
# compensated Poisson integrals


def test_integral_of_zero_step_is_zero():
    h = ld.StepFunction([0.0, 1.0], [0.0])
    out = ld.compensated_poisson_integral(h, ld.compensated(poisson_ones(1.0)), 1, 50)
    assert np.array_equal(out, np.zeros(50))


def test_integral_variance_full_interval():
    h = ld.StepFunction([0.0, 1.0], [1.0])
    x = ld.compensated_poisson_integral(h, ld.compensated(poisson_ones(1.0)), 7, N)
    assert mc_mean(x * x, 1.0).passed
    assert mc_mean(x, 0.0).passed


def test_integral_variance_half_interval():
    h = ld.StepFunction([0.0, 0.5, 1.0], [1.0, 0.0])
    x = ld.compensated_poisson_integral(h, ld.compensated(poisson_ones(1.0)), 8, N)
    assert mc_mean(x * x, 0.5).passed


def test_integral_requires_compensated_driver():
    with pytest.raises(CylLevyError):
        ld.compensated_poisson_integral(ld.StepFunction([0.0, 1.0], [1.0]), poisson_ones(1.0), 1, 5)


def test_integral_requires_aligned_grid():
    h = ld.StepFunction([0.0, 0.3, 1.0], [1.0, 2.0])
    with pytest.raises(CylLevyError):
        ld.compensated_poisson_integral(h, ld.compensated(poisson_ones(1.0)), 1, 5, grid=[0.0, 0.5, 1.0])


def test_one_dimensional_isometry_with_gaussian_part():
    tr = ld.compensated(ld.LevyTriplet1D(0.0, 0.4, ld.CompoundPoisson(2.0, ld.Uniform(-1.0, 1.5))))
    h = ld.StepFunction([0.0, 0.2, 0.7, 1.0], [1.0, -2.0, 0.5])
    x = ld.compensated_poisson_integral(h, tr, 9, N)
    assert mc_mean(x * x, tr.quadratic_variation_rate() * h.l2_norm_sq()).passed


# --------------------------------------------------------------------------
# normalization


def test_normalize_point_mass_two():
    out = ld.normalize_to_unit_quadratic(ld.LevyTriplet1D(0.0, 0.0, ld.CompoundPoisson(1.0, ld.PointMass(2.0))))
    assert out.jumps.law.value == 1.0
    assert out.jumps.rate == 1.0


def test_normalize_rate_four():
    out = ld.normalize_to_unit_quadratic(poisson_ones(4.0))
    assert out.jumps.law.value == 0.5
    assert out.quadratic_variation_rate() == 1.0


def test_normalize_is_idempotent():
    once = ld.normalize_to_unit_quadratic(ld.LevyTriplet1D(0.2, 0.3, ld.CompoundPoisson(2.0, ld.Uniform(-1.0, 3.0))))
    twice = ld.normalize_to_unit_quadratic(once)
    assert twice.quadratic_variation_rate() == pytest.approx(1.0, abs=1e-15)
    assert twice.gauss_var == pytest.approx(once.gauss_var, rel=1e-15)
    assert twice.jumps.law.low == pytest.approx(once.jumps.law.low, rel=1e-15)
    assert twice.jumps.law.high == pytest.approx(once.jumps.law.high, rel=1e-15)


def test_normalize_rejects_zero_second_moment():
    with pytest.raises(CylLevyError):
        ld.normalize_to_unit_quadratic(ld.LevyTriplet1D(1.0))


def test_normalized_driver_has_unit_variance():
    tr = ld.compensated(ld.normalize_to_unit_quadratic(ld.LevyTriplet1D(0.0, 0.5, ld.CompoundPoisson(3.0, ld.TwoSidedExponential(0.3, 0.6)))))
    assert ld.is_normalized(tr)
    b = ld.sample_path(tr, [0.0, 1.0], 10, N)
    assert mc_mean(b.values[:, 1] ** 2, 1.0).passed


def test_normalized_power_law_driver():
    raw = ld.LevyTriplet1D(0.0, 0.0, ld.InfiniteActivity(ld.PowerLawLevyMeasure(0.8, 1.0, 0.6, 4.0), eps=0.01, gaussian_substitution=True))
    tr = ld.compensated(ld.normalize_to_unit_quadratic(raw))
    assert ld.is_normalized(tr)
    assert tr.simulated_quadratic_rate() == pytest.approx(1.0, abs=1e-12)
    b = ld.sample_path(tr, [0.0, 1.0], 11, N)
    assert mc_mean(b.values[:, 1] ** 2, 1.0).passed
    assert mc_mean(b.values[:, 1], 0.0).passed


# --------------------------------------------------------------------------
# jump-law formulas against quadrature


LAWS = [
    (ld.Uniform(-1.0, 2.5), lambda x: stats.uniform(-1.0, 3.5).pdf(x), (-1.0, 2.5)),
    (ld.Gaussian(0.3, 0.8), lambda x: stats.norm(0.3, 0.8).pdf(x), (-np.inf, np.inf)),
    (ld.TwoSidedExponential(0.2, 0.5), lambda x: stats.laplace(0.2, 0.5).pdf(x), (-np.inf, np.inf)),
]


def _quad(f, lo, hi, breaks=()):
    pts = [lo] + [b for b in breaks if lo < b < hi] + [hi]
    return sum(integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-13, limit=200)[0] for a, b in zip(pts[:-1], pts[1:]))


@pytest.mark.parametrize("law,pdf,support", LAWS)
def test_law_moments_against_quadrature(law, pdf, support):
    lo, hi = support
    br = (-1.0, 0.0, 0.2, 0.3, 1.0)
    assert law.mean() == pytest.approx(_quad(lambda x: x * pdf(x), lo, hi, br), abs=1e-10)
    assert law.second_moment() == pytest.approx(_quad(lambda x: x * x * pdf(x), lo, hi, br), abs=1e-10)
    for r in (0.3, 1.0, 2.0):
        assert law.partial_mean(r) == pytest.approx(_quad(lambda x: x * pdf(x), max(lo, -r), min(hi, r), br), abs=1e-10)
    for beta in (0.7, -2.0):
        re = _quad(lambda x: np.cos(beta * x) * pdf(x), lo, hi, br)
        im = _quad(lambda x: np.sin(beta * x) * pdf(x), lo, hi, br)
        assert complex(law.char(beta)) == pytest.approx(complex(re, im), abs=1e-10)


@given(st.floats(0.1, 1.9), st.floats(0.0, 2.0), st.floats(0.1, 2.0), st.floats(1.5, 5.0), st.floats(0.001, 0.5))
@settings(max_examples=30, deadline=None)
def test_power_law_masses_against_quadrature(alpha, cp, cn, cutoff, eps):
    m = ld.PowerLawLevyMeasure(alpha, cp, cn, cutoff)
    mass = _quad(m.density, eps, cutoff) + _quad(m.density, -cutoff, -eps)
    assert m.mass_above(eps) == pytest.approx(mass, rel=1e-8)
    second = _quad(lambda x: x * x * m.density(x), eps, cutoff) + _quad(lambda x: x * x * m.density(x), -cutoff, -eps)
    assert m.moment_between(2, eps, cutoff) == pytest.approx(second, rel=1e-8)
    first = _quad(lambda x: x * m.density(x), eps, 1.0) + _quad(lambda x: x * m.density(x), -1.0, -eps)
    assert m.small_jump_mean(1.0, eps) == pytest.approx(first, rel=1e-8, abs=1e-10)


def test_power_law_scaling_is_the_image_measure():
    m = ld.PowerLawLevyMeasure(0.8, 1.0, 0.4, 3.0)
    s = m.scaled(-2.0)
    assert s.second_moment() == pytest.approx(4.0 * m.second_moment(), rel=1e-12)
    assert s.mass_above(0.2) == pytest.approx(m.mass_above(0.1), rel=1e-12)
    # a negative scale swaps the sides
    assert s.moment_between(1, 0.2, 6.0) == pytest.approx(-2.0 * m.moment_between(1, 0.1, 3.0), rel=1e-12)


# --------------------------------------------------------------------------
# law of increments


def _driver():
    return ld.compensated(ld.LevyTriplet1D(0.1, 0.3, ld.CompoundPoisson(2.0, ld.Gaussian(0.5, 0.7))))


def test_empirical_char_matches_exponent():
    tr = _driver()
    b = ld.sample_path(tr, [0.0, 1.0], 12, N)
    for beta in (0.5, 1.0, 2.0):
        r = mc_mean(np.exp(1j * beta * b.values[:, 1]), complex(tr.char(beta)))
        assert r.passed


def test_power_law_char_matches_simulated_exponent():
    tr = ld.LevyTriplet1D(0.0, 0.0, ld.InfiniteActivity(ld.PowerLawLevyMeasure(1.2, 0.5, 1.0, 3.0), eps=0.05))
    b = ld.sample_path(tr, [0.0, 1.0], 13, N)
    for beta in (0.5, 1.5):
        assert mc_mean(np.exp(1j * beta * b.values[:, 1]), complex(tr.char(beta))).passed


def test_increments_are_stationary():
    b = ld.sample_path(_driver(), [0.0, 0.5, 1.0, 1.5], 14, N)
    first = b.values[:, 1] - b.values[:, 0]
    later = b.values[:, 3] - b.values[:, 2]
    for beta in (0.3, 0.8, 1.3, 2.0, -1.1):
        passed, _, _ = compare(mc_mean(np.exp(1j * beta * first)), mc_mean(np.exp(1j * beta * later)))
        assert passed


def test_disjoint_increments_are_independent():
    tr = _driver()
    b = ld.sample_path(tr, [0.0, 0.5, 1.0], 15, N)
    d1, d2 = b.values[:, 1], b.values[:, 2] - b.values[:, 1]
    for u, v in ((0.7, 1.1), (1.5, -0.4), (-1.0, -1.0)):
        target = complex(tr.char(u, 0.5) * tr.char(v, 0.5))
        assert mc_mean(np.exp(1j * (u * d1 + v * d2)), target).passed
