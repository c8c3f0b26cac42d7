import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from cyllevy.errors import CylLevyError, DimensionMismatch
from cyllevy.space_model import (
    DualFunctional,
    OperatorMatrix,
    Semigroup,
    SpaceModel,
    dual_norm_growth,
    pairing,
    semigroup_apply,
    semigroup_apply_adjoint,
    stability_constants,
    translation_matrix,
)

floats = st.floats(-2, 2, allow_nan=False, width=64)


def test_pairing_basis_duality():
    assert pairing([1.0, 0.0], [1.0, 0.0]) == 1.0


def test_pairing_zero_vector():
    assert pairing([0.0, 0.0, 0.0], [3.0, -1.0, 7.0]) == 0.0


def test_pairing_hand_computed():
    assert pairing([1.0, 2.0], DualFunctional([3.0, -1.0])) == 1.0


def test_pairing_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        pairing([1.0, 2.0], [1.0])


@given(hnp.arrays(np.float64, 5, elements=floats), hnp.arrays(np.float64, 5, elements=floats), hnp.arrays(np.float64, 5, elements=floats), floats)
def test_pairing_is_bilinear(u, v, a, alpha):
    lhs = pairing(alpha * u + v, a)
    rhs = alpha * pairing(u, a) + pairing(v, a)
    assert abs(lhs - rhs) <= 1e-12 * (1 + abs(lhs))


def test_space_model_rejects_bad_dims_and_exponents():
    with pytest.raises(CylLevyError):
        SpaceModel(0)
    with pytest.raises(CylLevyError):
        SpaceModel(3, p=0.5)


def test_dual_norm_is_conjugate_norm():
    a = np.array([3.0, -4.0])
    assert SpaceModel(2, 2.0).dual_norm(a) == pytest.approx(5.0)
    assert SpaceModel(2, 1.0).dual_norm(a) == pytest.approx(4.0)
    assert SpaceModel(2, np.inf).dual_norm(a) == pytest.approx(7.0)


def test_dual_norm_growth_of_sum_functional():
    # a_d = (1, ..., 1) has Euclidean dual norm sqrt(d): unbounded as d grows
    norms = dual_norm_growth(lambda d: np.ones(d), [1, 4, 16, 64])
    assert norms == pytest.approx([1.0, 2.0, 4.0, 8.0])


@given(hnp.arrays(np.float64, (4, 3), elements=floats), hnp.arrays(np.float64, 3, elements=floats), hnp.arrays(np.float64, 4, elements=floats))
def test_adjoint_consistency(M, u, f):
    op = OperatorMatrix(M)
    lhs = pairing(op.apply(u), f)
    rhs = pairing(u, op.adjoint().apply(f))
    assert abs(lhs - rhs) <= 1e-12 * (1 + abs(lhs))
    assert op.adjoint().adjoint() == op


def test_identity_semigroup():
    S = Semigroup.from_generator(np.zeros((3, 3)))
    u = np.array([1.0, -2.0, 0.5])
    assert np.array_equal(semigroup_apply(S, 2.7, u), u)


def test_scalar_exponential_semigroup():
    S = Semigroup.from_generator(-np.eye(2))
    np.testing.assert_allclose(semigroup_apply(S, 1.0, [1.0, 0.0]), [np.exp(-1.0), 0.0], rtol=1e-15, atol=0)


def test_nilpotent_semigroup():
    S = Semigroup.from_generator([[0.0, 1.0], [0.0, 0.0]])
    np.testing.assert_allclose(semigroup_apply(S, 1.0, [0.0, 1.0]), [1.0, 1.0], rtol=1e-15)


def test_semigroup_rejects_negative_time_and_nonfinite_input():
    S = Semigroup.from_generator(-np.eye(2))
    with pytest.raises(CylLevyError):
        semigroup_apply(S, -0.1, [1.0, 0.0])
    with pytest.raises(CylLevyError):
        semigroup_apply(S, 1.0, [np.nan, 0.0])


def test_adjoint_semigroup_is_exp_of_transpose():
    A = np.array([[-1.0, 2.0], [0.5, -3.0]])
    S, St = Semigroup.from_generator(A), Semigroup.from_generator(A.T)
    f = np.array([0.3, -1.2])
    np.testing.assert_allclose(semigroup_apply_adjoint(S, 0.7, f), semigroup_apply(St, 0.7, f), rtol=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8).flatmap(lambda d: hnp.arrays(np.float64, (d, d), elements=floats)), st.floats(0, 2), st.floats(0, 2))
def test_semigroup_law(A, t, s):
    S = Semigroup.from_generator(A)
    assert np.array_equal(S.matrix(0.0), np.eye(A.shape[0]))
    lhs = S.matrix(t + s)
    rhs = S.matrix(t) @ S.matrix(s)
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * max(1.0, np.max(np.abs(lhs)))


@given(st.integers(2, 30), st.integers(0, 100))
def test_translation_is_a_norm_one_permutation(n, k):
    P = translation_matrix(n, k)
    assert np.array_equal(P @ P.T, np.eye(n))
    assert np.linalg.norm(P, 2) == pytest.approx(1.0)
    assert np.array_equal(P, np.linalg.matrix_power(translation_matrix(n, 1), k))


def test_stability_constants_for_minus_identity():
    rep = stability_constants(Semigroup.from_generator(-np.eye(3)), 5.0)
    assert rep.lam == pytest.approx(1.0, rel=1e-10)
    assert rep.is_exp_stable


def test_stability_constants_zero_generator_not_stable():
    rep = stability_constants(Semigroup.from_generator(np.zeros((2, 2))), 5.0)
    assert not rep.is_exp_stable


def test_stability_constants_slowest_mode_dominates():
    rep = stability_constants(Semigroup.from_generator(np.diag([-1.0, -3.0])), 5.0)
    assert rep.lam == pytest.approx(1.0, rel=1e-10)
    assert rep.is_exp_stable


def test_growth_bound_holds_on_grid():
    A = np.array([[-1.0, 4.0], [0.0, -1.0]])
    rep = stability_constants(Semigroup.from_generator(A), 8.0)
    assert rep.is_exp_stable
    for t, n in zip(rep.times, rep.norms):
        assert n <= rep.R * np.exp(-rep.lam * t) * (1 + 1e-12)
