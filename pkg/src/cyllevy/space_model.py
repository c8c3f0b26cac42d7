"""Finite-dimensional model of the state spaces U and V.

Vectors and dual functionals are coefficient vectors against the canonical
basis of R^d; the dual pairing is the Euclidean dot product. The declared
norm only matters for diagnostics (operator norms, dual norms of growing
functionals).
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import CylLevyError, DimensionMismatch

ROLES = ("generator", "noise_map", "embedding", "integrand", "generic")


def _finite_vector(x, name="vector"):
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise CylLevyError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise CylLevyError(f"{name} has non-finite entries")
    return arr


@dataclass(frozen=True)
class SpaceModel:
    """R^dim with a p-norm, optionally weighted: (sum w_k |u_k|^p)^(1/p)."""

    dim: int
    p: float = 2.0
    weights: Optional[tuple] = None

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise CylLevyError("dim must be a positive integer")
        if not self.p >= 1:
            raise CylLevyError("norm exponent p must be >= 1")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=np.float64)
            if w.shape != (self.dim,) or np.any(w <= 0):
                raise CylLevyError("weights must be dim positive numbers")
            object.__setattr__(self, "weights", tuple(float(x) for x in w))

    @property
    def q(self):
        """Conjugate exponent of p."""
        if self.p == 1:
            return np.inf
        if np.isinf(self.p):
            return 1.0
        return self.p / (self.p - 1.0)

    def _w(self):
        return np.ones(self.dim) if self.weights is None else np.asarray(self.weights)

    def norm(self, u):
        u = self.check(u)
        w = self._w()
        if np.isinf(self.p):
            return float(np.max(np.abs(u)))
        return float(np.sum(w * np.abs(u) ** self.p) ** (1.0 / self.p))

    def dual_norm(self, a):
        """Norm of a functional under the Euclidean pairing.

        For the weighted norm with weights w the dual norm is the
        w^(1-q)-weighted q-norm (w ignored when p is infinite).
        """
        a = self.check(as_coeffs(a))
        q = self.q
        if np.isinf(q):
            return float(np.max(np.abs(a) / self._w()))
        if np.isinf(self.p):
            return float(np.sum(np.abs(a)))
        w = self._w() ** (1.0 - q)
        return float(np.sum(w * np.abs(a) ** q) ** (1.0 / q))

    def check(self, u):
        u = _finite_vector(u)
        if u.shape[0] != self.dim:
            raise DimensionMismatch(f"expected dimension {self.dim}, got {u.shape[0]}")
        return u

    def to_dict(self):
        d = {"dim": int(self.dim), "p": float(self.p) if np.isfinite(self.p) else "inf"}
        if self.weights is not None:
            d["weights"] = list(self.weights)
        return d

    @classmethod
    def from_dict(cls, d):
        p = d.get("p", 2.0)
        p = np.inf if p in ("inf", "infinity") else float(p)
        w = d.get("weights")
        return cls(int(d["dim"]), p, None if w is None else tuple(w))


@dataclass(frozen=True, eq=False)
class DualFunctional:
    """A functional a in U* stored by its coefficients."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = _finite_vector(self.coeffs, "functional coefficients").copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def dim(self):
        return self.coeffs.shape[0]

    def __add__(self, other):
        return DualFunctional(self.coeffs + as_coeffs(other))

    __radd__ = __add__

    def __sub__(self, other):
        return DualFunctional(self.coeffs - as_coeffs(other))

    def __neg__(self):
        return DualFunctional(-self.coeffs)

    def __mul__(self, alpha):
        return DualFunctional(float(alpha) * self.coeffs)

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, DualFunctional) and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash(self.coeffs.tobytes())

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coeffs, dtype=dtype)

    def to_list(self):
        return self.coeffs.tolist()


def as_coeffs(a):
    """Coefficient array of a functional given as DualFunctional or array-like."""
    if isinstance(a, DualFunctional):
        return a.coeffs
    return np.asarray(a, dtype=np.float64)


def pairing(u, a):
    """Dual pairing <u, a> = sum_k u_k a_k."""
    u = _finite_vector(u)
    a = _finite_vector(as_coeffs(a), "functional")
    if u.shape != a.shape:
        raise DimensionMismatch(f"pairing of dimension {u.shape[0]} with {a.shape[0]}")
    return float(u @ a)


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """A bounded operator between finite-dimensional spaces."""

    entries: np.ndarray
    role: str = "generic"

    def __post_init__(self):
        m = np.array(self.entries, dtype=np.float64)
        if m.ndim != 2:
            raise CylLevyError("operator entries must form a matrix")
        if not np.all(np.isfinite(m)):
            raise CylLevyError("operator has non-finite entries")
        if self.role not in ROLES:
            raise CylLevyError(f"unknown operator role {self.role!r}")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def shape(self):
        return self.entries.shape

    def adjoint(self):
        return OperatorMatrix(self.entries.T, self.role)

    def apply(self, u):
        u = np.asarray(u, dtype=np.float64)
        if u.shape[-1] != self.shape[1]:
            raise DimensionMismatch(f"operator expects input dimension {self.shape[1]}")
        return u @ self.entries.T

    def apply_adjoint(self, f):
        f = as_coeffs(f)
        if f.shape[-1] != self.shape[0]:
            raise DimensionMismatch(f"adjoint expects input dimension {self.shape[0]}")
        return f @ self.entries

    def __eq__(self, other):
        return isinstance(other, OperatorMatrix) and np.array_equal(self.entries, other.entries)

    __hash__ = None


def as_matrix(M):
    return M.entries if isinstance(M, OperatorMatrix) else np.asarray(M, dtype=np.float64)


def translation_matrix(n, shift):
    """Cyclic shift on n grid nodes: (P f)_i = f_{(i + shift) mod n}."""
    P = np.zeros((n, n))
    P[np.arange(n), (np.arange(n) + shift) % n] = 1.0
    return P


@dataclass(frozen=True, eq=False)
class Semigroup:
    """A strongly continuous semigroup on R^dim.

    ``kind="expm"`` evaluates exp(tA) for the generator A.
    ``kind="translation"`` is the cyclic translation (S(t)f)(x) = f(x + t) on
    ``dim`` equally spaced nodes with spacing ``step``; t is rounded to the
    nearest multiple of the spacing.
    """

    generator: Optional[OperatorMatrix] = None
    kind: str = "expm"
    step: float = 1.0
    dim_: int = field(default=0, repr=False)

    def __post_init__(self):
        if self.kind == "expm":
            if self.generator is None:
                raise CylLevyError("expm semigroup needs a generator")
            g = self.generator
            if not isinstance(g, OperatorMatrix):
                g = OperatorMatrix(g, "generator")
                object.__setattr__(self, "generator", g)
            if g.shape[0] != g.shape[1]:
                raise CylLevyError("generator must be square")
            object.__setattr__(self, "dim_", g.shape[0])
        elif self.kind == "translation":
            if self.dim_ < 1 or not self.step > 0:
                raise CylLevyError("translation semigroup needs dim_ >= 1 and step > 0")
        else:
            raise CylLevyError(f"unknown semigroup kind {self.kind!r}")

    @classmethod
    def from_generator(cls, A):
        return cls(OperatorMatrix(as_matrix(A), "generator"))

    @classmethod
    def translation(cls, n_nodes, step):
        return cls(None, "translation", float(step), int(n_nodes))

    @property
    def dim(self):
        return self.dim_

    def _shift(self, t):
        return int(round(t / self.step))

    def matrix(self, t):
        if not np.isfinite(t):
            raise CylLevyError("time must be finite")
        if t < 0:
            raise CylLevyError("semigroup is only defined for t >= 0")
        if self.kind == "translation":
            return translation_matrix(self.dim, self._shift(t))
        if t == 0:
            return np.eye(self.dim)
        return scipy.linalg.expm(t * self.generator.entries)

    def adjoint_matrix(self, t):
        return self.matrix(t).T

    def integral_matrix(self, t):
        """K(t) = int_0^t S(u) du (expm kind, via the augmented exponential)."""
        if self.kind != "expm":
            raise CylLevyError("integral_matrix requires a generator")
        d = self.dim
        big = np.zeros((2 * d, 2 * d))
        big[:d, :d] = self.generator.entries
        big[:d, d:] = np.eye(d)
        return scipy.linalg.expm(t * big)[:d, d:]

    def to_dict(self):
        if self.kind == "translation":
            return {"kind": "translation", "n_nodes": self.dim, "step": self.step}
        return {"kind": "expm", "generator": self.generator.entries.tolist()}


def semigroup_apply(S, t, u):
    """S(t) u (u may be a batch of vectors along the last axis)."""
    u = np.asarray(u, dtype=np.float64)
    if not np.all(np.isfinite(u)):
        raise CylLevyError("vector has non-finite entries")
    return u @ S.matrix(t).T


def semigroup_apply_adjoint(S, t, f):
    """S*(t) f; for matrices adjoint(exp(tA)) = exp(t A^T)."""
    f = as_coeffs(f)
    if not np.all(np.isfinite(f)):
        raise CylLevyError("functional has non-finite entries")
    return f @ S.matrix(t)


def operator_norm(M, space=None):
    """Induced operator norm; p in {1, 2, inf} exactly, otherwise the 2-norm."""
    M = as_matrix(M)
    p = 2.0 if space is None else space.p
    if space is not None and space.weights is not None:
        w = np.asarray(space.weights) ** (1.0 / p if np.isfinite(p) else 0.0)
        M = (w[:, None] * M) / w[None, :]
    if p == 1:
        return float(np.linalg.norm(M, 1))
    if np.isinf(p):
        return float(np.linalg.norm(M, np.inf))
    return float(np.linalg.norm(M, 2))


@dataclass(frozen=True)
class StabilityReport:
    R: float
    lam: float
    is_exp_stable: bool
    times: tuple
    norms: tuple

    def t_decay(self, level=1e-4):
        """Smallest t with R e^{-lam t} <= level (inf if not stable)."""
        if not self.is_exp_stable:
            return np.inf
        return max(0.0, float(np.log(self.R / level) / self.lam))


def stability_constants(S, horizon, grid=64, space=None):
    """Fit ||S(t)|| <= R exp(-lam t) on an equispaced grid of [0, horizon].

    ``lam`` is the least-squares decay rate of log||S(t)||; R is the smallest
    constant (at least 1) making the bound hold at every grid point.
    """
    if not horizon > 0:
        raise CylLevyError("horizon must be positive")
    if int(grid) < 2:
        raise CylLevyError("grid needs at least two points")
    ts = np.linspace(0.0, horizon, int(grid))
    norms = np.array([operator_norm(S.matrix(t), space) for t in ts])
    slope, _ = np.polyfit(ts, np.log(norms), 1)
    lam = float(-slope)
    R = float(max(1.0, np.max(norms * np.exp(lam * ts))))
    stable = lam > 1e-12 and bool(np.all(norms <= R * np.exp(-lam * ts) * (1 + 1e-12)))
    return StabilityReport(R, lam, stable, tuple(ts), tuple(norms))


def dual_norm_growth(make_functional, dims, p=2.0):
    """Dual norms of a family of functionals indexed by truncation dimension.

    Used to diagnose functionals that are discontinuous in the limit: the
    norms grow without bound as the dimension increases.
    """
    return [SpaceModel(d, p).dual_norm(make_functional(d)) for d in dims]
