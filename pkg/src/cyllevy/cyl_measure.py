"""Cylindrical measures through their characteristic functionals.

A characteristic functional maps coefficient vectors ``a`` of U* to complex
numbers. Closed forms additionally expose ``exponent(a)`` (the principal
logarithm built from the Levy-Khintchine data), which is what convolution
and infinitely divisible roots act on. Empirical functionals carry frozen
samples and return Monte Carlo estimates.
"""
import csv
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from . import levy_drivers as ld
from .errors import CylLevyError, DimensionMismatch, UnsupportedOperation
from .mc_stats import mc_mean
from .space_model import as_coeffs

QUAD_TOL = 1e-10


def _args(a, dim):
    A = np.asarray(as_coeffs(a), dtype=np.float64)
    if A.shape[-1] != dim:
        raise DimensionMismatch(f"functional of dimension {A.shape[-1]} for a measure on R^{dim}")
    return A


# --------------------------------------------------------------------------
# jump laws on U


@dataclass(frozen=True, eq=False)
class AtomicVectorLaw:
    """Law on R^d charging finitely many atoms."""

    atoms: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        atoms = np.atleast_2d(np.asarray(self.atoms, dtype=np.float64))
        p = np.asarray(self.probs, dtype=np.float64)
        if p.shape != (atoms.shape[0],) or np.any(p < 0) or not p.sum() > 0:
            raise CylLevyError("atomic law needs one non-negative probability per atom")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "probs", p / p.sum())

    @property
    def dim(self):
        return self.atoms.shape[1]

    def sample(self, rng, n):
        return self.atoms[rng.choice(len(self.probs), size=n, p=self.probs)]

    def char(self, a):
        A = _args(a, self.dim)
        return np.exp(1j * (A @ self.atoms.T)) @ self.probs

    def projected(self, a):
        """Law of <Y, a> as a one-dimensional jump law."""
        vals = self.atoms @ _args(a, self.dim)
        if len(vals) == 1:
            return ld.PointMass(float(vals[0]))
        return ld.Mixture(tuple(self.probs), tuple(ld.PointMass(float(v)) for v in vals))

    def mean(self):
        return self.probs @ self.atoms

    def second_moment(self):
        return (self.atoms * self.probs[:, None]).T @ self.atoms

    def to_dict(self):
        return {"kind": "atomic", "atoms": self.atoms.tolist(), "probs": self.probs.tolist()}


@dataclass(frozen=True, eq=False)
class GaussianVectorLaw:
    mean_: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mean_, dtype=np.float64)
        c = np.atleast_2d(np.asarray(self.cov, dtype=np.float64))
        if c.shape != (len(m), len(m)) or not np.allclose(c, c.T, atol=1e-12):
            raise CylLevyError("Gaussian law needs a symmetric covariance matching the mean")
        w, V = np.linalg.eigh(c)
        if w.min() < -1e-10 * max(1.0, w.max()):
            raise CylLevyError("Gaussian covariance must be positive semidefinite")
        object.__setattr__(self, "mean_", m)
        object.__setattr__(self, "cov", c)
        object.__setattr__(self, "_root", V * np.sqrt(np.clip(w, 0.0, None)))

    @property
    def dim(self):
        return len(self.mean_)

    def sample(self, rng, n):
        return self.mean_ + rng.standard_normal((n, self.dim)) @ self._root.T

    def char(self, a):
        A = _args(a, self.dim)
        q = np.einsum("...i,ij,...j->...", A, self.cov, A)
        return np.exp(1j * (A @ self.mean_) - 0.5 * q)

    def projected(self, a):
        a = _args(a, self.dim)
        var = float(a @ self.cov @ a)
        m = float(a @ self.mean_)
        return ld.Gaussian(m, np.sqrt(var)) if var > 0 else ld.PointMass(m)

    def mean(self):
        return self.mean_.copy()

    def second_moment(self):
        return self.cov + np.outer(self.mean_, self.mean_)

    def to_dict(self):
        return {"kind": "gaussian", "mean": self.mean_.tolist(), "cov": self.cov.tolist()}


@dataclass(frozen=True, eq=False)
class ImpulseLaw:
    """Law of b * e_C: a scalar impulse b ~ ``law`` hitting cell C with P(C = i) proportional to w_i."""

    weights: np.ndarray
    law: ld.JumpLaw

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64).ravel()
        if np.any(w < 0) or not w.sum() > 0:
            raise CylLevyError("cell weights must be non-negative and not all zero")
        object.__setattr__(self, "weights", w)

    @property
    def dim(self):
        return len(self.weights)

    @property
    def probs(self):
        return self.weights / self.weights.sum()

    def sample(self, rng, n):
        cells = rng.choice(self.dim, size=n, p=self.probs)
        out = np.zeros((n, self.dim))
        out[np.arange(n), cells] = self.law.sample(rng, n)
        return out

    def char(self, a):
        return self.law.char(_args(a, self.dim)) @ self.probs

    def projected(self, a):
        a = _args(a, self.dim)
        return ld.Mixture(tuple(self.probs), tuple(self.law.scaled(float(x)) for x in a))

    def mean(self):
        return self.law.mean() * self.probs

    def second_moment(self):
        return self.law.second_moment() * np.diag(self.probs)

    def to_dict(self):
        return {"kind": "impulse", "weights": self.weights.tolist(), "law": self.law.to_dict()}


def vector_law_from_dict(d):
    if d["kind"] == "atomic":
        return AtomicVectorLaw(d["atoms"], d["probs"])
    if d["kind"] == "gaussian":
        return GaussianVectorLaw(d["mean"], d["cov"])
    if d["kind"] == "impulse":
        return ImpulseLaw(d["weights"], ld.jump_law_from_dict(d["law"]))
    raise CylLevyError(f"unknown vector law kind {d['kind']!r}")


# --------------------------------------------------------------------------
# generic one-dimensional Levy measure given by a density


@dataclass(frozen=True, eq=False)
class DensityLevyMeasure:
    """nu(dx) = density(x) dx on [-support, support] \\ {0}."""

    density: Callable[[float], float]
    support: float = np.inf

    def _pieces(self):
        R = self.support
        edges = [-R, -1.0, 0.0, 1.0, R] if R > 1 else [-R, 0.0, R]
        return [(lo, hi) for lo, hi in zip(edges[:-1], edges[1:]) if hi > lo]

    def _quad(self, g):
        total = 0.0
        for lo, hi in self._pieces():
            val, err, *rest = integrate.quad(lambda x: g(x) * self.density(x), lo, hi, epsabs=QUAD_TOL, limit=400, full_output=1)
            if not np.isfinite(val) or (len(rest) > 1 and "divergent" in str(rest[1]).lower()):
                raise CylLevyError("divergent jump integral")
            total += val
        return total

    def min1_integral(self):
        return self._quad(lambda x: min(1.0, x * x))

    def second_moment(self):
        return self._quad(lambda x: x * x)

    def lk_exponent(self, beta):
        beta = float(beta)
        re = self._quad(lambda x: np.cos(beta * x) - 1.0)
        im = self._quad(lambda x: np.sin(beta * x) - (beta * x if abs(x) <= 1 else 0.0))
        return complex(re, im)

    def times(self, c):
        dens = self.density
        return DensityLevyMeasure(lambda x: c * dens(x), self.support)


def jump_exponent(measure, beta=1.0):
    """int (e^{i beta x} - 1 - i beta x 1{|x|<=1}) nu(dx) for a 1-D Levy measure."""
    if measure is None:
        return 0j
    if isinstance(measure, ld.FiniteLevyMeasure):
        return complex(measure.lk_exponent(beta))
    if isinstance(measure, DensityLevyMeasure):
        if not np.isfinite(measure.min1_integral()):
            raise CylLevyError("divergent jump integral")
        return measure.lk_exponent(beta)
    if isinstance(measure, ld.PowerLawLevyMeasure):
        return complex(measure.lk_exponent(beta))
    raise CylLevyError(f"unsupported Levy measure {type(measure).__name__}")


# --------------------------------------------------------------------------
# characteristic functionals


class CharFunctional:
    """phi(a) for coefficient vectors ``a`` (shape (d,) or (k, d))."""

    kind = "closed"
    dim: int

    def exponent(self, a):
        raise UnsupportedOperation(f"{type(self).__name__} has no explicit exponent")

    def __call__(self, a):
        return np.exp(self.exponent(a))

    def power(self, c):
        """The closed form whose exponent is c times this one."""
        raise UnsupportedOperation(f"{type(self).__name__} has no explicit exponent")

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class DiracChar(CharFunctional):
    point: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", np.asarray(self.point, dtype=np.float64).ravel())

    @classmethod
    def zero(cls, dim):
        return cls(np.zeros(dim))

    @property
    def dim(self):
        return len(self.point)

    def exponent(self, a):
        return 1j * (_args(a, self.dim) @ self.point)

    def power(self, c):
        return DiracChar(c * self.point)

    def is_zero(self):
        return not np.any(self.point)

    def to_dict(self):
        return {"kind": "dirac", "point": self.point.tolist()}


@dataclass(frozen=True, eq=False)
class GaussianChar(CharFunctional):
    """Centred Gaussian cylindrical measure with quadratic form s(a) = a^T cov a."""

    cov: np.ndarray

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.cov, dtype=np.float64))
        if c.shape[0] != c.shape[1] or not np.allclose(c, c.T, atol=1e-12):
            raise CylLevyError("covariance must be a symmetric matrix")
        object.__setattr__(self, "cov", c)

    @property
    def dim(self):
        return self.cov.shape[0]

    def exponent(self, a):
        A = _args(a, self.dim)
        return -0.5 * np.einsum("...i,ij,...j->...", A, self.cov, A) + 0j

    def power(self, c):
        return GaussianChar(c * self.cov)

    def to_lk(self):
        return CylLevyKhintchine.linear(np.zeros(self.dim), self.cov)

    def to_dict(self):
        return {"kind": "gaussian", "cov": self.cov.tolist()}


@dataclass(frozen=True, eq=False)
class PoissonChar(CharFunctional):
    """exp(rate t (e^{i zeta(a)} - 1)): the cylindrical Poisson process at time t."""

    rate: float
    zeta: np.ndarray
    t: float = 1.0

    def __post_init__(self):
        if not self.rate >= 0:
            raise CylLevyError("Poisson rate must be non-negative")
        object.__setattr__(self, "zeta", np.asarray(self.zeta, dtype=np.float64).ravel())

    @property
    def dim(self):
        return len(self.zeta)

    @property
    def intensity(self):
        return self.rate * self.t

    def exponent(self, a):
        z = _args(a, self.dim) @ self.zeta
        return self.intensity * (np.exp(1j * z) - 1.0)

    def power(self, c):
        return PoissonChar(self.rate * c, self.zeta, self.t)

    def to_lk(self):
        return poisson_lk(self.intensity, self.zeta)

    def to_dict(self):
        return {"kind": "poisson", "rate": float(self.rate), "zeta": self.zeta.tolist(), "t": float(self.t)}


@dataclass(frozen=True, eq=False)
class CompoundPoissonChar(CharFunctional):
    """exp(rate t int (e^{i<u, a>} - 1) rho(du))."""

    rate: float
    law: object
    t: float = 1.0

    @property
    def dim(self):
        return self.law.dim

    def exponent(self, a):
        return self.rate * self.t * (self.law.char(a) - 1.0)

    def power(self, c):
        return CompoundPoissonChar(self.rate * c, self.law, self.t)

    def to_lk(self):
        intensity = self.rate * self.t
        law = self.law

        def drift(a):
            return intensity * law.projected(a).partial_mean(1.0)

        def nu(a):
            return ld.FiniteLevyMeasure(intensity, law.projected(a))

        return CylLevyKhintchine(drift, np.zeros((self.dim, self.dim)), nu)

    def to_dict(self):
        return {"kind": "compound_poisson", "rate": float(self.rate), "law": self.law.to_dict(), "t": float(self.t)}


@dataclass(frozen=True, eq=False)
class ImpulsiveChar(CharFunctional):
    """Impulsive noise on a grid of cells with weights w (the control measure).

    phi(f) = exp(t sum_i w_i rate int (e^{i f_i b} - 1 - i f_i b) law(db));
    the jump measure is rate * law and must have a finite second moment.
    """

    weights: np.ndarray
    rate: float
    law: ld.JumpLaw
    t: float = 1.0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64).ravel()
        if np.any(w < 0) or not w.sum() > 0:
            raise CylLevyError("cell weights must be non-negative and not all zero")
        if not self.rate > 0:
            raise CylLevyError("impulse rate must be positive")
        object.__setattr__(self, "weights", w)

    @property
    def dim(self):
        return len(self.weights)

    def exponent(self, a):
        F = _args(a, self.dim)
        m = self.law.mean()
        per_cell = self.law.char(F) - 1.0 - 1j * F * m
        return self.t * self.rate * (per_cell @ self.weights)

    def power(self, c):
        return ImpulsiveChar(self.weights, self.rate * c, self.law, self.t)

    def projected_measure(self, f):
        """nu o f^{-1}: total mass t * rate * sum(w), mixture of scaled jump laws."""
        f = _args(f, self.dim)
        total = self.t * self.rate * self.weights.sum()
        comps = tuple(self.law.scaled(float(x)) for x in f)
        return ld.FiniteLevyMeasure(total, ld.Mixture(tuple(self.weights), comps))

    def to_lk(self):
        m = self.law.mean()

        def drift(f):
            nu = self.projected_measure(f)
            return nu.small_jump_mean(1.0) - self.t * self.rate * m * float(self.weights @ _args(f, self.dim))

        return CylLevyKhintchine(drift, np.zeros((self.dim, self.dim)), self.projected_measure)

    def to_dict(self):
        return {
            "kind": "impulsive",
            "weights": self.weights.tolist(),
            "rate": float(self.rate),
            "law": self.law.to_dict(),
            "t": float(self.t),
        }


@dataclass(frozen=True, eq=False)
class CylLevyKhintchine:
    """Cylindrical Levy-Khintchine data (m, s, nu).

    ``drift(a)`` is the (generally non-linear) drift functional, ``s`` the PSD
    matrix of the quadratic form, and ``nu_projector(a)`` returns the 1-D
    Levy measure nu o a^{-1} (or None).
    """

    drift: Callable
    s: np.ndarray
    nu_projector: Optional[Callable] = None

    def __post_init__(self):
        s = np.atleast_2d(np.asarray(self.s, dtype=np.float64))
        if s.shape[0] != s.shape[1] or not np.allclose(s, s.T, atol=1e-12):
            raise CylLevyError("quadratic form must be a symmetric matrix")
        object.__setattr__(self, "s", s)

    @classmethod
    def linear(cls, m, s, nu_projector=None):
        m = np.asarray(m, dtype=np.float64)
        return cls(lambda a: float(as_coeffs(a) @ m), s, nu_projector)

    @property
    def dim(self):
        return self.s.shape[0]

    def quadratic_form(self, a):
        a = _args(a, self.dim)
        return float(a @ self.s @ a)

    def bilinear(self, a, b):
        """Q(a, b) = s(a + b) - s(a) - s(b)."""
        a, b = _args(a, self.dim), _args(b, self.dim)
        return self.quadratic_form(a + b) - self.quadratic_form(a) - self.quadratic_form(b)

    def projected_measure(self, a):
        return None if self.nu_projector is None else self.nu_projector(_args(a, self.dim))

    def times(self, c):
        drift, proj = self.drift, self.nu_projector
        new_proj = None if proj is None else (lambda a: _times(proj(a), c))
        return CylLevyKhintchine(lambda a: c * drift(a), c * self.s, new_proj)


def _times(measure, c):
    return None if measure is None else measure.times(c)


def poisson_lk(intensity, zeta):
    """LK data of the cylindrical Poisson law with mean intensity ``intensity``.

    A point mass of size zeta(a) is compensated only when |zeta(a)| <= 1,
    hence m(a) = intensity * zeta(a) * 1{|zeta(a)| <= 1}.
    """
    zeta = np.asarray(zeta, dtype=np.float64)

    def drift(a):
        z = float(as_coeffs(a) @ zeta)
        return intensity * z if abs(z) <= 1.0 else 0.0

    def nu(a):
        z = float(as_coeffs(a) @ zeta)
        return None if z == 0 else ld.FiniteLevyMeasure(intensity, ld.PointMass(z))

    return CylLevyKhintchine(drift, np.zeros((len(zeta), len(zeta))), nu)


def levy_khintchine_exponent(lk, a):
    a = _args(a, lk.dim)
    return 1j * lk.drift(a) - 0.5 * lk.quadratic_form(a) + jump_exponent(lk.projected_measure(a))


def levy_khintchine_eval(lk, a):
    """exp(i m(a) - s(a)/2 + int (e^{ix} - 1 - i x 1{|x|<=1}) (nu o a^{-1})(dx))."""
    return complex(np.exp(levy_khintchine_exponent(lk, a)))


@dataclass(frozen=True, eq=False)
class LevyKhintchineChar(CharFunctional):
    lk: CylLevyKhintchine

    @property
    def dim(self):
        return self.lk.dim

    def exponent(self, a):
        A = _args(a, self.dim)
        if A.ndim == 1:
            return levy_khintchine_exponent(self.lk, A)
        return np.array([levy_khintchine_exponent(self.lk, row) for row in A])

    def power(self, c):
        return LevyKhintchineChar(self.lk.times(c))

    def to_dict(self):
        return {"kind": "levy_khintchine"}


@dataclass(frozen=True, eq=False)
class ProductChar(CharFunctional):
    """Pointwise product of characteristic functionals (a convolution)."""

    factors: tuple

    @property
    def dim(self):
        return self.factors[0].dim

    @property
    def kind(self):
        return "empirical" if any(f.kind == "empirical" for f in self.factors) else "closed"

    def exponent(self, a):
        return sum(f.exponent(a) for f in self.factors)

    def __call__(self, a):
        out = 1.0 + 0j
        for f in self.factors:
            out = out * f(a)
        return out

    def power(self, c):
        return ProductChar(tuple(f.power(c) for f in self.factors))

    def to_dict(self):
        return {"kind": "product", "factors": [f.to_dict() for f in self.factors]}


@dataclass(frozen=True, eq=False)
class EmpiricalChar(CharFunctional):
    """Monte Carlo characteristic functional of frozen samples X (n, d)."""

    samples: np.ndarray
    kind = "empirical"

    def __post_init__(self):
        X = np.asarray(self.samples, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        object.__setattr__(self, "samples", X)

    @property
    def dim(self):
        return self.samples.shape[1]

    @property
    def n_samples(self):
        return self.samples.shape[0]

    def report(self, a, target=None):
        a = _args(a, self.dim)
        return mc_mean(np.exp(1j * (self.samples @ a)), target=target)

    def __call__(self, a):
        A = _args(a, self.dim)
        if A.ndim == 1:
            return self.report(A).estimate
        return np.array([self.report(row).estimate for row in A])

    def to_csv(self, args, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["argument", "re", "im", "se_re", "se_im"])
            for a in np.atleast_2d(args):
                r = self.report(a)
                w.writerow([" ".join(repr(float(x)) for x in a), repr(r.estimate.real), repr(r.estimate.imag), repr(r.se.real), repr(r.se.imag)])

    def to_dict(self):
        return {"kind": "empirical", "n_samples": int(self.n_samples)}


def char_from_dict(d):
    kind = d["kind"]
    if kind == "dirac":
        return DiracChar(d["point"])
    if kind == "gaussian":
        return GaussianChar(d["cov"])
    if kind == "poisson":
        return PoissonChar(float(d["rate"]), d["zeta"], float(d.get("t", 1.0)))
    if kind == "compound_poisson":
        return CompoundPoissonChar(float(d["rate"]), vector_law_from_dict(d["law"]), float(d.get("t", 1.0)))
    if kind == "impulsive":
        return ImpulsiveChar(d["weights"], float(d["rate"]), ld.jump_law_from_dict(d["law"]), float(d.get("t", 1.0)))
    if kind == "product":
        return ProductChar(tuple(char_from_dict(f) for f in d["factors"]))
    raise CylLevyError(f"cannot rebuild a characteristic functional of kind {kind!r}")


# --------------------------------------------------------------------------
# operations


def project_char(phi, a_list, beta):
    """Characteristic function of (L a_1, ..., L a_n) at beta, i.e. phi(sum beta_k a_k)."""
    A = np.atleast_2d(np.asarray([as_coeffs(a) for a in a_list], dtype=np.float64))
    beta = np.atleast_1d(np.asarray(beta, dtype=np.float64))
    if len(a_list) != beta.shape[-1]:
        raise CylLevyError(f"{len(a_list)} functionals but {beta.shape[-1]} arguments")
    return phi(beta @ A)


def convolve(phi1, phi2):
    """Convolution of cylindrical measures: the pointwise product of their functionals."""
    if phi1.dim != phi2.dim:
        raise DimensionMismatch("cannot convolve measures on spaces of different dimension")
    for unit, other in ((phi1, phi2), (phi2, phi1)):
        if isinstance(unit, DiracChar) and unit.is_zero():
            return other
    if isinstance(phi1, PoissonChar) and isinstance(phi2, PoissonChar):
        if np.array_equal(phi1.zeta, phi2.zeta):
            return PoissonChar(phi1.intensity + phi2.intensity, phi1.zeta)
    if isinstance(phi1, GaussianChar) and isinstance(phi2, GaussianChar):
        return GaussianChar(phi1.cov + phi2.cov)
    if isinstance(phi1, DiracChar) and isinstance(phi2, DiracChar):
        return DiracChar(phi1.point + phi2.point)
    f1 = phi1.factors if isinstance(phi1, ProductChar) else (phi1,)
    f2 = phi2.factors if isinstance(phi2, ProductChar) else (phi2,)
    return ProductChar(f1 + f2)


def id_root(phi, n):
    """The n-th convolution root of an infinitely divisible closed form (exponent / n)."""
    if int(n) != n or n < 1:
        raise CylLevyError("root order must be a positive integer")
    if phi.kind == "empirical":
        raise UnsupportedOperation("roots of empirical characteristic functionals are not defined")
    if n == 1:
        return phi
    return phi.power(1.0 / n)
