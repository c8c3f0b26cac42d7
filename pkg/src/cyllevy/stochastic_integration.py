"""Stochastic integrals of adapted step integrands against series processes.

For a series process M2(t)a = sum_k <F e_k, a> m_k(t) and a step integrand
Phi_j on (t_j, t_{j+1}], the integral is

    I_T(Phi) f = sum_j sum_k <Phi_j F e_k, f> (m_k(t_{j+1}) - m_k(t_j)).

Integrands are either deterministic (one matrix per interval) or adapted:
a callable ``fn(j, hist)`` returning per-path matrices from the driver paths
``hist[:, :, :j+1]`` observed up to t_j, so adaptedness holds by construction.
"""
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import levy_drivers as ld
from . import parallel
from .cyl_process import SeriesProcess
from .errors import CylLevyError, DimensionMismatch
from .mc_stats import N_SE, mc_mean
from .space_model import as_coeffs, as_matrix

# |I - I~|^2 is non-negative, so an L2 check around zero needs a floor for
# rounding, relative to E|I|^2
ROUNDING_FLOOR = 1e-20


@dataclass(frozen=True, eq=False)
class StepIntegrand:
    """Phi(s) = Phi_j on (t_j, t_{j+1}] with values U -> V.

    ``values`` has shape (n_intervals, dim_V, dim_U); ``fn(j, hist)`` (if given)
    replaces it and returns an array (n_paths, dim_V, dim_U).
    """

    breakpoints: np.ndarray
    values: Optional[np.ndarray] = None
    fn: Optional[Callable] = None
    shape: Optional[tuple] = None

    def __post_init__(self):
        b = ld.check_grid(self.breakpoints)
        if len(b) < 2:
            raise CylLevyError("an integrand needs at least one interval")
        object.__setattr__(self, "breakpoints", b)
        if (self.values is None) == (self.fn is None):
            raise CylLevyError("give exactly one of values and fn")
        if self.values is not None:
            v = np.asarray(self.values, dtype=np.float64)
            if v.ndim == 2:
                v = np.broadcast_to(v, (len(b) - 1,) + v.shape).copy()
            if v.ndim != 3 or v.shape[0] != len(b) - 1:
                raise CylLevyError("values must hold one matrix per interval")
            object.__setattr__(self, "values", v)
            object.__setattr__(self, "shape", v.shape[1:])
        elif self.shape is None:
            raise CylLevyError("adapted integrands need their matrix shape")

    @classmethod
    def constant(cls, matrix, T=1.0, n_intervals=1):
        M = as_matrix(matrix)
        return cls(np.linspace(0.0, T, n_intervals + 1), np.broadcast_to(M, (n_intervals,) + M.shape).copy())

    @classmethod
    def adapted(cls, breakpoints, fn, shape):
        return cls(breakpoints, fn=fn, shape=tuple(shape))

    @property
    def deterministic(self):
        return self.fn is None

    @property
    def n_intervals(self):
        return len(self.breakpoints) - 1

    @property
    def T(self):
        return float(self.breakpoints[-1])

    def matrices(self, j, hist):
        """Per-path (n_paths, dim_V, dim_U) matrices on interval j."""
        if self.fn is None:
            return np.broadcast_to(self.values[j], (hist.shape[0],) + self.shape)
        out = np.asarray(self.fn(j, hist[:, :, : j + 1]), dtype=np.float64)
        if out.shape != (hist.shape[0],) + tuple(self.shape):
            raise CylLevyError(f"adapted integrand returned shape {out.shape}")
        return out


def _factor(proc):
    return np.asarray(proc.factor, dtype=np.float64)


def _check_dims(phi, F, f):
    f = np.asarray(as_coeffs(f), dtype=np.float64)
    if phi.shape[1] != F.shape[0]:
        raise DimensionMismatch(f"integrand acts on R^{phi.shape[1]} but the noise lives in R^{F.shape[0]}")
    if f.shape[-1] != phi.shape[0]:
        raise DimensionMismatch(f"functional of dimension {f.shape[-1]} on V = R^{phi.shape[0]}")
    return f


def breakpoint_positions(grid, breakpoints):
    """Indices of the integrand breakpoints in the driver grid (error if any is missing)."""
    return ld._grid_positions(np.asarray(grid, dtype=np.float64), np.asarray(breakpoints, dtype=np.float64))


def sample_drivers(proc, grid, seed, n_paths, workers=None, tags=("drivers",)):
    """Driver paths (n_paths, r, n_times) of a series process."""
    grid = ld.check_grid(grid)
    parts = parallel.map_blocks(
        lambda rng, n, start: np.stack([b.values for b in proc.sample_drivers_block(rng, n, grid)], axis=1),
        n_paths,
        seed,
        tags,
        workers,
    )
    return np.concatenate(parts)


def integrand_coefficients(phi, F, f, j, hist):
    """g[p, k] = <Phi_j F e_k, f> on interval j, shape (n_paths, r)."""
    return np.einsum("v,pvu,ur->pr", f, phi.matrices(j, hist), F)


def partial_sums(phi, F, drivers, f):
    """S[p, j] = integral over (0, t_j] for a driver array sampled on the breakpoints."""
    f = _check_dims(phi, F, f)
    if drivers.shape[2] != phi.n_intervals + 1:
        raise CylLevyError("drivers must be sampled on the integrand breakpoints")
    dm = np.diff(drivers, axis=2)
    S = np.zeros((drivers.shape[0], phi.n_intervals + 1))
    for j in range(phi.n_intervals):
        g = integrand_coefficients(phi, F, f, j, drivers)
        S[:, j + 1] = S[:, j] + np.sum(g * dm[:, :, j], axis=1)
    return S


def isometry_density(phi, F, drivers, f):
    """Per-path sum_j |F^T Phi_j^T f|^2 (t_{j+1} - t_j)."""
    f = _check_dims(phi, F, f)
    dt = np.diff(phi.breakpoints)
    out = np.zeros(drivers.shape[0])
    for j in range(phi.n_intervals):
        g = integrand_coefficients(phi, F, f, j, drivers)
        out += np.sum(g * g, axis=1) * dt[j]
    return out


def isometry_exact(phi, F, f):
    """int_0^T |i_Q^T Phi(s)^T f|^2 ds for a deterministic integrand."""
    if not phi.deterministic:
        raise CylLevyError("closed-form isometry needs a deterministic integrand")
    f = _check_dims(phi, F, f)
    dt = np.diff(phi.breakpoints)
    return float(sum(np.sum((f @ phi.values[j] @ F) ** 2) * dt[j] for j in range(phi.n_intervals)))


def _drivers_for(phi, proc, seed, n_paths, grid, workers):
    if grid is None:
        return sample_drivers(proc, phi.breakpoints, seed, n_paths, workers)
    pos = breakpoint_positions(grid, phi.breakpoints)
    return sample_drivers(proc, grid, seed, n_paths, workers)[:, :, pos]


def integrate(phi, proc, f, seed, n_paths=1, grid=None, workers=None):
    """Samples of I_T(Phi) f, shape (n_paths,)."""
    drivers = _drivers_for(phi, proc, seed, n_paths, grid, workers)
    return partial_sums(phi, _factor(proc), drivers, f)[:, -1]


def _report(lhs, rhs, se, n_paths, passed, **extra):
    out = {"lhs": float(lhs), "rhs": float(rhs), "se": float(se), "n_paths": int(n_paths), "pass": bool(passed)}
    out.update(extra)
    return out


def ito_isometry_check(phi, proc, f, n_paths, seed, workers=None):
    """E|I_T(Phi) f|^2 against int_0^T E|i_Q^T Phi(s)^T f|^2 ds.

    Deterministic integrands use the exact right side; adapted ones compare
    per-path paired samples of both sides.
    """
    F = _factor(proc)
    drivers = _drivers_for(phi, proc, seed, n_paths, None, workers)
    I = partial_sums(phi, F, drivers, f)[:, -1]
    sq = I * I
    if phi.deterministic:
        rhs = isometry_exact(phi, F, f)
        rep = mc_mean(sq, rhs)
        return _report(rep.estimate, rhs, rep.se, n_paths, rep.passed, mode="deterministic")
    dens = isometry_density(phi, F, drivers, f)
    rep = mc_mean(sq - dens, 0.0)
    return _report(sq.mean(), dens.mean(), rep.se, n_paths, rep.passed, mode="adapted")


def zero_mean_check(phi, proc, f, n_paths, seed, workers=None):
    rep = mc_mean(integrate(phi, proc, f, seed, n_paths, workers=workers), 0.0)
    return _report(rep.estimate, 0.0, rep.se, n_paths, rep.passed)


def doob_check(phi, proc, f, n_paths, seed, workers=None):
    """E[max_j S_j^2] <= 4 E[S_T^2]; the bound is inflated by 3 relative SE of the left side."""
    F = _factor(proc)
    drivers = _drivers_for(phi, proc, seed, n_paths, None, workers)
    S = partial_sums(phi, F, drivers, f)
    sup = mc_mean(np.max(S * S, axis=1))
    iso = isometry_exact(phi, F, f) if phi.deterministic else float(isometry_density(phi, F, drivers, f).mean())
    rel = sup.se / sup.estimate if sup.estimate > 0 else 0.0
    bound = 4.0 * iso * (1.0 + N_SE * rel)
    return _report(sup.estimate, bound, sup.se, n_paths, sup.estimate <= bound)


@dataclass(frozen=True, eq=False)
class ScalarStep:
    """Real step process h_j on (t_j, t_{j+1}]: fixed values or ``fn(j, hist)`` -> (n_paths,)."""

    breakpoints: np.ndarray
    values: Optional[np.ndarray] = None
    fn: Optional[Callable] = None

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", ld.check_grid(self.breakpoints))
        if (self.values is None) == (self.fn is None):
            raise CylLevyError("give exactly one of values and fn")
        if self.values is not None:
            v = np.asarray(self.values, dtype=np.float64)
            if v.shape != (len(self.breakpoints) - 1,):
                raise CylLevyError("one value per interval required")
            object.__setattr__(self, "values", v)

    def at(self, j, hist):
        if self.fn is None:
            return np.full(hist.shape[0], self.values[j])
        return np.asarray(self.fn(j, hist[:, :, : j + 1]), dtype=np.float64)


def cross_expectation(h1, h2, proc, a1, a2, n_paths, seed, workers=None):
    """E[(int h1 dY1)(int h2 dY2)] versus Cov(Y1(1), Y2(1)) E[int h1 h2 ds] for Yi = M2(.) a_i.

    The covariance <Q a1, a2> is taken exactly from the factor; the
    expectation of the right side is estimated on the same paths, and the
    verdict uses the SE of the per-path difference.
    """
    if not np.array_equal(h1.breakpoints, h2.breakpoints):
        raise CylLevyError("both step processes must share breakpoints")
    F = _factor(proc)
    c1, c2 = as_coeffs(a1) @ F, as_coeffs(a2) @ F
    cov = float(c1 @ c2)
    bp = h1.breakpoints
    drivers = sample_drivers(proc, bp, seed, n_paths, workers, tags=("cross",))
    Y = np.stack([np.einsum("r,prt->pt", c1, drivers), np.einsum("r,prt->pt", c2, drivers)], axis=1)
    dY = np.diff(Y, axis=2)
    dt = np.diff(bp)
    i1 = np.zeros(n_paths)
    i2 = np.zeros(n_paths)
    hh = np.zeros(n_paths)
    for j in range(len(dt)):
        u, v = h1.at(j, Y), h2.at(j, Y)
        i1 += u * dY[:, 0, j]
        i2 += v * dY[:, 1, j]
        hh += u * v * dt[j]
    lhs = i1 * i2
    rhs = cov * hh
    rep = mc_mean(lhs - rhs, 0.0)
    return _report(lhs.mean(), rhs.mean(), rep.se, n_paths, rep.passed, cov=cov)


def rotation_between(F_A, F_B, tol=1e-10):
    """Orthogonal R with F_B = F_A R; error if the two factors give different Q."""
    F_A, F_B = np.asarray(F_A, float), np.asarray(F_B, float)
    if F_A.shape != F_B.shape:
        raise CylLevyError("bases have different shapes")
    QA, QB = F_A @ F_A.T, F_B @ F_B.T
    scale = max(1.0, float(np.max(np.abs(QA))))
    if np.max(np.abs(QA - QB)) > tol * scale:
        raise CylLevyError("the two bases factor different covariances")
    R = np.linalg.lstsq(F_A, F_B, rcond=None)[0]
    if np.max(np.abs(R.T @ R - np.eye(R.shape[0]))) > 1e-8:
        raise CylLevyError("the bases are not related by an orthogonal change of coordinates")
    return R


def basis_independence_check(phi, F_A, F_B, drivers, f, n_paths, seed, workers=None):
    """Integrals in two factorizations of the same Q on one latent draw.

    Basis A uses independent drivers m; basis B = F_A R uses the drivers
    n = R^T m, which are uncorrelated and normalized, so both sides are
    series representations of the same M2. Reports the largest pathwise
    difference and the L2 difference with its SE.
    """
    F_A = np.asarray(getattr(F_A, "i_Q", F_A), float)
    F_B = np.asarray(getattr(F_B, "i_Q", F_B), float)
    R = rotation_between(F_A, F_B)
    proc = SeriesProcess(F_A, tuple(drivers))
    m = sample_drivers(proc, phi.breakpoints, seed, n_paths, workers, tags=("basis",))
    n = np.einsum("rk,prt->pkt", R, m)
    IA = partial_sums(phi, F_A, m, f)[:, -1]
    IB = partial_sums(phi, F_B, n, f)[:, -1]
    D = IA - IB
    rep = mc_mean(D * D)
    passed = rep.estimate <= N_SE * rep.se + ROUNDING_FLOOR * float(np.mean(IA * IA))
    return _report(
        rep.estimate,
        0.0,
        rep.se,
        n_paths,
        passed,
        max_pathwise=float(np.max(np.abs(D))),
        scale=float(np.max(np.abs(IA))),
    )
