"""Cylindrical Ornstein-Uhlenbeck processes dY = AY dt + C dM2 in finite dimension.

Y(t)a = Y0(S*(t)a) + I_t(Phi_t)a with Phi_t(s) = S(t - s) C. On a driver
grid of step h the integrand is replaced by the step integrand
S(t - t_j - h/2) C on (t_j, t_j + h], and the stochastic integral of that
step integrand is computed exactly from the driver increments:

    Y_{n+1} = S(h) Y_n + S(h/2) C i_Q (m(t_{n+1}) - m(t_n)).

The midpoint factor keeps the variance bias at O((theta h)^2) instead of the
O(theta h) of an endpoint factor.
"""
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate, optimize
import scipy.linalg

from . import kernels, parallel
from . import levy_drivers as ld
from .cyl_measure import EmpiricalChar
from .cyl_process import SeriesProcess
from .errors import CylLevyError
from .mc_stats import N_SE, McReport, compare, mc_mean
from .space_model import Semigroup, as_coeffs, as_matrix, stability_constants

DECAY_LEVEL = 1e-4
RADON_TOL = 1e-10


# --------------------------------------------------------------------------
# initial conditions: Y0 a = <y0, a> for a random vector y0


@dataclass(frozen=True, eq=False)
class PointInitial:
    point: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", np.asarray(self.point, dtype=np.float64).ravel())

    @property
    def dim(self):
        return len(self.point)

    def sample(self, rng, n):
        return np.broadcast_to(self.point, (n, self.dim)).copy()

    def to_dict(self):
        return {"kind": "point", "point": self.point.tolist()}


def zero_initial(dim):
    return PointInitial(np.zeros(dim))


@dataclass(frozen=True, eq=False)
class GaussianInitial:
    mean_: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mean_, dtype=np.float64).ravel()
        c = np.atleast_2d(np.asarray(self.cov, dtype=np.float64))
        w, V = np.linalg.eigh(0.5 * (c + c.T))
        object.__setattr__(self, "mean_", m)
        object.__setattr__(self, "cov", c)
        object.__setattr__(self, "_root", V * np.sqrt(np.clip(w, 0.0, None)))

    @property
    def dim(self):
        return len(self.mean_)

    def sample(self, rng, n):
        return self.mean_ + rng.standard_normal((n, self.dim)) @ self._root.T

    def to_dict(self):
        return {"kind": "gaussian", "mean": self.mean_.tolist(), "cov": self.cov.tolist()}


@dataclass(frozen=True, eq=False)
class DiscreteInitial:
    """y0 = points[k] with probability probs[k]."""

    points: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        p = np.asarray(self.probs, dtype=np.float64)
        if p.shape != (pts.shape[0],) or np.any(p < 0) or not p.sum() > 0:
            raise CylLevyError("one non-negative probability per point required")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "probs", p / p.sum())

    @property
    def dim(self):
        return self.points.shape[1]

    def sample(self, rng, n):
        return self.points[rng.choice(len(self.probs), size=n, p=self.probs)]

    def to_dict(self):
        return {"kind": "discrete", "points": self.points.tolist(), "probs": self.probs.tolist()}


def initial_from_dict(d, dim):
    if d is None or d.get("kind") == "zero":
        return zero_initial(dim)
    if d["kind"] == "point":
        return PointInitial(d["point"])
    if d["kind"] == "gaussian":
        return GaussianInitial(d["mean"], d["cov"])
    if d["kind"] == "discrete":
        return DiscreteInitial(d["points"], d["probs"])
    raise CylLevyError(f"unknown initial condition {d['kind']!r}")


# --------------------------------------------------------------------------
# scenario


@dataclass(frozen=True, eq=False)
class OUScenario:
    semigroup: Semigroup
    C: np.ndarray
    noise: SeriesProcess
    initial: object
    T: float
    dt: float
    n_steps: int = field(init=False)

    def __post_init__(self):
        C = np.atleast_2d(as_matrix(self.C))
        if C.shape != (self.semigroup.dim, self.noise.dim):
            raise CylLevyError(f"noise map must be {self.semigroup.dim} x {self.noise.dim}, got {C.shape}")
        if self.initial.dim != self.semigroup.dim:
            raise CylLevyError("initial condition lives in the wrong space")
        if not self.T > 0 or not self.dt > 0:
            raise CylLevyError("horizon and step must be positive")
        n = int(round(self.T / self.dt))
        if n < 1 or abs(n * self.dt - self.T) > 1e-9 * self.T:
            raise CylLevyError("the horizon must be a whole number of steps")
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "n_steps", n)

    @property
    def dim(self):
        return self.semigroup.dim

    @property
    def grid(self):
        return np.linspace(0.0, self.T, self.n_steps + 1)

    @property
    def noise_factor(self):
        """C i_Q: V-valued columns of the noise."""
        return self.C @ self.noise.factor

    def step_of(self, t):
        k = int(round(t / self.dt))
        if k < 0 or k > self.n_steps or abs(k * self.dt - t) > 1e-9 * max(1.0, self.T):
            raise CylLevyError(f"time {t} is not a point of the driver grid (step {self.dt})")
        return k

    def with_(self, **kw):
        args = dict(semigroup=self.semigroup, C=self.C, noise=self.noise, initial=self.initial, T=self.T, dt=self.dt)
        args.update(kw)
        return OUScenario(**args)


def scalar_scenario(theta, driver, T, dt, initial=None, c=1.0):
    """V = U = R, A = -theta, C = c, one driver."""
    S = Semigroup.from_generator([[-float(theta)]])
    noise = SeriesProcess(np.ones((1, 1)), (driver,))
    return OUScenario(S, [[float(c)]], noise, initial or zero_initial(1), float(T), float(dt))


# --------------------------------------------------------------------------
# simulation


def _step_matrices(sc, h):
    E = sc.semigroup.matrix(h)
    G = sc.semigroup.matrix(0.5 * h) @ sc.noise_factor
    return E, G


def _driver_increments(sc, rng, n, grid):
    drv = np.stack([b.values for b in sc.noise.sample_drivers_block(rng, n, grid)], axis=1)
    return np.diff(drv, axis=2), drv


def _simulate_block(sc, rng, n, record, y0=None):
    grid = sc.grid
    y = sc.initial.sample(rng, n) if y0 is None else np.broadcast_to(y0, (n, sc.dim)).copy()
    dm, _ = _driver_increments(sc, rng, n, grid)
    E, G = _step_matrices(sc, sc.dt)
    xi = np.einsum("prn,vr->pnv", dm, G)
    Es = np.broadcast_to(E, (sc.n_steps,) + E.shape)
    return kernels.affine_recursion(Es, xi, y, record)


def simulate(sc, seed, n_paths, times=None, y0=None, tags=("ou",), workers=None):
    """States Y(t) as vectors, shape (n_paths, len(times), dim); default times are the whole grid.

    Paths are generated block by block and only the requested times are kept.
    """
    grid = sc.grid
    record = np.arange(sc.n_steps + 1) if times is None else np.array([sc.step_of(t) for t in times], dtype=np.int64)
    parts = parallel.map_blocks(lambda rng, n, start: _simulate_block(sc, rng, n, record, y0), n_paths, seed, tags, workers)
    return np.concatenate(parts), grid[record]


def mild_solution(sc, a, seed, n_paths=1, times=None, workers=None):
    """Paths of Y(t)a, shape (n_paths, len(times))."""
    Y, ts = simulate(sc, seed, n_paths, times, workers=workers)
    return Y @ as_coeffs(a), ts


def stochastic_convolution_samples(sc, t, seed, n_paths, tags=("rho",), workers=None):
    """Samples of int_0^t S(t - s) C dM2(s), the law rho_t, as vectors (n_paths, dim)."""
    sub = sc.with_(initial=zero_initial(sc.dim), T=t) if t > 0 else None
    if sub is None:
        return np.zeros((n_paths, sc.dim))
    Y, _ = simulate(sub, seed, n_paths, [t], tags=tags, workers=workers)
    return Y[:, 0, :]


# --------------------------------------------------------------------------
# cylindrical flow


def sample_scenario_drivers(sc, seed, n_paths, tags=("flow",), workers=None):
    parts = parallel.map_blocks(lambda rng, n, start: _driver_increments(sc, rng, n, sc.grid)[1], n_paths, seed, tags, workers)
    return np.concatenate(parts)


def flow_apply(sc, s, t, X, drivers):
    """Z_{s,t} X = S(t - s) X + int_s^t S(t - r) C dM2(r) on given driver paths.

    Evaluated directly, one semigroup factor per driver interval, so that
    compositions can be compared against it.
    """
    if s > t:
        raise CylLevyError("flow needs s <= t")
    i, k = sc.step_of(s), sc.step_of(t)
    X = np.asarray(X, dtype=np.float64)
    if i == k:
        return X.copy()
    h = sc.dt
    out = X @ sc.semigroup.matrix(t - s).T
    dm = np.diff(drivers, axis=2)
    CF = sc.noise_factor
    for j in range(i, k):
        lag = (k - j - 0.5) * h
        G = sc.semigroup.matrix(lag) @ CF
        out = out + dm[:, :, j] @ G.T
    return out


def flow_composition_error(sc, r, s, t, seed, n_paths):
    """max |Z_{r,t} X - Z_{s,t}(Z_{r,s} X)| on shared driver paths, and the gap to the recursion."""
    if not r <= s <= t:
        raise CylLevyError("need r <= s <= t")
    drivers = sample_scenario_drivers(sc, seed, n_paths)
    rng = parallel.stream_rng(seed, "flow_init")
    X = sc.initial.sample(rng, n_paths)
    direct = flow_apply(sc, r, t, X, drivers)
    composed = flow_apply(sc, s, t, flow_apply(sc, r, s, X, drivers), drivers)
    return float(np.max(np.abs(direct - composed)))


def flow_vs_recursion_error(sc, seed, n_paths, t=None):
    """max |Z_{0,t} Y0 - Y(t)| where Y(t) comes from the step recursion on the same drivers."""
    t = sc.T if t is None else t
    k = sc.step_of(t)
    rng = parallel.stream_rng(seed, "flow_rec")
    y0 = sc.initial.sample(rng, n_paths)
    drivers = sample_scenario_drivers(sc, seed, n_paths, tags=("flow_rec",))
    E, G = _step_matrices(sc, sc.dt)
    xi = np.einsum("prn,vr->pnv", np.diff(drivers, axis=2), G)
    rec = kernels.affine_recursion(np.broadcast_to(E, (sc.n_steps,) + E.shape), xi, y0, np.array([k]))[:, 0]
    return float(np.max(np.abs(flow_apply(sc, 0.0, t, y0, drivers) - rec)))


# --------------------------------------------------------------------------
# weak formulation residual


def _aggregate(drivers, factor):
    return drivers[:, :, ::factor]


def weak_residuals(sc, a, seed, dt_list, n_paths=20, workers=None):
    """Per-path residuals |Y(T)a - Y0 a - sum_j Y(s_j)(A* a) dt - (C M2(T)) a| for each dt.

    Drivers are sampled once on the scenario grid; a coarser dt (a multiple
    of the grid step) sums their increments, and Y is re-simulated with that
    step, so all resolutions share the same noise.
    """
    if sc.semigroup.kind != "expm":
        raise CylLevyError("the weak residual needs a generator")
    a = as_coeffs(a)
    A = sc.semigroup.generator.entries
    Aa = A.T @ a
    CF = sc.noise_factor
    drivers = sample_scenario_drivers(sc, seed, n_paths, tags=("weak",), workers=workers)
    y0 = sc.initial.sample(parallel.stream_rng(seed, "weak_init"), n_paths)
    out = {}
    for dt in dt_list:
        factor = int(round(dt / sc.dt))
        if factor < 1 or abs(factor * sc.dt - dt) > 1e-12 * max(1.0, dt) or sc.n_steps % factor:
            raise CylLevyError(f"dt = {dt} does not divide the driver grid")
        d = _aggregate(drivers, factor)
        n = d.shape[2] - 1
        E, G = _step_matrices(sc, dt)
        xi = np.einsum("prn,vr->pnv", np.diff(d, axis=2), G)
        Y = kernels.affine_recursion(np.broadcast_to(E, (n,) + E.shape), xi, y0, np.arange(n + 1))
        Ya = Y @ a
        riemann = (Y[:, :-1] @ Aa).sum(axis=1) * dt
        noise = (d[:, :, -1] - d[:, :, 0]) @ (CF.T @ a)
        out[float(dt)] = np.abs(Ya[:, -1] - Ya[:, 0] - riemann - noise)
    return out


def weak_residual(sc, a, seed, dt, path=0):
    """Residual on one path for step dt."""
    return float(weak_residuals(sc, a, seed, [dt], n_paths=path + 1)[float(dt)][path])


def weak_residual_order(sc, a, seed, dt, n_paths=20):
    """Ratio mean|R(dt)| / mean|R(dt/2)| over shared-noise paths (first order gives about 2)."""
    res = weak_residuals(sc, a, seed, [dt, dt / 2], n_paths)
    coarse, fine = res[float(dt)], res[float(dt / 2)]
    ratio = float(coarse.mean() / fine.mean()) if fine.mean() > 0 else np.inf
    return {
        "dt": float(dt),
        "mean_residual_dt": float(coarse.mean()),
        "mean_residual_half_dt": float(fine.mean()),
        "ratio": ratio,
        "n_paths": int(n_paths),
        "pass": bool(1.7 <= ratio <= 2.3),
    }


# --------------------------------------------------------------------------
# Mehler formula and invariant measures


def _pullback(sc, t, A):
    """Rows S*(t) a for a stack of functionals A (n, dim)."""
    return A @ sc.semigroup.matrix(t)


def random_arguments(rng, n_args, n_funcs, scale=1.0):
    return scale * rng.standard_normal((n_args, n_funcs))


def _trig_reports(X, betas):
    """McReports of E exp(i beta . x) for each row of betas."""
    return [mc_mean(np.exp(1j * (X @ b))) for b in betas]


def mehler_check(sc, a_tuple, t, b, n_paths, seed, n_args=10, arg_scale=1.0, workers=None):
    """E f(Y(t)a | Y0 = b) versus E f(<b, S*(t)a> + rho_t a) for f = cos(beta .), sin(beta .).

    The left side simulates the process from b; the right side draws rho_t
    from an independent stream and adds the deterministic pullback.
    """
    A = np.atleast_2d(np.array([as_coeffs(a) for a in a_tuple], dtype=np.float64))
    b = np.asarray(b, dtype=np.float64)
    betas = random_arguments(parallel.stream_rng(seed, "mehler_args"), n_args, A.shape[0], arg_scale)
    Y, _ = simulate(sc, seed, n_paths, [t], y0=b, tags=("mehler_lhs",), workers=workers)
    lhs_x = Y[:, 0, :] @ A.T
    rho = stochastic_convolution_samples(sc, t, seed, n_paths, tags=("mehler_rho",), workers=workers)
    shift = _pullback(sc, t, A) @ b
    rhs_x = shift[None, :] + rho @ A.T
    rows = []
    for beta, L, R in zip(betas, _trig_reports(lhs_x, betas), _trig_reports(rhs_x, betas)):
        passed, diff, se = compare(L, R)
        rows.append({
            "beta": beta.tolist(),
            "cos": {"lhs": L.estimate.real, "rhs": R.estimate.real, "se": se.real},
            "sin": {"lhs": L.estimate.imag, "rhs": R.estimate.imag, "se": se.imag},
            "pass": passed,
        })
    return {"t": float(t), "n_paths": int(n_paths), "arguments": rows, "pass": all(r["pass"] for r in rows)}


def _product_report(X, Y):
    """Estimate and componentwise SE of a product of independent complex estimates."""
    x, y = complex(X.estimate), complex(Y.estimate)
    sx, sy = complex(X.se), complex(Y.se)
    z = x * y
    var_re = (y.real * sx.real) ** 2 + (y.imag * sx.imag) ** 2 + (x.real * sy.real) ** 2 + (x.imag * sy.imag) ** 2
    var_im = (y.imag * sx.real) ** 2 + (y.real * sx.imag) ** 2 + (x.imag * sy.real) ** 2 + (x.real * sy.imag) ** 2
    return McReport(z, complex(np.sqrt(var_re), np.sqrt(var_im)), min(X.n_paths, Y.n_paths))


def default_t_long(sc, level=DECAY_LEVEL, horizon=10.0):
    """Grid time after which ||S(t)|| <= level under the fitted bound R exp(-lam t)."""
    rep = stability_constants(sc.semigroup, horizon)
    if not rep.is_exp_stable:
        return rep, np.inf
    t = rep.t_decay(level)
    return rep, float(np.ceil(t / sc.dt - 1e-9) * sc.dt)


def invariant_measure_estimate(sc, a_tuple, n_paths, seed, t=1.0, t_long=None, n_args=10, arg_scale=1.0, workers=None):
    """Empirical law of Y(t_long)a as the invariant-law proxy plus a self-decomposability test.

    Checks phi(beta . a) = phi(beta . S*(t)a) * phi_rho_t(beta . a) at n_args
    random beta, with phi from Y(t_long) and phi_rho_t from an independent stream.
    """
    A = np.atleast_2d(np.array([as_coeffs(a) for a in a_tuple], dtype=np.float64))
    rep, t_auto = default_t_long(sc)
    if not rep.is_exp_stable:
        warnings.warn("semigroup is not exponentially stable; the long-time law may not converge", RuntimeWarning)
    if t_long is None:
        if not np.isfinite(t_auto):
            raise CylLevyError("no default t_long for a semigroup that is not exponentially stable")
        t_long = t_auto
    long_sc = sc.with_(initial=zero_initial(sc.dim), T=max(t_long, sc.dt))
    Y, _ = simulate(long_sc, seed, n_paths, [t_long], tags=("inv_long",), workers=workers)
    Yl = Y[:, 0, :]
    rho = stochastic_convolution_samples(sc, t, seed, n_paths, tags=("inv_rho",), workers=workers)
    P = _pullback(sc, t, A)
    betas = random_arguments(parallel.stream_rng(seed, "inv_args"), n_args, A.shape[0], arg_scale)
    rows = []
    for beta in betas:
        lhs = mc_mean(np.exp(1j * (Yl @ (beta @ A))))
        pulled = mc_mean(np.exp(1j * (Yl @ (beta @ P))))
        conv = mc_mean(np.exp(1j * (rho @ (beta @ A))))
        rhs = _product_report(pulled, conv)
        passed, diff, se = compare(lhs, rhs)
        rows.append({
            "beta": beta.tolist(),
            "lhs": {"re": lhs.estimate.real, "im": lhs.estimate.imag},
            "rhs": {"re": rhs.estimate.real, "im": rhs.estimate.imag},
            "se": {"re": se.real, "im": se.imag},
            "pass": passed,
        })
    norm_long = float(np.linalg.norm(sc.semigroup.matrix(t_long), 2))
    return {
        "empirical": EmpiricalChar(Yl @ A.T),
        "t_long": float(t_long),
        "norm_S_t_long": norm_long,
        "exp_stable": bool(rep.is_exp_stable),
        "R": rep.R,
        "lam": rep.lam,
        "t": float(t),
        "n_paths": int(n_paths),
        "arguments": rows,
        "pass": all(r["pass"] for r in rows),
    }


def stationary_variance_check(theta, driver, n_paths, seed, dt=None, level=DECAY_LEVEL, workers=None):
    """Scalar A = -theta, C = 1: E|Y(t_long)|^2 against 1 / (2 theta) with ||S(t_long)|| <= level."""
    dt = 0.02 / theta if dt is None else dt
    probe = scalar_scenario(theta, driver, dt, dt)
    rep, t_long = default_t_long(probe, level)
    sc = scalar_scenario(theta, driver, t_long, dt)
    Y, _ = simulate(sc, seed, n_paths, [t_long], tags=("ou_var",), workers=workers)
    target = 1.0 / (2.0 * theta)
    r = mc_mean(Y[:, 0, 0] ** 2, target)
    return {
        "theta": float(theta),
        "t_long": float(t_long),
        "dt": float(dt),
        "norm_S_t_long": float(abs(sc.semigroup.matrix(t_long)[0, 0])),
        "estimate": r.estimate,
        "target": target,
        "se": r.se,
        "n_paths": int(n_paths),
        "pass": bool(r.passed and abs(sc.semigroup.matrix(t_long)[0, 0]) <= level),
    }


# --------------------------------------------------------------------------
# radonification diagnostic


def _column_integral(S, g, t):
    val, _ = integrate.quad(lambda u: float(np.sum((S.matrix(u) @ g) ** 2)), 0.0, t, epsabs=RADON_TOL, epsrel=RADON_TOL, limit=400)
    return val


def van_loan_gramian(A, G, t):
    """int_0^t exp(uA) G G^T exp(uA^T) du via one block exponential."""
    d = A.shape[0]
    M = np.zeros((2 * d, 2 * d))
    M[:d, :d] = -A
    M[:d, d:] = G @ G.T
    M[d:, d:] = A.T
    E = scipy.linalg.expm(t * M)
    return E[d:, d:].T @ E[:d, d:]


def radonification_check(sc, t, r_terms=None, tol=RADON_TOL):
    """Partial sums sum_{k<=m} int_0^t |S(u) C i_Q e_k|^2 du for m = 1..r.

    In finite rank the series always converges; the report records the
    profile and whether the last increment is below ``tol``.
    """
    CF = sc.noise_factor
    r = CF.shape[1] if r_terms is None else min(int(r_terms), CF.shape[1])
    incs = np.array([_column_integral(sc.semigroup, CF[:, k], t) for k in range(r)])
    sums = np.cumsum(incs)
    out = {
        "t": float(t),
        "partial_sums": sums.tolist(),
        "increments": incs.tolist(),
        "monotone": bool(np.all(incs >= 0)),
        "finite": bool(np.all(np.isfinite(sums))),
        "last_increment": float(incs[-1]) if r else 0.0,
        "last_increment_below_tol": bool(r == 0 or incs[-1] < tol),
    }
    out["converged"] = out["monotone"] and out["finite"]
    if sc.semigroup.kind == "expm":
        gram = van_loan_gramian(sc.semigroup.generator.entries, CF[:, :r], t)
        out["van_loan_total"] = float(np.trace(gram))
        out["quadrature_gap"] = float(abs(np.trace(gram) - (sums[-1] if r else 0.0)))
    return out


# --------------------------------------------------------------------------
# projections that are not one-dimensional OU processes


def fit_exponential(ts, ys, bound=20.0):
    """Least-squares fit y = zeta exp(lam t); returns (zeta, lam, relative residual)."""
    ts, ys = np.asarray(ts, float), np.asarray(ys, float)
    norm = float(np.linalg.norm(ys))
    if norm == 0:
        return 0.0, 0.0, 0.0

    def zeta_of(lam):
        e = np.exp(lam * ts)
        return float(ys @ e / (e @ e))

    def loss(lam):
        e = np.exp(lam * ts)
        return float(np.sum((ys - zeta_of(lam) * e) ** 2))

    res = optimize.minimize_scalar(loss, bounds=(-bound, bound), method="bounded", options={"xatol": 1e-12, "maxiter": 2000})
    lam = float(res.x)
    zeta = zeta_of(lam)
    return zeta, lam, float(np.sqrt(loss(lam)) / norm)


def translation_paths(grid_size, xi, t_max=2.0, x_min=-3.0, x_max=2.0):
    """Y(t)g = g(xi - t) for g = 1_(0,1) under the translation semigroup on a node grid."""
    h = (x_max - x_min) / grid_size
    nodes = x_min + h * np.arange(grid_size)
    g = ((nodes > 0) & (nodes < 1)).astype(float)
    S = Semigroup.translation(grid_size, h)
    idx = int(round((xi - x_min) / h))
    y0 = np.zeros(grid_size)
    y0[idx] = 1.0
    n_t = int(round(t_max / h))
    ts = h * np.arange(n_t + 1)
    # Y(t)g = Y0(S*(t)g) = <S(t) y0, g>
    ys = np.array([(S.matrix(t) @ y0) @ g for t in ts])
    return ts, ys, nodes, g


def non_ou_projection_demo(grid_size, seed, threshold=0.1, control_tol=1e-6, theta=1.0):
    """Fit exponentials to Y(t)g for the translation semigroup and to a noiseless scalar OU path."""
    rng = parallel.stream_rng(seed, "bernoulli")
    draws = rng.integers(0, 2, size=64)
    if not draws.any():
        raise CylLevyError("no draw with xi = 1")
    xi = int(draws[np.argmax(draws)])
    ts, ys, _, _ = translation_paths(grid_size, float(xi))
    zeta, lam, resid = fit_exponential(ts, ys)
    # control: a genuine scalar OU projection (noiseless, so exactly exponential)
    h = ts[1] - ts[0]
    ctrl_sc = scalar_scenario(theta, ld.LevyTriplet1D(0.0, 1.0), ts[-1], h, PointInitial([1.7]), c=0.0)
    ctrl, _ = mild_solution(ctrl_sc, [1.0], seed, 1)
    cz, cl, cres = fit_exponential(ts, ctrl[0])
    return {
        "grid_size": int(grid_size),
        "xi": xi,
        "fit": {"zeta": zeta, "lam": lam, "relative_residual": resid},
        "control": {"zeta": cz, "lam": cl, "relative_residual": cres},
        "threshold": threshold,
        "control_tol": control_tol,
        "pass": bool(resid > threshold and cres < control_tol),
    }
