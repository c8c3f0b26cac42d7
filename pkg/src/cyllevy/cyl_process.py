"""Concrete cylindrical Levy processes on R^d and their Levy-Ito terms.

Every process here is driven by one latent draw per path (a Poisson count,
jump records, a Brownian path, driver paths) from which L(t)a is evaluated
for any functional a, so L(t)(alpha a + b) = alpha L(t)a + L(t)b holds per
path up to rounding. In finite dimension that latent draw is a random
vector X(t) and L(t)a = <X(t), a>.

Jump classification for the Levy-Ito split uses the closed unit ball
{|x| <= 1} as the small-jump set.
"""
import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels, parallel
from . import levy_drivers as ld
from .cyl_measure import (
    AtomicVectorLaw,
    CharFunctional,
    CompoundPoissonChar,
    DiracChar,
    GaussianChar,
    ImpulseLaw,
    PoissonChar,
    _args,
    convolve,
    vector_law_from_dict,
)
from .errors import CylLevyError, DimensionMismatch, UnsupportedOperation
from .space_model import as_coeffs


@dataclass(frozen=True, eq=False)
class CylSample:
    """Latent randomness of a cylindrical process on a time grid.

    ``X[p, j]`` is the random vector with L(t_j)a = <X[p, j], a>. The
    continuous part is ``drift * t + gauss``; jumps are stored flat with
    vector sizes. ``counts`` is set for the cylindrical Poisson process and
    ``drivers`` (n_paths, r, n_times) for series processes.
    """

    time_grid: np.ndarray
    X: np.ndarray
    drift: np.ndarray
    gauss: Optional[np.ndarray]
    jump_path: np.ndarray
    jump_time: np.ndarray
    jump_size: np.ndarray
    counts: Optional[np.ndarray] = None
    drivers: Optional[np.ndarray] = None
    seed: Optional[int] = None
    zeta: Optional[np.ndarray] = None

    @property
    def n_paths(self):
        return self.X.shape[0]

    @property
    def dim(self):
        return self.X.shape[2]

    def jump_index(self):
        return np.searchsorted(self.time_grid, self.jump_time, side="left")

    def evaluate(self, a):
        """L(t)a for every path and grid time, shape (n_paths, n_times)."""
        a = _args(a, self.dim)
        if self.zeta is not None:
            # cylindrical Poisson: zeta(a) * n(t) on integer counts
            return float(self.zeta @ a) * self.counts
        return self.X @ a

    def continuous(self, a):
        a = _args(a, self.dim)
        out = np.outer(np.ones(self.n_paths), float(self.drift @ a) * self.time_grid)
        if self.gauss is not None:
            out = out + self.gauss @ a
        return out

    def project(self, a):
        """The one-dimensional path bundle of (L(t)a)."""
        a = _args(a, self.dim)
        return ld.PathBundle(
            self.time_grid,
            self.evaluate(a),
            self.continuous(a),
            self.jump_path,
            self.jump_time,
            self.jump_size @ a,
            self.seed,
        )


def _concat_samples(parts, seed):
    offsets = np.cumsum([0] + [p.n_paths for p in parts[:-1]])
    first = parts[0]

    def cat(name):
        vals = [getattr(p, name) for p in parts]
        return None if vals[0] is None else np.concatenate(vals)

    return CylSample(
        first.time_grid,
        cat("X"),
        first.drift,
        cat("gauss"),
        np.concatenate([p.jump_path + o for p, o in zip(parts, offsets)]),
        np.concatenate([p.jump_time for p in parts]),
        np.concatenate([p.jump_size for p in parts]),
        cat("counts"),
        cat("drivers"),
        seed,
        first.zeta,
    )


class CylLevyProcess:
    """Common interface: ``sample`` the latent draw, then evaluate functionals on it."""

    kind = "abstract"
    dim: int

    def sample_block(self, rng, n_paths, grid):
        raise NotImplementedError

    def sample(self, grid, seed, n_paths=1, workers=None, tags=("cyl",)):
        grid = ld.check_grid(grid)
        parts = parallel.map_blocks(lambda rng, n, start: self.sample_block(rng, n, grid), n_paths, seed, tags, workers)
        return _concat_samples(parts, seed)

    def char(self, t=1.0) -> CharFunctional:
        raise NotImplementedError

    def raw_drift(self):
        return np.zeros(self.dim)

    def gauss_cov(self):
        return np.zeros((self.dim, self.dim))

    def projected_jump_measure(self, a):
        """nu o a^{-1} as a finite Levy measure, or None without jumps."""
        return None

    @property
    def weak_order_2(self):
        return True

    def mean(self):
        """E L(1) as a vector."""
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class InducedLevyProcess(CylLevyProcess):
    """L(t)a = <X(t), a> for X(t) = drift t + G(t) + (compound Poisson sum of law-distributed jumps).

    ``cov`` is the covariance of G(1); ``law`` is a vector jump law or None.
    """

    drift: np.ndarray
    cov: np.ndarray
    rate: float = 0.0
    law: Optional[object] = None
    kind = "induced"

    def __post_init__(self):
        b = np.asarray(self.drift, dtype=np.float64).ravel()
        c = np.atleast_2d(np.asarray(self.cov, dtype=np.float64))
        if c.shape != (len(b), len(b)) or not np.allclose(c, c.T, atol=1e-12):
            raise CylLevyError("Gaussian covariance must be a symmetric dim x dim matrix")
        w, V = np.linalg.eigh(c)
        if w.min() < -1e-10 * max(1.0, abs(w).max()):
            raise CylLevyError("Gaussian covariance must be positive semidefinite")
        if self.law is not None:
            if not self.rate > 0:
                raise CylLevyError("jump rate must be positive when a jump law is given")
            if self.law.dim != len(b):
                raise DimensionMismatch("jump law dimension differs from the drift dimension")
        object.__setattr__(self, "drift", b)
        object.__setattr__(self, "cov", c)
        object.__setattr__(self, "_root", V * np.sqrt(np.clip(w, 0.0, None)))

    @property
    def dim(self):
        return len(self.drift)

    def raw_drift(self):
        return self.drift.copy()

    def gauss_cov(self):
        return self.cov.copy()

    def _jumps(self, rng, n_paths, T):
        if self.law is None or T == 0:
            return np.zeros(0, np.int64), np.zeros(0), np.zeros((0, self.dim)), np.zeros(n_paths, np.int64)
        counts = rng.poisson(self.rate * T, n_paths)
        m = int(counts.sum())
        path = np.repeat(np.arange(n_paths, dtype=np.int64), counts)
        times = rng.uniform(0.0, T, m)
        sizes = self.law.sample(rng, m)
        order = np.lexsort((times, path))
        return path[order], times[order], sizes[order], counts

    def sample_block(self, rng, n_paths, grid):
        d = self.dim
        gauss = None
        if np.any(self.cov):
            z = rng.standard_normal((n_paths, len(grid) - 1, d)) * np.sqrt(np.diff(grid))[None, :, None]
            gauss = np.zeros((n_paths, len(grid), d))
            gauss[:, 1:] = np.cumsum(z @ self._root.T, axis=1)
        jp, jt, js, _ = self._jumps(rng, n_paths, grid[-1])
        idx = np.searchsorted(grid, jt, side="left")
        X = kernels.jump_sums(jp, idx, js, n_paths, len(grid)) + self.drift[None, None, :] * grid[None, :, None]
        if gauss is not None:
            X = X + gauss
        return CylSample(grid, X, self.drift, gauss, jp, jt, js)

    def projected_jump_measure(self, a):
        if self.law is None:
            return None
        return ld.FiniteLevyMeasure(self.rate, self.law.projected(a))

    def mean(self):
        jump = self.rate * self.law.mean() if self.law is not None else 0.0
        return self.drift + jump

    def char(self, t=1.0):
        phi = convolve(DiracChar(t * self.drift), GaussianChar(t * self.cov))
        if self.law is not None:
            phi = convolve(phi, CompoundPoissonChar(self.rate, self.law, t))
        return phi

    def to_dict(self):
        return {
            "kind": "induced",
            "drift": self.drift.tolist(),
            "cov": self.cov.tolist(),
            "rate": float(self.rate),
            "law": None if self.law is None else self.law.to_dict(),
        }


class CylPoissonProcess(InducedLevyProcess):
    """L(t)a = zeta(a) n(t) for a real Poisson process n of the given rate."""

    kind = "cyl_poisson"

    def __init__(self, zeta, rate):
        zeta = np.asarray(as_coeffs(zeta), dtype=np.float64).ravel()
        if not np.any(zeta):
            raise CylLevyError("zeta must be non-zero")
        d = len(zeta)
        super().__init__(np.zeros(d), np.zeros((d, d)), float(rate), AtomicVectorLaw(zeta[None, :], [1.0]))
        object.__setattr__(self, "zeta", zeta)

    def zeta_of(self, a):
        return float(self.zeta @ _args(a, self.dim))

    def sample_block(self, rng, n_paths, grid):
        s = super().sample_block(rng, n_paths, grid)
        counts = kernels.jump_sums(s.jump_path, s.jump_index(), np.ones(len(s.jump_path)), n_paths, len(grid))
        return CylSample(grid, s.X, s.drift, None, s.jump_path, s.jump_time, s.jump_size, counts.astype(np.int64), zeta=self.zeta)

    def char(self, t=1.0):
        return PoissonChar(self.rate, self.zeta, t)

    def to_dict(self):
        return {"kind": "cyl_poisson", "zeta": self.zeta.tolist(), "rate": float(self.rate)}


def cyl_compound_poisson(rate, law):
    """L(t)a = Y_1 a + ... + Y_{n(t)} a with iid jumps Y_k ~ law on R^d."""
    d = law.dim
    return InducedLevyProcess(np.zeros(d), np.zeros((d, d)), float(rate), law)


class ImpulsiveProcess(InducedLevyProcess):
    """Compensated impulsive noise on d cells with control weights w.

    Impulses b ~ ``law`` arrive at total rate ``rate * sum(w)`` at a cell
    chosen proportionally to w; the compensating drift is -rate E[b] w.
    """

    kind = "impulsive"

    def __init__(self, weights, rate, law):
        jl = ImpulseLaw(weights, law)
        total = float(rate) * jl.weights.sum()
        d = jl.dim
        super().__init__(-total * jl.mean(), np.zeros((d, d)), total, jl)
        object.__setattr__(self, "cell_rate", float(rate))

    def to_dict(self):
        jl = self.law
        return {"kind": "impulsive", "weights": jl.weights.tolist(), "rate": self.cell_rate, "law": jl.law.to_dict()}


@dataclass(frozen=True, eq=False)
class SeriesProcess(CylLevyProcess):
    """M(t)a = sum_k <F e_k, a> m_k(t) for independent one-dimensional drivers m_k.

    ``factor`` is the d x r matrix F (column k is F e_k).
    """

    factor: np.ndarray
    drivers: tuple
    kind = "series"

    def __post_init__(self):
        F = np.atleast_2d(np.asarray(getattr(self.factor, "i_Q", self.factor), dtype=np.float64))
        if F.shape[1] != len(self.drivers):
            raise CylLevyError(f"{F.shape[1]} factor columns but {len(self.drivers)} drivers")
        object.__setattr__(self, "factor", F)
        object.__setattr__(self, "drivers", tuple(self.drivers))

    @property
    def dim(self):
        return self.factor.shape[0]

    @property
    def rank(self):
        return self.factor.shape[1]

    def sample_drivers_block(self, rng, n_paths, grid):
        """Driver path bundles for one block, drawn in driver order from one generator."""
        return [ld.simulate_block(tr, grid, rng, n_paths) for tr in self.drivers]

    def sample_block(self, rng, n_paths, grid):
        F = self.factor
        bundles = self.sample_drivers_block(rng, n_paths, grid)
        drv = np.stack([b.values for b in bundles], axis=1)
        X = np.einsum("prt,dr->ptd", drv, F)
        cont = np.stack([b.continuous for b in bundles], axis=1)
        drifts = np.array([self._continuous_drift(tr) for tr in self.drivers])
        gauss = np.einsum("prt,dr->ptd", cont, F) - (F @ drifts)[None, None, :] * grid[None, :, None]
        jp = np.concatenate([b.jump_path for b in bundles])
        jt = np.concatenate([b.jump_time for b in bundles])
        js = np.concatenate([b.jump_size[:, None] * F[:, k][None, :] for k, b in enumerate(bundles)])
        order = np.lexsort((jt, jp))
        return CylSample(grid, X, F @ drifts, gauss, jp[order], jt[order], js[order], drivers=drv)

    def _continuous_drift(self, tr):
        j = tr.jumps
        if isinstance(j, ld.InfiniteActivity):
            return tr.drift - j.measure.small_jump_mean(1.0, eps=j.eps)
        return tr.drift

    def raw_drift(self):
        return self.factor @ np.array([self._continuous_drift(tr) for tr in self.drivers])

    def gauss_cov(self):
        gv = np.array([tr.simulated_gauss_var() for tr in self.drivers])
        return (self.factor * gv) @ self.factor.T

    def projected_jump_measure(self, a):
        c = self.factor.T @ _args(a, self.dim)
        rates, comps = [], []
        for ck, tr in zip(c, self.drivers):
            j = tr.jumps
            if j is None:
                continue
            if not isinstance(j, ld.CompoundPoisson):
                raise UnsupportedOperation("jump classification needs compound Poisson drivers")
            rates.append(j.rate)
            comps.append(j.law.scaled(float(ck)))
        if not rates:
            return None
        return ld.FiniteLevyMeasure(float(sum(rates)), ld.Mixture(tuple(rates), tuple(comps)))

    def mean(self):
        return self.factor @ np.array([tr.mean() for tr in self.drivers])

    def char(self, t=1.0):
        return SeriesChar(self.factor, self.drivers, t)

    def to_dict(self):
        return {"kind": "series", "factor": self.factor.tolist(), "drivers": [tr.to_dict() for tr in self.drivers]}


@dataclass(frozen=True, eq=False)
class SeriesChar(CharFunctional):
    """prod_k E exp(i <F e_k, a> m_k(t)), using the simulated driver laws."""

    factor: np.ndarray
    drivers: tuple
    t: float = 1.0

    @property
    def dim(self):
        return self.factor.shape[0]

    def exponent(self, a):
        C = _args(a, self.dim) @ self.factor
        out = 0j
        for k, tr in enumerate(self.drivers):
            out = out + self.t * tr.exponent(C[..., k])
        return out

    def power(self, c):
        return SeriesChar(self.factor, self.drivers, self.t * c)

    def to_dict(self):
        return {"kind": "series", "factor": self.factor.tolist(), "drivers": [tr.to_dict() for tr in self.drivers], "t": self.t}


def process_from_dict(d):
    kind = d["kind"]
    if kind == "cyl_poisson":
        return CylPoissonProcess(d["zeta"], float(d["rate"]))
    if kind == "cyl_compound_poisson":
        return cyl_compound_poisson(float(d["rate"]), vector_law_from_dict(d["law"]))
    if kind == "impulsive":
        return ImpulsiveProcess(d["weights"], float(d["rate"]), ld.jump_law_from_dict(d["law"]))
    if kind == "induced":
        law = d.get("law")
        return InducedLevyProcess(d["drift"], d["cov"], float(d.get("rate", 0.0)), None if law is None else vector_law_from_dict(law))
    if kind == "series":
        return SeriesProcess(np.asarray(d["factor"], dtype=np.float64), tuple(ld.triplet_from_dict(t) for t in d["drivers"]))
    raise CylLevyError(f"unknown process kind {kind!r}")


# --------------------------------------------------------------------------
# joint sampling and the Levy-Ito terms


@dataclass(frozen=True, eq=False)
class JointPaths:
    """Paths of (L(t)a_1, ..., L(t)a_n) evaluated on one latent draw; values (n_paths, n_times, n)."""

    time_grid: np.ndarray
    values: np.ndarray
    functionals: np.ndarray
    seed: Optional[int] = None

    def column(self, j):
        return self.values[:, :, j]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["path_id", "time", "functional_id", "value"])
            n_paths, n_times, n_f = self.values.shape
            for p in range(n_paths):
                for j, t in enumerate(self.time_grid):
                    for k in range(n_f):
                        w.writerow([p, repr(float(t)), k, repr(float(self.values[p, j, k]))])


def sample_joint(proc, a_list, grid, seed, n_paths=1, workers=None):
    """Evaluate every functional in ``a_list`` on the same latent draw."""
    A = np.array([_args(a, proc.dim) for a in a_list]).reshape(len(a_list), proc.dim)
    s = proc.sample(grid, seed, n_paths, workers)
    vals = np.stack([s.evaluate(a) for a in A], axis=-1)
    return JointPaths(s.time_grid, vals, A, seed)


@dataclass(frozen=True, eq=False)
class DecompositionTerms:
    """L(t)a = mm(a) t + W(t)a + M(t)a + P(t)a per path on a grid."""

    time_grid: np.ndarray
    mm: float
    W: np.ndarray
    M: np.ndarray
    P: np.ndarray
    L: np.ndarray

    @property
    def drift_term(self):
        return np.outer(np.ones(self.L.shape[0]), self.mm * self.time_grid)

    def reconstruction_error(self):
        return float(np.max(np.abs(self.drift_term + self.W + self.M + self.P - self.L), initial=0.0))

    def to_csv(self, path):
        terms = {"drift": self.drift_term, "W": self.W, "M": self.M, "P": self.P, "L": self.L}
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["path_id", "time", "term", "value"])
            for p in range(self.L.shape[0]):
                for j, t in enumerate(self.time_grid):
                    for name, arr in terms.items():
                        w.writerow([p, repr(float(t)), name, repr(float(arr[p, j]))])


def _small_jump_mean(measure):
    return 0.0 if measure is None else float(measure.small_jump_mean(1.0))


def decompose_sample(proc, sample, a):
    """Levy-Ito terms of L(t)a on an existing latent draw."""
    a = _args(a, proc.dim)
    grid = sample.time_grid
    L = sample.evaluate(a)
    if isinstance(proc, CylPoissonProcess):
        z = proc.zeta_of(a)
        n = sample.counts
        zero = np.zeros(n.shape)
        if abs(z) <= 1.0:
            M = z * (n - proc.rate * grid[None, :])
            return DecompositionTerms(grid, proc.rate * z, zero, M, zero, L)
        return DecompositionTerms(grid, 0.0, zero, zero, z * n, L)
    s = sample.jump_size @ a
    small = np.abs(s) <= 1.0
    idx = sample.jump_index()
    n_paths, n_times = L.shape
    sum_small = kernels.jump_sums(sample.jump_path[small], idx[small], s[small], n_paths, n_times)
    P = kernels.jump_sums(sample.jump_path[~small], idx[~small], s[~small], n_paths, n_times)
    comp = _small_jump_mean(proc.projected_jump_measure(a))
    M = sum_small - comp * grid[None, :]
    W = sample.gauss @ a if sample.gauss is not None else np.zeros(L.shape)
    mm = float(sample.drift @ a) + comp
    return DecompositionTerms(grid, mm, W, M, P, L)


def decompose(proc, a, grid, seed, n_paths=1, workers=None):
    """mm(a) t, W(t)a, M(t)a, P(t)a with jumps split at |x| <= 1 versus |x| > 1."""
    return decompose_sample(proc, proc.sample(grid, seed, n_paths, workers), a)


@dataclass(frozen=True, eq=False)
class M2Terms:
    """L(t)a = mm2(a) t + W(t)a + M2(t)a with the jump part fully compensated."""

    time_grid: np.ndarray
    mm2: float
    W: np.ndarray
    M2: np.ndarray
    L: np.ndarray

    def reconstruction_error(self):
        drift = self.mm2 * self.time_grid[None, :]
        return float(np.max(np.abs(drift + self.W + self.M2 - self.L), initial=0.0))


def m2_projection_sample(proc, sample, a):
    if not proc.weak_order_2:
        raise CylLevyError("process is not of weak order 2; M2 is undefined")
    a = _args(a, proc.dim)
    grid = sample.time_grid
    L = sample.evaluate(a)
    mm2 = float(proc.mean() @ a)
    if isinstance(proc, CylPoissonProcess):
        z = proc.zeta_of(a)
        return M2Terms(grid, mm2, np.zeros(L.shape), z * (sample.counts - proc.rate * grid[None, :]), L)
    W = sample.gauss @ a if sample.gauss is not None else np.zeros(L.shape)
    cont_drift = float(sample.drift @ a)
    jumps = L - W - cont_drift * grid[None, :]
    return M2Terms(grid, mm2, W, jumps - (mm2 - cont_drift) * grid[None, :], L)


def m2_projection(proc, a, grid, seed, n_paths=1, workers=None):
    """Fully compensated jump part M2(t)a = int x N~_a(t, dx) and the linear drift mm2(a)."""
    return m2_projection_sample(proc, proc.sample(grid, seed, n_paths, workers), a)


def m2_values(proc, sample, a):
    """W(t)a + M2(t)a, the centred part of L(t)a."""
    terms = m2_projection_sample(proc, sample, a)
    return terms.W + terms.M2


# --------------------------------------------------------------------------
# linearity and its failure for the truncated terms


def linearity_error(sample, alpha, a, b):
    """Max relative defect of L(t)(alpha a + b) = alpha L(t)a + L(t)b over paths and times."""
    lhs = sample.evaluate(alpha * as_coeffs(a) + as_coeffs(b))
    La, Lb = sample.evaluate(a), sample.evaluate(b)
    rhs = alpha * La + Lb
    scale = np.maximum(np.abs(alpha * La) + np.abs(Lb), np.finfo(float).tiny)
    return float(np.max(np.abs(lhs - rhs) / scale))


def linearity_errors(sample, alphas, A, B):
    """Relative defect per case: path p is tested with its own (alphas[p], A[p], B[p]) at every time."""
    alphas = np.asarray(alphas, dtype=np.float64)
    A, B = np.asarray(A, dtype=np.float64), np.asarray(B, dtype=np.float64)
    if sample.zeta is not None:
        z = sample.zeta
        n = sample.counts
        lhs = ((alphas[:, None] * A + B) @ z)[:, None] * n
        La, Lb = (A @ z)[:, None] * n, (B @ z)[:, None] * n
    else:
        lhs = np.einsum("ptd,pd->pt", sample.X, alphas[:, None] * A + B)
        La, Lb = np.einsum("ptd,pd->pt", sample.X, A), np.einsum("ptd,pd->pt", sample.X, B)
    rhs = alphas[:, None] * La + Lb
    scale = np.maximum(np.abs(alphas[:, None] * La) + np.abs(Lb), np.finfo(float).tiny)
    return np.max(np.abs(lhs - rhs) / scale, axis=1)


@dataclass(frozen=True)
class Witness:
    a: tuple
    b: tuple
    t: float
    n_t: int
    zeta_a: float
    zeta_b: float
    zeta_ab: float
    discrepancy_P: float
    discrepancy_M: float
    expected_P: float

    @property
    def exact(self):
        return self.discrepancy_P == self.expected_P

    def to_dict(self):
        d = dict(self.__dict__)
        d["a"], d["b"] = list(self.a), list(self.b)
        d["exact"] = self.exact
        return d


def is_witness(proc, a, b):
    za, zb, zab = proc.zeta_of(a), proc.zeta_of(b), proc.zeta_of(as_coeffs(a) + as_coeffs(b))
    return abs(za) <= 1.0 and abs(zb) <= 1.0 and abs(zab) > 1.0


def witness_pair(proc, level=0.8):
    """a = b = level * zeta / |zeta|^2, so zeta(a) = zeta(b) = level and zeta(a + b) = 2 level."""
    if not 0.5 < level <= 1.0:
        raise CylLevyError("level must lie in (0.5, 1] for a witness")
    a = level * proc.zeta / float(proc.zeta @ proc.zeta)
    return a, a.copy()


def nonlinearity_witness(proc, seed, t=1.0, level=0.8, max_tries=1000):
    """Functionals a, b and one path with n(t) >= 1 on which P(t)(a+b) != P(t)a + P(t)b."""
    if not isinstance(proc, CylPoissonProcess):
        raise CylLevyError("the witness is built for the cylindrical Poisson process")
    a, b = witness_pair(proc, level)
    if not is_witness(proc, a, b):
        raise CylLevyError("rounding moved the witness off the decision boundary; choose another level")
    grid = np.array([0.0, t])
    for k in range(max_tries):
        s = proc.sample(grid, seed, 1, tags=("witness", k))
        if s.counts[0, -1] >= 1:
            break
    else:
        raise CylLevyError("no path with a jump found")
    ab = a + b
    Pab, Pa, Pb = (decompose_sample(proc, s, x).P[0, -1] for x in (ab, a, b))
    Mab, Ma, Mb = (decompose_sample(proc, s, x).M[0, -1] for x in (ab, a, b))
    n = int(s.counts[0, -1])
    zab = proc.zeta_of(ab)
    return Witness(
        tuple(a.tolist()),
        tuple(b.tolist()),
        float(t),
        n,
        proc.zeta_of(a),
        proc.zeta_of(b),
        zab,
        float(Pab - Pa - Pb),
        float(Mab - Ma - Mb),
        float(zab * n),
    )
