"""Covariance operators, their factorization Q = i_Q i_Q^*, and series processes built from it."""
from dataclasses import dataclass

import numpy as np

from . import levy_drivers as ld
from .cyl_process import InducedLevyProcess, SeriesProcess, m2_values
from .errors import CylLevyError, StatisticalFailure
from .mc_stats import N_SE, second_moment_matrix
from .space_model import as_coeffs

RANK_TOL = 1e-12
SYM_TOL = 1e-10
DRIVER_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class CovarianceFactorization:
    """Q = i_Q i_Q^T with r = numerical rank columns.

    Column k of ``i_Q`` is i_Q e_k = sqrt(lam_k) v_k; ``preimages[k]`` is
    a_k = v_k / sqrt(lam_k), so i_Q^T a_k = e_k.
    """

    Q: np.ndarray
    i_Q: np.ndarray
    preimages: np.ndarray
    rank_tol: float = RANK_TOL

    @property
    def dim(self):
        return self.Q.shape[0]

    @property
    def rank(self):
        return self.i_Q.shape[1]

    def residual(self):
        return float(np.max(np.abs(self.Q - self.i_Q @ self.i_Q.T), initial=0.0))

    def preimage_residual(self):
        return float(np.max(np.abs(self.preimages @ self.i_Q - np.eye(self.rank)), initial=0.0))

    def embed(self, a):
        """Q a viewed as an element of H, i.e. its coordinates i_Q^T a."""
        return as_coeffs(a) @ self.i_Q

    def rkhs_inner(self, a, b):
        """[Q a, Q b]_H, which equals <Q a, b>."""
        return float(self.embed(a) @ self.embed(b))

    def truncation_error(self, a, m):
        """|(I - p_m) i_Q^T a|: the part of a lost by keeping the first m columns."""
        c = self.embed(a)
        return float(np.linalg.norm(c[m:]))

    def rotated(self, R):
        """The factorization i_Q R (same Q) for an orthogonal r x r matrix R."""
        R = np.asarray(R, dtype=np.float64)
        if R.shape != (self.rank, self.rank) or not np.allclose(R.T @ R, np.eye(self.rank), atol=1e-12):
            raise CylLevyError("rotation must be an orthogonal rank x rank matrix")
        return CovarianceFactorization(self.Q, self.i_Q @ R, R.T @ self.preimages, self.rank_tol)

    def to_dict(self):
        return {"Q": self.Q.tolist(), "i_Q": self.i_Q.tolist(), "preimages": self.preimages.tolist(), "rank_tol": self.rank_tol}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["Q"], float), np.asarray(d["i_Q"], float), np.asarray(d["preimages"], float), float(d.get("rank_tol", RANK_TOL)))


def factorize(Q, rank_tol=RANK_TOL, neg_tol=1e-10):
    """Eigen-factorization of a symmetric PSD matrix, dropping eigenvalues <= rank_tol * max."""
    Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
    if Q.shape[0] != Q.shape[1]:
        raise CylLevyError("covariance must be square")
    scale = max(1.0, float(np.max(np.abs(Q), initial=0.0)))
    if np.max(np.abs(Q - Q.T), initial=0.0) > SYM_TOL * scale:
        raise CylLevyError("covariance is not symmetric")
    lam, V = np.linalg.eigh(0.5 * (Q + Q.T))
    top = float(lam.max(initial=0.0))
    if lam.min(initial=0.0) < -neg_tol * max(1.0, top):
        raise CylLevyError("covariance has a negative eigenvalue")
    keep = lam > rank_tol * top if top > 0 else np.zeros(len(lam), bool)
    # largest eigenvalue first
    order = np.argsort(-lam[keep], kind="stable")
    lam_k, V_k = lam[keep][order], V[:, keep][:, order]
    root = np.sqrt(lam_k)
    return CovarianceFactorization(Q, V_k * root, (V_k / root).T, rank_tol)


def q2_closed_form(proc, t=1.0, simulated=False):
    """Exact Q2(t): t (cov + rate E[Y Y^T]) or t F diag(E m_k(1)^2) F^T.

    ``simulated`` uses the driver laws as sampled, which differ for
    truncated infinite-activity drivers.
    """
    if isinstance(proc, SeriesProcess):
        if simulated:
            q = np.array([tr.simulated_quadratic_rate() for tr in proc.drivers])
        else:
            q = np.array([tr.quadratic_variation_rate() for tr in proc.drivers])
        return t * (proc.factor * q) @ proc.factor.T
    if isinstance(proc, InducedLevyProcess):
        jump = proc.rate * proc.law.second_moment() if proc.law is not None else 0.0
        return t * (proc.cov + jump)
    raise CylLevyError(f"no closed-form covariance for {type(proc).__name__}")


def psd_project(est, se, n_se=5.0):
    """Symmetrize and clip negative eigenvalues that are within n_se standard errors of zero."""
    S = 0.5 * (est + est.T)
    lam, V = np.linalg.eigh(S)
    # SE of an eigenvalue is bounded by the largest entrywise SE times the dimension
    bound = n_se * float(np.max(se, initial=0.0)) * max(1, S.shape[0])
    if lam.min(initial=0.0) < -bound - 1e-15:
        raise StatisticalFailure(f"estimated covariance has eigenvalue {lam.min():.3g} below -{bound:.3g}")
    return (V * np.clip(lam, 0.0, None)) @ V.T


@dataclass(frozen=True, eq=False)
class Q2Estimate:
    estimate: np.ndarray
    raw: np.ndarray
    se: np.ndarray
    n_paths: int
    t: float

    def check(self, target):
        """Entrywise 3-SE comparison with ``target`` (on the raw symmetric estimate)."""
        diff = np.abs(self.raw - target)
        ok = diff <= N_SE * self.se
        return {
            "max_abs_diff": float(diff.max()),
            "max_se_ratio": float(np.max(np.divide(diff, self.se, out=np.where(diff > 0, np.inf, 0.0), where=self.se > 0))),
            "pass": bool(np.all(ok)),
        }


def _centred_projections(proc, a_basis, t, n_paths, seed, workers=None, tags=("q2",)):
    A = np.array([as_coeffs(a) for a in a_basis], dtype=np.float64)
    grid = np.array([0.0, float(t)])
    sample = proc.sample(grid, seed, n_paths, workers, tags=tags)
    return np.stack([m2_values(proc, sample, a)[:, -1] for a in A], axis=1)


def estimate_q2(proc, a_basis, n_paths, seed, t=1.0, workers=None):
    """Monte Carlo Q2(t)[i, j] = E[(M2(t) a_i)(M2(t) a_j)] for the centred part of ``proc``."""
    Y = _centred_projections(proc, a_basis, t, n_paths, seed, workers)
    est, se = second_moment_matrix(Y)
    raw = 0.5 * (est + est.T)
    return Q2Estimate(psd_project(est, se), raw, se, n_paths, float(t))


def q2_time_scaling_check(proc, a_basis, t_list, n_paths, seed, workers=None):
    """Compare Q2(t) with t Q2(1) entrywise using paired per-path differences on one draw.

    Each path is sampled on the grid {0, t..., 1} so that both sides share
    randomness; the SE is that of the per-path difference
    Y_t,i Y_t,j - t Y_1,i Y_1,j.
    """
    ts = sorted(set(float(t) for t in t_list) | {1.0})
    if ts[0] <= 0:
        raise CylLevyError("times must be positive")
    grid = np.array([0.0] + ts)
    A = np.array([as_coeffs(a) for a in a_basis], dtype=np.float64)
    sample = proc.sample(grid, seed, n_paths, workers, tags=("q2t",))
    Y = np.stack([m2_values(proc, sample, a) for a in A], axis=2)
    i1 = ts.index(1.0) + 1
    P1 = Y[:, i1, :, None] * Y[:, i1, None, :]
    rows = []
    ok = True
    for t in [float(x) for x in t_list]:
        j = ts.index(t) + 1
        Pt = Y[:, j, :, None] * Y[:, j, None, :]
        D = Pt - t * P1
        mean = D.mean(axis=0)
        se = D.std(axis=0, ddof=1) / np.sqrt(n_paths)
        passed = bool(np.all(np.abs(mean) <= N_SE * se)) if t != 1.0 else bool(np.all(mean == 0))
        ok &= passed
        rows.append({
            "t": t,
            "Q2_t": Pt.mean(axis=0).tolist(),
            "t_Q2_1": (t * P1.mean(axis=0)).tolist(),
            "max_abs_diff": float(np.max(np.abs(mean))),
            "max_3se": float(N_SE * np.max(se)),
            "pass": passed,
        })
    return {"n_paths": int(n_paths), "per_t": rows, "pass": ok}


def check_normalized_driver(triplet, tol=DRIVER_TOL):
    if abs(triplet.quadratic_variation_rate() - 1.0) > tol:
        raise CylLevyError("driver is not normalized: E|m(1)|^2 != 1")
    if abs(triplet.mean()) > tol:
        raise CylLevyError("driver is not centred: E m(1) != 0")


def build_series_process(fact, drivers):
    """M2(t)a = sum_k <i_Q e_k, a> m_k(t) with independent normalized drivers.

    ``drivers`` is one triplet per factor column, or a single triplet reused
    for every column.
    """
    if isinstance(drivers, ld.LevyTriplet1D):
        drivers = (drivers,) * fact.rank
    drivers = tuple(drivers)
    if len(drivers) != fact.rank:
        raise CylLevyError(f"need {fact.rank} drivers, got {len(drivers)}")
    for tr in drivers:
        check_normalized_driver(tr)
    return SeriesProcess(fact.i_Q, drivers)


def unit_driver(triplet):
    """Compensate and normalize a triplet so it can serve as a series driver."""
    return ld.compensated(ld.normalize_to_unit_quadratic(triplet))


def driver_cross_covariance(proc, s, t, n_paths, seed, workers=None):
    """MC E[m_k(s) m_l(t)] for a series process; the target is s * delta_kl for s <= t."""
    if not 0 < s <= t:
        raise CylLevyError("need 0 < s <= t")
    grid = np.unique([0.0, s, t])
    sample = proc.sample(grid, seed, n_paths, workers, tags=("drivers",))
    D = sample.drivers
    ms = D[:, :, list(grid).index(s)]
    mt = D[:, :, -1]
    prods = ms[:, :, None] * mt[:, None, :]
    est = prods.mean(axis=0)
    se = prods.std(axis=0, ddof=1) / np.sqrt(n_paths)
    target = s * np.eye(proc.rank)
    return est, se, target
