"""One-dimensional Levy drivers.

A driver is described by a :class:`LevyTriplet1D`: a drift, a Gaussian
variance and an optional jump part. Finite-activity jump parts are compound
Poisson with one of a small family of jump-size laws; infinite-activity parts
use a power-law Levy density that is simulated by keeping only jumps larger
than a cutoff ``eps``.

Drift conventions differ between the two jump kinds. For compound Poisson
the sampled path is ``drift*t + sigma*W(t) + (sum of jumps)``. For the
infinite-activity kind ``drift`` is the Levy-Khintchine drift with respect to
the truncation set {|x| <= 1}, so the path is
``drift*t + sigma*W(t) + sum_{|x|>eps} x - t*int_{eps<|x|<=1} x nu(dx)``.
``mean()`` and ``lk_drift()`` convert between the two.
"""
import csv
from dataclasses import dataclass, replace
from typing import Optional, Union

import numpy as np
from scipy import integrate, special, stats

from . import kernels, parallel
from .errors import CylLevyError

# --------------------------------------------------------------------------
# jump-size laws


class JumpLaw:
    """Base class of one-dimensional jump-size distributions."""

    kind = "abstract"

    def sample(self, rng, n):
        raise NotImplementedError

    def char(self, beta):
        """E exp(i beta X), vectorised over ``beta``."""
        raise NotImplementedError

    def mean(self):
        raise NotImplementedError

    def second_moment(self):
        raise NotImplementedError

    def partial_mean(self, r):
        """E[X ; |X| <= r]."""
        raise NotImplementedError

    def scaled(self, c):
        """Law of c*X."""
        raise NotImplementedError

    def expect(self, g):
        """E g(X) by quadrature (exact for atoms)."""
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True)
class PointMass(JumpLaw):
    value: float
    kind = "point"

    def sample(self, rng, n):
        return np.full(n, float(self.value))

    def char(self, beta):
        return np.exp(1j * np.asarray(beta) * self.value)

    def mean(self):
        return float(self.value)

    def second_moment(self):
        return float(self.value) ** 2

    def partial_mean(self, r):
        return float(self.value) if abs(self.value) <= r else 0.0

    def scaled(self, c):
        return PointMass(float(c) * self.value)

    def expect(self, g):
        return float(g(self.value))

    def to_dict(self):
        return {"kind": "point", "value": float(self.value)}


@dataclass(frozen=True)
class Uniform(JumpLaw):
    low: float
    high: float
    kind = "uniform"

    def __post_init__(self):
        if not self.high > self.low:
            raise CylLevyError("uniform law needs high > low")

    def sample(self, rng, n):
        return rng.uniform(self.low, self.high, n)

    def char(self, beta):
        beta = np.asarray(beta, dtype=np.float64)
        lo, hi = self.low, self.high
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        return np.exp(1j * beta * mid) * np.sinc(beta * half / np.pi)

    def mean(self):
        return 0.5 * (self.low + self.high)

    def second_moment(self):
        lo, hi = self.low, self.high
        return (lo * lo + lo * hi + hi * hi) / 3.0

    def partial_mean(self, r):
        a, b = max(self.low, -r), min(self.high, r)
        if b <= a:
            return 0.0
        return (b * b - a * a) / (2.0 * (self.high - self.low))

    def scaled(self, c):
        if c == 0:
            return PointMass(0.0)
        lo, hi = sorted((c * self.low, c * self.high))
        return Uniform(lo, hi)

    def expect(self, g):
        val, _ = integrate.quad(g, self.low, self.high, epsabs=1e-12, limit=200)
        return val / (self.high - self.low)

    def to_dict(self):
        return {"kind": "uniform", "low": float(self.low), "high": float(self.high)}


@dataclass(frozen=True)
class Gaussian(JumpLaw):
    mean_: float
    std: float
    kind = "gaussian"

    def __post_init__(self):
        if not self.std > 0:
            raise CylLevyError("gaussian law needs std > 0")

    def sample(self, rng, n):
        return rng.normal(self.mean_, self.std, n)

    def char(self, beta):
        beta = np.asarray(beta, dtype=np.float64)
        return np.exp(1j * beta * self.mean_ - 0.5 * (self.std * beta) ** 2)

    def mean(self):
        return float(self.mean_)

    def second_moment(self):
        return self.mean_ ** 2 + self.std ** 2

    def partial_mean(self, r):
        m, s = self.mean_, self.std
        lo, hi = (-r - m) / s, (r - m) / s
        return m * (special.ndtr(hi) - special.ndtr(lo)) + s * (stats.norm.pdf(lo) - stats.norm.pdf(hi))

    def scaled(self, c):
        if c == 0:
            return PointMass(0.0)
        return Gaussian(c * self.mean_, abs(c) * self.std)

    def expect(self, g):
        pdf = stats.norm(self.mean_, self.std).pdf
        m, s = self.mean_, self.std
        val, _ = integrate.quad(lambda x: g(x) * pdf(x), m - 12 * s, m + 12 * s, epsabs=1e-12, limit=200)
        return val

    def to_dict(self):
        return {"kind": "gaussian", "mean": float(self.mean_), "std": float(self.std)}


@dataclass(frozen=True)
class TwoSidedExponential(JumpLaw):
    """Laplace law with density exp(-|x - loc| / scale) / (2 scale)."""

    loc: float
    scale: float
    kind = "two_sided_exponential"

    def __post_init__(self):
        if not self.scale > 0:
            raise CylLevyError("two-sided exponential law needs scale > 0")

    def sample(self, rng, n):
        return rng.laplace(self.loc, self.scale, n)

    def char(self, beta):
        beta = np.asarray(beta, dtype=np.float64)
        return np.exp(1j * beta * self.loc) / (1.0 + (self.scale * beta) ** 2)

    def mean(self):
        return float(self.loc)

    def second_moment(self):
        return self.loc ** 2 + 2.0 * self.scale ** 2

    def _antiderivative(self, x):
        # G' = x * density, G(-inf) = 0, G(+inf) = loc
        m, b = self.loc, self.scale
        if x < m:
            return 0.5 * (x - b) * np.exp((x - m) / b)
        return m - 0.5 * (x + b) * np.exp(-(x - m) / b)

    def partial_mean(self, r):
        return float(self._antiderivative(r) - self._antiderivative(-r))

    def scaled(self, c):
        if c == 0:
            return PointMass(0.0)
        return TwoSidedExponential(c * self.loc, abs(c) * self.scale)

    def expect(self, g):
        pdf = stats.laplace(self.loc, self.scale).pdf
        m, b = self.loc, self.scale
        val, _ = integrate.quad(lambda x: g(x) * pdf(x), m - 40 * b, m + 40 * b, points=[m], epsabs=1e-12, limit=200)
        return val

    def to_dict(self):
        return {"kind": "two_sided_exponential", "loc": float(self.loc), "scale": float(self.scale)}


@dataclass(frozen=True, eq=False)
class Mixture(JumpLaw):
    """Finite mixture of jump laws (arises from projecting vector jump laws)."""

    weights: tuple
    components: tuple
    kind = "mixture"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if len(w) != len(self.components) or len(w) == 0 or np.any(w < 0) or not w.sum() > 0:
            raise CylLevyError("mixture needs matching non-negative weights")
        object.__setattr__(self, "weights", tuple(float(x) for x in w / w.sum()))
        object.__setattr__(self, "components", tuple(self.components))

    def sample(self, rng, n):
        idx = rng.choice(len(self.weights), size=n, p=self.weights)
        out = np.empty(n)
        for k, comp in enumerate(self.components):
            sel = idx == k
            out[sel] = comp.sample(rng, int(sel.sum()))
        return out

    def _combine(self, method, *args):
        return sum(w * getattr(c, method)(*args) for w, c in zip(self.weights, self.components))

    def char(self, beta):
        return self._combine("char", beta)

    def mean(self):
        return float(self._combine("mean"))

    def second_moment(self):
        return float(self._combine("second_moment"))

    def partial_mean(self, r):
        return float(self._combine("partial_mean", r))

    def scaled(self, c):
        return Mixture(self.weights, tuple(comp.scaled(c) for comp in self.components))

    def expect(self, g):
        return float(sum(w * c.expect(g) for w, c in zip(self.weights, self.components)))

    def to_dict(self):
        return {"kind": "mixture", "weights": list(self.weights), "components": [c.to_dict() for c in self.components]}


def jump_law_from_dict(d):
    kind = d.get("kind")
    if kind == "point":
        return PointMass(float(d["value"]))
    if kind == "uniform":
        return Uniform(float(d["low"]), float(d["high"]))
    if kind == "gaussian":
        return Gaussian(float(d.get("mean", 0.0)), float(d["std"]))
    if kind == "two_sided_exponential":
        return TwoSidedExponential(float(d.get("loc", 0.0)), float(d["scale"]))
    if kind == "mixture":
        return Mixture(tuple(d["weights"]), tuple(jump_law_from_dict(c) for c in d["components"]))
    raise CylLevyError(f"unknown jump law kind {kind!r}")


# --------------------------------------------------------------------------
# one-dimensional Levy measures


@dataclass(frozen=True, eq=False)
class FiniteLevyMeasure:
    """nu = rate * law, a finite Levy measure."""

    rate: float
    law: JumpLaw

    def __post_init__(self):
        if not self.rate > 0:
            raise CylLevyError("jump rate must be positive")

    def lk_exponent(self, beta):
        """int (e^{i beta x} - 1 - i beta x 1{|x|<=1}) nu(dx)."""
        beta = np.asarray(beta, dtype=np.float64)
        return self.rate * (self.law.char(beta) - 1.0 - 1j * beta * self.law.partial_mean(1.0))

    def second_moment(self):
        return self.rate * self.law.second_moment()

    def first_moment(self):
        return self.rate * self.law.mean()

    def small_jump_mean(self, r=1.0):
        """int_{|x|<=r} x nu(dx)."""
        return self.rate * self.law.partial_mean(r)

    def min1_integral(self):
        return self.rate * self.law.expect(lambda x: min(1.0, x * x))

    def scaled(self, c):
        """Image measure under x -> c x."""
        return FiniteLevyMeasure(self.rate, self.law.scaled(c))

    def times(self, c):
        """The measure c * nu."""
        return FiniteLevyMeasure(self.rate * c, self.law)


@dataclass(frozen=True)
class PowerLawLevyMeasure:
    """nu(dx) = c_pos x^{-1-alpha} on (0, cutoff] plus c_neg |x|^{-1-alpha} on [-cutoff, 0)."""

    alpha: float
    c_pos: float
    c_neg: float
    cutoff: float = 1.0

    def __post_init__(self):
        if not 0 < self.alpha < 2:
            raise CylLevyError("power-law index must lie in (0, 2)")
        if self.c_pos < 0 or self.c_neg < 0 or not (self.c_pos + self.c_neg) > 0:
            raise CylLevyError("power-law weights must be non-negative and not both zero")
        if not self.cutoff > 0:
            raise CylLevyError("cutoff must be positive")

    def _sides(self):
        return ((1.0, self.c_pos), (-1.0, self.c_neg))

    def mass_above(self, eps):
        """nu(|x| > eps)."""
        a, R = self.alpha, self.cutoff
        if eps >= R:
            return 0.0
        return (self.c_pos + self.c_neg) * (eps ** -a - R ** -a) / a

    def _abs_moment(self, k, lo, hi):
        # int_lo^hi x^k x^{-1-alpha} dx for one side
        lo, hi = max(lo, 0.0), min(hi, self.cutoff)
        if hi <= lo:
            return 0.0
        e = k - self.alpha
        if e == 0:
            return float(np.log(hi / lo))
        return (hi ** e - (lo ** e if lo > 0 else 0.0)) / e

    def moment_between(self, k, lo, hi):
        """int_{lo<|x|<=hi} x^k nu(dx) (signed for odd k)."""
        pos = self.c_pos * self._abs_moment(k, lo, hi)
        neg = self.c_neg * self._abs_moment(k, lo, hi)
        return pos + (-1) ** k * neg

    def second_moment(self):
        return self.moment_between(2, 0.0, self.cutoff)

    def first_moment_above(self, r):
        return self.moment_between(1, r, self.cutoff)

    def small_jump_mean(self, r=1.0, eps=0.0):
        """int_{eps<|x|<=r} x nu(dx); needs eps > 0 unless alpha < 1 or the measure is symmetric."""
        if eps == 0 and self.alpha >= 1 and self.c_pos != self.c_neg:
            raise CylLevyError("small-jump mean diverges for alpha >= 1 without symmetry")
        if eps == 0 and self.c_pos == self.c_neg:
            return 0.0
        return self.moment_between(1, eps, r)

    def sample_above(self, rng, n, eps):
        """Jumps drawn from nu restricted to {|x| > eps}, normalised."""
        a, R = self.alpha, self.cutoff
        u = rng.random(n)
        mag = (eps ** -a - u * (eps ** -a - R ** -a)) ** (-1.0 / a)
        p_pos = self.c_pos / (self.c_pos + self.c_neg)
        sign = np.where(rng.random(n) < p_pos, 1.0, -1.0)
        return sign * mag

    def density(self, x):
        ax = abs(x)
        if ax == 0 or ax > self.cutoff:
            return 0.0
        c = self.c_pos if x > 0 else self.c_neg
        return c * ax ** (-1.0 - self.alpha)

    def lk_exponent(self, beta, eps=0.0):
        """int_{|x|>eps} (e^{i beta x} - 1 - i beta x 1{|x|<=1}) nu(dx), by quadrature split at +-1."""
        out = []
        for b in np.atleast_1d(np.asarray(beta, dtype=np.float64)):
            re = im = 0.0
            for sign, c in self._sides():
                if c == 0:
                    continue
                pieces = [(eps, min(1.0, self.cutoff))]
                if self.cutoff > 1.0:
                    pieces.append((max(1.0, eps), self.cutoff))
                for lo, hi in pieces:
                    if hi <= lo:
                        continue
                    comp = hi <= 1.0

                    def f_re(x, b=b, sign=sign):
                        return (np.cos(b * sign * x) - 1.0) * x ** (-1.0 - self.alpha)

                    def f_im(x, b=b, sign=sign, comp=comp):
                        return (np.sin(b * sign * x) - (b * sign * x if comp else 0.0)) * x ** (-1.0 - self.alpha)

                    re += c * integrate.quad(f_re, lo, hi, epsabs=1e-10, limit=400)[0]
                    im += c * integrate.quad(f_im, lo, hi, epsabs=1e-10, limit=400)[0]
            out.append(complex(re, im))
        out = np.array(out)
        return out if np.ndim(beta) else out[0]

    def min1_integral(self):
        return self.moment_between(2, 0.0, min(1.0, self.cutoff)) + self.moment_between(0, 1.0, self.cutoff)

    def scaled(self, c):
        """Image measure under x -> c x."""
        if c == 0:
            raise CylLevyError("cannot scale an infinite-activity measure by zero")
        a = self.alpha
        s = abs(c) ** a
        cp, cn = (self.c_pos, self.c_neg) if c > 0 else (self.c_neg, self.c_pos)
        return PowerLawLevyMeasure(a, cp * s, cn * s, abs(c) * self.cutoff)

    def times(self, c):
        """The measure c * nu."""
        return PowerLawLevyMeasure(self.alpha, self.c_pos * c, self.c_neg * c, self.cutoff)


# --------------------------------------------------------------------------
# triplets


@dataclass(frozen=True, eq=False)
class CompoundPoisson:
    rate: float
    law: JumpLaw

    def __post_init__(self):
        if not self.rate > 0:
            raise CylLevyError("compound Poisson rate must be positive")

    @property
    def measure(self):
        return FiniteLevyMeasure(self.rate, self.law)

    def to_dict(self):
        return {"kind": "compound_poisson", "rate": float(self.rate), "law": self.law.to_dict()}


@dataclass(frozen=True, eq=False)
class InfiniteActivity:
    measure: PowerLawLevyMeasure
    eps: float = 1e-3
    gaussian_substitution: bool = False

    def __post_init__(self):
        if not self.eps > 0:
            raise CylLevyError("truncation eps must be positive")

    def to_dict(self):
        m = self.measure
        return {
            "kind": "power_law",
            "alpha": m.alpha,
            "c_pos": m.c_pos,
            "c_neg": m.c_neg,
            "cutoff": m.cutoff,
            "eps": self.eps,
            "gaussian_substitution": self.gaussian_substitution,
        }


JumpPart = Optional[Union[CompoundPoisson, InfiniteActivity]]


@dataclass(frozen=True, eq=False)
class LevyTriplet1D:
    drift: float = 0.0
    gauss_var: float = 0.0
    jumps: JumpPart = None

    def __post_init__(self):
        if not np.isfinite(self.drift):
            raise CylLevyError("drift must be finite")
        if not self.gauss_var >= 0:
            raise CylLevyError("Gaussian variance must be non-negative")

    def jump_second_moment(self):
        if self.jumps is None:
            return 0.0
        return float(self.jumps.measure.second_moment())

    def quadratic_variation_rate(self):
        """E|L(1) - E L(1)|^2 = gauss_var + int x^2 nu(dx)."""
        return self.gauss_var + self.jump_second_moment()

    def simulated_quadratic_rate(self):
        """Variance rate of the law actually sampled (small jumps removed or substituted)."""
        j = self.jumps
        if isinstance(j, InfiniteActivity):
            return self.simulated_gauss_var() + j.measure.moment_between(2, j.eps, j.measure.cutoff)
        return self.quadratic_variation_rate()

    def mean(self):
        """E L(1)."""
        j = self.jumps
        if j is None:
            return float(self.drift)
        if isinstance(j, CompoundPoisson):
            return self.drift + j.rate * j.law.mean()
        return self.drift + j.measure.first_moment_above(1.0)

    def lk_drift(self):
        """Drift with respect to the truncation set {|x| <= 1}."""
        j = self.jumps
        if isinstance(j, CompoundPoisson):
            return self.drift + j.measure.small_jump_mean(1.0)
        return float(self.drift)

    def simulated_gauss_var(self):
        j = self.jumps
        if isinstance(j, InfiniteActivity) and j.gaussian_substitution:
            return self.gauss_var + j.measure.moment_between(2, 0.0, j.eps)
        return self.gauss_var

    def exponent(self, beta, simulated=True):
        """log E exp(i beta L(1)); ``simulated`` uses the eps-truncated law actually sampled."""
        beta = np.asarray(beta, dtype=np.float64)
        j = self.jumps
        gv = self.simulated_gauss_var() if simulated else self.gauss_var
        expo = 1j * beta * self.drift - 0.5 * gv * beta ** 2
        if isinstance(j, CompoundPoisson):
            expo = expo + j.rate * (j.law.char(beta) - 1.0)
        elif isinstance(j, InfiniteActivity):
            eps = j.eps if simulated else 0.0
            expo = expo + j.measure.lk_exponent(beta, eps=eps)
        return expo

    def char(self, beta, t=1.0, simulated=True):
        """E exp(i beta L(t))."""
        return np.exp(t * self.exponent(beta, simulated))

    def to_dict(self):
        return {
            "drift": float(self.drift),
            "gauss_var": float(self.gauss_var),
            "jumps": None if self.jumps is None else self.jumps.to_dict(),
        }


def triplet_from_dict(d):
    j = d.get("jumps")
    jumps = None
    if j is not None:
        if j["kind"] == "compound_poisson":
            jumps = CompoundPoisson(float(j["rate"]), jump_law_from_dict(j["law"]))
        elif j["kind"] == "power_law":
            m = PowerLawLevyMeasure(float(j["alpha"]), float(j["c_pos"]), float(j["c_neg"]), float(j.get("cutoff", 1.0)))
            jumps = InfiniteActivity(m, float(j.get("eps", 1e-3)), bool(j.get("gaussian_substitution", False)))
        else:
            raise CylLevyError(f"unknown jump part kind {j['kind']!r}")
    return LevyTriplet1D(float(d.get("drift", 0.0)), float(d.get("gauss_var", 0.0)), jumps)


def compensated(triplet):
    """The same triplet with the drift chosen so that E L(t) = 0."""
    return replace(triplet, drift=triplet.drift - triplet.mean())


def normalize_to_unit_quadratic(triplet):
    """Rescale so that E|L(1) - E L(1)|^2 = 1.

    The scale c = (gauss_var + int x^2 nu)^(-1/2) multiplies jump sizes and
    drift and c^2 multiplies the Gaussian variance; for a pure-jump triplet
    this is c = (rate E X^2)^(-1/2).
    """
    q = triplet.quadratic_variation_rate()
    if not q > 0:
        raise CylLevyError("cannot normalise a triplet with zero second moment")
    if q == 1.0:
        return triplet
    c = q ** -0.5
    j = triplet.jumps
    if isinstance(j, CompoundPoisson):
        jumps = CompoundPoisson(j.rate, j.law.scaled(c))
    elif isinstance(j, InfiniteActivity):
        jumps = InfiniteActivity(j.measure.scaled(c), j.eps * c, j.gaussian_substitution)
    else:
        jumps = None
    return LevyTriplet1D(triplet.drift * c, triplet.gauss_var * c * c, jumps)


def is_normalized(triplet, tol=1e-12):
    return abs(triplet.quadratic_variation_rate() - 1.0) <= tol and abs(triplet.mean()) <= tol


# --------------------------------------------------------------------------
# paths


def check_grid(grid):
    g = np.asarray(grid, dtype=np.float64)
    if g.ndim != 1 or len(g) < 1:
        raise CylLevyError("time grid must be a non-empty vector")
    if g[0] != 0.0:
        raise CylLevyError("time grid must start at 0")
    if np.any(np.diff(g) <= 0):
        raise CylLevyError("time grid must be strictly increasing")
    return g


@dataclass(frozen=True, eq=False)
class PathBundle:
    """Sampled paths of a one-dimensional driver on a time grid.

    ``values[p, j]`` is the value of path ``p`` at ``time_grid[j]``;
    ``continuous`` holds the drift and Gaussian parts, and the jumps are kept
    in flat arrays (path index, exact time, size) sorted by path then time.
    """

    time_grid: np.ndarray
    values: np.ndarray
    continuous: np.ndarray
    jump_path: np.ndarray
    jump_time: np.ndarray
    jump_size: np.ndarray
    seed: Optional[int] = None

    @property
    def n_paths(self):
        return self.values.shape[0]

    def jumps_of(self, p):
        sel = self.jump_path == p
        return list(zip(self.jump_time[sel].tolist(), self.jump_size[sel].tolist()))

    def jump_index(self):
        """Grid index at which each jump first becomes visible."""
        return np.searchsorted(self.time_grid, self.jump_time, side="left")

    def increments(self):
        return np.diff(self.values, axis=1)

    def reconstruction_error(self):
        binned = kernels.jump_sums(self.jump_path, self.jump_index(), self.jump_size, self.n_paths, len(self.time_grid))
        return float(np.max(np.abs(self.continuous + binned - self.values), initial=0.0))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["path_id", "time", "value"])
            for p in range(self.n_paths):
                for t, v in zip(self.time_grid, self.values[p]):
                    w.writerow([p, repr(float(t)), repr(float(v))])


def _sample_jumps(jumps, rng, n_paths, T):
    """Jump records on [0, T]: (path index, time, size), sorted by path then time."""
    if jumps is None or T == 0:
        return np.zeros(0, np.int64), np.zeros(0), np.zeros(0)
    if isinstance(jumps, CompoundPoisson):
        rate = jumps.rate
        draw = lambda m: jumps.law.sample(rng, m)  # noqa: E731
    else:
        rate = jumps.measure.mass_above(jumps.eps)
        draw = lambda m: jumps.measure.sample_above(rng, m, jumps.eps)  # noqa: E731
    if rate == 0:
        return np.zeros(0, np.int64), np.zeros(0), np.zeros(0)
    counts = rng.poisson(rate * T, n_paths)
    m = int(counts.sum())
    path = np.repeat(np.arange(n_paths, dtype=np.int64), counts)
    # given the count, jump times of a Poisson process are iid uniform
    times = rng.uniform(0.0, T, m)
    sizes = draw(m)
    order = np.lexsort((times, path))
    return path[order], times[order], sizes[order]


def simulate_block(triplet, grid, rng, n_paths):
    """Sample ``n_paths`` paths of ``triplet`` on ``grid`` from one generator."""
    grid = check_grid(grid)
    T = grid[-1]
    dt = np.diff(grid)
    cont = np.zeros((n_paths, len(grid)))
    j = triplet.jumps
    drift = triplet.drift
    if isinstance(j, InfiniteActivity):
        drift = drift - j.measure.small_jump_mean(1.0, eps=j.eps)
    cont += drift * grid
    gv = triplet.simulated_gauss_var()
    if gv > 0 and len(dt):
        z = rng.standard_normal((n_paths, len(dt))) * np.sqrt(gv * dt)
        cont[:, 1:] += np.cumsum(z, axis=1)
    jp, jt, js = _sample_jumps(j, rng, n_paths, T)
    idx = np.searchsorted(grid, jt, side="left")
    values = cont + kernels.jump_sums(jp, idx, js, n_paths, len(grid))
    return PathBundle(grid, values, cont, jp, jt, js)


def _concat(bundles, seed):
    grid = bundles[0].time_grid
    offsets = np.cumsum([0] + [b.n_paths for b in bundles[:-1]])
    return PathBundle(
        grid,
        np.concatenate([b.values for b in bundles]),
        np.concatenate([b.continuous for b in bundles]),
        np.concatenate([b.jump_path + o for b, o in zip(bundles, offsets)]),
        np.concatenate([b.jump_time for b in bundles]),
        np.concatenate([b.jump_size for b in bundles]),
        seed,
    )


def sample_path(triplet, grid, seed, n_paths=1, tags=("driver",), workers=None):
    """Sample paths of a one-dimensional Levy process on ``grid``.

    Brownian and compound Poisson parts are simulated exactly at the grid
    times; infinite-activity parts keep jumps above ``eps`` and compensate the
    removed small jumps in the drift.
    """
    grid = check_grid(grid)
    parts = parallel.map_blocks(
        lambda rng, n, start: simulate_block(triplet, grid, rng, n),
        n_paths,
        seed,
        tags,
        workers,
    )
    return _concat(parts, seed)


@dataclass(frozen=True, eq=False)
class StepFunction:
    """h(s) = values[k] on (breaks[k], breaks[k+1]]."""

    breaks: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        b = check_grid(self.breaks)
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape[-1] != len(b) - 1:
            raise CylLevyError("step function needs one value per interval")
        object.__setattr__(self, "breaks", b)
        object.__setattr__(self, "values", v)

    def l2_norm_sq(self):
        return float(np.sum(self.values ** 2 * np.diff(self.breaks)))


def _grid_positions(grid, points, tol=1e-12):
    pos = np.searchsorted(grid, points - tol)
    ok = (pos < len(grid)) & (np.abs(grid[np.minimum(pos, len(grid) - 1)] - points) <= tol * max(1.0, grid[-1]))
    if not np.all(ok):
        raise CylLevyError("step function breakpoints are not aligned with the sampling grid")
    return pos


def compensated_poisson_integral(h, triplet, seed, n_paths=1, grid=None, workers=None):
    """Samples of sum_k h_k (m(t_{k+1}) - m(t_k)) for a mean-zero driver m.

    ``grid`` (default: the step function's breakpoints) must contain all
    breakpoints of ``h``.
    """
    if abs(triplet.mean()) > 1e-12:
        raise CylLevyError("driver must be compensated (mean zero)")
    grid = h.breaks if grid is None else check_grid(grid)
    pos = _grid_positions(grid, h.breaks)
    if not np.any(h.values):
        return np.zeros(n_paths)
    bundle = sample_path(triplet, grid, seed, n_paths, workers=workers)
    vals = bundle.values[:, pos]
    return np.diff(vals, axis=1) @ h.values
