"""Monte Carlo estimators and the 3-SE comparison rule used by every check."""
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

MIN_PATHS = 100
N_SE = 3.0

Number = Union[float, complex]


@dataclass(frozen=True)
class McReport:
    """A Monte Carlo estimate with its standard error.

    For complex estimates ``se`` is complex as well and holds the real and
    imaginary standard errors componentwise; the verdict is then taken per
    component.
    """

    estimate: Number
    se: Number
    n_paths: int
    target: Optional[Number] = None
    passed: Optional[bool] = None

    @property
    def is_complex(self):
        return isinstance(self.estimate, complex)

    def to_dict(self):
        def enc(x):
            if x is None:
                return None
            if isinstance(x, complex):
                return {"re": x.real, "im": x.imag}
            return float(x)

        return {
            "estimate": enc(self.estimate),
            "se": enc(self.se),
            "n_paths": int(self.n_paths),
            "target": enc(self.target),
            "pass": self.passed,
        }


def _verdict(diff, se):
    if isinstance(diff, complex) or isinstance(se, complex):
        diff, se = complex(diff), complex(se)
        return bool(abs(diff.real) <= N_SE * se.real and abs(diff.imag) <= N_SE * se.imag)
    return bool(abs(diff) <= N_SE * se)


def _require_paths(n):
    if n < MIN_PATHS:
        raise ValueError(f"need at least {MIN_PATHS} samples for a verdict, got {n}")


def mc_mean(samples, target=None):
    """Sample mean with standard error ``std / sqrt(n)`` (ddof=1)."""
    x = np.asarray(samples)
    n = x.shape[0]
    if n < 2:
        raise ValueError("need at least two samples")
    if np.iscomplexobj(x):
        est = complex(x.mean())
        root_n = np.sqrt(n)
        se = complex(x.real.std(ddof=1) / root_n, x.imag.std(ddof=1) / root_n)
    else:
        est = float(x.mean())
        se = float(x.std(ddof=1) / np.sqrt(n))
    if target is None:
        return McReport(est, se, n)
    _require_paths(n)
    tgt = complex(target) if isinstance(est, complex) else float(target)
    return McReport(est, se, n, tgt, _verdict(est - tgt, se))


def empirical_char(samples, beta, target=None):
    """Empirical characteristic function ``mean(exp(i beta x))`` of real samples."""
    x = np.asarray(samples, dtype=np.float64)
    _require_paths(x.shape[0])
    return mc_mean(np.exp(1j * beta * x), target=target)


def compare(lhs, rhs):
    """Compare an estimate with a target value or with another estimate.

    Returns ``(passed, diff, combined_se)``; the combined SE is
    ``sqrt(se1**2 + se2**2)`` (componentwise for complex estimates).
    """
    _require_paths(lhs.n_paths)
    if isinstance(rhs, McReport):
        _require_paths(rhs.n_paths)
        diff = lhs.estimate - rhs.estimate
        if lhs.is_complex or rhs.is_complex:
            s1, s2 = complex(lhs.se), complex(rhs.se)
            se = complex(np.hypot(s1.real, s2.real), np.hypot(s1.imag, s2.imag))
        else:
            se = float(np.hypot(lhs.se, rhs.se))
    else:
        diff = lhs.estimate - rhs
        se = lhs.se
    return _verdict(diff, se), diff, se


def paired_difference(a, b, target=0.0):
    """Estimate ``E[a - b]`` from per-path paired samples and test it against ``target``."""
    return mc_mean(np.asarray(a) - np.asarray(b), target=target)


def second_moment_matrix(X):
    """Uncentred estimate of ``E[x x^T]`` for samples ``X`` (n, k) with entrywise SE."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    prods = X[:, :, None] * X[:, None, :]
    est = prods.mean(axis=0)
    se = prods.std(axis=0, ddof=1) / np.sqrt(n)
    return est, se


def suite_verdict(passes, allowed_fraction=0.01):
    """Suite-level verdict: at most ``floor(allowed_fraction * n)`` marginal failures."""
    passes = [bool(p) for p in passes]
    n_fail = passes.count(False)
    allowed = int(np.floor(allowed_fraction * len(passes)))
    return {"n_tests": len(passes), "n_failed": n_fail, "allowed_failures": allowed, "pass": n_fail <= allowed}
