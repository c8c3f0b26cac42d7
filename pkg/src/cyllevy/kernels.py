"""Kernel backend selection.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``CYLLEVY_PURE_PYTHON`` is set, the numpy fallback is
used. Both expose ``jump_sums`` and ``affine_recursion`` with identical
signatures and agree to rounding.
"""
import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if not os.environ.get("CYLLEVY_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"


def get_backend(name=None):
    """Return the kernel module for ``name`` ("cython", "python") or the active one."""
    if name is None:
        return _impl
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")


def jump_sums(path_idx, time_idx, sizes, n_paths, n_times, backend=None):
    """Cumulative sums of jumps binned onto a time grid.

    ``time_idx[i]`` is the first grid index at which jump ``i`` is visible.
    ``sizes`` may be 1-D (scalar jumps) or (m, dim). Returns an array of shape
    (n_paths, n_times) or (n_paths, n_times, dim) accordingly.
    """
    sizes = np.asarray(sizes, dtype=np.float64)
    scalar = sizes.ndim == 1
    sizes2 = np.ascontiguousarray(sizes.reshape(-1, 1) if scalar else sizes)
    out = get_backend(backend).jump_sums(
        np.ascontiguousarray(path_idx, dtype=np.int64),
        np.ascontiguousarray(time_idx, dtype=np.int64),
        sizes2,
        int(n_paths),
        int(n_times),
    )
    return out[:, :, 0] if scalar else out


def affine_recursion(E, xi, y0, record, backend=None):
    """States of y_{n+1} = E_n y_n + xi_n at the step indices in ``record``."""
    E = np.ascontiguousarray(E, dtype=np.float64)
    xi = np.ascontiguousarray(xi, dtype=np.float64)
    y0 = np.ascontiguousarray(y0, dtype=np.float64)
    record = np.ascontiguousarray(record, dtype=np.int64)
    if np.any(np.diff(record) < 0) or (len(record) and (record[0] < 0 or record[-1] > E.shape[0])):
        raise ValueError("record indices must be sorted and within [0, n_steps]")
    return get_backend(backend).affine_recursion(E, xi, y0, record)
