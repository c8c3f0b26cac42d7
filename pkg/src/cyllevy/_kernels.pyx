# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for jump accumulation and the discretised convolution."""
import numpy as np

cimport numpy as cnp
from cython cimport boundscheck, wraparound

cnp.import_array()

cdef Py_ssize_t PATH_BLOCK = 256


def jump_sums(const cnp.int64_t[::1] path_idx,
              const cnp.int64_t[::1] time_idx,
              const double[:, ::1] sizes,
              Py_ssize_t n_paths,
              Py_ssize_t n_times):
    """Cumulative jump sums on a grid, shape (n_paths, n_times, dim)."""
    cdef Py_ssize_t m = sizes.shape[0]
    cdef Py_ssize_t d = sizes.shape[1]
    cdef Py_ssize_t i, j, k, p
    out_arr = np.zeros((n_paths, n_times, d), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    if path_idx.shape[0] != m or time_idx.shape[0] != m:
        raise ValueError("jump index arrays must match sizes")
    with nogil:
        for i in range(m):
            p = path_idx[i]
            j = time_idx[i]
            if j >= n_times:
                continue
            for k in range(d):
                out[p, j, k] += sizes[i, k]
        for p in range(n_paths):
            for j in range(1, n_times):
                for k in range(d):
                    out[p, j, k] += out[p, j - 1, k]
    return out_arr


def affine_recursion(const double[:, :, ::1] E,
                     const double[:, :, ::1] xi,
                     const double[:, ::1] y0,
                     const cnp.int64_t[::1] record):
    """Iterate y_{n+1} = E_n y_n + xi_n and return the states at ``record``.

    ``E`` has shape (n_steps, d, d), ``xi`` (n_paths, n_steps, d); ``record``
    lists step indices in [0, n_steps], sorted ascending.
    """
    cdef Py_ssize_t n_steps = E.shape[0]
    cdef Py_ssize_t d = E.shape[1]
    cdef Py_ssize_t n_paths = y0.shape[0]
    cdef Py_ssize_t n_rec = record.shape[0]
    cdef Py_ssize_t B = PATH_BLOCK
    cdef Py_ssize_t p0, nb, q, n, i, j, r
    cdef double e
    if xi.shape[0] != n_paths or xi.shape[1] != n_steps or xi.shape[2] != d:
        raise ValueError("xi has the wrong shape")
    out_arr = np.zeros((n_paths, n_rec, d), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    # state stored (d, block) so the innermost loop runs over independent paths
    cdef double[:, ::1] cur = np.zeros((d, B), dtype=np.float64)
    cdef double[:, ::1] nxt = np.zeros((d, B), dtype=np.float64)
    cdef double[:, ::1] tmp
    with nogil:
        p0 = 0
        while p0 < n_paths:
            nb = min(B, n_paths - p0)
            for i in range(d):
                for q in range(nb):
                    cur[i, q] = y0[p0 + q, i]
            r = 0
            while r < n_rec and record[r] == 0:
                for q in range(nb):
                    for i in range(d):
                        out[p0 + q, r, i] = cur[i, q]
                r += 1
            for n in range(n_steps):
                for i in range(d):
                    for q in range(nb):
                        nxt[i, q] = xi[p0 + q, n, i]
                    for j in range(d):
                        e = E[n, i, j]
                        for q in range(nb):
                            nxt[i, q] += e * cur[j, q]
                tmp = cur
                cur = nxt
                nxt = tmp
                while r < n_rec and record[r] == n + 1:
                    for q in range(nb):
                        for i in range(d):
                            out[p0 + q, r, i] = cur[i, q]
                    r += 1
            p0 += B
    return out_arr
