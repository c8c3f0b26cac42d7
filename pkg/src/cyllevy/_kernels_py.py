"""Pure numpy implementations of the compiled kernels (same signatures)."""
import numpy as np


def jump_sums(path_idx, time_idx, sizes, n_paths, n_times):
    sizes = np.asarray(sizes, dtype=np.float64)
    d = sizes.shape[1]
    keep = time_idx < n_times
    flat = path_idx[keep] * n_times + time_idx[keep]
    out = np.empty((n_paths, n_times, d))
    for k in range(d):
        inc = np.bincount(flat, weights=sizes[keep, k], minlength=n_paths * n_times)
        out[:, :, k] = inc.reshape(n_paths, n_times)
    return np.cumsum(out, axis=1)


def affine_recursion(E, xi, y0, record):
    n_steps = E.shape[0]
    out = np.zeros((y0.shape[0], len(record), y0.shape[1]))
    cur = np.array(y0, dtype=np.float64)
    r = 0
    while r < len(record) and record[r] == 0:
        out[:, r] = cur
        r += 1
    for n in range(n_steps):
        cur = cur @ E[n].T + xi[:, n]
        while r < len(record) and record[r] == n + 1:
            out[:, r] = cur
            r += 1
    return out
