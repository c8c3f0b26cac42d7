"""Reproducible block-parallel Monte Carlo.

Paths are partitioned into fixed-size blocks. Block ``b`` of a stream named
by ``tags`` draws from a counter-based Philox generator keyed by
``(seed, tags, b)``, so the samples depend only on the seed and the block
layout, never on how many worker threads evaluate the blocks. Results are
concatenated in block order.
"""
import os
import zlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np

BLOCK_SIZE = 8192


def default_workers():
    return max(1, int(os.environ.get("CYLLEVY_WORKERS", "1")))


def _tag_int(tag):
    if isinstance(tag, (int, np.integer)):
        if tag < 0:
            raise ValueError("integer stream tags must be non-negative")
        return int(tag)
    return zlib.crc32(str(tag).encode())


def stream_rng(seed, *tags):
    """A Philox generator for the stream ``(seed, *tags)``."""
    if seed is None or int(seed) < 0:
        raise ValueError("seed must be a non-negative integer")
    entropy = [int(seed)] + [_tag_int(t) for t in tags]
    key = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def blocks(n_paths, block_size=BLOCK_SIZE):
    """Half-open path ranges covering ``range(n_paths)``."""
    if n_paths < 1:
        raise ValueError("n_paths must be positive")
    return [(s, min(s + block_size, n_paths)) for s in range(0, n_paths, block_size)]


def map_blocks(fn, n_paths, seed, tags, workers=None, block_size=BLOCK_SIZE):
    """Evaluate ``fn(rng, n, start)`` per block and return results in block order."""
    layout = blocks(n_paths, block_size)
    tags = tuple(tags)

    def run(item):
        b, (start, stop) = item
        return fn(stream_rng(seed, *tags, b), stop - start, start)

    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(layout) == 1:
        return [run(item) for item in enumerate(layout)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, enumerate(layout)))
