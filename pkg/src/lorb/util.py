"""Shared helpers: deterministic parallel map, seeded sampling, formatting."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

__all__ = ["pmap", "make_rng", "fmt_float"]


def pmap(fn, items, threads: int = 1) -> list:
    """Map preserving input order; thread-parallel when threads > 1.

    Results are gathered by index so the output (and any reduction over it)
    is independent of scheduling order.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator: the sample stream depends only on the seed,
    never on evaluation order."""
    return np.random.Generator(np.random.Philox(key=seed))


def fmt_float(x: float) -> str:
    """17 significant digits, enough to round-trip a double."""
    return f"{x:.17g}"
