"""PEBS-style event sampling over an interval's access stream."""
from __future__ import annotations

import numpy as np


def sample_mask(n: int, period: int, rng: np.random.Generator, is_write: np.ndarray | None = None,
                write_period: int | None = None) -> np.ndarray:
    """Which of ``n`` events the sampler keeps.

    Each event is kept independently with probability ``1/period`` (writes use
    ``1/write_period`` when one is given). One uniform draw is consumed per
    event whatever the period, so the stream position of ``rng`` depends only
    on the number of events.
    """
    if period < 1 or (write_period is not None and write_period < 1):
        raise ValueError("sampling period must be >= 1")
    u = rng.random(n)
    if write_period is not None and is_write is not None:
        return u < np.where(is_write, 1.0 / write_period, 1.0 / period)
    return u < 1.0 / period


def sample_counts(pages: np.ndarray, period: int, rng: np.random.Generator, total_pages: int,
                  is_write: np.ndarray | None = None, write_period: int | None = None) -> np.ndarray:
    """Dense per-page sampled counts (see :func:`sample_mask`)."""
    pages = np.asarray(pages)
    keep = sample_mask(len(pages), period, rng, is_write, write_period)
    return np.bincount(pages[keep], minlength=total_pages)


def sample_interval(pages, period: int, rng: np.random.Generator, **kw) -> dict[int, int]:
    """Sparse form of :func:`sample_counts` (only nonzero pages)."""
    pages = np.asarray(pages, dtype=np.int64)
    total = int(pages.max()) + 1 if len(pages) else 0
    dense = sample_counts(pages, period, rng, total, **kw)
    nz = np.flatnonzero(dense)
    return dict(zip(nz.tolist(), dense[nz].tolist()))


def true_counts(pages) -> dict[int, int]:
    pages = np.asarray(pages, dtype=np.int64)
    if len(pages) == 0:
        return {}
    dense = np.bincount(pages)
    nz = np.flatnonzero(dense)
    return dict(zip(nz.tolist(), dense[nz].tolist()))
