"""Hot/cold page classification: two-horizon EWMAs, score, top-k, hot age.

The scalar functions operate on :class:`~tiersim.core.PageRecord`; the
``*_all`` variants do the same arithmetic over a :class:`PageTable` of numpy
columns and are what the engine runs each tick.
"""
from __future__ import annotations

from dataclasses import replace

import numpy as np

from .core import PageRecord, TierId


def ewma(value, sample, beta):
    # incremental form converges monotonically, so a constant input never
    # produces a spurious score dip from rounding
    return value + beta * (sample - value)


def update_page(rec: PageRecord, sampled: int, beta_s: float, beta_l: float,
                w_s: float, w_l: float) -> PageRecord:
    ewma_s = ewma(rec.ewma_s, sampled, beta_s)
    ewma_l = ewma(rec.ewma_l, sampled, beta_l)
    return replace(rec, accesses=0, ewma_s=ewma_s, ewma_l=ewma_l, prev_score=rec.score,
                   score=w_s * ewma_s + w_l * ewma_l)


def rank_topk_scores(scores: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k best scores, ordered by (score desc, index asc).

    Zero scores never qualify, so fewer than k pages may come back.
    """
    if k <= 0:
        return np.empty(0, dtype=np.int64)
    live = np.flatnonzero(scores > 0)
    if len(live) > k:
        # keep everything tied with the k-th score so the exact sort below
        # can apply the index tie-break
        kth = np.partition(scores[live], len(live) - k)[len(live) - k]
        live = live[scores[live] >= kth]
    order = np.lexsort((live, -scores[live]))
    return live[order[:k]]


def rank_topk(pages: dict[int, PageRecord], k: int) -> list[int]:
    ids = np.array(sorted(pages), dtype=np.int64)
    if len(ids) == 0:
        return []
    scores = np.array([pages[i].score for i in ids.tolist()])
    return ids[rank_topk_scores(scores, k)].tolist()


def update_hot_age(pages: dict[int, PageRecord], topk) -> None:
    members = set(topk)
    for pid, rec in pages.items():
        rec.hot_age = rec.hot_age + 1 if pid in members else 0


class PageTable:
    """Column store of :class:`PageRecord` fields for every page."""

    def __init__(self, total_pages: int):
        self.n = total_pages
        self.fast = np.zeros(total_pages, dtype=bool)
        self.accesses = np.zeros(total_pages, dtype=np.int64)
        self.ewma_s = np.zeros(total_pages)
        self.ewma_l = np.zeros(total_pages)
        self.score = np.zeros(total_pages)
        self.prev_score = np.zeros(total_pages)
        self.hot_age = np.zeros(total_pages, dtype=np.int64)

    def record(self, page: int) -> PageRecord:
        return PageRecord(
            tier=TierId.FAST if self.fast[page] else TierId.SLOW,
            accesses=int(self.accesses[page]),
            ewma_s=float(self.ewma_s[page]),
            ewma_l=float(self.ewma_l[page]),
            score=float(self.score[page]),
            prev_score=float(self.prev_score[page]),
            hot_age=int(self.hot_age[page]),
        )

    @property
    def fast_occupancy(self) -> int:
        return int(self.fast.sum())


def update_all(table: PageTable, sampled: np.ndarray, beta_s: float, beta_l: float,
               w_s: float, w_l: float) -> None:
    """Apply :func:`update_page` to every page; untouched pages decay with 0."""
    x = sampled.astype(np.float64)
    table.ewma_s = ewma(table.ewma_s, x, beta_s)
    table.ewma_l = ewma(table.ewma_l, x, beta_l)
    table.prev_score = table.score
    table.score = w_s * table.ewma_s + w_l * table.ewma_l
    table.accesses[:] = 0


def update_hot_age_all(table: PageTable, topk: np.ndarray) -> np.ndarray:
    """Bump hot age of ``topk`` members, zero the rest; returns the member mask."""
    member = np.zeros(table.n, dtype=bool)
    member[topk] = True
    table.hot_age = np.where(member, table.hot_age + 1, 0)
    return member
