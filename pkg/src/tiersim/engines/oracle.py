from __future__ import annotations

import numpy as np

from ..core import TierModel
from ..migration import DEMOTE, PROMOTE, MigrationRecord, modeled_latency
from .base import Engine, IntervalContext, TickResult


class OracleEngine(Engine):
    """Evaluation yardstick: before each interval, place that interval's true top-k in fast memory.

    Migration is free and unbounded. Pages already resident win ties so the
    placement does not churn between equally-accessed pages.
    """

    name = "oracle"
    needs_lookahead = True

    def __init__(self, tiers: TierModel, total_pages: int, seed: int = 0,
                 interval_ns: int = 500_000_000):
        super().__init__(tiers, total_pages, seed)
        self._interval = interval_ns
        self._pending: list[MigrationRecord] = []
        self._next_index = 0

    @property
    def interval_ns(self) -> int:
        return self._interval

    def lookahead(self, pages: np.ndarray) -> None:
        fast, cap = self._fast, self.tiers.fast_capacity_pages
        counts = np.bincount(pages, minlength=self.total_pages)
        live = np.flatnonzero(counts > 0)
        order = np.lexsort((live, ~fast[live], -counts[live]))
        want = np.zeros(self.total_pages, dtype=bool)
        want[live[order[:cap]]] = True

        promote = np.flatnonzero(want & ~fast)
        free = cap - int(np.count_nonzero(fast))
        need = len(promote) - free
        spare = np.flatnonzero(fast & ~want)
        spare = spare[np.lexsort((spare, counts[spare]))]
        lat = modeled_latency(self.tiers, 0.0, 1)
        idx = self._next_index
        records = []
        for q in spare[:max(0, need)].tolist():
            records.append(MigrationRecord(idx, q, DEMOTE, lat, idx))
        fast[spare[:max(0, need)]] = False
        fast[promote] = True
        records += [MigrationRecord(idx, p, PROMOTE, lat, idx) for p in promote.tolist()]
        self._pending = records

    def tick(self, ctx: IntervalContext) -> TickResult:
        records, self._pending = self._pending, []
        self._next_index = ctx.index + 1
        return TickResult(records, "oracle", {})
