from __future__ import annotations

import math

import numpy as np

from ..core import TierModel, TwoAccessConfig
from ..migration import MigrationPlan, execute_plan
from ..sampler import sample_counts
from .base import Engine, IntervalContext, TickResult


class TwoAccessEngine(Engine):
    """TPP-like baseline: a slow page is promoted on its second observed access.

    Promotions only use free fast-tier space; afterwards least-recently
    accessed fast pages are demoted until occupancy is back under the
    watermark.
    """

    name = "two_access"

    def __init__(self, tiers: TierModel, total_pages: int, cfg: TwoAccessConfig | None = None,
                 seed: int = 0, sample_period: int = 10_000, interval_ns: int = 500_000_000):
        super().__init__(tiers, total_pages, seed)
        self.cfg = cfg or TwoAccessConfig()
        self.period = self.cfg.sample_period or sample_period
        self._interval = interval_ns
        self.slow_hits = np.zeros(total_pages, dtype=np.int64)
        self.last_access = np.full(total_pages, -1, dtype=np.int64)
        self.identified = np.full(total_pages, -1, dtype=np.int64)

    @property
    def interval_ns(self) -> int:
        return self._interval

    def tick(self, ctx: IntervalContext) -> TickResult:
        fast, cap = self._fast, self.tiers.fast_capacity_pages
        sampled = sample_counts(ctx.pages, self.period, self.rng, self.total_pages)
        self.last_access[sampled > 0] = ctx.index
        slow = ~fast
        self.slow_hits[slow] += sampled[slow]

        ready = np.flatnonzero(slow & (self.slow_hits >= 2))
        fresh = ready[self.identified[ready] < 0]
        self.identified[fresh] = ctx.index
        ready = ready[np.lexsort((ready, -self.slow_hits[ready]))]

        occupancy = int(np.count_nonzero(fast))
        promote = ready[: max(0, cap - occupancy)]
        target = math.floor(self.cfg.watermark * cap)
        excess = occupancy + len(promote) - target
        plan = MigrationPlan(pairs=[(int(p), None) for p in promote], batch_size=len(promote))
        if excess > 0:
            resident = np.flatnonzero(fast)
            lru = resident[np.lexsort((resident, self.last_access[resident]))]
            plan.demote_only = lru[:excess].tolist()

        ident = self.identified
        records = execute_plan(plan, self._table_view(), self.tiers, ctx.index, ctx.bw_slow,
                               identified_at=lambda p: ident[p])
        moved = [r.page for r in records]
        self.slow_hits[moved] = 0
        self.identified[moved] = -1
        return TickResult(records, "two_access", {})

    def _table_view(self):
        return _FastView(self._fast)


class _FastView:
    """Minimal table shim so :func:`execute_plan` can flip residency."""

    def __init__(self, fast: np.ndarray):
        self.fast = fast

    @property
    def fast_occupancy(self) -> int:
        return int(np.count_nonzero(self.fast))
