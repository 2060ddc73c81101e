from __future__ import annotations

import numpy as np

from ..core import StaticConfig, TierModel
from ..migration import DEMOTE, PROMOTE, MigrationRecord, modeled_latency
from ..sampler import sample_mask
from .base import Engine, IntervalContext, TickResult

try:
    from numba import njit
except ImportError:  # pragma: no cover - pure-Python fallback, slow but identical
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

# indices into the scalar state vector
_HEAD, _TAIL, _CLOCK, _NEXT_MIG, _STALLS, _COOLINGS, _OCC = range(7)


@njit(cache=True)
def _cooled(counts, page_clock, clock, p):
    shift = clock - page_clock[p]
    if shift > 0:
        counts[p] = counts[p] >> min(shift, 62)
        page_clock[p] = clock
    return counts[p]


@njit(cache=True)
def _migrate_once(t, hot, cap, counts, page_clock, last_seen, fast, queued, queue, st,
                  out_page, out_dir, out_ident, identified, n_out):
    n = len(counts)
    while st[_HEAD] != st[_TAIL]:
        p = queue[st[_HEAD] % n]
        if fast[p] or _cooled(counts, page_clock, st[_CLOCK], p) < hot:
            st[_HEAD] += 1
            queued[p] = False
            continue
        if st[_OCC] >= cap:
            victim = -1
            best_c = 0
            best_t = 0
            for q in range(n):
                if not fast[q]:
                    continue
                c = _cooled(counts, page_clock, st[_CLOCK], q)
                if c >= hot:
                    continue
                if victim < 0 or c < best_c or (c == best_c and last_seen[q] < best_t):
                    victim, best_c, best_t = q, c, last_seen[q]
            if victim < 0:
                st[_STALLS] += 1
                return n_out
            fast[victim] = False
            st[_OCC] -= 1
            out_page[n_out] = victim
            out_dir[n_out] = 0
            out_ident[n_out] = -1
            n_out += 1
        st[_HEAD] += 1
        queued[p] = False
        fast[p] = True
        st[_OCC] += 1
        out_page[n_out] = p
        out_dir[n_out] = 1
        out_ident[n_out] = identified[p]
        identified[p] = -1
        n_out += 1
        return n_out
    return n_out


@njit(cache=True)
def _run_interval(pages, times, keep, index, end_ns, hot, cool, mig_period, cap,
                  counts, page_clock, last_seen, identified, fast, queued, queue, st,
                  out_page, out_dir, out_ident):
    n = len(counts)
    hits = 0
    n_out = 0
    for i in range(len(pages)):
        t = times[i]
        while st[_NEXT_MIG] <= t:
            n_out = _migrate_once(st[_NEXT_MIG], hot, cap, counts, page_clock, last_seen, fast,
                                  queued, queue, st, out_page, out_dir, out_ident, identified, n_out)
            st[_NEXT_MIG] += mig_period
        p = pages[i]
        if fast[p]:
            hits += 1
        if not keep[i]:
            continue
        c = _cooled(counts, page_clock, st[_CLOCK], p) + 1
        counts[p] = c
        last_seen[p] = t
        if c >= hot and not fast[p] and not queued[p]:
            queued[p] = True
            # a page that cooled off the queue keeps its first crossing
            if identified[p] < 0:
                identified[p] = index
            queue[st[_TAIL] % n] = p
            st[_TAIL] += 1
        if c >= cool:
            st[_CLOCK] += 1
            st[_COOLINGS] += 1
    while st[_NEXT_MIG] < end_ns:
        n_out = _migrate_once(st[_NEXT_MIG], hot, cap, counts, page_clock, last_seen, fast,
                              queued, queue, st, out_page, out_dir, out_ident, identified, n_out)
        st[_NEXT_MIG] += mig_period
    return hits, n_out


class StaticThresholdEngine(Engine):
    """HeMem-like baseline with fixed thresholds, processed sample by sample.

    Every sampled access bumps the page's count. A count reaching the hot
    threshold puts a slow page on a FIFO promotion queue; a count reaching
    the cooling threshold advances a global clock, and every page's count is
    halved once per clock tick (applied lazily when the page is next looked
    at). A migration thread wakes every ``migration_period`` and moves the
    queue head into fast memory, evicting the coldest fast page that is no
    longer hot when the tier is full. If there is no such page the queue
    stalls until the next wake-up.

    Accesses are charged at the residency they see, so migrations that land
    mid-interval take effect immediately.
    """

    name = "static"

    def __init__(self, tiers: TierModel, total_pages: int, cfg: StaticConfig | None = None,
                 seed: int = 0, sample_period: int = 10_000, interval_ns: int = 500_000_000):
        super().__init__(tiers, total_pages, seed)
        self.cfg = cfg or StaticConfig()
        self.period = self.cfg.sample_period or sample_period
        self._interval = interval_ns
        self.counts = np.zeros(total_pages, dtype=np.int64)
        self.page_clock = np.zeros(total_pages, dtype=np.int64)
        self.last_seen = np.full(total_pages, -1, dtype=np.int64)
        self.identified = np.full(total_pages, -1, dtype=np.int64)
        self.queued = np.zeros(total_pages, dtype=np.bool_)
        self.queue = np.zeros(total_pages, dtype=np.int64)
        self.state = np.zeros(7, dtype=np.int64)

    @property
    def interval_ns(self) -> int:
        return self._interval

    @property
    def stalls(self) -> int:
        return int(self.state[_STALLS])

    @property
    def coolings(self) -> int:
        return int(self.state[_COOLINGS])

    @property
    def queue_length(self) -> int:
        return int(self.state[_TAIL] - self.state[_HEAD])

    def reset(self, initial_fast: np.ndarray) -> None:
        super().reset(initial_fast)
        self.state[:] = 0
        self.state[_NEXT_MIG] = self.cfg.migration_period
        self.state[_OCC] = int(np.count_nonzero(self._fast))

    def current_counts(self) -> np.ndarray:
        """Counts with all pending halvings applied."""
        shift = np.minimum(self.state[_CLOCK] - self.page_clock, 62)
        return self.counts >> shift

    def tick(self, ctx: IntervalContext) -> TickResult:
        cfg = self.cfg
        n = len(ctx.pages)
        times = ctx.times if ctx.times is not None else np.full(n, ctx.start_ns, dtype=np.int64)
        keep = sample_mask(n, self.period, self.rng)
        slots = 2 * (ctx.length_ns // cfg.migration_period + 2)
        out_page = np.empty(slots, dtype=np.int64)
        out_dir = np.empty(slots, dtype=np.int8)
        out_ident = np.empty(slots, dtype=np.int64)
        hits, n_out = _run_interval(
            np.ascontiguousarray(ctx.pages, dtype=np.int64), np.ascontiguousarray(times, dtype=np.int64),
            keep, ctx.index, ctx.start_ns + ctx.length_ns, cfg.hot_threshold, cfg.cooling_threshold,
            cfg.migration_period, self.tiers.fast_capacity_pages, self.counts, self.page_clock,
            self.last_seen, self.identified, self._fast, self.queued, self.queue, self.state,
            out_page, out_dir, out_ident)

        # one page at a time: each migration gets the whole spare bandwidth
        lat = modeled_latency(self.tiers, ctx.bw_slow, 1)
        records = []
        for k in range(n_out):
            if out_dir[k]:
                records.append(MigrationRecord(ctx.index, int(out_page[k]), PROMOTE, lat, int(out_ident[k])))
            else:
                records.append(MigrationRecord(ctx.index, int(out_page[k]), DEMOTE, lat, ctx.index))
        return TickResult(records, "static", {"coolings": float(self.coolings),
                                              "queue": float(self.queue_length)},
                          fast_hits=int(hits))
