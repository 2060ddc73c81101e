from __future__ import annotations

import numpy as np

from ..classifier import PageTable, rank_topk_scores, update_all, update_hot_age_all
from ..core import EngineConfig, Mode, TierModel
from ..detector import EngineMode, PhtState, bandwidth_stable, observe_bandwidth, step_mode
from ..migration import (LatencyEstimates, add_eager_demotions, batch_size, execute_plan,
                         filter_candidates, plan_migrations)
from ..sampler import sample_counts
from .base import Engine, IntervalContext, TickResult


class ArmsEngine(Engine):
    """Threshold-free adaptive tiering: score ranking, change detection, gated batched promotion.

    ``event_weight`` is how many real references one trace event stands for;
    together with the sampling period it converts a score difference (in
    samples per interval) into references, so the benefit side of the
    cost-benefit gate comes out in nanoseconds like the cost side.
    """

    name = "arms"

    def __init__(self, tiers: TierModel, total_pages: int, cfg: EngineConfig | None = None,
                 seed: int = 0, event_weight: float = 1.0):
        super().__init__(tiers, total_pages, seed)
        self.cfg = cfg or EngineConfig()
        self.event_weight = event_weight
        self.table = PageTable(total_pages)
        self._fast = self.table.fast
        delta, lam = self.cfg.pht_params(tiers)
        self.pht = PhtState(delta=delta, lam=lam)
        self.mode = EngineMode()
        self.estimates = LatencyEstimates.cold_start(tiers)
        self.recency_bw: list[float] = []
        self.alarms = 0

    @property
    def interval_ns(self) -> int:
        return self.cfg.policy_interval(self.mode.mode)

    def tick(self, ctx: IntervalContext) -> TickResult:
        cfg, table, tiers = self.cfg, self.table, self.tiers
        mode = self.mode.mode
        period = cfg.sample_period(mode)
        w_s, w_l = cfg.weights(mode)
        beta_s, beta_l = cfg.betas()

        sampled = sample_counts(ctx.pages, period, self.rng, self.total_pages)
        update_all(table, sampled, beta_s, beta_l, w_s, w_l)
        topk = rank_topk_scores(table.score, tiers.fast_capacity_pages)
        member = update_hot_age_all(table, topk)

        self.pht, alarm = observe_bandwidth(self.pht, ctx.bw_slow)
        self.alarms += alarm
        if mode is Mode.RECENCY:
            self.recency_bw.append(ctx.bw_slow)
        stable = bandwidth_stable(self.recency_bw, cfg.stable_window, cfg.stable_tolerance)
        next_mode = step_mode(self.mode, alarm, stable, cfg.recency_max_intervals,
                              cfg.recency_min_intervals)

        candidates = filter_candidates(topk, table, cfg.hot_age_min)
        bsz = batch_size(ctx.bw_slow, tiers.bw_max_slow, tiers.bs_max)
        dL = tiers.delta_latency * period * self.event_weight
        plan = plan_migrations(candidates, table, member, tiers.fast_capacity_pages, dL,
                               self.estimates.l_prom, self.estimates.l_dem, bsz)
        if cfg.eager_demotion:
            waiting = int(np.count_nonzero(member & ~table.fast))
            add_eager_demotions(plan, table, member, waiting)
        hot_age = table.hot_age
        records = execute_plan(plan, table, tiers, ctx.index, ctx.bw_slow, self.estimates,
                               identified_at=lambda p: ctx.index - hot_age[p] + 1,
                               latency_ewma=cfg.latency_ewma, cost_model=cfg.cost_model)

        telemetry = {"pht_g": self.pht.cumulative, "pht_mean": self.pht.running_mean,
                     "alarm": float(alarm), "sample_period": float(period), "w_s": w_s, "w_l": w_l,
                     "batch_size": float(bsz),
                     "candidates": float(len(candidates))}
        if next_mode.mode is not mode:
            self.recency_bw = []
        self.mode = next_mode
        return TickResult(records, mode.value, telemetry)
