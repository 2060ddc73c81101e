"""Glue between an :class:`ExperimentConfig` and the simulator."""
from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from .config import ExperimentConfig
from .engines import make_engine
from .simulator import MetricsReport, run
from .workloads import Trace, generate


def build_trace(cfg: ExperimentConfig) -> Trace:
    return generate(cfg.workload)


def run_engine(cfg: ExperimentConfig, trace: Trace | None = None, engine: str | None = None) -> MetricsReport:
    """One simulation of ``engine`` (default: ``cfg.run.engine``) on ``trace``."""
    trace = trace if trace is not None else build_trace(cfg)
    rc = cfg.run if engine is None else replace(cfg.run, engine=engine)
    eng = make_engine(rc.engine, cfg.tiers, trace.total_pages, seed=rc.seed, arms=cfg.arms,
                      static=cfg.static, two_access=cfg.two_access, event_weight=rc.event_weight)
    return run(trace, eng, cfg.tiers, rc, wasteful_window=cfg.arms.wasteful_window)


@dataclass(frozen=True)
class SweepCell:
    knob1: int
    knob2: int
    amat: float
    fast_hit_fraction: float


def _cell(args) -> SweepCell:
    cfg, trace, v1, v2 = args
    sw = cfg.sweep
    static = replace(cfg.static, **{sw.knob1: v1, sw.knob2: v2})
    rep = run_engine(replace(cfg, static=static), trace, engine="static")
    return SweepCell(v1, v2, rep.amat_ns, rep.fast_hit_fraction)


def sweep(cfg: ExperimentConfig, trace: Trace | None = None, jobs: int = 1) -> list[SweepCell]:
    """Run the static baseline on every cell of the configured grid, in grid order."""
    trace = trace if trace is not None else build_trace(cfg)
    grid = [(cfg, trace, v1, v2) for v1, v2 in itertools.product(cfg.sweep.values1, cfg.sweep.values2)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_cell, grid))
    return [_cell(g) for g in grid]


def best_cell(cells: list[SweepCell]) -> SweepCell:
    """Lowest amat; ties go to the earlier cell in grid order."""
    return min(cells, key=lambda c: c.amat)
