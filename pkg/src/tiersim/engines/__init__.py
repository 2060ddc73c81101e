"""Tiering policies behind one tick interface."""
from __future__ import annotations

from ..core import EngineConfig, StaticConfig, TierModel, TwoAccessConfig
from .arms import ArmsEngine
from .base import Engine, IntervalContext, TickResult
from .oracle import OracleEngine
from .static import StaticThresholdEngine
from .two_access import TwoAccessEngine

ENGINES = ("arms", "static", "two_access", "oracle")

__all__ = ["ENGINES", "ArmsEngine", "Engine", "IntervalContext", "OracleEngine",
           "StaticThresholdEngine", "TickResult", "TwoAccessEngine", "make_engine"]


def make_engine(name: str, tiers: TierModel, total_pages: int, seed: int = 0,
                arms: EngineConfig | None = None, static: StaticConfig | None = None,
                two_access: TwoAccessConfig | None = None, event_weight: float = 1.0) -> Engine:
    arms = arms or EngineConfig()
    period = arms.sample_period_history
    interval = arms.policy_interval_history
    if name == "arms":
        return ArmsEngine(tiers, total_pages, arms, seed=seed, event_weight=event_weight)
    if name == "static":
        return StaticThresholdEngine(tiers, total_pages, static, seed=seed,
                                     sample_period=period, interval_ns=interval)
    if name == "two_access":
        return TwoAccessEngine(tiers, total_pages, two_access, seed=seed,
                               sample_period=period, interval_ns=interval)
    if name == "oracle":
        return OracleEngine(tiers, total_pages, seed=seed, interval_ns=interval)
    raise ValueError(f"engine: unknown engine {name!r} (choose from {', '.join(ENGINES)})")
