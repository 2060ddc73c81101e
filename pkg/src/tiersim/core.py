"""Shared domain types for the tiering simulator.

Units used throughout: time in integer nanoseconds, bandwidth in bytes per
second, capacities in pages. Scores and EWMAs are in sampled accesses per
policy interval.
"""
from __future__ import annotations

import enum
import math
import re
from dataclasses import asdict, dataclass, fields, replace
from typing import Any

MiB = 1 << 20
NS_PER_S = 1_000_000_000


class TierId(enum.IntEnum):
    FAST = 0
    SLOW = 1


class Mode(str, enum.Enum):
    HISTORY = "history"
    RECENCY = "recency"


@dataclass
class PageRecord:
    """Per-page tiering metadata kept by the adaptive engine."""

    tier: TierId = TierId.SLOW
    accesses: int = 0
    ewma_s: float = 0.0
    ewma_l: float = 0.0
    score: float = 0.0
    prev_score: float = 0.0
    hot_age: int = 0


@dataclass(frozen=True)
class TierModel:
    fast_capacity_pages: int = 4096
    slow_capacity_pages: int = 32768
    latency_fast: float = 80.0
    latency_slow: float = 200.0
    bw_max_slow: float = 7.45e9
    bs_max: int = 256
    page_size: int = 2 * MiB
    access_size: int = 64
    migration_overhead_ns: float = 50_000.0

    @property
    def delta_latency(self) -> float:
        return self.latency_slow - self.latency_fast

    @property
    def base_migration_ns(self) -> float:
        """Latency of one unshared migration at full slow-tier bandwidth."""
        return self.page_size / self.bw_max_slow * NS_PER_S + self.migration_overhead_ns


@dataclass(frozen=True)
class EngineConfig:
    """Knobs of the adaptive engine.

    ``alpha_s``/``alpha_l`` are the weights on the *new* sample under the
    default ``ewma_convention="role"``; ``"literal"`` applies them to the old
    value instead, which inverts which average is the fast one.
    """

    alpha_s: float = 0.7
    alpha_l: float = 0.1
    ewma_convention: str = "role"
    w_s_history: float = 0.3
    w_l_history: float = 0.7
    w_s_recency: float = 0.8
    w_l_recency: float = 0.2
    sample_period_history: int = 10_000
    sample_period_recency: int = 5_000
    policy_interval_history: int = 500_000_000
    policy_interval_recency: int = 100_000_000
    hot_age_min: int = 2
    # None resolves to a fraction of the platform's slow-tier peak bandwidth
    pht_delta: float | None = None
    pht_lambda: float | None = None
    pht_delta_fraction: float = 0.05
    pht_lambda_fraction: float = 0.5
    recency_max_intervals: int = 20
    recency_min_intervals: int = 5
    stable_window: int = 3
    stable_tolerance: float = 0.10
    wasteful_window: int = 10
    latency_ewma: float = 0.3
    cost_model: str = "amortized"
    eager_demotion: bool = False

    def betas(self) -> tuple[float, float]:
        if self.ewma_convention == "literal":
            return 1.0 - self.alpha_s, 1.0 - self.alpha_l
        return self.alpha_s, self.alpha_l

    def weights(self, mode: Mode) -> tuple[float, float]:
        if mode is Mode.RECENCY:
            return self.w_s_recency, self.w_l_recency
        return self.w_s_history, self.w_l_history

    def sample_period(self, mode: Mode) -> int:
        if mode is Mode.RECENCY:
            return self.sample_period_recency
        return self.sample_period_history

    def policy_interval(self, mode: Mode) -> int:
        if mode is Mode.RECENCY:
            return self.policy_interval_recency
        return self.policy_interval_history

    def pht_params(self, tiers: TierModel) -> tuple[float, float]:
        delta = self.pht_delta if self.pht_delta is not None else self.pht_delta_fraction * tiers.bw_max_slow
        lam = self.pht_lambda if self.pht_lambda is not None else self.pht_lambda_fraction * tiers.bw_max_slow
        return delta, lam


@dataclass(frozen=True)
class StaticConfig:
    """HeMem-like fixed-threshold baseline."""

    hot_threshold: int = 8
    cooling_threshold: int = 18
    migration_period: int = 10_000_000
    sample_period: int | None = None  # None: share the adaptive engine's history period


@dataclass(frozen=True)
class TwoAccessConfig:
    """TPP-like baseline: promote on the second observed access."""

    watermark: float = 0.95
    sample_period: int | None = None


def _close(a: float, b: float, tol: float = 1e-9) -> bool:
    return math.isclose(a, b, rel_tol=tol, abs_tol=tol)


def validate_config(cfg: EngineConfig, tiers: TierModel) -> list[str]:
    """Return one message per violated invariant, each naming its field."""
    out: list[str] = []
    for name in ("alpha_s", "alpha_l"):
        v = getattr(cfg, name)
        if not 0.0 < v <= 1.0:
            out.append(f"{name}: must be in (0, 1], got {v}")
    if cfg.ewma_convention not in ("role", "literal"):
        out.append(f"ewma_convention: must be 'role' or 'literal', got {cfg.ewma_convention!r}")
    elif cfg.ewma_convention == "literal" and (cfg.alpha_s >= 1.0 or cfg.alpha_l >= 1.0):
        out.append("alpha_s/alpha_l: literal convention needs values below 1")
    for mode in ("history", "recency"):
        ws, wl = getattr(cfg, f"w_s_{mode}"), getattr(cfg, f"w_l_{mode}")
        if ws < 0 or wl < 0:
            out.append(f"w_s_{mode}/w_l_{mode}: weights must be non-negative")
        if not _close(ws + wl, 1.0):
            out.append(f"w_s_{mode}/w_l_{mode}: weights must sum to 1 (got {ws + wl:g})")
    if not cfg.w_s_recency > cfg.w_s_history:
        out.append("w_s_recency: must exceed w_s_history")
    for name in ("sample_period_history", "sample_period_recency", "policy_interval_history",
                 "policy_interval_recency", "hot_age_min", "recency_max_intervals", "stable_window"):
        if getattr(cfg, name) < 1:
            out.append(f"{name}: must be >= 1")
    if cfg.recency_min_intervals < 0 or cfg.recency_min_intervals > cfg.recency_max_intervals:
        out.append("recency_min_intervals: must be in [0, recency_max_intervals]")
    if cfg.wasteful_window < 0:
        out.append("wasteful_window: must be >= 0")
    for name in ("pht_delta", "pht_lambda"):
        v = getattr(cfg, name)
        if v is not None and v < 0:
            out.append(f"{name}: must be >= 0")
    for name in ("pht_delta_fraction", "pht_lambda_fraction", "stable_tolerance"):
        if getattr(cfg, name) < 0:
            out.append(f"{name}: must be >= 0")
    if not 0.0 < cfg.latency_ewma <= 1.0:
        out.append("latency_ewma: must be in (0, 1]")
    if cfg.cost_model not in ("amortized", "literal"):
        out.append(f"cost_model: must be 'amortized' or 'literal', got {cfg.cost_model!r}")

    if not tiers.latency_fast > 0:
        out.append("latency_fast: must be positive")
    if not tiers.latency_slow > tiers.latency_fast:
        out.append("latency_slow: latency_slow must exceed latency_fast")
    for name in ("fast_capacity_pages", "slow_capacity_pages", "bw_max_slow", "page_size", "access_size"):
        if not getattr(tiers, name) > 0:
            out.append(f"{name}: must be positive")
    if tiers.bs_max < 1:
        out.append("bs_max: must be >= 1")
    if tiers.migration_overhead_ns < 0:
        out.append("migration_overhead_ns: must be >= 0")
    return out


_DURATION_RE = re.compile(r"^\s*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*(ns|us|ms|s)?\s*$")
_SCALE = {"ns": 1, "us": 1_000, "ms": 1_000_000, "s": NS_PER_S, None: 1}


def parse_duration_ns(text: str | int | float) -> int:
    """Parse ``"500ms"``, ``"2s"``, ``"100000"`` (bare numbers are ns)."""
    if isinstance(text, (int, float)):
        return int(text)
    m = _DURATION_RE.match(text)
    if not m:
        raise ValueError(f"not a duration: {text!r}")
    return int(round(float(m.group(1)) * _SCALE[m.group(2)]))


def to_dict(obj: Any) -> dict[str, Any]:
    return asdict(obj)


def from_dict(cls: type, data: dict[str, Any]):
    """Build dataclass ``cls`` from ``data``; unknown keys raise KeyError."""
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise KeyError(f"unknown key(s) for {cls.__name__}: {', '.join(unknown)}")
    return cls(**data)


def with_overrides(obj, **changes):
    return replace(obj, **changes)
