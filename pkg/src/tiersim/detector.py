"""Change detection on slow-tier bandwidth and the history/recency mode machine."""
from __future__ import annotations

from dataclasses import dataclass, replace

from .core import Mode


@dataclass(frozen=True)
class PhtState:
    """One-sided (increase-only) Page-Hinkley statistic."""

    delta: float
    lam: float
    running_mean: float = 0.0
    cumulative: float = 0.0
    n_obs: int = 0


def observe_bandwidth(state: PhtState, bw_slow: float) -> tuple[PhtState, bool]:
    if bw_slow < 0:
        raise ValueError("bandwidth must be non-negative")
    n = state.n_obs + 1
    mean = state.running_mean + (bw_slow - state.running_mean) / n
    g = max(0.0, state.cumulative + (bw_slow - mean - state.delta))
    if g > state.lam:
        return replace(state, running_mean=0.0, cumulative=0.0, n_obs=0), True
    return replace(state, running_mean=mean, cumulative=g, n_obs=n), False


@dataclass(frozen=True)
class EngineMode:
    mode: Mode = Mode.HISTORY
    intervals_in_mode: int = 0


def step_mode(mode: EngineMode, alarm: bool, bw_stable: bool, recency_max_intervals: int,
              recency_min_intervals: int = 0) -> EngineMode:
    """Advance the mode machine by one policy interval.

    ``intervals_in_mode`` counts completed intervals in the current mode. The
    stability exit is honoured only after ``recency_min_intervals``.
    """
    if mode.mode is Mode.HISTORY:
        if alarm:
            return EngineMode(Mode.RECENCY, 0)
        return EngineMode(Mode.HISTORY, mode.intervals_in_mode + 1)
    if mode.intervals_in_mode >= recency_max_intervals:
        return EngineMode(Mode.HISTORY, 0)
    if bw_stable and mode.intervals_in_mode >= recency_min_intervals:
        return EngineMode(Mode.HISTORY, 0)
    return EngineMode(Mode.RECENCY, mode.intervals_in_mode + 1)


def bandwidth_stable(recent: list[float], window: int = 3, tolerance: float = 0.10) -> bool:
    """True when the last ``window`` readings moved by less than ``tolerance`` of their mean."""
    if len(recent) < window:
        return False
    tail = recent[-window:]
    mean = sum(tail) / window
    if mean <= 0:
        return True
    return abs(tail[-1] - tail[0]) / mean < tolerance
