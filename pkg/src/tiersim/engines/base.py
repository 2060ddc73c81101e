from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import TierModel
from ..migration import MigrationRecord


@dataclass
class IntervalContext:
    """Everything an engine sees at the end of one policy interval."""

    index: int
    start_ns: int
    length_ns: int
    pages: np.ndarray
    is_write: np.ndarray
    bw_slow: float
    times: np.ndarray | None = None


@dataclass
class TickResult:
    records: list[MigrationRecord] = field(default_factory=list)
    mode: str = "-"
    telemetry: dict[str, float] = field(default_factory=dict)
    # engines that migrate mid-interval charge the interval's accesses themselves
    fast_hits: int | None = None


class Engine:
    """A tiering policy. Subclasses own residency and per-page state.

    The simulator calls :meth:`reset` once, then for every interval reads
    :attr:`interval_ns`, optionally feeds :meth:`lookahead`, charges the
    interval's accesses against :attr:`fast_mask`, and finally calls
    :meth:`tick`.
    """

    name = "engine"
    needs_lookahead = False

    def __init__(self, tiers: TierModel, total_pages: int, seed: int = 0):
        self.tiers = tiers
        self.total_pages = total_pages
        self.rng = np.random.default_rng(seed)
        self._fast = np.zeros(total_pages, dtype=bool)

    @property
    def fast_mask(self) -> np.ndarray:
        return self._fast

    @property
    def interval_ns(self) -> int:
        raise NotImplementedError

    def reset(self, initial_fast: np.ndarray) -> None:
        if int(np.count_nonzero(initial_fast)) > self.tiers.fast_capacity_pages:
            raise ValueError("initial placement exceeds fast-tier capacity")
        self._fast[:] = initial_fast

    def lookahead(self, pages: np.ndarray) -> None:
        pass

    def tick(self, ctx: IntervalContext) -> TickResult:
        raise NotImplementedError
