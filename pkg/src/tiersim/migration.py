"""Promotion filtering, cost-benefit gating, pairing and batched execution."""
from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field

import numpy as np

from .classifier import PageTable
from .core import NS_PER_S, PageRecord, TierModel

PROMOTE = "promote"
DEMOTE = "demote"

_MIN_BW = 1.0  # bytes/s floor when the application saturates the slow tier


class MigrationError(RuntimeError):
    """A plan disagrees with current residency; indicates an engine bug."""


@dataclass
class MigrationPlan:
    pairs: list[tuple[int, int | None]] = field(default_factory=list)
    batch_size: int = 0
    demote_only: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.pairs) + len(self.demote_only)

    @property
    def promotions(self) -> list[int]:
        return [p for p, _ in self.pairs if p is not None]

    @property
    def demotions(self) -> list[int]:
        return [q for _, q in self.pairs if q is not None] + list(self.demote_only)


@dataclass(frozen=True)
class MigrationRecord:
    interval: int
    page: int
    direction: str
    observed_latency: float
    identified_at: int

    def __post_init__(self):
        if not self.observed_latency > 0:
            raise ValueError("observed_latency must be positive")


@dataclass
class LatencyEstimates:
    l_prom: float
    l_dem: float

    @classmethod
    def cold_start(cls, tiers: TierModel) -> "LatencyEstimates":
        return cls(tiers.base_migration_ns, tiers.base_migration_ns)


def filter_candidates(topk: np.ndarray, table: PageTable, hot_age_min: int = 2) -> np.ndarray:
    """Slow-resident top-k pages whose score held or rose and that aged in, in top-k order."""
    topk = np.asarray(topk, dtype=np.int64)
    keep = (~table.fast[topk]) & (table.score[topk] >= table.prev_score[topk]) \
        & (table.hot_age[topk] >= hot_age_min)
    return topk[keep]


def cost_benefit(p: PageRecord, q: PageRecord, dL: float, l_prom: float, l_dem: float) -> bool:
    benefit = (p.score - q.score) * p.hot_age * dL
    return benefit > l_prom + l_dem


def batch_size(bw_app: float, bw_max: float, bs_max: int) -> int:
    if not bw_max > 0:
        raise ValueError("bw_max must be positive")
    bw = min(max(bw_app, 0.0), bw_max)
    # exact rational arithmetic so the floor never lands one page short
    spare = (Fraction(bw_max) - Fraction(bw)) / Fraction(bw_max)
    return max(1, math.floor(spare * bs_max))


def coldest_victims(table: PageTable, topk_mask: np.ndarray) -> np.ndarray:
    """Fast-resident pages outside top-k, coldest first (ties to lower id)."""
    pool = np.flatnonzero(table.fast & ~topk_mask)
    return pool[np.lexsort((pool, table.score[pool]))]


def plan_migrations(candidates: np.ndarray, table: PageTable, topk_mask: np.ndarray,
                    fast_capacity: int, dL: float, l_prom: float, l_dem: float,
                    batch: int) -> MigrationPlan:
    """Pair candidates (best first) with the coldest victims that pass the gate.

    While the fast tier has free space a candidate needs no partner and is
    gated on ``score * hot_age * dL > l_prom`` alone.
    """
    plan = MigrationPlan(batch_size=batch)
    victims = coldest_victims(table, topk_mask)
    vi = 0
    free = fast_capacity - table.fast_occupancy
    score, age = table.score, table.hot_age
    for p in np.asarray(candidates, dtype=np.int64).tolist():
        if len(plan.pairs) >= batch:
            break
        if free > 0:
            if score[p] * age[p] * dL > l_prom:
                plan.pairs.append((p, None))
                free -= 1
            continue
        if vi >= len(victims):
            break
        q = int(victims[vi])
        if (score[p] - score[q]) * age[p] * dL > l_prom + l_dem:
            plan.pairs.append((p, q))
            vi += 1
    return plan


def add_eager_demotions(plan: MigrationPlan, table: PageTable, topk_mask: np.ndarray,
                        waiting: int) -> None:
    """Use leftover batch slots to free space for top-k pages still in the slow tier."""
    budget = min(plan.batch_size - len(plan.pairs), waiting - len(plan.pairs))
    if budget <= 0:
        return
    used = {q for _, q in plan.pairs if q is not None}
    for q in coldest_victims(table, topk_mask).tolist():
        if budget <= 0:
            break
        if q not in used:
            plan.demote_only.append(q)
            budget -= 1


def modeled_latency(tiers: TierModel, bw_app: float, concurrent: int) -> float:
    """Per-migration latency when ``concurrent`` migrations share the spare bandwidth."""
    avail = max(_MIN_BW, tiers.bw_max_slow - max(bw_app, 0.0))
    return tiers.page_size / (avail / max(1, concurrent)) * NS_PER_S + tiers.migration_overhead_ns


def execute_plan(plan: MigrationPlan, table: PageTable, tiers: TierModel, interval: int,
                 bw_app: float = 0.0, estimates: LatencyEstimates | None = None,
                 identified_at=None, latency_ewma: float = 0.3,
                 cost_model: str = "amortized") -> list[MigrationRecord]:
    """Flip residency for every page in ``plan`` and log each migration.

    Demotions run before their paired promotion so occupancy never exceeds
    capacity. ``estimates`` (if given) is updated in place from this batch.
    ``identified_at`` maps a promoted page to the interval it first qualified.
    """
    n = len(plan.pairs) + sum(1 for _, q in plan.pairs if q is not None) + len(plan.demote_only)
    if n == 0:
        return []
    lat = modeled_latency(tiers, bw_app, n)
    records: list[MigrationRecord] = []

    def demote(q: int):
        if not table.fast[q]:
            raise MigrationError(f"demote of page {q} which is not fast-resident")
        table.fast[q] = False
        records.append(MigrationRecord(interval, q, DEMOTE, lat, interval))

    for q in plan.demote_only:
        demote(q)
    occupancy = table.fast_occupancy
    for p, q in plan.pairs:
        if q is not None:
            demote(q)
            occupancy -= 1
        if table.fast[p]:
            raise MigrationError(f"promote of page {p} which is already fast-resident")
        if occupancy >= tiers.fast_capacity_pages:
            raise MigrationError("promotion would exceed fast-tier capacity")
        table.fast[p] = True
        occupancy += 1
        ident = interval if identified_at is None else int(identified_at(p))
        records.append(MigrationRecord(interval, p, PROMOTE, lat, ident))

    if estimates is not None:
        sample = lat
        if cost_model == "amortized":
            sample = modeled_latency(tiers, bw_app, 1)
        if any(r.direction == PROMOTE for r in records):
            estimates.l_prom += latency_ewma * (sample - estimates.l_prom)
        if any(r.direction == DEMOTE for r in records):
            estimates.l_dem += latency_ewma * (sample - estimates.l_dem)
    return records
