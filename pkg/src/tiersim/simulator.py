"""Virtual-time driver: slices a trace into policy intervals and scores placement."""
from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .core import NS_PER_S, TierModel
from .engines import Engine, IntervalContext
from .migration import DEMOTE, PROMOTE, MigrationRecord
from .workloads import Trace

PLACEMENTS = ("first_touch", "slow")

TIMELINE_FIELDS = ["interval", "time_ns", "bw_slow", "mode", "fast_occupancy", "promotions",
                   "demotions", "length_ns", "accesses", "fast_hits", "pht_g", "pht_mean"]
MIGRATION_FIELDS = ["interval", "page", "direction", "latency_ns", "identified_at"]


@dataclass(frozen=True)
class RunConfig:
    engine: str = "arms"
    seed: int = 1
    initial_placement: str = "first_touch"
    # real memory references represented by one trace event
    event_weight: float = 250.0
    warmup_intervals: int = 0

    def validate(self) -> list[str]:
        from .engines import ENGINES

        errs = []
        if self.engine not in ENGINES:
            errs.append(f"engine: unknown engine {self.engine!r} (choose from {', '.join(ENGINES)})")
        if self.initial_placement not in PLACEMENTS:
            errs.append(f"initial_placement: must be one of {', '.join(PLACEMENTS)}")
        if not self.event_weight > 0:
            errs.append("event_weight: must be positive")
        if self.warmup_intervals < 0:
            errs.append("warmup_intervals: must be >= 0")
        return errs


@dataclass
class TimelineRow:
    interval: int
    time_ns: int
    bw_slow: float
    mode: str
    fast_occupancy: int
    promotions: int
    demotions: int
    length_ns: int
    accesses: int
    fast_hits: int
    pht_g: float = 0.0
    pht_mean: float = 0.0


@dataclass
class DelayStats:
    count: int
    mean_ns: float | None
    median_ns: float | None
    p90_ns: float | None


@dataclass
class MetricsReport:
    engine: str
    total_accesses: int
    fast_hits: int
    slow_hits: int
    fast_hit_fraction: float
    amat_ns: float
    promotions: int
    demotions: int
    wasteful_promotions: int
    wasteful_migrations: int
    promotion_delay: DelayStats
    migration_cost_ns: float
    intervals: int
    warmup_intervals: int
    fast_hit_fraction_after_warmup: float
    timeline: list[TimelineRow] = field(default_factory=list)
    migrations: list[MigrationRecord] = field(default_factory=list)
    final_fast: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    def summary(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k not in ("timeline", "migrations", "final_fast")}
        out["promotion_delay"] = asdict(self.promotion_delay)
        return out

    def hit_fraction_after(self, warmup: int) -> float:
        return hit_fraction_after(self.timeline, warmup)


def hit_fraction_after(timeline: list[TimelineRow], warmup: int) -> float:
    rows = [r for r in timeline if r.interval >= warmup]
    total = sum(r.accesses for r in rows)
    return sum(r.fast_hits for r in rows) / total if total else math.nan


def _consecutive_flips(log: list[MigrationRecord], window: int) -> tuple[int, int]:
    last: dict[int, MigrationRecord] = {}
    wasted_prom = wasted_dem = 0
    for rec in log:
        prev = last.get(rec.page)
        if prev is not None and prev.direction != rec.direction \
                and rec.interval - prev.interval <= window:
            if prev.direction == PROMOTE:
                wasted_prom += 1
            else:
                wasted_dem += 1
        last[rec.page] = rec
    return wasted_prom, wasted_dem


def wasteful_count(log: list[MigrationRecord], window: int = 10) -> int:
    """Promotions undone by a demotion (or demotions undone by a promotion) within ``window`` intervals."""
    p, d = _consecutive_flips(log, window)
    return p + d


def wasteful_promotions(log: list[MigrationRecord], window: int = 10) -> int:
    return _consecutive_flips(log, window)[0]


def promotion_delay(log: list[MigrationRecord], interval_ns: int | None = None,
                    interval_starts: list[int] | np.ndarray | None = None) -> DelayStats:
    """Delay from identification to promotion, in ns.

    With ``interval_starts`` (start time of each interval) the delay is the
    exact virtual time between the two intervals; otherwise intervals are
    assumed to be ``interval_ns`` long.
    """
    proms = [r for r in log if r.direction == PROMOTE]
    if not proms:
        return DelayStats(0, None, None, None)
    if interval_starts is not None:
        starts = np.asarray(interval_starts, dtype=np.int64)
        delays = np.array([starts[r.interval] - starts[r.identified_at] for r in proms], dtype=np.float64)
    else:
        if interval_ns is None:
            raise ValueError("need interval_ns or interval_starts")
        delays = np.array([(r.interval - r.identified_at) * interval_ns for r in proms], dtype=np.float64)
    return DelayStats(len(delays), float(delays.mean()), float(np.median(delays)),
                      float(np.percentile(delays, 90)))


def initial_placement(trace: Trace, capacity: int, how: str = "first_touch") -> np.ndarray:
    mask = np.zeros(trace.total_pages, dtype=bool)
    if how == "slow" or len(trace) == 0:
        return mask
    if how != "first_touch":
        raise ValueError(f"initial_placement: unknown placement {how!r}")
    uniq, first = np.unique(trace.pages, return_index=True)
    mask[uniq[np.argsort(first, kind="stable")][:capacity]] = True
    return mask


def run(trace: Trace, engine: Engine, tiers: TierModel, cfg: RunConfig | None = None,
        wasteful_window: int = 10) -> MetricsReport:
    cfg = cfg or RunConfig()
    if len(trace) and int(trace.pages.max()) >= trace.total_pages:
        raise ValueError(f"trace references page {int(trace.pages.max())} >= total_pages {trace.total_pages}")
    if engine.total_pages != trace.total_pages:
        raise ValueError("engine and trace disagree on total_pages")
    if trace.total_pages > tiers.fast_capacity_pages + tiers.slow_capacity_pages:
        raise ValueError("trace footprint exceeds combined tier capacity")

    engine.reset(initial_placement(trace, tiers.fast_capacity_pages, cfg.initial_placement))
    times, pages, writes = trace.times, trace.pages, trace.is_write
    end = max(trace.duration_ns, int(times[-1]) + 1 if len(times) else 0)
    bytes_per_event = cfg.event_weight * tiers.access_size

    timeline: list[TimelineRow] = []
    log: list[MigrationRecord] = []
    fast_hits = 0
    migration_cost = 0.0
    t, i, lo = 0, 0, 0
    while t < end:
        length = engine.interval_ns
        hi = int(np.searchsorted(times, t + length, side="left"))
        ev_pages = pages[lo:hi]
        if engine.needs_lookahead:
            engine.lookahead(ev_pages)
        hits = int(np.count_nonzero(engine.fast_mask[ev_pages]))
        slow = len(ev_pages) - hits
        bw_slow = slow * bytes_per_event / (length / NS_PER_S)
        res = engine.tick(IntervalContext(i, t, length, ev_pages, writes[lo:hi], bw_slow, times[lo:hi]))
        if res.fast_hits is not None:
            hits = res.fast_hits
            bw_slow = (len(ev_pages) - hits) * bytes_per_event / (length / NS_PER_S)
        occupancy = int(np.count_nonzero(engine.fast_mask))
        if occupancy > tiers.fast_capacity_pages:
            raise RuntimeError(f"{engine.name}: fast tier over capacity at interval {i}")
        proms = sum(r.direction == PROMOTE for r in res.records)
        migration_cost += sum(r.observed_latency for r in res.records)
        log.extend(res.records)
        timeline.append(TimelineRow(i, t, bw_slow, res.mode, occupancy, proms, len(res.records) - proms,
                                    length, len(ev_pages), hits, res.telemetry.get("pht_g", 0.0),
                                    res.telemetry.get("pht_mean", 0.0)))
        fast_hits += hits
        lo, t, i = hi, t + length, i + 1

    total = len(trace)
    slow_hits = total - fast_hits
    frac = fast_hits / total if total else 0.0
    amat = (fast_hits * tiers.latency_fast + slow_hits * tiers.latency_slow) / total if total else 0.0
    starts = [row.time_ns for row in timeline]
    return MetricsReport(
        engine=engine.name,
        total_accesses=total,
        fast_hits=fast_hits,
        slow_hits=slow_hits,
        fast_hit_fraction=frac,
        amat_ns=amat,
        promotions=sum(r.direction == PROMOTE for r in log),
        demotions=sum(r.direction == DEMOTE for r in log),
        wasteful_promotions=wasteful_promotions(log, wasteful_window),
        wasteful_migrations=wasteful_count(log, wasteful_window),
        promotion_delay=promotion_delay(log, interval_starts=starts),
        migration_cost_ns=migration_cost,
        intervals=len(timeline),
        warmup_intervals=cfg.warmup_intervals,
        fast_hit_fraction_after_warmup=hit_fraction_after(timeline, cfg.warmup_intervals),
        timeline=timeline,
        migrations=log,
        final_fast=np.flatnonzero(engine.fast_mask),
    )


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _csv_text(header: list[str], rows) -> str:
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def summary_json(report: MetricsReport) -> str:
    return json.dumps(report.summary(), indent=2, sort_keys=True) + "\n"


def write_outputs(report: MetricsReport, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "summary.json", out / "timeline.csv", out / "migrations.csv"]
    _atomic_write(paths[0], summary_json(report))
    _atomic_write(paths[1], _csv_text(TIMELINE_FIELDS, (
        [r.interval, r.time_ns, repr(float(r.bw_slow)), r.mode, r.fast_occupancy, r.promotions,
         r.demotions, r.length_ns, r.accesses, r.fast_hits, repr(float(r.pht_g)), repr(float(r.pht_mean))]
        for r in report.timeline)))
    _atomic_write(paths[2], _csv_text(MIGRATION_FIELDS, (
        [r.interval, r.page, r.direction, repr(float(r.observed_latency)), r.identified_at]
        for r in report.migrations)))
    return paths


def read_timeline_csv(path: str | Path) -> list[TimelineRow]:
    with open(path, newline="") as fh:
        return [TimelineRow(int(r["interval"]), int(r["time_ns"]), float(r["bw_slow"]), r["mode"],
                            int(r["fast_occupancy"]), int(r["promotions"]), int(r["demotions"]),
                            int(r["length_ns"]), int(r["accesses"]), int(r["fast_hits"]),
                            float(r["pht_g"]), float(r["pht_mean"]))
                for r in csv.DictReader(fh)]


def read_migrations_csv(path: str | Path) -> list[MigrationRecord]:
    with open(path, newline="") as fh:
        return [MigrationRecord(int(r["interval"]), int(r["page"]), r["direction"],
                                float(r["latency_ns"]), int(r["identified_at"]))
                for r in csv.DictReader(fh)]


def format_summary(report: MetricsReport) -> str:
    d = report.promotion_delay

    def ms(v):
        return "n/a" if v is None else f"{v / 1e6:.1f} ms"

    lines = [
        f"engine               {report.engine}",
        f"accesses             {report.total_accesses}",
        f"fast hit fraction    {report.fast_hit_fraction:.4f}",
        f"  after warmup ({report.warmup_intervals:>3})  {report.fast_hit_fraction_after_warmup:.4f}",
        f"AMAT                 {report.amat_ns:.2f} ns",
        f"promotions/demotions {report.promotions}/{report.demotions}",
        f"wasteful migrations  {report.wasteful_migrations} ({report.wasteful_promotions} promotions)",
        f"promotion delay      mean {ms(d.mean_ns)}, median {ms(d.median_ns)}, p90 {ms(d.p90_ns)}",
        f"migration time       {report.migration_cost_ns / 1e9:.3f} s",
        f"policy intervals     {report.intervals}",
    ]
    return "\n".join(lines)
