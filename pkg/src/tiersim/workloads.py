"""Deterministic synthetic access traces and the ``.mtrace`` file format.

Every workload is a time-varying distribution over pages. Events are placed on
a constant-rate clock (or a Poisson clock conditioned on the event count) and
each event's page is drawn from the distribution active at its timestamp.
"""
from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import NS_PER_S

KINDS = ("uniform", "zipfian", "hotset_shift", "one_hit_wonder", "oscillating", "mixed")

MAGIC = b"MTRC"
VERSION = 1
_HEADER = struct.Struct("<4sB3xIQQ")
RECORD_DTYPE = np.dtype([("time", "<i8"), ("page", "<u4"), ("flags", "u1")])
assert RECORD_DTYPE.itemsize == 13


class TraceFormatError(ValueError):
    pass


@dataclass(frozen=True)
class WorkloadSpec:
    """What to generate. Fields unused by ``kind`` are ignored.

    ``duration`` and the burst/shift times are in seconds; ``phase_length`` is
    in nanoseconds and is the unit of ``period_intervals``.
    """

    kind: str = "zipfian"
    total_pages: int = 32768
    duration: float = 40.0
    access_rate: float = 250_000.0
    write_fraction: float = 0.3
    seed: int = 1
    arrivals: str = "uniform"
    draw: str = "iid"
    frame: int = 500_000_000
    zipf_s: float = 0.99
    scramble: bool = True
    hot_fraction: float = 1 / 32
    hot_concentration: float = 0.9
    shift_times: tuple[float, ...] = ()
    burst_fraction: float = 0.5
    burst_interval: float = 2.0
    burst_duration: float = 0.05
    burst_pages: int = 64
    period_intervals: int = 4
    phase_length: int = 500_000_000
    page_fraction: float = 1 / 16
    osc_share: float = 0.4

    @property
    def n_events(self) -> int:
        return int(round(self.access_rate * self.duration))

    @property
    def duration_ns(self) -> int:
        return int(round(self.duration * NS_PER_S))

    def burst_starts(self) -> list[float]:
        if self.kind not in ("one_hit_wonder", "mixed"):
            return []
        starts = []
        b = 0
        while (b + 0.5) * self.burst_interval + self.burst_duration <= self.duration:
            starts.append((b + 0.5) * self.burst_interval)
            b += 1
        return starts

    def validate(self) -> list[str]:
        errs: list[str] = []
        if self.kind not in KINDS:
            errs.append(f"kind: unknown workload kind {self.kind!r}")
        if self.total_pages < 1:
            errs.append("total_pages: must be >= 1")
        if not self.duration > 0:
            errs.append("duration: must be positive")
        if not self.access_rate > 0:
            errs.append("access_rate: must be positive")
        if not 0.0 <= self.write_fraction < 1.0:
            errs.append("write_fraction: must be in [0, 1)")
        if self.arrivals not in ("uniform", "poisson"):
            errs.append(f"arrivals: must be 'uniform' or 'poisson', got {self.arrivals!r}")
        if self.draw not in ("iid", "stratified"):
            errs.append(f"draw: must be 'iid' or 'stratified', got {self.draw!r}")
        elif self.draw == "stratified" and self.kind not in ("uniform", "zipfian"):
            errs.append("draw: stratified draws only apply to stationary kinds (uniform, zipfian)")
        if self.frame < 1:
            errs.append("frame: must be >= 1 ns")
        if self.zipf_s < 0:
            errs.append("zipf_s: must be >= 0")
        if self.kind == "hotset_shift":
            for name in ("hot_fraction", "hot_concentration"):
                if not 0.0 < getattr(self, name) < 1.0:
                    errs.append(f"{name}: must be in (0, 1)")
            phases = len(self.shift_times) + 1
            if self.hot_fraction * phases > 1.0:
                errs.append("hot_fraction: disjoint hot sets for every phase do not fit in total_pages")
            if max(1, int(self.hot_fraction * self.total_pages)) < 1:
                errs.append("hot_fraction: hot set is empty")
        if self.kind in ("hotset_shift", "mixed"):
            if list(self.shift_times) != sorted(self.shift_times):
                errs.append("shift_times: must be increasing")
            if any(not 0 < t < self.duration for t in self.shift_times):
                errs.append("shift_times: must lie inside (0, duration)")
        if self.kind in ("one_hit_wonder", "mixed"):
            if not 0.0 < self.burst_fraction < 1.0:
                errs.append("burst_fraction: must be in (0, 1)")
            if not self.burst_interval > 0 or not self.burst_duration > 0:
                errs.append("burst_interval/burst_duration: must be positive")
            elif self.burst_duration > self.burst_interval:
                errs.append("burst_duration: must not exceed burst_interval")
            if self.burst_pages < 1:
                errs.append("burst_pages: must be >= 1")
            elif len(self.burst_starts()) * self.burst_pages >= self.total_pages:
                errs.append("burst_pages: burst pool does not fit in total_pages")
        if self.kind == "oscillating":
            if not 0.0 < self.page_fraction < 1.0:
                errs.append("page_fraction: must be in (0, 1)")
            if not 0.0 < self.osc_share < 1.0:
                errs.append("osc_share: must be in (0, 1)")
            if self.period_intervals < 1 or self.phase_length < 1:
                errs.append("period_intervals/phase_length: must be >= 1")
            if int(self.page_fraction * self.total_pages) < 2:
                errs.append("page_fraction: oscillating set needs at least 2 pages")
        return errs


@dataclass
class WorkloadLayout:
    """Which pages play which role; a pure function of the spec."""

    phase_starts_ns: list[int]
    phase_probs: list[np.ndarray]
    hot_sets: list[np.ndarray] = field(default_factory=list)
    burst_sets: list[np.ndarray] = field(default_factory=list)
    burst_starts_ns: list[int] = field(default_factory=list)
    osc_groups: list[np.ndarray] = field(default_factory=list)

    @property
    def burst_pages(self) -> np.ndarray:
        if not self.burst_sets:
            return np.empty(0, dtype=np.int64)
        return np.concatenate(self.burst_sets)


@dataclass
class Trace:
    times: np.ndarray
    pages: np.ndarray
    is_write: np.ndarray
    total_pages: int
    duration_ns: int

    def __post_init__(self):
        self.times = np.ascontiguousarray(self.times, dtype=np.int64)
        self.pages = np.ascontiguousarray(self.pages, dtype=np.int64)
        self.is_write = np.ascontiguousarray(self.is_write, dtype=bool)
        if not (len(self.times) == len(self.pages) == len(self.is_write)):
            raise ValueError("trace columns differ in length")

    def __len__(self) -> int:
        return len(self.times)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Trace):
            return NotImplemented
        return (self.total_pages == other.total_pages
                and self.duration_ns == other.duration_ns
                and np.array_equal(self.times, other.times)
                and np.array_equal(self.pages, other.pages)
                and np.array_equal(self.is_write, other.is_write))

    @classmethod
    def empty(cls, total_pages: int = 1, duration_ns: int = 0) -> "Trace":
        z = np.empty(0, dtype=np.int64)
        return cls(z, z, np.empty(0, dtype=bool), total_pages, duration_ns)


def zipf_pmf(n: int, s: float) -> np.ndarray:
    """Normalized zipf mass over ranks 1..n."""
    w = np.arange(1, n + 1, dtype=np.float64) ** -s
    return w / w.sum()


def _mixture(total: int, pages: np.ndarray, share: float, base: np.ndarray) -> np.ndarray:
    p = base * (1.0 - share)
    p[pages] += share / len(pages)
    return p


def build_layout(spec: WorkloadSpec, rng: np.random.Generator | None = None) -> WorkloadLayout:
    errs = spec.validate()
    if errs:
        raise ValueError("invalid workload spec: " + "; ".join(errs))
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    n = spec.total_pages
    perm = rng.permutation(n) if spec.scramble else np.arange(n)

    def zipf_over(support: np.ndarray, order: np.ndarray) -> np.ndarray:
        p = np.zeros(n)
        p[support[order]] = zipf_pmf(len(support), spec.zipf_s)
        return p

    if spec.kind == "uniform":
        return WorkloadLayout([0], [np.full(n, 1.0 / n)])

    if spec.kind == "zipfian":
        return WorkloadLayout([0], [zipf_over(perm, np.arange(n))])

    if spec.kind == "hotset_shift":
        h = max(1, int(spec.hot_fraction * n))
        starts = [0] + [int(round(t * NS_PER_S)) for t in spec.shift_times]
        hot_sets = [np.sort(perm[i * h:(i + 1) * h]) for i in range(len(starts))]
        base = np.full(n, 1.0 / n)
        probs = [_mixture(n, hs, spec.hot_concentration, base) for hs in hot_sets]
        return WorkloadLayout(starts, probs, hot_sets=hot_sets)

    if spec.kind in ("one_hit_wonder", "mixed"):
        bstarts = spec.burst_starts()
        pool = len(bstarts) * spec.burst_pages
        burst_sets = [np.sort(perm[n - pool + i * spec.burst_pages: n - pool + (i + 1) * spec.burst_pages])
                      for i in range(len(bstarts))]
        background = perm[: n - pool]
        starts = [0]
        probs = [zipf_over(background, np.arange(len(background)))]
        if spec.kind == "mixed":
            for t in spec.shift_times:
                starts.append(int(round(t * NS_PER_S)))
                probs.append(zipf_over(background, rng.permutation(len(background))))
        return WorkloadLayout(starts, probs, burst_sets=burst_sets,
                              burst_starts_ns=[int(round(t * NS_PER_S)) for t in bstarts])

    # oscillating: two equal groups in anti-phase over a zipf background
    m = int(spec.page_fraction * n)
    osc = perm[:m]
    groups = [np.sort(osc[: m // 2]), np.sort(osc[m // 2: 2 * (m // 2)])]
    background = perm[m:]
    return WorkloadLayout([0], [zipf_over(background, np.arange(len(background)))], osc_groups=groups)


def _arrival_times(spec: WorkloadSpec, count: int, rng: np.random.Generator) -> np.ndarray:
    dur = spec.duration_ns
    if spec.arrivals == "poisson":
        return np.sort(rng.integers(0, dur, size=count, dtype=np.int64))
    step = NS_PER_S / spec.access_rate
    return np.floor(np.arange(count, dtype=np.float64) * step).astype(np.int64)


def _draw_iid(probs: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    idx = np.searchsorted(cdf, rng.random(count), side="right")
    return np.minimum(idx, len(probs) - 1)


def apportion(probs: np.ndarray, count: int) -> np.ndarray:
    """Largest-remainder integer counts summing to ``count``; ties go to lower index."""
    quota = probs * count
    base = np.floor(quota).astype(np.int64)
    short = count - int(base.sum())
    if short > 0:
        frac = quota - base
        order = np.lexsort((np.arange(len(probs)), -frac))
        base[order[:short]] += 1
    return base


def _draw_stratified(probs: np.ndarray, times: np.ndarray, frame: int,
                     rng: np.random.Generator) -> np.ndarray:
    out = np.empty(len(times), dtype=np.int64)
    if len(times) == 0:
        return out
    edges = np.arange(0, int(times[-1]) + frame + 1, frame)
    bounds = np.searchsorted(times, edges, side="left")
    ids = np.arange(len(probs))
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        if hi <= lo:
            continue
        chunk = np.repeat(ids, apportion(probs, int(hi - lo)))
        rng.shuffle(chunk)
        out[lo:hi] = chunk
    return out


def generate(spec: WorkloadSpec) -> Trace:
    errs = spec.validate()
    if errs:
        raise ValueError("invalid workload spec: " + "; ".join(errs))
    rng = np.random.default_rng(spec.seed)
    lay = build_layout(spec, rng)
    count = spec.n_events
    times = _arrival_times(spec, count, rng)
    pages = np.empty(count, dtype=np.int64)

    bounds = list(np.searchsorted(times, lay.phase_starts_ns, side="left")) + [count]
    for probs, lo, hi in zip(lay.phase_probs, bounds[:-1], bounds[1:]):
        if spec.draw == "stratified":
            pages[lo:hi] = _draw_stratified(probs, times[lo:hi] - lay.phase_starts_ns[0], spec.frame, rng)
        else:
            pages[lo:hi] = _draw_iid(probs, int(hi - lo), rng)

    burst_len = int(round(spec.burst_duration * NS_PER_S))
    for bset, start in zip(lay.burst_sets, lay.burst_starts_ns):
        lo, hi = np.searchsorted(times, [start, start + burst_len], side="left")
        hit = np.flatnonzero(rng.random(hi - lo) < spec.burst_fraction) + lo
        pages[hit] = bset[rng.integers(0, len(bset), size=len(hit))]

    if lay.osc_groups:
        half = spec.period_intervals * spec.phase_length
        on = (times // half) % 2
        hit = rng.random(count) < spec.osc_share
        for g, group in enumerate(lay.osc_groups):
            sel = np.flatnonzero(hit & (on == g))
            pages[sel] = group[rng.integers(0, len(group), size=len(sel))]

    is_write = rng.random(count) < spec.write_fraction
    return Trace(times, pages, is_write, spec.total_pages, spec.duration_ns)


def write_trace(trace: Trace, path: str | Path) -> None:
    rec = np.empty(len(trace), dtype=RECORD_DTYPE)
    rec["time"] = trace.times
    rec["page"] = trace.pages
    rec["flags"] = trace.is_write
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, trace.total_pages, trace.duration_ns, len(trace)))
        fh.write(rec.tobytes())


def check_monotone(times: np.ndarray) -> None:
    bad = np.flatnonzero(np.diff(times) < 0)
    if len(bad):
        raise TraceFormatError(f"non-monotone timestamp at record {int(bad[0]) + 1}")


def read_trace(path: str | Path) -> Trace:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise TraceFormatError("truncated header")
    magic, version, total, dur, count = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise TraceFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise TraceFormatError(f"unsupported trace version {version}")
    body = data[_HEADER.size:]
    if len(body) != count * RECORD_DTYPE.itemsize:
        raise TraceFormatError(f"expected {count} records, file holds {len(body) / RECORD_DTYPE.itemsize:g}")
    rec = np.frombuffer(body, dtype=RECORD_DTYPE)
    if np.any(rec["flags"] > 1):
        raise TraceFormatError(f"malformed flags at record {int(np.argmax(rec['flags'] > 1))}")
    if np.any(rec["page"] >= total):
        raise TraceFormatError(f"page out of range at record {int(np.argmax(rec['page'] >= total))}")
    check_monotone(rec["time"])
    return Trace(rec["time"].copy(), rec["page"].astype(np.int64), rec["flags"].astype(bool), total, dur)


def export_csv(trace: Trace, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time_ns", "page", "is_write"])
        for t, p, wr in zip(trace.times.tolist(), trace.pages.tolist(), trace.is_write.tolist()):
            w.writerow([t, p, int(wr)])


def read_csv_trace(path: str | Path, total_pages: int | None = None,
                   duration_ns: int | None = None) -> Trace:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    times = np.array([int(r["time_ns"]) for r in rows], dtype=np.int64)
    pages = np.array([int(r["page"]) for r in rows], dtype=np.int64)
    writes = np.array([r["is_write"] not in ("0", "false", "False") for r in rows], dtype=bool)
    check_monotone(times)
    if total_pages is None:
        total_pages = int(pages.max()) + 1 if len(pages) else 1
    if duration_ns is None:
        duration_ns = int(times[-1]) + 1 if len(times) else 0
    return Trace(times, pages, writes, total_pages, duration_ns)


def hot_share_by_phase(trace: Trace, layout: WorkloadLayout) -> list[float]:
    """Fraction of each phase's accesses that land in that phase's hot set."""
    bounds = list(np.searchsorted(trace.times, layout.phase_starts_ns, side="left")) + [len(trace)]
    out = []
    for hs, lo, hi in zip(layout.hot_sets, bounds[:-1], bounds[1:]):
        seg = trace.pages[lo:hi]
        out.append(float(np.isin(seg, hs).mean()) if len(seg) else math.nan)
    return out
