"""Shared builders for the test suite."""
from __future__ import annotations

import functools
from dataclasses import replace

import numpy as np

from tiersim.config import ExperimentConfig, load
from tiersim.presets import preset_path
from tiersim.workloads import Trace, generate

# acceptance criterion id -> (passed, detail); printed after the run
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@functools.lru_cache(maxsize=None)
def preset_config(name: str) -> ExperimentConfig:
    return load(preset_path(name))


@functools.lru_cache(maxsize=1)
def preset_trace(name: str, seed: int = 1) -> Trace:
    return generate(replace(preset_config(name).workload, seed=seed))


def make_trace(pages, times=None, total_pages=None, duration_ns=None, writes=None) -> Trace:
    pages = np.asarray(pages, dtype=np.int64)
    if times is None:
        times = np.arange(len(pages), dtype=np.int64)
    times = np.asarray(times, dtype=np.int64)
    if writes is None:
        writes = np.zeros(len(pages), dtype=bool)
    if total_pages is None:
        total_pages = int(pages.max()) + 1 if len(pages) else 1
    if duration_ns is None:
        duration_ns = int(times[-1]) + 1 if len(times) else 1
    return Trace(times, pages, writes, total_pages, duration_ns)
