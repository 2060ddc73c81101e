"""Experiment configuration files.

An experiment file is INI text with one section per component::

    [workload]
    kind = zipfian
    total_pages = 32768

    [arms]
    policy_interval_history = 500ms

Every key must name a field of the section's dataclass; unknown sections and
keys are errors. Omitted keys keep their defaults. Durations accept ``ns``,
``us``, ``ms`` and ``s`` suffixes (bare numbers are nanoseconds), tuples are
comma-separated and ``none`` clears an optional value.
"""
from __future__ import annotations

import configparser
import io
import types
import typing
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from .core import EngineConfig, StaticConfig, TierModel, TwoAccessConfig, parse_duration_ns, validate_config
from .simulator import RunConfig
from .workloads import WorkloadSpec

DURATION_FIELDS = frozenset({
    "policy_interval_history", "policy_interval_recency", "migration_period", "frame", "phase_length",
})


class ConfigError(ValueError):
    """A config file or override could not be parsed."""


@dataclass(frozen=True)
class SweepConfig:
    """Grid for the static baseline's knob sweep."""

    knob1: str = "hot_threshold"
    knob2: str = "cooling_threshold"
    values1: tuple[int, ...] = (2, 4, 8, 16, 32)
    values2: tuple[int, ...] = (18, 144, 1152, 9216, 73728)


@dataclass(frozen=True)
class ExperimentConfig:
    workload: WorkloadSpec = field(default_factory=WorkloadSpec)
    tiers: TierModel = field(default_factory=TierModel)
    arms: EngineConfig = field(default_factory=EngineConfig)
    static: StaticConfig = field(default_factory=StaticConfig)
    two_access: TwoAccessConfig = field(default_factory=TwoAccessConfig)
    run: RunConfig = field(default_factory=RunConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)


SECTIONS: dict[str, type] = {f.name: f.default_factory().__class__ for f in fields(ExperimentConfig)}


def _hints(cls: type) -> dict[str, Any]:
    return typing.get_type_hints(cls)


def _is_optional(tp) -> tuple[bool, Any]:
    args = typing.get_args(tp)
    if (typing.get_origin(tp) in (typing.Union, types.UnionType)) and type(None) in args:
        rest = [a for a in args if a is not type(None)]
        return True, rest[0]
    return False, tp


def _coerce(name: str, tp, text: str):
    optional, tp = _is_optional(tp)
    raw = text.strip()
    if optional and raw.lower() in ("none", ""):
        return None
    if typing.get_origin(tp) is tuple:
        (elem, *_rest) = typing.get_args(tp)
        parts = [p for p in (s.strip() for s in raw.split(",")) if p]
        return tuple(_coerce(name, elem, p) for p in parts)
    if tp is bool:
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if tp is int:
        if name in DURATION_FIELDS:
            return parse_duration_ns(raw)
        return int(raw)
    if tp is float:
        return float(raw)
    return raw


def _format(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _build(section: str, items: dict[str, str], base):
    cls = type(base)
    hints = _hints(cls)
    changes = {}
    for key, text in items.items():
        if key not in hints:
            raise ConfigError(f"{section}.{key}: unknown key")
        try:
            changes[key] = _coerce(key, hints[key], text)
        except ValueError as exc:
            raise ConfigError(f"{section}.{key}: {exc}") from None
    return replace(base, **changes)


def loads(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0]) from None
    cfg = base or ExperimentConfig()
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"[{section}]: unknown section (expected one of {', '.join(SECTIONS)})")
        built = _build(section, dict(parser.items(section)), getattr(cfg, section))
        cfg = replace(cfg, **{section: built})
    return cfg


def dumps(cfg: ExperimentConfig) -> str:
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
    parser.optionxform = str
    for section in SECTIONS:
        obj = getattr(cfg, section)
        parser[section] = {f.name: _format(getattr(obj, f.name)) for f in fields(obj)}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def load(path: str | Path) -> ExperimentConfig:
    return loads(Path(path).read_text())


def key_index() -> dict[str, list[str]]:
    """Map each bare key to the sections that define it."""
    out: dict[str, list[str]] = {}
    for section, cls in SECTIONS.items():
        for f in fields(cls):
            out.setdefault(f.name, []).append(section)
    return out


def apply_overrides(cfg: ExperimentConfig, overrides: list[tuple[str, str]]) -> ExperimentConfig:
    """Apply ``(key, value)`` pairs where key is ``section.key`` or an unambiguous bare key.

    ``seed`` is special: a bare ``seed`` sets both the workload and run seeds.
    """
    index = key_index()
    for key, value in overrides:
        if "." in key:
            section, name = key.split(".", 1)
            if section not in SECTIONS:
                raise ConfigError(f"{key}: unknown section {section!r}")
            targets = [(section, name)]
        elif key == "seed":
            targets = [("workload", "seed"), ("run", "seed")]
        else:
            owners = index.get(key)
            if not owners:
                raise ConfigError(f"{key}: unknown key")
            if len(owners) > 1:
                raise ConfigError(f"{key}: ambiguous, use one of "
                                  + ", ".join(f"{s}.{key}" for s in owners))
            targets = [(owners[0], key)]
        for section, name in targets:
            built = _build(section, {name: value}, getattr(cfg, section))
            cfg = replace(cfg, **{section: built})
    return cfg


def validate_experiment(cfg: ExperimentConfig) -> list[str]:
    """All violations across sections, each prefixed with its section."""
    tier_fields = {f.name for f in fields(TierModel)}
    errs = [f"{'tiers' if m.split(':', 1)[0] in tier_fields else 'arms'}.{m}"
            for m in validate_config(cfg.arms, cfg.tiers)]
    errs += [f"workload.{m}" for m in cfg.workload.validate()]
    errs += [f"run.{m}" for m in cfg.run.validate()]
    st = cfg.static
    if st.hot_threshold < 1:
        errs.append("static.hot_threshold: must be >= 1")
    if st.cooling_threshold < st.hot_threshold:
        errs.append("static.cooling_threshold: must be >= hot_threshold")
    if st.migration_period < 1:
        errs.append("static.migration_period: must be >= 1")
    if st.sample_period is not None and st.sample_period < 1:
        errs.append("static.sample_period: must be >= 1")
    ta = cfg.two_access
    if not 0.0 < ta.watermark <= 1.0:
        errs.append("two_access.watermark: must be in (0, 1]")
    if ta.sample_period is not None and ta.sample_period < 1:
        errs.append("two_access.sample_period: must be >= 1")
    sw = cfg.sweep
    for knob in (sw.knob1, sw.knob2):
        if knob not in {f.name for f in fields(StaticConfig)}:
            errs.append(f"sweep.knob: {knob!r} is not a static knob")
    if sw.knob1 == sw.knob2:
        errs.append("sweep.knob2: must differ from knob1")
    if not sw.values1 or not sw.values2:
        errs.append("sweep.values: each knob needs at least one value")
    if cfg.workload.total_pages > cfg.tiers.fast_capacity_pages + cfg.tiers.slow_capacity_pages:
        errs.append("workload.total_pages: exceeds combined tier capacity")
    return errs
