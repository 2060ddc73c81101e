"""Shipped experiment presets, one per access pattern the policies are compared on."""
from __future__ import annotations

from pathlib import Path

PRESETS = ("zipf_arms", "hotset_shift", "one_hit_wonder", "oscillating", "uniform", "mixed")

_HERE = Path(__file__).parent


def preset_path(name: str) -> Path:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r} (choose from {', '.join(PRESETS)})")
    return _HERE / f"{name}.cfg"


def resolve(path: str | Path) -> Path:
    """Return ``path`` if it exists, else the shipped preset it names.

    ``presets/zipf_arms.cfg``, ``zipf_arms.cfg`` and ``zipf_arms`` all find
    the bundled file when no such file exists locally.
    """
    p = Path(path)
    if p.exists():
        return p
    stem = p.name[:-4] if p.name.endswith(".cfg") else p.name
    if stem in PRESETS:
        return preset_path(stem)
    return p
