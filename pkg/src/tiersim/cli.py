"""Command-line front end.

Subcommands:

``run``      one simulation; writes summary.json, timeline.csv, migrations.csv
``compare``  several engines on one trace, normalized to the first engine
``sweep``    the static baseline over a two-knob grid
``presets``  list the bundled experiment presets

Any config field can be overridden with ``--section.key value`` or, when the
key name is unique across sections, ``--key value``.

Exit codes: 0 success, 2 invalid configuration or usage, 3 I/O failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from pathlib import Path

from . import config as cfgmod
from .engines import ENGINES
from .experiment import best_cell, build_trace, run_engine, sweep
from .presets import PRESETS, resolve
from .simulator import _atomic_write, format_summary, write_outputs
from .workloads import export_csv

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3
OUTPUT_FILES = ("summary.json", "timeline.csv", "migrations.csv")
SPARK = " ▁▂▃▄▅▆▇█"


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def sparkline(values, width: int = 60) -> str:
    """Bucket ``values`` into ``width`` columns (max per bucket) and draw them."""
    vals = list(values)
    if not vals:
        return ""
    buckets = min(width, len(vals))
    cols = []
    for b in range(buckets):
        lo, hi = b * len(vals) // buckets, (b + 1) * len(vals) // buckets
        cols.append(max(vals[lo:hi]))
    top = max(cols)
    if top <= 0:
        return SPARK[0] * len(cols)
    return "".join(SPARK[min(len(SPARK) - 1, math.ceil(v / top * (len(SPARK) - 1)))] for v in cols)


# flags the parser owns; any other --name is a config override
OWN_FLAGS = frozenset({"help", "config", "seed", "out-dir", "overwrite", "engine", "export-csv", "sparkline",
                       "output", "knob1", "values1", "knob2", "values2", "jobs"})


def _split_overrides(argv: list[str]) -> tuple[list[str], list[tuple[str, str]]]:
    """Pull ``--section.key value`` pairs out of ``argv`` before argparse sees it.

    Doing this up front keeps override values from being taken as positional
    arguments (the engine list of ``compare``).
    """
    rest, out = [], []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok == "--":
            rest += argv[i:]
            break
        name = tok[2:].split("=", 1)[0]
        if not tok.startswith("--") or not name or name in OWN_FLAGS:
            rest.append(tok)
            i += 1
            continue
        if "=" in tok:
            value = tok.split("=", 1)[1]
            i += 1
        else:
            if i + 1 >= len(argv):
                raise CliError(EXIT_CONFIG, f"--{name}: missing value")
            value = argv[i + 1]
            i += 2
        out.append((name.replace("-", "_"), value))
    return rest, out


def load_config(path: str, overrides: list[tuple[str, str]]) -> cfgmod.ExperimentConfig:
    p = resolve(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read config {path}: {exc.strerror or exc}") from None
    try:
        cfg = cfgmod.apply_overrides(cfgmod.loads(text), overrides)
    except cfgmod.ConfigError as exc:
        raise CliError(EXIT_CONFIG, f"invalid config: {exc}") from None
    errs = cfgmod.validate_experiment(cfg)
    if errs:
        raise CliError(EXIT_CONFIG, "invalid config:\n" + "\n".join(f"  {e}" for e in errs))
    return cfg


def _out_dir(arg: str | None) -> Path:
    return Path(arg or os.environ.get("TIERSIM_OUT") or "out")


def _check_clobber(out: Path, names, overwrite: bool) -> None:
    if overwrite:
        return
    existing = [n for n in names if (out / n).exists()]
    if existing:
        raise CliError(EXIT_IO, f"{out}: {', '.join(existing)} already exist (use --overwrite)")


def cmd_run(args, overrides) -> int:
    if args.engine:
        overrides = overrides + [("run.engine", args.engine)]
    if args.seed is not None:
        overrides = overrides + [("seed", str(args.seed))]
    cfg = load_config(args.config, overrides)
    out = _out_dir(args.out_dir)
    names = list(OUTPUT_FILES) + (["trace.csv"] if args.export_csv else [])
    _check_clobber(out, names, args.overwrite)

    trace = build_trace(cfg)
    report = run_engine(cfg, trace)
    try:
        write_outputs(report, out)
        if args.export_csv:
            export_csv(trace, out / "trace.csv")
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write outputs to {out}: {exc.strerror or exc}") from None
    print(format_summary(report))
    if args.sparkline:
        print(f"slow-tier bandwidth  {sparkline(r.bw_slow for r in report.timeline)}")
    print(f"wrote {', '.join(names)} to {out}")
    return EXIT_OK


def _ratio(a, b) -> str:
    if a is None or b is None:
        return "n/a"
    if b == 0:
        return "1.000" if a == 0 else "inf"
    return f"{a / b:.3f}"


COMPARE_FIELDS = ["engine", "amat_ns", "fast_hit_fraction", "promotions", "wasteful_migrations",
                  "delay_mean_ms", "delay_median_ms", "delay_p90_ms"]


def compare_rows(reports) -> list[dict]:
    rows = []
    for rep in reports:
        d = rep.promotion_delay
        rows.append({
            "engine": rep.engine,
            "amat_ns": rep.amat_ns,
            "fast_hit_fraction": rep.fast_hit_fraction,
            "promotions": rep.promotions,
            "wasteful_migrations": rep.wasteful_migrations,
            "delay_mean_ms": None if d.mean_ns is None else d.mean_ns / 1e6,
            "delay_median_ms": None if d.median_ns is None else d.median_ns / 1e6,
            "delay_p90_ms": None if d.p90_ns is None else d.p90_ns / 1e6,
        })
    return rows


def format_compare(rows: list[dict]) -> str:
    base = rows[0]
    head = ["engine"] + [h for f in COMPARE_FIELDS[1:] for h in (f, "norm")]
    table = [head]
    for r in rows:
        line = [r["engine"]]
        for f in COMPARE_FIELDS[1:]:
            v = r[f]
            if v is None:
                line.append("n/a")
            elif isinstance(v, float):
                line.append(f"{v:.4f}" if f == "fast_hit_fraction" else f"{v:.2f}")
            else:
                line.append(str(v))
            line.append(_ratio(v, base[f]))
        table.append(line)
    widths = [max(len(row[i]) for row in table) for i in range(len(head))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in table)


def cmd_compare(args, overrides) -> int:
    if not args.engines:
        raise CliError(EXIT_CONFIG, "compare: list at least one engine")
    if args.seed is not None:
        overrides = overrides + [("seed", str(args.seed))]
    unknown = [e for e in args.engines if e not in ENGINES]
    if unknown:
        raise CliError(EXIT_CONFIG, f"invalid config:\n  engine: unknown engine {unknown[0]!r} "
                                    f"(choose from {', '.join(ENGINES)})")
    cfg = load_config(args.config, overrides)
    trace = build_trace(cfg)
    rows = compare_rows([run_engine(cfg, trace, engine=e) for e in args.engines])
    print(format_compare(rows))
    if args.output:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=COMPARE_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerows({k: ("" if v is None else v) for k, v in r.items()} for r in rows)
        try:
            _atomic_write(Path(args.output), buf.getvalue())
        except OSError as exc:
            raise CliError(EXIT_IO, f"cannot write {args.output}: {exc.strerror or exc}") from None
    return EXIT_OK


def sweep_csv(cfg: cfgmod.ExperimentConfig, cells) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([cfg.sweep.knob1, cfg.sweep.knob2, "amat", "fast_hit_fraction"])
    for c in cells:
        w.writerow([c.knob1, c.knob2, repr(float(c.amat)), repr(float(c.fast_hit_fraction))])
    return buf.getvalue()


def read_sweep_csv(path) -> list[tuple[int, int, float, float]]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        next(r)
        return [(int(a), int(b), float(c), float(d)) for a, b, c, d in r]


def cmd_sweep(args, overrides) -> int:
    if args.seed is not None:
        overrides = overrides + [("seed", str(args.seed))]
    for flag, key in ((args.knob1, "sweep.knob1"), (args.knob2, "sweep.knob2"),
                      (args.values1, "sweep.values1"), (args.values2, "sweep.values2")):
        if flag is not None:
            overrides = overrides + [(key, flag)]
    cfg = load_config(args.config, overrides)
    out = _out_dir(args.out_dir)
    _check_clobber(out, ["sweep.csv"], args.overwrite)
    cells = sweep(cfg, jobs=args.jobs)
    try:
        out.mkdir(parents=True, exist_ok=True)
        _atomic_write(out / "sweep.csv", sweep_csv(cfg, cells))
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {out / 'sweep.csv'}: {exc.strerror or exc}") from None
    sys.stdout.write(sweep_csv(cfg, cells))
    b = best_cell(cells)
    print(f"argmin: {cfg.sweep.knob1}={b.knob1} {cfg.sweep.knob2}={b.knob2} amat={b.amat:.2f}")
    return EXIT_OK


def cmd_presets(args, overrides) -> int:
    if overrides:
        raise CliError(EXIT_CONFIG, "presets takes no overrides")
    for name in PRESETS:
        print(name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tiersim", description="Trace-driven tiered-memory policy simulator.",
                                epilog="Override any config field with --section.key VALUE or --key VALUE.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("--config", required=True, help="experiment file or bundled preset name")
        sp.add_argument("--seed", type=int, help="sets both the workload and run seeds")
        if out:
            sp.add_argument("--out-dir", help="output directory (default: $TIERSIM_OUT or ./out)")
            sp.add_argument("--overwrite", action="store_true", help="replace existing output files")

    r = sub.add_parser("run", help="simulate one engine on one workload")
    common(r)
    r.add_argument("--engine", help="arms, static, two_access or oracle")
    r.add_argument("--export-csv", action="store_true", help="also write the trace as trace.csv")
    r.add_argument("--sparkline", action="store_true", help="print a slow-tier bandwidth sparkline")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="run several engines on the same trace")
    common(c, out=False)
    c.add_argument("engines", nargs="*", help="engines to compare; the first is the reference")
    c.add_argument("--output", help="also write the table as CSV")
    c.set_defaults(func=cmd_compare)

    s = sub.add_parser("sweep", help="grid-search the static baseline's knobs")
    common(s)
    s.add_argument("--knob1")
    s.add_argument("--values1", help="comma-separated values")
    s.add_argument("--knob2")
    s.add_argument("--values2", help="comma-separated values")
    s.add_argument("--jobs", type=int, default=1, help="worker processes")
    s.set_defaults(func=cmd_sweep)

    lp = sub.add_parser("presets", help="list bundled presets")
    lp.set_defaults(func=cmd_presets)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        argv, overrides = _split_overrides(argv)
        args, extra = parser.parse_known_args(argv)
        if extra:
            raise CliError(EXIT_CONFIG, f"unexpected argument {extra[0]!r}")
        return args.func(args, overrides)
    except CliError as exc:
        print(f"tiersim: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
