import csv
import json

import pytest

from tiersim.cli import EXIT_CONFIG, EXIT_IO, OUTPUT_FILES, main, read_sweep_csv
from tiersim.simulator import read_migrations_csv, read_timeline_csv
from tiersim.workloads import read_csv_trace

# a few seconds of a small zipfian workload keeps each invocation quick
SMALL = ["--workload.total_pages", "4096", "--workload.duration", "4", "--workload.access_rate", "50000",
         "--run.warmup_intervals", "0", "--tiers.fast_capacity_pages", "256"]


def _run(tmp_path, *extra, out="out"):
    return main(["run", "--config", "zipf_arms", "--out-dir", str(tmp_path / out), *SMALL, *extra])


def test_run_writes_three_files(tmp_path, capsys):
    assert _run(tmp_path) == 0
    out = tmp_path / "out"
    assert sorted(p.name for p in out.iterdir()) == sorted(OUTPUT_FILES)
    summary = json.loads((out / "summary.json").read_text())
    assert summary["engine"] == "arms"
    assert read_timeline_csv(out / "timeline.csv")
    read_migrations_csv(out / "migrations.csv")
    assert "wrote" in capsys.readouterr().out


def test_unknown_engine_exits_2(tmp_path, capsys):
    assert _run(tmp_path, "--engine", "lru") == EXIT_CONFIG
    assert "engine" in capsys.readouterr().err


def test_bad_override_exits_2(tmp_path, capsys):
    assert _run(tmp_path, "--arms.alpha_x", "1") == EXIT_CONFIG
    assert "alpha_x" in capsys.readouterr().err


def test_missing_config_exits_3(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "absent.cfg"), "--out-dir", str(tmp_path)]) == EXIT_IO


def test_same_seed_same_bytes(tmp_path):
    assert _run(tmp_path, "--seed", "7", out="a") == 0
    assert _run(tmp_path, "--seed", "7", out="b") == 0
    for name in OUTPUT_FILES:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_existing_outputs_need_overwrite(tmp_path):
    assert _run(tmp_path) == 0
    before = (tmp_path / "out" / "migrations.csv").read_bytes()
    assert _run(tmp_path) == EXIT_IO
    assert _run(tmp_path, "--overwrite") == 0
    assert (tmp_path / "out" / "migrations.csv").read_bytes() == before


def test_out_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("TIERSIM_OUT", str(tmp_path / "env"))
    assert main(["run", "--config", "zipf_arms", *SMALL]) == 0
    assert (tmp_path / "env" / "summary.json").exists()


def test_export_csv_round_trips(tmp_path):
    assert _run(tmp_path, "--export-csv", "--workload.duration", "1") == 0
    rows = read_csv_trace(tmp_path / "out" / "trace.csv", 4096, 10**9)
    assert len(rows) == 50_000


def test_sparkline_flag(tmp_path, capsys):
    assert _run(tmp_path, "--sparkline") == 0
    assert "slow-tier bandwidth" in capsys.readouterr().out


def test_compare_three_engines(tmp_path, capsys):
    path = tmp_path / "cmp.csv"
    rc = main(["compare", "--config", "hotset_shift", *SMALL, "--workload.duration", "6",
               "--workload.shift_times", "3.0", "arms", "static", "oracle", "--output", str(path)])
    assert rc == 0
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["engine"] for r in rows] == ["arms", "static", "oracle"]
    hits = {r["engine"]: float(r["fast_hit_fraction"]) for r in rows}
    assert hits["oracle"] == max(hits.values())
    assert "norm" in capsys.readouterr().out


def test_compare_single_engine_normalizes_to_one(capsys):
    assert main(["compare", "--config", "zipf_arms", *SMALL, "static"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    head, row = lines[0].split(), lines[1].split()
    norms = [row[i] for i, h in enumerate(head) if h == "norm"]
    assert norms and all(v in ("1.000", "n/a") for v in norms)
    assert "1.000" in norms


def test_compare_needs_engines(capsys):
    assert main(["compare", "--config", "zipf_arms"]) == EXIT_CONFIG


def test_compare_rejects_unknown_engine(capsys):
    assert main(["compare", "--config", "zipf_arms", "arms", "bogus"]) == EXIT_CONFIG
    assert "bogus" in capsys.readouterr().err


def test_sweep_three_by_three(tmp_path, capsys):
    rc = main(["sweep", "--config", "zipf_arms", *SMALL, "--values1", "2,4,8", "--values2", "18,144,1152",
               "--out-dir", str(tmp_path)])
    assert rc == 0
    rows = read_sweep_csv(tmp_path / "sweep.csv")
    assert len(rows) == 9
    assert [(a, b) for a, b, _, _ in rows] == [(a, b) for a in (2, 4, 8) for b in (18, 144, 1152)]
    header = (tmp_path / "sweep.csv").read_text().splitlines()[0]
    assert header == "hot_threshold,cooling_threshold,amat,fast_hit_fraction"
    best = min(rows, key=lambda r: r[2])
    assert f"argmin: hot_threshold={best[0]} cooling_threshold={best[1]}" in capsys.readouterr().out


def test_single_point_sweep_matches_run(tmp_path):
    assert main(["sweep", "--config", "zipf_arms", *SMALL, "--values1", "4", "--values2", "144",
                 "--out-dir", str(tmp_path / "s")]) == 0
    assert _run(tmp_path, "--engine", "static", "--static.hot_threshold", "4",
                "--static.cooling_threshold", "144", out="r") == 0
    [(_, _, amat, frac)] = read_sweep_csv(tmp_path / "s" / "sweep.csv")
    summary = json.loads((tmp_path / "r" / "summary.json").read_text())
    assert amat == summary["amat_ns"] and frac == summary["fast_hit_fraction"]


def test_sweep_parallel_matches_serial(tmp_path):
    args = ["sweep", "--config", "zipf_arms", *SMALL, "--values1", "2,8", "--values2", "18,1152"]
    assert main(args + ["--out-dir", str(tmp_path / "a")]) == 0
    assert main(args + ["--out-dir", str(tmp_path / "b"), "--jobs", "2"]) == 0
    assert (tmp_path / "a" / "sweep.csv").read_bytes() == (tmp_path / "b" / "sweep.csv").read_bytes()


def test_presets_listed(capsys):
    assert main(["presets"]) == 0
    assert "zipf_arms" in capsys.readouterr().out.split()


@pytest.mark.parametrize("argv", [["run", "--config", "zipf_arms", "stray"], ["run", "--config", "zipf_arms",
                                                                              "--arms.alpha_s"]])
def test_malformed_overrides_exit_2(argv):
    assert main(argv) == EXIT_CONFIG
