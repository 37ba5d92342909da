import csv
import json
import shutil
from pathlib import Path

import pytest

from kleinscat.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(tmp_path, cmd, cfg, name="cfg.json", out="out", extra=()):
    (tmp_path / "groups").exists() or shutil.copytree(CONFIGS / "groups", tmp_path / "groups")
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    code = main([cmd, "--config", str(path), "--out", str(tmp_path / out), *extra])
    return code, tmp_path / out


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# config_hash=")
    return list(csv.DictReader(lines[1:]))


def test_group_build(tmp_path):
    code, out = run(tmp_path, "group-build", {"group": "groups/rank2.json"})
    assert code == 0
    d = json.loads((out / "group.json").read_text())
    assert len(d["circles"]) == 4 and d["rank"] == 2
    assert d["loxodromic"] and all(g["class"] == "loxodromic" for g in d["generators"])


@pytest.mark.parametrize("group", ["groups/tangent.json", "groups/empty.json", "groups/missing.json"])
def test_group_build_rejects(tmp_path, group, capsys):
    code, _ = run(tmp_path, "group-build", {"group": group})
    assert code == 2
    if "tangent" in group:
        assert "parabolic" in capsys.readouterr().err


def test_fsigma_monotone(tmp_path):
    code, out = run(tmp_path, "fsigma", {"fsigma": {"sigma": 1.0, "range": [1, 8], "n": 15}})
    assert code == 0
    vals = [float(r["f_sigma"]) for r in read_csv(out / "fsigma.csv")]
    assert vals[0] == 0 and all(b > a for a, b in zip(vals, vals[1:]))


def test_bounds_window(tmp_path):
    code, out = run(tmp_path, "bounds", {"bounds": {"K": 2, "D": 1}})
    d = json.loads((out / "bounds.json").read_text())
    assert code == 0
    assert d["lower"] == pytest.approx(0.4, abs=1e-15)
    assert d["upper"] == pytest.approx(4 / 3, abs=1e-15)
    assert "0.40000000000000002" in (out / "bounds.json").read_text()


def test_limit_rank1(tmp_path):
    code, out = run(tmp_path, "limit", {"group": "groups/rank1.json", "limit": {"word_len": 4}})
    assert code == 0
    d = json.loads((out / "dimension.json").read_text())
    assert d["dimension"] < 0.05
    assert len(read_csv(out / "limit_points.csv")) == 2


def sweep_cfg(values, **kw):
    cfg = {"group": "groups/rank1.json", "s": 3.0, "grid": 10, "max_len": 8,
           "sweep": {"family": "linear-beltrami", "values": values}}
    cfg.update(kw)
    return cfg


def test_sweep_identity_row(tmp_path):
    code, out = run(tmp_path, "srel-sweep", sweep_cfg([0.0]))
    rows = read_csv(out / "srel_sweep.csv")
    assert code == 0 and len(rows) == 1
    assert float(rows[0]["norm"]) < 1e-6


def test_sweep_monotone_and_sorted(tmp_path):
    code, out = run(tmp_path, "srel-sweep", sweep_cfg([0.2, 0.0, 0.1]), extra=("--threads", "3"))
    rows = read_csv(out / "srel_sweep.csv")
    assert [float(r["param"]) for r in rows] == [0.0, 0.1, 0.2]
    norms = [float(r["norm"]) for r in rows]
    assert code == 0 and norms[0] <= norms[1] <= norms[2]


def test_sweep_partial_failure(tmp_path):
    code, out = run(tmp_path, "srel-sweep", sweep_cfg([0.0, 1.5]))
    rows = read_csv(out / "srel_sweep.csv")
    assert code == 1
    assert rows[0]["status"] == "ok" and rows[1]["status"].startswith("error")


def test_sweep_regime_gate(tmp_path):
    code, _ = run(tmp_path, "srel-sweep", sweep_cfg([0.0], s=[1.0, 2.0]))
    assert code == 2


def test_kernel_export(tmp_path):
    code, out = run(tmp_path, "kernel", {"group": "groups/rank1.json", "grid": 6, "max_len": 6})
    assert code == 0
    side = json.loads((out / "kernel.json").read_text())
    assert side["shape"] == [36, 36] and side["provenance"] == "direct"
    assert (out / "kernel.bin").stat().st_size == 36 * 36 * 16
    assert "config_hash" in side["meta"]


def test_probe(tmp_path):
    cfg = {"group": "groups/rank1.json",
           "probe": {"sigma": 1.0, "a": [0.1], "diffeo": {"family": "linear-beltrami", "mu": [0.2, 0.0]}}}
    code, out = run(tmp_path, "probe", cfg)
    row = json.loads((out / "probe.json").read_text())["rows"][0]
    assert code == 0 and row["pairing"] >= row["lower_bound"] > 0


def test_determinism_and_hash(tmp_path):
    cfg = sweep_cfg([0.0, 0.1])
    _, a = run(tmp_path, "srel-sweep", cfg, out="a")
    _, b = run(tmp_path, "srel-sweep", cfg, out="b", extra=("--threads", "2"))
    assert (a / "srel_sweep.csv").read_bytes() == (b / "srel_sweep.csv").read_bytes()
    _, c = run(tmp_path, "srel-sweep", cfg, out="c", extra=("--seed", "7"))
    h = lambda p: p.read_text().splitlines()[0]
    assert h(a / "srel_sweep.csv") != h(c / "srel_sweep.csv")


def test_report_collects(tmp_path):
    run(tmp_path, "bounds", {"bounds": {"K": 2, "D": 1}})
    run(tmp_path, "fsigma", {"fsigma": {"lambdas": [1, 2]}}, name="f.json")
    code, out = run(tmp_path, "report", {}, name="r.json")
    rep = json.loads((out / "report.json").read_text())
    assert code == 0 and set(rep["outputs"]) == {"bounds.json", "fsigma.csv"}
    # every output embeds a config hash
    assert "config_hash" in rep["outputs"]["bounds.json"]


def test_missing_config(tmp_path):
    assert main(["bounds", "--config", str(tmp_path / "nope.json")]) == 2
