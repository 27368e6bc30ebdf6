import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from fkdv.cli import main
from fkdv.sweep import SweepConfig, boundary_deviation, run_sweep, SweepRecord
from fkdv.errors import DomainError


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def test_wave_bifurcation_point(tmp_path):
    assert main(["wave", "--alpha", "2", "--p", "1", "--a", "0", "--b", "0", "--out", str(tmp_path)]) == 0
    d = json.loads((tmp_path / "wave.json").read_text())
    assert d["k_alpha"] == 1.0
    rows = read_csv(tmp_path / "profile.csv")
    assert len(rows) == 256
    assert all(float(r["P"]) == pytest.approx(1.0, abs=1e-14) for r in rows)


def test_wave_second_mode(tmp_path):
    main(["wave", "--alpha", "2", "--p", "1", "--a", "0.05", "--out", str(tmp_path)])
    d = json.loads((tmp_path / "wave.json").read_text())
    m2 = next(m for m in d["modes"] if m["n"] == 2)
    assert m2["re"] == pytest.approx(0.05 ** 2 / 12, rel=0.01)
    assert d["residual"] <= 1e-10


def test_invalid_alpha_subprocess(tmp_path):
    r = subprocess.run([sys.executable, "-m", "fkdv.cli", "wave", "--alpha", "0.4", "--p", "1",
                        "--a", "0", "--out", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 2
    assert "alpha must exceed 1/2" in r.stderr


def test_out_of_range_amplitude_is_solver_failure(tmp_path, capsys):
    assert main(["wave", "--alpha", "2", "--p", "1", "--a", "0.5", "--out", str(tmp_path)]) == 2


@pytest.mark.parametrize("alpha,p,expect", [(2, 1, "stable"), (0.8, 1, "unstable")])
def test_stability_outputs(tmp_path, alpha, p, expect):
    assert main(["stability", "--alpha", str(alpha), "--p", str(p), "--a", "0.05",
                 "--xi-count", "16", "--out", str(tmp_path)]) == 0
    v = json.loads((tmp_path / "verdict.json").read_text())
    assert v["verdict"] == expect
    for k in ("alpha", "p", "a", "b", "k_alpha", "growth_rate", "worst_xi", "verdict",
              "gamma_sign", "p_star_at_alpha", "runtime_ms"):
        assert k in v
    rows = read_csv(tmp_path / "spectrum.csv")
    zero = np.array([complex(float(r["re"]), float(r["im"])) for r in rows if float(r["xi"]) == 0.0])
    assert zero.size == 65
    assert np.sort(np.abs(zero))[:3].max() <= 1e-7


def test_diagram_small_grid(tmp_path):
    out = tmp_path / "d"
    assert main(["diagram", "--alpha-range", "1.5,5,6", "--p-range", "1,2.6,5", "--n-modes", "16",
                 "--xi-count", "16", "--out", str(out)]) == 0
    pstar = {float(r["alpha"]): float(r["p_star"]) for r in read_csv(out / "pstar.csv")}
    assert pstar[2.0] == 2.0
    region = read_csv(out / "region.csv")
    assert len(region) == 30
    svg = (out / "diagram.svg").read_text()
    assert svg.startswith("<svg") and "polyline" in svg and svg.count("<rect") >= 30


def test_region_examples():
    cfg = SweepConfig(alpha_range=(3, 5, 2), p_range=(2, 2, 1), xi_count=16, truncation=16)
    recs = {r.alpha: r.verdict for r in run_sweep(cfg)}
    assert recs[3.0] == "stable" and recs[5.0] == "unstable"


def test_sweep_deterministic_and_thread_independent():
    base = dict(alpha_range=(1.2, 3.0, 3), p_range=(1.0, 2.5, 3), xi_count=8, truncation=16)
    strip = lambda recs: sorted((r.alpha, r.p, r.a, r.verdict, r.growth_rate, r.worst_xi, r.k_alpha)
                                for r in recs)
    a = strip(run_sweep(SweepConfig(threads=1, **base)))
    b = strip(run_sweep(SweepConfig(threads=8, **base)))
    c = strip(run_sweep(SweepConfig(threads=1, **base)))
    assert a == b == c


def test_diagram_csv_bodies_repeatable(tmp_path):
    args = ["diagram", "--alpha-range", "1.5,3,3", "--p-range", "1,2.5,3", "--n-modes", "12",
            "--xi-count", "8"]
    main(args + ["--out", str(tmp_path / "a"), "--threads", "1"])
    main(args + ["--out", str(tmp_path / "b"), "--threads", "8"])
    for name in ("pstar.csv", "region.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_env_thread_fallback(tmp_path, monkeypatch):
    from fkdv import cli
    monkeypatch.setenv("FKDV_NUM_THREADS", "3")
    args = cli.build_parser().parse_args(["stability", "--alpha", "2", "--p", "1"])
    assert cli._threads(args) == 3
    args = cli.build_parser().parse_args(["stability", "--alpha", "2", "--p", "1", "--threads", "5"])
    assert cli._threads(args) == 5


def test_validate_routing(tmp_path):
    assert main(["validate", "--suite", "oracle", "--n-periods", "3", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "validate.json").read_text())
    assert list(rep) == ["oracle"]
    assert [r["n_periods"] for r in rep["oracle"]["results"]] == [3]


def test_validate_expansions_orders(tmp_path):
    assert main(["validate", "--suite", "expansions", "--alpha", "2", "--p", "2",
                 "--out", str(tmp_path)]) == 0
    r = json.loads((tmp_path / "validate.json").read_text())["expansions"]["results"][0]
    assert r["profile_order"] >= 2.9


def test_validate_default_passes(tmp_path):
    assert main(["validate", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "validate.json").read_text())
    assert set(rep) == {"expansions", "oracle", "symmetry", "discriminant"}
    assert all(v["passed"] for v in rep.values())


def test_validate_failure_exit_code(tmp_path):
    # the fitted a^2 coefficient at the Benjamin-Ono borderline cannot match Gamma = 0
    assert main(["validate", "--suite", "discriminant", "--alpha", "1", "--p", "1",
                 "--out", str(tmp_path)]) == 3


def test_config_invariants():
    with pytest.raises(DomainError):
        SweepConfig(truncation=4)
    with pytest.raises(DomainError):
        SweepConfig(alpha_range=(2, 1, 3))
    with pytest.raises(DomainError):
        SweepConfig(amplitudes=[])


def test_boundary_deviation_measure():
    rec = lambda al, p, v: SweepRecord(al, p, 0.05, 0, 1, 0, 0, v, 0, 0, 0)
    ps = np.linspace(1, 3, 5)
    good = [rec(2.0, 1.5, "stable"), rec(2.0, 2.5, "unstable"), rec(0.8, 1.0, "unstable")]
    assert boundary_deviation(good, [2.0], ps)["max_cells"] == 0
    bad = [rec(2.0, 3.0, "stable")]
    assert boundary_deviation(bad, [2.0], ps)["max_cells"] == pytest.approx(2.0)
