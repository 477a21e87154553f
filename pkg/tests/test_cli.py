import csv
import json
import subprocess
import sys
import textwrap

import numpy as np
import pytest

from rotsym.cli import main
from rotsym.config import ConfigError, ExperimentConfig, load_config


def write(tmp_path, text, name="exp.ini"):
    p = tmp_path / name
    p.write_text(textwrap.dedent(text))
    return p


def read_csv(path):
    lines = path.read_text().splitlines()
    meta = {}
    body = []
    for line in lines:
        if line.startswith("# "):
            k, _, v = line[2:].partition(": ")
            meta[k] = v
        else:
            body.append(line)
    rows = list(csv.DictReader(body))
    return meta, rows


HYPERBOLIC_SOLVE = """
    [profile]
    kind = hyperbolic
    alpha = 1.0

    [run]
    n = 3

    [grid]
    r_max = 20
    num_points = 199

    [time]
    T = 0.5
    snapshots_per_unit = 8

    [solve]
    export_r_stride = 10
"""


def test_config_round_trip():
    cfg = ExperimentConfig({"kind": "odd_polynomial", "coeffs": [1.0, 0.5]}, 4, blocks={"grid": {"r_max": 20}})
    again = ExperimentConfig.from_text(cfg.to_text())
    assert again == cfg and again.digest == cfg.digest
    assert again.build_profile().to_dict() == {"kind": "odd_polynomial", "coeffs": [1.0, 0.5]}
    assert again.get_float("grid", "r_max") == 20.0


def test_config_rejections(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig({"kind": "euclidean"}, 2)
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text("[profile]\nkind = euclidean\n[run]\nn = 3\ncolour = red\n")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text("[run]\nn = 3\n")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.ini")
    cfg = ExperimentConfig.from_text("[profile]\nkind = euclidean\n[run]\nn = 3\n[grid]\nr_max = ten\n")
    with pytest.raises(ConfigError):
        cfg.get_float("grid", "r_max")
    with pytest.raises(ConfigError):
        cfg.get_int("grid", "num_points")


def test_describe_hyperbolic(tmp_path, capsys):
    cfg = write(tmp_path, """
        [profile]
        kind = hyperbolic

        [run]
        n = 3

        [describe]
        radii = 1.0, 2.0
    """)
    out = tmp_path / "d.csv"
    assert main(["describe", "--config", str(cfg), "--output", str(out)]) == 0
    assert "regime: exponential" in capsys.readouterr().out
    meta, rows = read_csv(out)
    assert meta["regime"] == "exponential"
    assert float(meta["regime_alpha"]) == pytest.approx(1.0, abs=5e-3)
    for row in rows:
        assert float(row["sec_rad"]) == pytest.approx(-1.0, rel=1e-12)
        assert float(row["sec_tan"]) == pytest.approx(-1.0, rel=1e-12)
        assert float(row["Q"]) == pytest.approx(1.0, rel=1e-12)


def test_describe_polynomial(tmp_path, capsys):
    cfg = write(tmp_path, """
        [profile]
        kind = odd_polynomial
        coeffs = 1.0

        [run]
        n = 3
    """)
    out = tmp_path / "d.csv"
    assert main(["describe", "--config", str(cfg), "--output", str(out)]) == 0
    meta, rows = read_csv(out)
    assert meta["regime"] == "polynomial"
    assert float(meta["regime_N"]) == pytest.approx(7.0, abs=0.02)
    assert len(rows) == 7


@pytest.mark.parametrize("profile, theorem, code", [
    ("kind = odd_polynomial\ncoeffs = 1.0", "poly", 0),
    ("kind = hyperbolic", "exp", 0),
    ("kind = euclidean", "exp", 1),
    ("kind = custom\nphi = r\ndphi = 1 + 0*r\nd2phi = 0*r", "poly", 2),
])
def test_check_exit_codes(tmp_path, profile, theorem, code):
    cfg = write(tmp_path, f"[profile]\n{profile}\n[run]\nn = 3\n[check]\ntheorem = {theorem}\n")
    out = tmp_path / "check.json"
    assert main(["check", "--config", str(cfg), "--output", str(out)]) == code
    if code != 2:
        doc = json.loads(out.read_text())
        assert doc["passed"] is (code == 0) and doc["theorem"] == theorem
        assert doc["config_sha256"] == load_config(cfg).digest


def test_missing_config_is_input_error(tmp_path):
    assert main(["check", "--config", str(tmp_path / "nope.ini")]) == 2


def test_solve_is_deterministic(tmp_path):
    cfg = write(tmp_path, HYPERBOLIC_SOLVE)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["solve", "--config", str(cfg), "--output", str(a)]) == 0
    assert main(["solve", "--config", str(cfg), "--output", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    meta, rows = read_csv(a)
    assert meta["representation"] == "U_on_M" and meta["boundary_flagged"] == "false"
    mass = np.array([float(r["mass"]) for r in rows])
    assert np.ptp(mass) / mass[0] <= 1e-10
    assert len({r["t"] for r in rows}) == 5


def test_solve_nls_block(tmp_path):
    cfg = write(tmp_path, HYPERBOLIC_SOLVE + "\n[nls]\npower = 1\nsign = defocusing\n")
    out = tmp_path / "nls.csv"
    assert main(["solve", "--config", str(cfg), "--output", str(out)]) == 0
    _, rows = read_csv(out)
    mass = np.array([float(r["mass"]) for r in rows])
    assert np.ptp(mass) / mass[0] <= 1e-8


def test_solve_bad_grid(tmp_path):
    cfg = write(tmp_path, HYPERBOLIC_SOLVE.replace("num_points = 199", "num_points = 1"))
    assert main(["solve", "--config", str(cfg), "--output", str(tmp_path / "x.csv")]) == 2


def test_norms_single_run(tmp_path):
    cfg = write(tmp_path, """
        [profile]
        kind = euclidean

        [run]
        n = 3

        [grid]
        r_max = 40
        num_points = 399

        [time]
        T = 1
        snapshots_per_unit = 64

        [norms]
        pairs = inf:2, 2:6
    """)
    out = tmp_path / "n.csv"
    assert main(["norms", "--config", str(cfg), "--output", str(out)]) == 0
    _, rows = read_csv(out)
    assert [r["p"] for r in rows] == ["inf", "2.0"]
    assert float(rows[0]["quotient"]) == pytest.approx(1.0, rel=1e-8)


def test_norms_rejects_non_admissible_pair(tmp_path):
    cfg = write(tmp_path, "[profile]\nkind = euclidean\n[run]\nn = 3\n[norms]\npairs = 3:6\n")
    assert main(["norms", "--config", str(cfg), "--output", str(tmp_path / "x.csv")]) == 2


def test_resolvent_scaled_bounded(tmp_path):
    cfg = write(tmp_path, """
        [profile]
        kind = hyperbolic

        [run]
        n = 3

        [grid]
        r_max = 500
        num_points = 4999

        [resolvent]
        c0 = 1.0
        lambda_count = 8
    """)
    out = tmp_path / "r.csv"
    assert main(["resolvent", "--config", str(cfg), "--output", str(out)]) == 0
    meta, rows = read_csv(out)
    scaled = np.array([float(r["scaled"]) for r in rows])
    assert len(rows) == 24 and all(r["converged"] == "true" for r in rows)
    assert scaled.max() / scaled.min() <= 10
    assert meta["blowup_lambdas"] == "none" and float(meta["smallest_eigenvalue"]) > 0


def test_scatter_runs(tmp_path):
    cfg = write(tmp_path, """
        [profile]
        kind = hyperbolic

        [run]
        n = 3

        [grid]
        r_max = 40
        num_points = 399

        [time]
        T = 2
        snapshots_per_unit = 4

        [data]
        amplitude = 0.3

        [nls]
        power = 1
    """)
    out = tmp_path / "s.csv"
    assert main(["scatter", "--config", str(cfg), "--output", str(out)]) == 0
    meta, rows = read_csv(out)
    assert meta["power_window"] == "(0, 4)"
    res = [float(r["residual"]) for r in rows]
    assert res[-1] == 0.0 and res[0] > 0


def test_console_entry_point(tmp_path):
    cfg = write(tmp_path, "[profile]\nkind = euclidean\n[run]\nn = 3\n[describe]\nradii = 1\n")
    proc = subprocess.run([sys.executable, "-m", "rotsym.cli", "describe", "--config", str(cfg), "--output", "-"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert "# rotsym describe" in proc.stdout
