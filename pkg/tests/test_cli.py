import json
import math

import numpy as np
import pytest

from zfkwave import asymptotics, verify
from zfkwave.cli import DEFAULTS, EXIT_COMPUTE, EXIT_OK, EXIT_USAGE, main
from zfkwave.csvio import read_csv


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def table(path):
    header, rows = read_csv(path)
    return header, [dict(zip(header, r)) for r in rows]


def test_speed_empty_list(tmp_path):
    assert run(tmp_path, "speed", "--eps", "") == EXIT_OK
    assert (tmp_path / "speed.csv").read_text() == "eps,cbar,cbar_linear,slope,gap_residual,iterations,error\n"


def test_speed_row(tmp_path, cbar):
    assert run(tmp_path, "speed", "--eps", "0.01") == EXIT_OK
    _, rows = table(tmp_path / "speed.csv")
    (row,) = rows
    assert float(row["cbar"]) == pytest.approx(1.00344, abs=5e-4)
    assert float(row["cbar"]) == pytest.approx(cbar(0.01), abs=1e-9)
    assert float(row["cbar_linear"]) == pytest.approx(1.0034405, abs=1e-7)
    assert abs(float(row["gap_residual"])) <= 1e-10
    assert row["error"] == ""


def test_speed_slope_column(tmp_path):
    assert run(tmp_path, "speed", "--eps", "0.02,0.01,0.005", "--jobs", "3") == EXIT_OK
    _, rows = table(tmp_path / "speed.csv")
    assert [r["eps"] for r in rows] == ["0.02", "0.01", "0.005"]
    eps = [float(r["eps"]) for r in rows]
    slopes = [float(r["slope"]) for r in rows]
    assert verify.richardson(eps, slopes) == pytest.approx(0.34405, abs=0.02)


def test_speed_jobs_match_serial(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["speed", "--eps", "0.05,0.02", "--out", str(a)]) == EXIT_OK
    assert main(["speed", "--eps", "0.05,0.02", "--jobs", "2", "--out", str(b)]) == EXIT_OK
    assert (a / "speed.csv").read_bytes() == (b / "speed.csv").read_bytes()


def test_speed_eps_out_of_range(tmp_path):
    assert run(tmp_path, "speed", "--eps", "0.2") == EXIT_USAGE
    assert run(tmp_path, "speed", "--eps", "0") == EXIT_USAGE


def test_expression_rejected(tmp_path):
    assert run(tmp_path, "profile", "--eps", "1/100") == EXIT_USAGE
    assert run(tmp_path, "profile", "--eps", "0.01", "--c", "3*0.5") == EXIT_USAGE


def test_no_connection_exit(tmp_path, capsys):
    assert run(tmp_path, "profile", "--eps", "0.01", "--c", "0.9") == EXIT_COMPUTE
    assert "NoConnectionError" in capsys.readouterr().err


def test_profile_segments(tmp_path):
    assert run(tmp_path / "fast", "profile", "--eps", "0.01", "--c", "1.5") == EXIT_OK
    header, rows = table(tmp_path / "fast" / "profile.csv")
    assert header == ["z", "theta", "eta", "segment"]
    assert {r["segment"] for r in rows} == {"inner", "fast", "slow"}
    assert run(tmp_path / "min", "profile", "--eps", "0.01") == EXIT_OK
    _, rows = table(tmp_path / "min" / "profile.csv")
    assert {r["segment"] for r in rows} == {"inner", "fast"}
    z = np.array([float(r["z"]) for r in rows])
    assert np.all(np.diff(z) > 0)


def _curve(path):
    _, rows = read_csv(path)
    a = np.array(rows, dtype=float)
    return a[:, 0], a[:, 1]


def test_portrait_stable_below_unstable(tmp_path):
    assert run(tmp_path, "portrait", "--eps", "0.01", "--c", "1.5") == EXIT_OK
    ts, es = _curve(tmp_path / "stable_manifold.csv")
    tu, eu = _curve(tmp_path / "unstable_manifold.csv")
    grid = np.linspace(max(ts.min(), tu.min()) + 1e-3, min(ts.max(), tu.max()) - 1e-3, 200)
    assert np.all(np.interp(grid, ts, es) < np.interp(grid, tu, eu))
    names = {p.name for p in tmp_path.iterdir()}
    assert {"separatrix.csv", "slow_manifold.csv", "field.csv", "manifest.json"} <= names
    field_header, field_rows = read_csv(tmp_path / "field.csv")
    assert field_header == ["theta", "eta", "dtheta", "deta"]
    assert max(float(r[0]) for r in field_rows) == 1.5


def test_portrait_at_minimal_speed(tmp_path):
    assert run(tmp_path, "portrait", "--eps", "0.01") == EXIT_OK
    ts, es = _curve(tmp_path / "stable_manifold.csv")
    tu, eu = _curve(tmp_path / "unstable_manifold.csv")
    grid = np.linspace(0.5, 0.9, 200)
    assert np.max(np.abs(np.interp(grid, ts, es) - np.interp(grid, tu, eu))) <= 1e-3


def test_portrait_singular_limit(tmp_path):
    assert run(tmp_path, "portrait", "--eps", "0", "--c", "1.0") == EXIT_OK
    theta, eta = _curve(tmp_path / "stable_manifold.csv")
    assert np.all(theta == 1.0)
    _, rows = read_csv(tmp_path / "separatrix.csv")
    assert eta == pytest.approx([float(r[1]) for r in rows])


def test_series_output(tmp_path, capsys):
    assert run(tmp_path, "series", "--c", "2", "--K", "3", "--eps", "0.05,0.02") == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "F1 = θ(1-θ)/2"
    assert all(line.split(" = ")[1].startswith("θ(1-θ)") for line in lines[:3])
    header, rows = read_csv(tmp_path / "series.csv")
    assert header == ["theta", "eps", "h", "last_term"]
    assert {r[1] for r in rows} == {"0.05", "0.02"}


def test_series_order_range(tmp_path):
    assert run(tmp_path, "series", "--K", "9") == EXIT_USAGE
    assert run(tmp_path, "series", "--K", "0") == EXIT_USAGE


def test_pde_requires_force(tmp_path):
    assert run(tmp_path, "pde", "--eps", "0.01") == EXIT_USAGE


def test_pde_command(tmp_path):
    assert run(tmp_path, "pde", "--eps", "0.05", "--N", "400", "--T", "2", "--snapshots", "100") == EXIT_OK
    header, rows = read_csv(tmp_path / "front.csv")
    assert header == ["t", "position"] and len(rows) == 200
    assert (tmp_path / "snapshot_0000.csv").is_file() and (tmp_path / "snapshot_0002.csv").is_file()


def test_manifest_and_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["profile", "--eps", "0.02", "--c", "1.2", "--out", str(a)]) == EXIT_OK
    manifest = json.loads((a / "manifest.json").read_text())
    assert manifest["command"] == "profile"
    assert set(manifest["parameters"]) == set(DEFAULTS)
    assert manifest["outputs"] == ["profile.csv"]
    assert {"version", "timestamp"} <= set(manifest)
    # rerun from the manifest into a fresh directory
    assert main(["profile", "--config", str(a / "manifest.json"), "--out", str(b)]) == EXIT_OK
    assert (a / "profile.csv").read_bytes() == (b / "profile.csv").read_bytes()
    assert b"\r" not in (a / "profile.csv").read_bytes()


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sweep\neps = 0.05\nK = 2\n")
    assert main(["series", "--config", str(cfg), "--K", "4", "--out", str(tmp_path / "o")]) == EXIT_OK
    params = json.loads((tmp_path / "o" / "manifest.json").read_text())["parameters"]
    assert params["K"] == 4 and params["eps"] == "0.05" and params["N"] == DEFAULTS["N"]


def test_config_errors(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("bogus = 1\n")
    assert run(tmp_path, "series", "--config", str(bad)) == EXIT_USAGE
    assert run(tmp_path, "series", "--config", str(tmp_path / "missing.cfg")) == EXIT_USAGE
    assert run(tmp_path, "speed", "--jobs", "0") == EXIT_USAGE


def test_unknown_command():
    with pytest.raises(SystemExit) as exc:
        main(["bogus"])
    assert exc.value.code == 2


def test_verify_mutation(monkeypatch):
    # a sign flip in the tail integral must fail the integral criterion and nothing else
    true = asymptotics.hs_tail_integral.__wrapped__

    def flipped(tolerance=1e-12):
        return 2.0 - true(tolerance)

    flipped.__wrapped__ = flipped
    monkeypatch.setattr(asymptotics, "hs_tail_integral", flipped)
    ctx = verify.Context()
    results = {n: verify.run_check(n, ctx) for n in (1, 5, 6, 7, 8, 9)}
    assert not results[1].passed
    assert math.isclose(float(results[1].measured.split("= ")[1]), -0.3440456821, abs_tol=1e-9)
    assert all(r.passed for n, r in results.items() if n != 1)
