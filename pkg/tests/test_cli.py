import json
import subprocess
import sys

import numpy as np
import pytest

from anisonl.cli import emit_plotdata, load_config, main, run, ConfigError


def write_config(tmp_path, obj, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def test_constants_run_isotropic(tmp_path):
    cfg = write_config(tmp_path, {
        "command": "constants",
        "profile": {"n": 2, "sigma": [1.0, 1.0]},
    })
    out = str(tmp_path / "out")
    code = main(["--config", cfg, "--out", out])
    assert code == 0
    results = json.loads((tmp_path / "out" / "results.json").read_text())
    assert results["c_sigma"] == pytest.approx(1.0 / 3.0)
    assert results["passed"] is True
    assert "digest" in results and "seed" in results
    csv_text = (tmp_path / "out" / "data.csv").read_text()
    assert csv_text.startswith("index,sigma,q")


def test_malformed_config_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["--config", str(bad)]) == 2
    cfg = write_config(tmp_path, {"command": "nope",
                                  "profile": {"n": 1, "sigma": [1.0]}})
    assert main(["--config", cfg, "--out", str(tmp_path / "o2")]) == 2
    cfg2 = write_config(tmp_path, {"command": "constants",
                                   "profile": {"n": 1, "sigma": [2.5]}},
                        name="c2.json")
    assert main(["--config", cfg2, "--out", str(tmp_path / "o3")]) == 2


def test_schema_violation_reports_machine_readable(tmp_path):
    cfg = write_config(tmp_path, {"profile": {"n": 1, "sigma": [1.0]}})
    with pytest.raises(ConfigError) as err:
        load_config(cfg)
    detail = json.loads(str(err.value))
    assert detail["error"] == "config schema violation"


def test_rerun_reproduces_identical_bytes(tmp_path):
    cfg = write_config(tmp_path, {
        "command": "cz",
        "profile": {"n": 2, "sigma": [1.0, 1.0]},
        "seed": 5,
        "params": {"generation": 4, "delta": 0.5},
    })
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    assert main(["--config", cfg, "--out", out1]) == 0
    assert main(["--config", cfg, "--out", out2]) == 0
    for name in ("data.csv", "results.json"):
        b1 = (tmp_path / "a" / name).read_bytes()
        b2 = (tmp_path / "b" / name).read_bytes()
        assert b1 == b2


def test_seed_override_changes_digest_not_schema(tmp_path):
    cfg = write_config(tmp_path, {
        "command": "cz",
        "profile": {"n": 2, "sigma": [1.0, 1.0]},
        "seed": 5,
        "params": {"generation": 4, "delta": 0.5},
    })
    out = str(tmp_path / "s")
    assert main(["--config", cfg, "--out", out, "--seed", "11"]) == 0
    results = json.loads((tmp_path / "s" / "results.json").read_text())
    assert results["seed"] == 11


def test_envelope_command(tmp_path):
    cfg = write_config(tmp_path, {
        "command": "envelope",
        "profile": {"n": 1, "sigma": [1.0]},
        "params": {"grid": 129},
    })
    out = str(tmp_path / "env")
    assert main(["--config", cfg, "--out", out]) == 0
    results = json.loads((tmp_path / "env" / "results.json").read_text())
    assert results["contact_points"] >= 1
    assert results["n_planes"] >= 1


def test_abp_cover_command(tmp_path):
    cfg = write_config(tmp_path, {
        "command": "abp-cover",
        "profile": {"n": 2, "sigma": [1.0, 1.0], "rho0": 0.05, "frak_c": 2},
        "params": {"grid": 65, "mc_samples": 400},
    })
    out = str(tmp_path / "abp")
    assert main(["--config", cfg, "--out", out]) == 0
    results = json.loads((tmp_path / "abp" / "results.json").read_text())
    assert results["disjoint"] and results["contact_covered"]


def test_solve_and_decay_commands(tmp_path):
    base = {
        "profile": {"n": 1, "sigma": [1.0], "lambda_lo": 1.0,
                    "lambda_hi": 2.0},
        "seed": 1,
        "params": {"grid": 65, "tolerance": 1e-7, "window": 64},
    }
    cfg = write_config(tmp_path, dict(base, command="solve"))
    assert main(["--config", cfg, "--out", str(tmp_path / "sv")]) == 0
    results = json.loads((tmp_path / "sv" / "results.json").read_text())
    assert results["converged"]

    cfg2 = write_config(tmp_path, dict(base, command="decay"), name="d.json")
    assert main(["--config", cfg2, "--out", str(tmp_path / "dec")]) == 0
    text = (tmp_path / "dec" / "data.csv").read_text()
    assert text.splitlines()[0] == "k,measure"


def test_harnack_command_and_invalid_exit_3(tmp_path):
    base = {
        "profile": {"n": 1, "sigma": [1.0], "lambda_lo": 1.0,
                    "lambda_hi": 2.0},
        "seed": 1,
        "params": {"grid": 65, "tolerance": 1e-7, "window": 64},
    }
    cfg = write_config(tmp_path, dict(base, command="harnack"))
    assert main(["--config", cfg, "--out", str(tmp_path / "h")]) == 0

    bad = dict(base, command="harnack")
    bad["params"] = dict(base["params"], bump_height=-1.0)
    cfg2 = write_config(tmp_path, bad, name="h2.json")
    assert main(["--config", cfg2, "--out", str(tmp_path / "h2")]) == 3
    results = json.loads((tmp_path / "h2" / "results.json").read_text())
    assert "invalid" in results


def test_sweep_command_columns(tmp_path):
    cfg = write_config(tmp_path, {
        "command": "sweep",
        "profile": {"n": 1, "sigma": [1.0], "lambda_lo": 1.0,
                    "lambda_hi": 2.0},
        "seed": 1,
        "params": {"grid": 33, "tolerance": 1e-6, "window": 32,
                   "sigma_min_values": [1.0, 1.5]},
    })
    out = str(tmp_path / "sw")
    code = main(["--config", cfg, "--out", out])
    assert code == 0
    text = (tmp_path / "sw" / "data.csv").read_text()
    assert text.splitlines()[0] == "sigma_min,quantity"


def test_kernel_check_command(tmp_path):
    cfg = write_config(tmp_path, {
        "command": "kernel-check",
        "profile": {"n": 1, "sigma": [1.0], "lambda_lo": 1.0,
                    "lambda_hi": 2.0},
        "params": {"tau0": 0.5, "c0": 100.0},
    })
    assert main(["--config", cfg, "--out", str(tmp_path / "kc")]) == 0


def test_emit_plotdata_empty_series(tmp_path):
    path = str(tmp_path / "empty.csv")
    emit_plotdata(path, [], ("k", "measure"))
    text = (tmp_path / "empty.csv").read_text()
    assert text == "k,measure\r\n" or text == "k,measure\n"
    assert (tmp_path / "empty.csv.header.txt").exists()


def test_console_entry_point_runs(tmp_path):
    cfg = write_config(tmp_path, {
        "command": "constants",
        "profile": {"n": 1, "sigma": [0.7]},
    })
    proc = subprocess.run(
        [sys.executable, "-m", "anisonl.cli", "--config", cfg,
         "--out", str(tmp_path / "cp")],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "constants" in proc.stdout


def test_property_failure_exit_1(tmp_path):
    # jump-discontinuous kernels cannot clear a tight modulus budget
    cfg = write_config(tmp_path, {
        "command": "kernel-check",
        "profile": {"n": 1, "sigma": [1.0], "lambda_lo": 1.0,
                    "lambda_hi": 2.0},
        "params": {"tau0": 0.5, "c0": 1e-6},
    }, name="fail.json")
    assert main(["--config", cfg, "--out", str(tmp_path / "f1")]) == 1
    results = json.loads((tmp_path / "f1" / "results.json").read_text())
    assert results["passed"] is False
