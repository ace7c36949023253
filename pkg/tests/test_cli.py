import json
import subprocess
import sys

import pytest

from fouspec import cli


def run_cli(args):
    proc = subprocess.run([sys.executable, "-m", "fouspec.cli", *args],
                          capture_output=True, text=True)
    return proc.returncode, proc.stdout, proc.stderr


def test_config_round_trip():
    cfg = cli.RunConfig(command="mse", H=0.65, beta=-1.5, eps=(1e-3, 2.5e-5),
                        u=(0.25, 1.0), n_max=77, spectrum="first_order")
    text = cli.config_text(cfg)
    parsed = cli.parse_config_text(text)
    for key, val in parsed.items():
        if key == "command":
            continue
        assert getattr(cfg, key) == val, key


def test_flags_override_config(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("H = 0.6\nn_max = 4\nN_unit = 120\nbeta = -1.0\n")
    code, out, err = run_cli(["eigs", "--config", str(conf), "--n-max", "3"])
    assert code == 0
    assert "# n_max=3" in out
    assert "# H=0.6" in out


def test_eigs_determinism_and_precision():
    cfg = cli.RunConfig(command="eigs", H=0.6, beta=-1.0, n_max=4, N_unit=120)
    out1 = cli.render_eigs_csv(cfg)
    out2 = cli.render_eigs_csv(cfg)
    assert out1 == out2
    data_row = out1.strip().splitlines()[-1]
    cell = data_row.split(",")[1]
    mantissa = cell.split("e")[0]
    assert len(mantissa.lstrip("-").replace(".", "")) == 17  # 17 significant digits


def test_eigs_small_h_omits_refined_columns():
    code, out, err = run_cli(["eigs", "--H", "0.3", "--n-max", "3",
                              "--N-unit", "100"])
    assert code == 0
    assert "lambda_refined" not in out
    assert "warning" in out


def test_eigs_json_structure():
    code, out, err = run_cli(["eigs", "--H", "0.6", "--beta", "-1", "--n-max", "3",
                              "--N-unit", "100", "--format", "json"])
    assert code == 0
    doc = json.loads(out)
    assert set(doc) == {"config", "results", "notes"}
    assert len(doc["results"]) == 3
    assert doc["results"][2]["n"] == 3


def test_mse_rows_and_header():
    code, out, err = run_cli(["mse", "--H", "0.5", "--eps", "1e-4,1e-5",
                              "--u", "0.5,1.0", "--spectrum", "closed_form_ou",
                              "--n-max", "50000"])
    assert code == 0
    rows = [l for l in out.splitlines() if l and not l.startswith("#")]
    assert rows[0].startswith("eps,u,")
    assert len(rows) == 1 + 4  # header + 2 eps x 2 u
    assert "exponent 2H/(1+2H)" in out
    ratio = float(rows[1].split(",")[4])
    assert abs(ratio - 1.0) < 0.05


def test_mse_usage_errors():
    code, _, err = run_cli(["mse", "--eps", "", "--u", "0.5"])
    assert code == 2
    code, _, err = run_cli(["mse", "--H", "1.5", "--eps", "1e-4", "--u", "0.5"])
    assert code == 2


def test_mse_truncation_refusal():
    code, _, err = run_cli(["mse", "--H", "0.5", "--eps", "1e-9", "--u", "1.0",
                            "--spectrum", "closed_form_ou", "--n-max", "200"])
    assert code == 4
    assert "truncation" in err


def test_corrupted_config(tmp_path):
    conf = tmp_path / "bad.conf"
    conf.write_text("H 0.6\n")
    code, _, err = run_cli(["eigs", "--config", str(conf)])
    assert code == 2


def test_special_tabulates(tmp_path):
    out_path = tmp_path / "special.csv"
    code, _, _ = run_cli(["special", "--H", "0.75", "--beta", "-1",
                          "--nu", "40", "--out", str(out_path)])
    assert code == 0
    text = out_path.read_text()
    assert "b_alpha_closed" in text
    assert "X0(i) modulus" in text
    header = [l for l in text.splitlines() if l.startswith("u,")][0]
    assert header == "u,theta_nu,theta0,h,rho0,gamma0"


def test_special_h_half_degenerates():
    code, out, _ = run_cli(["special", "--H", "0.5", "--nu", "30"])
    assert code == 0
    rows = [l for l in out.splitlines() if l and not l.startswith("#")][1:]
    assert all(float(r.split(",")[1]) == 0.0 for r in rows)  # theta identically 0


def test_unknown_command_usage():
    code, _, _ = run_cli(["frobnicate"])
    assert code == 2


def test_validate_quick_subset():
    import time

    from fouspec import validation

    assert set(validation.QUICK_CHECKS) < set(validation.ALL_CHECKS)
    assert validation.check_refinement_dominance not in validation.QUICK_CHECKS
    t0 = time.time()
    code, out, err = run_cli(["validate", "--quick", "--format", "json"])
    elapsed = time.time() - t0
    assert code == 0, err
    assert elapsed < 60.0
    doc = json.loads(out)
    assert all(r["passed"] for r in doc["results"])
    assert "PASS" in err  # human-readable lines go to stderr
