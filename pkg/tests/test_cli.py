import numpy as np
import pytest

from gupopt import cli

MU_TABLE2 = """
[deformation]
model = mu
strength = 1.0

[physical]
m = 1e-11
omega_m = 6.283185307179586e5
F = 1e5
lambda_L = 1064e-9
N_p = 1e8
N_r = 1
"""


def run(args, capsys):
    code = cli.main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_config(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def parse_csv(text):
    lines = [line for line in text.strip().splitlines() if line]
    header = lines[0].split(",")
    rows = [dict(zip(header, line.split(","))) for line in lines[1:]]
    return header, rows


# --- configuration -----------------------------------------------------------


def test_config_round_trip():
    config = cli.parse_config(MU_TABLE2)
    text = cli.config_to_string(config)
    again = cli.parse_config(text)
    assert again == config


def test_config_round_trip_with_all_sections():
    full = MU_TABLE2 + """
[noise]
pulse = square
kappa_tau = 100.0

[oracle]
alpha = 2.0
nbar = 1.0
lam = 0.3

[output]
format = json

[sweep]
parameter = N_p
values = 1e8,2e8,4e8
"""
    config = cli.parse_config(full)
    assert cli.parse_config(cli.config_to_string(config)) == config


def test_config_rejects_unknown_key():
    with pytest.raises(cli.ConfigError):
        cli.parse_config(MU_TABLE2 + "\n[physical]\nunknown_key = 3\n".replace("[physical]\n", ""))
    with pytest.raises(cli.ConfigError):
        cli.parse_config(MU_TABLE2.replace("N_p = 1e8", "N_p = 1e8\nbogus = 1"))


def test_config_rejects_unknown_section():
    with pytest.raises(cli.ConfigError):
        cli.parse_config(MU_TABLE2 + "\n[extras]\nx = 1\n")


def test_config_requires_physical():
    with pytest.raises(cli.ConfigError):
        cli.parse_config("[deformation]\nmodel = none\n")


# --- theta ---------------------------------------------------------------------


def test_cmd_theta_mu_magnitude(tmp_path, capsys):
    path = write_config(tmp_path, MU_TABLE2)
    code, out, _ = run(["--config", path, "theta"], capsys)
    assert code == 0
    _, rows = parse_csv(out)
    theta_abs = float(rows[0]["theta_abs"])
    assert 0.5e-4 <= theta_abs <= 2e-4


def test_cmd_theta_zero_strength(tmp_path, capsys):
    cfg = MU_TABLE2.replace("strength = 1.0", "strength = 0.0").replace("model = mu", "model = none")
    path = write_config(tmp_path, cfg)
    code, out, _ = run(["--config", path, "theta"], capsys)
    assert code == 0
    _, rows = parse_csv(out)
    assert float(rows[0]["theta_abs"]) == 0.0


def test_cmd_theta_lambda_regime_exit_code(tmp_path, capsys):
    cfg = MU_TABLE2.replace("m = 1e-11", "m = 1e-16").replace("F = 1e5", "F = 1e7")
    path = write_config(tmp_path, cfg)
    code, out, err = run(["--config", path, "theta"], capsys)
    assert code == cli.EXIT_REGIME
    assert "lambda < 1" in err
    assert out == ""


# --- oracle ----------------------------------------------------------------------


def test_cmd_oracle_undeformed(tmp_path, capsys):
    cfg = MU_TABLE2.replace("model = mu", "model = none").replace("strength = 1.0", "strength = 0.0")
    cfg += "\n[oracle]\nalpha = 2.0\nnbar = 0.0\nlam = 0.3\n"
    path = write_config(tmp_path, cfg)
    code, out, _ = run(["--config", path, "oracle"], capsys)
    assert code == 0
    _, rows = parse_csv(out)
    assert float(rows[0]["rel_error"]) < 1e-8
    assert rows[0]["pass"] == "true"


def test_cmd_oracle_beta_linearity(tmp_path, capsys):
    cfg = MU_TABLE2.replace("model = mu", "model = beta").replace("strength = 1.0", "strength = 1e-3")
    cfg += "\n[oracle]\nalpha = 2.0\nnbar = 0.0\nlam = 0.25\n"
    path = write_config(tmp_path, cfg)
    code, out, _ = run(["--config", path, "oracle"], capsys)
    assert code == 0
    _, rows = parse_csv(out)
    by_name = {r["quantity"]: r for r in rows}
    assert float(by_name["mean_field"]["rel_error"]) < 2e-2
    exponent = float(by_name["linearity_exponent"]["numeric_re"])
    assert exponent == pytest.approx(1.0, abs=0.02)


def test_cmd_oracle_cutoff_exit_code(tmp_path, capsys):
    cfg = MU_TABLE2.replace("model = mu", "model = none").replace("strength = 1.0", "strength = 0.0")
    cfg += "\n[oracle]\nalpha = 1.0\nnbar = 2.0\nlam = 0.1\nmech_dim = 4\n"
    path = write_config(tmp_path, cfg)
    code, _, err = run(["--config", path, "oracle"], capsys)
    assert code == cli.EXIT_CUTOFF
    assert "cutoff" in err.lower()


# --- table2 ----------------------------------------------------------------------


def test_cmd_table2_resolutions(capsys):
    code, out, _ = run(["table2"], capsys)
    assert code == 0
    _, rows = parse_csv(out)
    by_kind = {r["model"]: r for r in rows}
    assert 0.3 <= float(by_kind["mu"]["delta_strength"]) <= 3.0
    assert 0.2 <= float(by_kind["gamma"]["delta_strength"]) <= 5.0
    assert 0.2 <= float(by_kind["beta"]["delta_strength"]) <= 5.0
    for r in rows:
        assert r["delta_phi_within_2"] == "true"
        assert r["delta_strength_within_5"] == "true"


def test_cmd_table2_deterministic_bytes(tmp_path):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    assert cli.main(["--output", str(out1), "table2"]) == 0
    assert cli.main(["--output", str(out2), "table2"]) == 0
    assert out1.read_bytes() == out2.read_bytes()


# --- sweep ------------------------------------------------------------------------


def _sweep_config(kind, strength, values):
    cfg = MU_TABLE2.replace("model = mu", f"model = {kind}").replace("strength = 1.0", f"strength = {strength}")
    return cfg + f"\n[sweep]\nparameter = N_p\nvalues = {values}\n"


def test_cmd_sweep_beta_photon_scaling(tmp_path, capsys):
    path = write_config(tmp_path, _sweep_config("beta", "1.0", "1e8,1e9,1e10,1e11"))
    code, out, _ = run(["--config", path, "sweep"], capsys)
    assert code == 0
    _, rows = parse_csv(out)
    n = np.array([float(r["N_p"]) for r in rows])
    th = np.array([float(r["theta_abs"]) for r in rows])
    slope = np.polyfit(np.log(n), np.log(th), 1)[0]
    assert slope == pytest.approx(3.0, abs=0.01)


def test_cmd_sweep_mu_photon_scaling(tmp_path, capsys):
    path = write_config(tmp_path, _sweep_config("mu", "1.0", "1e8,1e9,1e10"))
    code, out, _ = run(["--config", path, "sweep"], capsys)
    assert code == 0
    _, rows = parse_csv(out)
    n = np.array([float(r["N_p"]) for r in rows])
    th = np.array([float(r["theta_abs"]) for r in rows])
    slope = np.polyfit(np.log(n), np.log(th), 1)[0]
    assert slope == pytest.approx(1.0, abs=0.01)


def test_cmd_sweep_empty_grid(tmp_path, capsys):
    path = write_config(tmp_path, _sweep_config("mu", "1.0", ""))
    code, out, _ = run(["--config", path, "sweep"], capsys)
    assert code == 0
    header, rows = parse_csv(out)
    assert header[0] == "N_p"
    assert rows == []


# --- figure1 ------------------------------------------------------------------------


def test_cmd_figure1_minimum(capsys):
    code, out, _ = run(["figure1", "--beta0", "1.0", "--dp-min", "0.01", "--dp-max", "100", "--points", "401"], capsys)
    assert code == 0
    _, rows = parse_csv(out)
    dx = np.array([float(r["dx_over_LP"]) for r in rows])
    dp = np.array([float(r["dp_over_MPc"]) for r in rows])
    i = np.argmin(dx)
    assert dx[i] == pytest.approx(1.0, abs=1e-4)
    assert dp[i] == pytest.approx(1.0, rel=0.05)


def test_cmd_figure1_modified_dominates(capsys):
    code, out, _ = run(["figure1", "--beta0", "0.0,2.0", "--points", "101"], capsys)
    assert code == 0
    _, rows = parse_csv(out)
    standard = np.array([float(r["dx_over_LP"]) for r in rows if float(r["beta0"]) == 0.0])
    modified = np.array([float(r["dx_over_LP"]) for r in rows if float(r["beta0"]) == 2.0])
    assert np.all(modified >= standard)


# --- noise budget -------------------------------------------------------------------


def test_cmd_noise_budget_beta_reduction(tmp_path, capsys):
    cfg = MU_TABLE2.replace("model = mu", "model = beta").replace("N_r = 1", "N_r = 1\nnbar = 10\neta = 0.9\nT = 0.05\nQ = 1e7")
    path = write_config(tmp_path, cfg)
    code, out, _ = run(["--config", path, "noise-budget"], capsys)
    assert code == 0
    _, rows = parse_csv(out)
    by_item = {r["item"]: r for r in rows}
    assert float(by_item["eta_reduction(beta)"]["value"]) == pytest.approx(0.478, abs=5e-4)


def test_cmd_noise_budget_temperature_check_fails(tmp_path, capsys):
    cfg = MU_TABLE2.replace("N_r = 1", "N_r = 1\nT = 0.2\nQ = 1e6")
    path = write_config(tmp_path, cfg)
    code, out, _ = run(["--config", path, "noise-budget"], capsys)
    assert code == 0
    _, rows = parse_csv(out)
    by_item = {r["item"]: r for r in rows}
    assert by_item["bath temperature T < 0.1 K"]["passed"] == "false"


def test_cmd_noise_budget_defaults_unit(tmp_path, capsys):
    cfg = MU_TABLE2.replace("model = mu", "model = none").replace("strength = 1.0", "strength = 0")
    path = write_config(tmp_path, cfg)
    code, out, _ = run(["--config", path, "noise-budget"], capsys)
    assert code == 0
    _, rows = parse_csv(out)
    by_item = {r["item"]: r for r in rows}
    # eta = 1 and nbar = 0 give exact unit factors; the default bath
    # (50 mK, Q = 1e7) leaves a decoherence correction at the 1e-9 level
    assert float(by_item["eta_reduction(none)"]["value"]) == 1.0
    assert float(by_item["thermal_attenuation"]["value"]) == 1.0
    assert float(by_item["composite_reduction"]["value"]) == pytest.approx(1.0, abs=1e-6)


# --- plumbing ----------------------------------------------------------------------


def test_missing_config_is_config_error(capsys):
    code, _, err = run(["theta"], capsys)
    assert code == cli.EXIT_CONFIG
    assert "config" in err.lower()


def test_unreadable_config_is_io_error(capsys):
    code, _, err = run(["--config", "/nonexistent/run.ini", "theta"], capsys)
    assert code == cli.EXIT_IO


def test_json_output(tmp_path, capsys):
    import json

    path = write_config(tmp_path, MU_TABLE2)
    code, out, _ = run(["--config", path, "--format", "json", "theta"], capsys)
    assert code == 0
    rows = json.loads(out)
    assert rows[0]["model"] == "mu"


def test_unsafe_constants_escape_hatch(capsys):
    # natural units make the curve minimum land at (1, 1) regardless of the
    # SI values; the override must warn on stderr
    import subprocess
    import sys

    out = subprocess.run(
        [sys.executable, "-m", "gupopt.cli", "--unsafe-constants", "hbar=1.0,c=1.0,M_P=1.0",
         "figure1", "--beta0", "1.0", "--points", "11", "--dp-min", "0.5", "--dp-max", "2.0"],
        capture_output=True, text=True,
    )
    assert out.returncode == 0
    assert "overridden" in out.stderr
    assert cli.main(["--unsafe-constants", "nonsense=1", "table2"]) == cli.EXIT_CONFIG
    capsys.readouterr()
