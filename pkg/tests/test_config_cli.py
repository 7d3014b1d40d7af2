import json
import math
from pathlib import Path

import numpy as np
import pytest

import wrapcam as wc
from wrapcam.cli import main
from wrapcam.config import load_run_config, parse_quantity

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def test_parse_quantity_units():
    assert parse_quantity("1.10 N/mm", "stiffness") == pytest.approx(1100.0)
    assert parse_quantity("57.66 mm", "length") == pytest.approx(0.05766)
    assert parse_quantity("90 deg", "angle") == pytest.approx(math.pi / 2)
    assert parse_quantity("79.3 GPa", "stress") == pytest.approx(79.3e9)
    assert parse_quantity(0.025, "length") == 0.025
    with pytest.raises(wc.ConfigError):
        parse_quantity("1.1 lbf/in", "stiffness")
    with pytest.raises(wc.ConfigError):
        parse_quantity("fast", "length")
    with pytest.raises(wc.ConfigError):
        parse_quantity("1 2 mm", "length")


def test_load_bundled_two_dof_config():
    rc = load_run_config(CONFIG_DIR / "two_dof_no_sens.toml")
    mech = rc.mechanism
    assert mech.dof == 2
    assert [s.k for s in mech.springs] == pytest.approx([1100.0, 7350.0, 580.0])
    assert [s.x_max for s in mech.springs] == pytest.approx([0.05766, 0.032, 0.105])
    assert mech.cams[0].idler.radius == pytest.approx(0.02)
    assert mech.cams[0].idler.vertical_offset == pytest.approx(0.015)
    assert mech.cams[0].rho_min == pytest.approx(0.025)
    assert mech.cams[0].friction.mode == "finite"
    assert mech.cams[0].friction.mu == pytest.approx(0.3273)
    assert mech.weights == (10.0, 10.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    assert rc.initial.x_pre == pytest.approx((0.01, 0.01, 0.01))
    t1, t2 = rc.tau_d(math.pi / 2, 0.0)
    assert t1 == pytest.approx(4.905)


def test_load_bundled_one_dof_config():
    rc = load_run_config(CONFIG_DIR / "one_dof_quadratic.toml")
    assert rc.mechanism.dof == 1
    assert rc.mechanism.cams[0].friction.mode == "infinite"
    assert rc.tau_d(math.pi / 2) == pytest.approx(0.08 * (math.pi / 2) ** 2)
    assert rc.initial.betas[0] == (0.1, 0.1, 0.1, 0.1)


def test_config_error_reports_field(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text('dof = 1\n[desired_torque]\ntype = "polynomial"\n'
                   'coeffs_Nm = [0.0, 0.0, 0.08]\n[cam1]\nrho_min = "5 mm"\n')
    with pytest.raises(wc.ConfigError) as err:
        load_run_config(bad)
    assert "cam1" in str(err.value)


def test_config_error_on_toml_syntax(tmp_path):
    bad = tmp_path / "syntax.toml"
    bad.write_text("dof = 1\nrho_min == oops\n")
    with pytest.raises(wc.ConfigError) as err:
        load_run_config(bad)
    assert "line 2" in str(err.value)


def test_catalog_reference_errors(tmp_path):
    cfg = tmp_path / "run.toml"
    (tmp_path / "cat.toml").write_text('["a"]\nk = "1 N/mm"\nx_max = "10 mm"\n')
    cfg.write_text(
        'dof = 1\n[desired_torque]\ntype = "polynomial"\ncoeffs_Nm = [0.0]\n'
        '[cam1]\nrho_min = "5 mm"\nrho_max = "100 mm"\nidler_radius = "10 mm"\n'
        'theta_max = "90 deg"\nbeta_init_m = [0.03]\n'
        '[springs]\ncatalog = "cat.toml"\nuse = ["a", "missing"]\n'
        '[optimization]\nweights = [1.0, 0.0, 0.0]\n')
    with pytest.raises(wc.ConfigError) as err:
        load_run_config(cfg)
    assert "missing" in str(err.value)


def _quick_config(tmp_path, friction="infinite", mu_line=""):
    cfg = tmp_path / "quick.toml"
    cfg.write_text(f'''
dof = 1

[desired_torque]
type = "polynomial"
coeffs_Nm = [0.0, 0.05]

[friction]
mode = "{friction}"
{mu_line}

[cam1]
rho_min = "10 mm"
rho_max = "200 mm"
idler_radius = "15 mm"
idler_offset = "10 mm"
theta_min = "0 deg"
theta_max = "80 deg"
phi_max = "2.2 rad"
beta_init_m = [0.03, 0.002, 0.0005, 0.0]

[springs.spring1]
k = "1.0 N/mm"
x_max = "120 mm"
x_pre_init = "4 mm"

[springs.spring2]
k = "4.0 N/mm"
x_max = "60 mm"
x_pre_init = "6 mm"

[optimization]
weights = [10.0, 0.0, 0.0]
grid = [17]
max_iterations = 40
''')
    return cfg


def test_cli_design_evaluate_round_trip(tmp_path, capsys):
    cfg = _quick_config(tmp_path)
    out = tmp_path / "run_out"
    assert main(["design", str(cfg), "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["feasible"] is True
    for artifact in ("report.json", "cam1_profile.csv", "torque_curve.csv",
                     "extensions.csv", "sensitivity_grid.csv", "torque_cam1.svg",
                     "extensions.svg", "cam_profiles.svg"):
        assert (out / artifact).exists()
    import xml.etree.ElementTree as ET
    for svg in out.glob("*.svg"):
        root = ET.parse(svg).getroot()
        assert root.tag.endswith("svg")

    out2 = tmp_path / "eval_out"
    assert main(["evaluate", str(out / "report.json"), str(cfg),
                 "--out", str(out2)]) == 0
    evaluation = json.loads((out2 / "evaluation.json").read_text())
    assert evaluation["rmse_Nmm"] == report["rmse_Nmm"]
    assert evaluation["max_error_Nmm"] == report["max_error_Nmm"]


def test_cli_evaluate_stiffness_scaling_ratio(tmp_path):
    cfg = _quick_config(tmp_path)
    out = tmp_path / "run_out"
    assert main(["design", str(cfg), "--out", str(out)]) == 0
    devs = {}
    for scale in (1.1, 1.2):
        outk = tmp_path / f"eval_{scale}"
        assert main(["evaluate", str(out / "report.json"), str(cfg),
                     "--out", str(outk), "--k-scale", str(scale)]) == 0
        devs[scale] = json.loads((outk / "evaluation.json").read_text())[
            "deviation_rmse_Nmm"][0]
    assert devs[1.2] / devs[1.1] == pytest.approx(2.0, rel=1e-9)


def test_cli_friction_override_identical_for_circular_cam(tmp_path):
    # a circular cam feels no torque difference between the wire models
    cfg = _quick_config(tmp_path)
    design = tmp_path / "circle.json"
    design.write_text(json.dumps({
        "beta": [[0.04, 0.0, 0.0, 0.0]],
        "x0_m": [0.004, 0.006],
    }))
    outs = {}
    for mode, extra in (("infinite", []), ("finite", ["--mu", "0.3273"])):
        out = tmp_path / f"fric_{mode}"
        assert main(["evaluate", str(design), str(cfg), "--out", str(out),
                     "--friction", mode] + extra) == 0
        outs[mode] = np.loadtxt(out / "torque_curve.csv", delimiter=",",
                                skiprows=1)[:, 1]
    assert np.allclose(outs["finite"], outs["infinite"], rtol=1e-6)


def test_cli_spring_command(capsys):
    assert main(["spring", "--wire-diameter", "2 mm", "--outer-diameter", "20 mm",
                 "--coils", "10", "--shear-modulus", "79.3 GPa",
                 "--yield-stress", "1.6 GPa", "--safety-factor", "1.5"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["k_N_per_mm"] == pytest.approx(2.70279, rel=1e-4)
    assert doc["f_max_N"] == pytest.approx(80.836, rel=1e-4)
    assert doc["x_max_mm"] == pytest.approx(doc["f_max_N"] / doc["k_N_per_mm"],
                                            rel=1e-9)


def test_cli_spring_rejects_bad_geometry(capsys):
    assert main(["spring", "--wire-diameter", "4 mm", "--outer-diameter", "6.9 mm",
                 "--coils", "5", "--shear-modulus", "79 GPa",
                 "--yield-stress", "1.5 GPa"]) == 2


def test_cli_mu_command(capsys):
    f = math.exp(0.3273 * math.pi)
    assert main(["mu", "--slip-force", str(f), "--hold-force", "1.0"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["mu"] == pytest.approx(0.3273, abs=1e-12)


def test_cli_malformed_config_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("dof = 5\n")
    assert main(["design", str(bad)]) == 2
    assert main(["design", str(tmp_path / "nope.toml")]) == 2


def test_cli_infeasible_window_exits_3(tmp_path, capsys):
    cfg = _quick_config(tmp_path)
    text = cfg.read_text().replace('rho_max = "200 mm"', 'rho_max = "5 mm"')
    cfg.write_text(text)
    assert main(["design", str(cfg)]) == 3


def test_cli_tangency_sweep(tmp_path):
    cfg = _quick_config(tmp_path)
    out = tmp_path / "sweep"
    assert main(["tangency", str(cfg), "--cam", "1", "--grid", "9",
                 "--out", str(out)]) == 0
    lines = (out / "tangency_cam1.csv").read_text().splitlines()
    assert lines[0] == "theta_rad,alpha_rad,gamma_rad"
    assert len(lines) == 10


def test_cli_grid_override(tmp_path):
    cfg = _quick_config(tmp_path)
    out = tmp_path / "grid_out"
    assert main(["design", str(cfg), "--out", str(out), "--grid", "9"]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["grid"] == [9]


def test_cli_units_si_summary(tmp_path, capsys):
    cfg = _quick_config(tmp_path)
    out = tmp_path / "si_out"
    assert main(["design", str(cfg), "--out", str(out), "--units", "si"]) == 0
    text = capsys.readouterr().out
    assert "RMSE [N*m]" in text and "x0 [m]" in text


def test_cli_design_with_restarts_deterministic(tmp_path):
    cfg = _quick_config(tmp_path)
    reports = []
    for name in ("r1", "r2"):
        out = tmp_path / name
        assert main(["design", str(cfg), "--out", str(out),
                     "--restarts", "1", "--seed", "3"]) == 0
        reports.append(json.loads((out / "report.json").read_text()))
    assert reports[0]["beta"] == reports[1]["beta"]
    assert reports[0]["rmse_Nmm"] == reports[1]["rmse_Nmm"]


def test_cli_evaluate_nonconvergent_design_exits_4(tmp_path, capsys):
    # shrinking cam loses idler contact partway through the sweep
    cfg = tmp_path / "shrink.toml"
    cfg.write_text('''
dof = 1
[desired_torque]
type = "polynomial"
coeffs_Nm = [0.0, 0.05]
[cam1]
rho_min = "2 mm"
rho_max = "200 mm"
idler_radius = "10 mm"
idler_offset = "30 mm"
theta_min = "0 deg"
theta_max = "110 deg"
phi_max = "2.2 rad"
beta_init_m = [0.05, -0.015]
[springs.spring1]
k = "1.0 N/mm"
x_max = "500 mm"
[springs.spring2]
k = "1.0 N/mm"
x_max = "500 mm"
[optimization]
weights = [1.0, 0.0, 0.0]
grid = [41]
''')
    design = tmp_path / "shrink.json"
    design.write_text(json.dumps({"beta": [[0.05, -0.015]], "x0_m": [0.0, 0.0]}))
    assert main(["evaluate", str(design), str(cfg), "--out",
                 str(tmp_path / "nc")]) == 4


def test_cli_bundled_one_dof_study_end_to_end(tmp_path):
    out = tmp_path / "study"
    assert main(["design", str(CONFIG_DIR / "one_dof_quadratic.toml"),
                 "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["feasible"] is True
    assert report["rmse_Nmm"][0] <= 60.0
    assert (out / "torque_cam1.svg").exists()


def test_config_tabulated_desired_torque(tmp_path):
    import wrapcam as wc
    arm = wc.RRArmParams(0.5, 0.5, 0.5, 0.25, 0.25)
    t = np.linspace(0.0, math.pi / 2, 13)
    lines = ["theta1_rad,theta2_rad,tau_d1_Nm,tau_d2_Nm"]
    for a in t:
        for b in t:
            v1, v2 = wc.rr_gravity_torques(arm, a, b)
            lines.append(f"{a},{b},{v1},{v2}")
    (tmp_path / "taud.csv").write_text("\n".join(lines) + "\n")
    cfg = tmp_path / "table.toml"
    cfg.write_text('''
dof = 2
[desired_torque]
type = "table"
path = "taud.csv"
[friction]
mode = "infinite"
[cam1]
rho_min = "25 mm"
rho_max = "500 mm"
idler_radius = "20 mm"
idler_offset = "15 mm"
theta_max = "90 deg"
beta_init_m = [0.03, 0.0, 0.0, 0.0]
[cam2]
rho_min = "25 mm"
rho_max = "500 mm"
idler_radius = "20 mm"
idler_offset = "15 mm"
theta_max = "90 deg"
beta_init_m = [0.03, 0.0, 0.0, 0.0]
[springs.spring1]
k = "1.10 N/mm"
x_max = "57.66 mm"
[springs.spring2]
k = "7.35 N/mm"
x_max = "32 mm"
[springs.spring3]
k = "0.58 N/mm"
x_max = "105 mm"
[optimization]
weights = [10.0, 10.0, 0, 0, 0, 0, 0, 0]
grid = [13, 13]
''')
    rc = load_run_config(cfg)
    from wrapcam.optimizer import desired_torque_grids
    g1, g2 = desired_torque_grids(rc.mechanism, rc.tau_d)
    # the loader's grid coincides with the table nodes here, so values match
    e1, e2 = wc.rr_gravity_torques(arm, t[:, None], t[None, :])
    assert np.allclose(g1, e1, atol=1e-12)
    assert np.allclose(g2, e2, atol=1e-12)
