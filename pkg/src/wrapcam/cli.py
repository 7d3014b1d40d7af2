"""Command-line front end.

Commands: `design` (optimize a mechanism from a config), `evaluate` (forward
model of an existing design), `spring` (size a spring from wire geometry),
`mu` (friction coefficient from a slip test), `tangency` (contact sweep
debug export).  Exit codes: 2 config/input error, 3 no feasible design,
4 solver non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, load_run_config, parse_quantity
from .errors import (ConfigError, DomainError, InvalidGeometryError,
                     MaxIterationsError, NoFeasiblePointError,
                     NonConvergenceError)
from .balancing import friction_mu_from_slip
from .geometry import CamProfile, export_profile_csv
from .optimizer import (CamGeometry, DesignVector, GridEvaluator,
                        MechanismConfig, evaluate_metrics, optimize_design)
from .springs import SpringSpec, SpringWireGeometry, design_spring
from .svgplot import SvgPlot, cam_outline_plot
from .tangency import export_sweep_csv, sweep_tangency
from .torque import FrictionModel


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (InvalidGeometryError, DomainError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 2
    except NoFeasiblePointError as exc:
        print(f"no feasible design: {exc}", file=sys.stderr)
        return 3
    except (NonConvergenceError, MaxIterationsError) as exc:
        print(f"solver failed: {exc}", file=sys.stderr)
        return 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wrapcam",
        description="design spring-loaded wire-wrapped cam balancing mechanisms")
    sub = parser.add_subparsers(required=True)

    p = sub.add_parser("design", help="optimize a mechanism design from a config file")
    p.add_argument("config", help="TOML run configuration")
    _common_run_flags(p)
    p.add_argument("--restarts", type=int, default=None,
                   help="extra jittered optimizer starts")
    p.add_argument("--max-iterations", type=int, default=None)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("evaluate", help="forward-evaluate an existing design")
    p.add_argument("design", help="design JSON (report.json from `design`)")
    p.add_argument("config", help="TOML run configuration")
    _common_run_flags(p)
    p.add_argument("--k-scale", type=float, default=None,
                   help="also evaluate with all spring rates scaled by this factor "
                        "and report the torque deviation")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("spring", help="size a helical spring from wire geometry")
    p.add_argument("--wire-diameter", required=True, help='e.g. "2 mm"')
    p.add_argument("--outer-diameter", required=True, help='e.g. "20 mm"')
    p.add_argument("--coils", type=float, required=True)
    p.add_argument("--shear-modulus", required=True, help='e.g. "79.3 GPa"')
    p.add_argument("--yield-stress", required=True, help='e.g. "1.6 GPa"')
    p.add_argument("--safety-factor", type=float, default=1.0)
    p.set_defaults(func=cmd_spring)

    p = sub.add_parser("mu", help="friction coefficient from a capstan slip test")
    p.add_argument("--slip-force", type=float, required=True, help="force at slip, N")
    p.add_argument("--hold-force", type=float, required=True, help="holding force, N")
    p.add_argument("--wrap-deg", type=float, default=180.0)
    p.set_defaults(func=cmd_mu)

    p = sub.add_parser("tangency", help="export a contact-angle sweep for debugging")
    p.add_argument("config", help="TOML run configuration")
    p.add_argument("--cam", type=int, default=1, choices=(1, 2))
    p.add_argument("--grid", type=str, default=None)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_tangency)
    return parser


def _common_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default=None, help="output directory (default: run name)")
    p.add_argument("--grid", type=str, default=None,
                   help="grid override: N or N,M")
    p.add_argument("--friction", choices=("finite", "infinite"), default=None,
                   help="override the friction model of every cam")
    p.add_argument("--mu", type=float, default=None,
                   help="friction coefficient used with --friction finite")
    p.add_argument("--seed", type=int, default=None, help="restart jitter seed")
    p.add_argument("--units", choices=("si", "paper"), default="paper",
                   help="units for the console summary (paper = Nmm/mm)")


def _apply_overrides(rc: RunConfig, args) -> RunConfig:
    mech = rc.mechanism
    if args.grid is not None:
        try:
            grid = tuple(int(v) for v in args.grid.split(","))
        except ValueError as exc:
            raise ConfigError(f"--grid: expected N or N,M, got {args.grid!r}") from exc
        if len(grid) == 1:
            grid = grid * mech.dof
        if len(grid) != mech.dof:
            raise ConfigError(f"--grid: expected {mech.dof} value(s)")
        mech = MechanismConfig(dof=mech.dof, cams=mech.cams, springs=mech.springs,
                               weights=mech.weights, grid=grid,
                               n_quad=mech.n_quad, n_shape=mech.n_shape)
    if args.friction is not None:
        def fm_for(cam):
            if args.friction == "infinite":
                return FrictionModel.infinite()
            if args.mu is not None:
                return FrictionModel.finite(args.mu)
            if cam.friction.mode == "finite":
                return cam.friction
            raise ConfigError("--friction finite needs --mu (config has no "
                              "friction coefficient)")
        cams = tuple(
            CamGeometry(idler=cam.idler, rho_min=cam.rho_min, rho_max=cam.rho_max,
                        theta_min=cam.theta_min, theta_max=cam.theta_max,
                        friction=fm_for(cam), phi_max=cam.phi_max)
            for cam in mech.cams)
        mech = MechanismConfig(dof=mech.dof, cams=cams, springs=mech.springs,
                               weights=mech.weights, grid=mech.grid,
                               n_quad=mech.n_quad, n_shape=mech.n_shape)
    rc.mechanism = mech
    if args.seed is not None:
        rc.seed = args.seed
    if getattr(args, "restarts", None) is not None:
        rc.restarts = args.restarts
    if getattr(args, "max_iterations", None) is not None:
        rc.max_iterations = args.max_iterations
    return rc


# -- commands -----------------------------------------------------------------


def cmd_design(args) -> int:
    rc = _apply_overrides(load_run_config(args.config), args)
    out = Path(args.out if args.out is not None else Path(args.config).stem + "_out")
    out.mkdir(parents=True, exist_ok=True)

    report = optimize_design(rc.mechanism, rc.tau_d, rc.initial,
                             max_iterations=rc.max_iterations,
                             restarts=rc.restarts, seed=rc.seed)
    # re-run the forward model freshly so reported metrics match `evaluate` exactly
    evaluator = GridEvaluator(rc.mechanism, rc.tau_d,
                              [len(b) for b in report.design.betas])
    final = evaluator.evaluate(report.design.flatten())
    metrics = [evaluate_metrics(t, d)
               for t, d in zip(final.torque_grids, final.desired_grids)]

    doc = _report_dict(rc.mechanism, report.design, final, metrics)
    doc["iterations"] = report.iterations
    doc["runtime_s"] = round(report.runtime_s, 3)
    doc["objective"] = report.objective
    with open(out / "report.json", "w") as fh:
        json.dump(doc, fh, indent=2)
    _write_run_artifacts(out, rc.mechanism, report.design, evaluator, final)
    _print_summary("design", doc, args.units)
    print(f"outputs written to {out}/")
    return 0


def cmd_evaluate(args) -> int:
    rc = _apply_overrides(load_run_config(args.config), args)
    design = _load_design_json(args.design, rc.mechanism)
    out = Path(args.out if args.out is not None else Path(args.design).stem + "_eval")
    out.mkdir(parents=True, exist_ok=True)

    evaluator = GridEvaluator(rc.mechanism, rc.tau_d, [len(b) for b in design.betas])
    final = evaluator.evaluate(design.flatten())
    if not final.solved:
        raise NonConvergenceError(
            f"tangency failed: {final.diagnostics.get('penalty_reason')}")
    metrics = [evaluate_metrics(t, d)
               for t, d in zip(final.torque_grids, final.desired_grids)]
    doc = _report_dict(rc.mechanism, design, final, metrics)

    if args.k_scale is not None:
        scaled_mech = _scale_springs(rc.mechanism, args.k_scale)
        scaled_eval = GridEvaluator(scaled_mech, rc.tau_d,
                                    [len(b) for b in design.betas])
        scaled = scaled_eval.evaluate(design.flatten())
        dev = [evaluate_metrics(ts, tn)
               for ts, tn in zip(scaled.torque_grids, final.torque_grids)]
        doc["k_scale"] = args.k_scale
        doc["deviation_rmse_Nmm"] = [1e3 * d[0] for d in dev]
        doc["deviation_max_Nmm"] = [1e3 * d[1] for d in dev]

    with open(out / "evaluation.json", "w") as fh:
        json.dump(doc, fh, indent=2)
    _write_run_artifacts(out, rc.mechanism, design, evaluator, final)
    _print_summary("evaluate", doc, args.units)
    print(f"outputs written to {out}/")
    return 0


def cmd_spring(args) -> int:
    geom = SpringWireGeometry(
        d=parse_quantity(args.wire_diameter, "length", "--wire-diameter"),
        D=parse_quantity(args.outer_diameter, "length", "--outer-diameter"),
        n_coils=args.coils,
        shear_modulus=parse_quantity(args.shear_modulus, "stress", "--shear-modulus"),
        yield_stress=parse_quantity(args.yield_stress, "stress", "--yield-stress"),
        safety_factor=args.safety_factor,
    )
    d = design_spring(geom)
    print(json.dumps({
        "k_N_per_mm": d.k / 1e3,
        "k_N_per_m": d.k,
        "x_max_mm": d.x_max * 1e3,
        "f_max_N": d.f_max,
        "spring_index": d.spring_index,
        "stress_factor": d.stress_factor,
    }, indent=2))
    return 0


def cmd_mu(args) -> int:
    mu = friction_mu_from_slip(args.slip_force, args.hold_force,
                               math.radians(args.wrap_deg))
    print(json.dumps({"mu": mu, "wrap_deg": args.wrap_deg}))
    return 0


def cmd_tangency(args) -> int:
    rc = load_run_config(args.config)
    idx = args.cam - 1
    if idx >= rc.mechanism.dof:
        raise ConfigError(f"--cam {args.cam}: config is {rc.mechanism.dof}-DOF")
    cam = rc.mechanism.cams[idx]
    n = int(args.grid) if args.grid else rc.mechanism.grid[idx]
    profile = CamProfile(rc.initial.betas[idx], cam.phi_max)
    thetas = np.linspace(cam.theta_min, cam.theta_max, n)
    sols = sweep_tangency(profile, cam.idler, thetas)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"tangency_cam{args.cam}.csv"
    export_sweep_csv(thetas, sols, path)
    print(f"wrote {path}")
    return 0


# -- shared output helpers ------------------------------------------------------


def _load_design_json(path, mech: MechanismConfig) -> DesignVector:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"no such design file: {p}")
    try:
        with open(p) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: {exc}") from exc
    if "beta" not in doc:
        raise ConfigError(f"{p}: missing 'beta'")
    betas = tuple(tuple(float(b) for b in beta) for beta in doc["beta"])
    if len(betas) != mech.dof:
        raise ConfigError(f"{p}: design has {len(betas)} cams, config {mech.dof}")
    if "x0_m" in doc:
        x_pre = tuple(float(v) for v in doc["x0_m"])
    elif "x0_mm" in doc:
        x_pre = tuple(float(v) * 1e-3 for v in doc["x0_mm"])
    else:
        raise ConfigError(f"{p}: missing 'x0_m'/'x0_mm'")
    if len(x_pre) != len(mech.springs):
        raise ConfigError(f"{p}: design has {len(x_pre)} pre-extensions, "
                          f"config needs {len(mech.springs)}")
    return DesignVector(betas=betas, x_pre=x_pre)


def _scale_springs(mech: MechanismConfig, factor: float) -> MechanismConfig:
    springs = tuple(SpringSpec(k=s.k * factor, x_pre=s.x_pre, x_max=s.x_max)
                    for s in mech.springs)
    return MechanismConfig(dof=mech.dof, cams=mech.cams, springs=springs,
                           weights=mech.weights, grid=mech.grid,
                           n_quad=mech.n_quad, n_shape=mech.n_shape)


def _report_dict(mech: MechanismConfig, design: DesignVector, final, metrics) -> dict:
    return {
        "dof": mech.dof,
        "beta": [list(b) for b in design.betas],
        "beta_highest_first": [list(reversed(b)) for b in design.betas],
        "x0_m": list(design.x_pre),
        "x0_mm": [1e3 * v for v in design.x_pre],
        "rmse_Nmm": [1e3 * m[0] for m in metrics],
        "max_error_Nmm": [1e3 * m[1] for m in metrics],
        "feasible": bool(final.feasible),
        "worst_margin": final.worst_margin,
        "margins": {k: v for k, v in final.margins.items()},
        "grid": list(mech.grid),
        "friction": [{"mode": c.friction.mode, "mu": c.friction.mu}
                     for c in mech.cams],
        "units": {"beta": "m (lowest power first)", "x0_mm": "mm",
                  "rmse": "Nmm", "x0_m": "m"},
    }


def _print_summary(kind: str, doc: dict, units: str) -> None:
    print(f"{kind}: {doc['dof']}-DOF, grid {doc['grid']}, "
          f"feasible={doc['feasible']}")
    for i, beta in enumerate(doc["beta"]):
        print(f"  cam{i + 1} beta (lowest power first, m): "
              + ", ".join(f"{b:.6g}" for b in beta))
        print(f"  cam{i + 1} beta (highest power first, m): "
              + ", ".join(f"{b:.6g}" for b in doc["beta_highest_first"][i]))
    if units == "paper":
        print("  x0 [mm]: " + ", ".join(f"{v:.4g}" for v in doc["x0_mm"]))
        print("  RMSE [Nmm]: " + ", ".join(f"{v:.2f}" for v in doc["rmse_Nmm"]))
        print("  max error [Nmm]: "
              + ", ".join(f"{v:.2f}" for v in doc["max_error_Nmm"]))
        if "deviation_rmse_Nmm" in doc:
            print(f"  +{(doc['k_scale'] - 1) * 100:.0f}% stiffness deviation RMSE "
                  "[Nmm]: "
                  + ", ".join(f"{v:.2f}" for v in doc["deviation_rmse_Nmm"]))
    else:
        print("  x0 [m]: " + ", ".join(f"{v:.6g}" for v in doc["x0_m"]))
        print("  RMSE [N*m]: " + ", ".join(f"{v / 1e3:.6f}" for v in doc["rmse_Nmm"]))
        print("  max error [N*m]: "
              + ", ".join(f"{v / 1e3:.6f}" for v in doc["max_error_Nmm"]))


def _grid_csv(path, axes, columns: dict) -> None:
    """CSV over one axis or the cartesian product of two axes."""
    names = list(columns)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if len(axes) == 1:
            writer.writerow(["theta_rad"] + names)
            for i, t in enumerate(axes[0]):
                writer.writerow([f"{t:.9f}"] + [f"{columns[n][i]:.6f}" for n in names])
        else:
            writer.writerow(["theta1_rad", "theta2_rad"] + names)
            for i, t1 in enumerate(axes[0]):
                for j, t2 in enumerate(axes[1]):
                    writer.writerow([f"{t1:.9f}", f"{t2:.9f}"]
                                    + [f"{columns[n][i, j]:.6f}" for n in names])


def _write_run_artifacts(out: Path, mech: MechanismConfig, design: DesignVector,
                         evaluator: GridEvaluator, final) -> None:
    axes = evaluator.axes
    # cam outlines over the wrap span the design actually uses
    profiles = []
    for i, beta in enumerate(design.betas):
        profile = CamProfile(beta, final.alpha_spans[i])
        profiles.append(profile)
        export_profile_csv(profile, out / f"cam{i + 1}_profile.csv")
    cam_outline_plot(profiles,
                     [f"cam {i + 1}" for i in range(len(profiles))]).write(
        out / "cam_profiles.svg")

    s_unit = 1e6  # N*m per N/m -> Nmm per N/mm
    if mech.dof == 1:
        tau = final.torque_grids[0]
        taud = final.desired_grids[0]
        _grid_csv(out / "torque_curve.csv", axes,
                  {"tau1_Nmm": 1e3 * tau, "tau_d1_Nmm": 1e3 * taud})
        _grid_csv(out / "extensions.csv", axes,
                  {"x1_mm": 1e3 * final.extensions["x1"],
                   "x2_mm": 1e3 * final.extensions["x2"]})
        _grid_csv(out / "sensitivity_grid.csv", axes,
                  {"dtau1_dk1_Nmm_per_N_per_mm": s_unit * final.sensitivities["dtau1_dk1"],
                   "dtau1_dk2_Nmm_per_N_per_mm": s_unit * final.sensitivities["dtau1_dk2"]})

        plot = SvgPlot(title="cam torque vs desired", xlabel="theta [rad]",
                       ylabel="torque [Nmm]")
        plot.add_line(axes[0], 1e3 * taud, label="desired", dash=True)
        plot.add_line(axes[0], 1e3 * tau, label="achieved")
        plot.write(out / "torque_cam1.svg")

        plot = SvgPlot(title="spring extensions", xlabel="theta [rad]",
                       ylabel="extension [mm]")
        plot.add_line(axes[0], 1e3 * final.extensions["x1"], label="x1")
        plot.add_line(axes[0], 1e3 * final.extensions["x2"], label="x2")
        plot.add_hline(1e3 * mech.springs[0].x_max, label="x1 max")
        plot.add_hline(1e3 * mech.springs[1].x_max, label="x2 max", color="#d0622a")
        plot.write(out / "extensions.svg")
        return

    from .torque import export_torque_grid_csv

    tau1, tau2 = final.torque_grids
    taud1, taud2 = final.desired_grids
    export_torque_grid_csv(axes[0], axes[1], tau1, tau2, out / "torque_grid.csv")
    export_torque_grid_csv(axes[0], axes[1], taud1, taud2,
                           out / "desired_torque_grid.csv")
    _grid_csv(out / "extensions_cam1.csv", axes[:1],
              {"x1_mm": 1e3 * final.extensions["x1"]})
    _grid_csv(out / "extensions_cam2.csv", axes[1:],
              {"x3_mm": 1e3 * final.extensions["x3"]})
    _grid_csv(out / "extension_coupling.csv", axes,
              {"x2_mm": 1e3 * final.extensions["x2"]})
    _grid_csv(out / "sensitivity_grid.csv", axes,
              {f"{name}_Nmm_per_N_per_mm": s_unit * np.asarray(final.sensitivities[name])
               for name in ("dtau1_dk1", "dtau1_dk2", "dtau1_dk3",
                            "dtau2_dk1", "dtau2_dk2", "dtau2_dk3")})

    # torque slice plots: curves along theta_i at a few fixed other-angle values
    for cam_idx, (tau, taud, label) in enumerate(
            ((tau1, taud1, "tau1"), (tau2, taud2, "tau2"))):
        plot = SvgPlot(title=f"cam {cam_idx + 1} torque vs desired (slices)",
                       xlabel=f"theta{cam_idx + 1} [rad]", ylabel="torque [Nmm]")
        other = axes[1 - cam_idx]
        for frac in (0.0, 0.5, 1.0):
            j = int(round(frac * (other.size - 1)))
            sl = (slice(None), j) if cam_idx == 0 else (j, slice(None))
            suffix = f"@theta{2 - cam_idx}={other[j]:.2f}"
            plot.add_line(axes[cam_idx], 1e3 * np.asarray(taud)[sl],
                          label=f"desired {suffix}", dash=True)
            plot.add_line(axes[cam_idx], 1e3 * np.asarray(tau)[sl],
                          label=f"achieved {suffix}")
        plot.write(out / f"torque_cam{cam_idx + 1}.svg")

    plot = SvgPlot(title="wrap spring extensions", xlabel="theta [rad]",
                   ylabel="extension [mm]")
    plot.add_line(axes[0], 1e3 * final.extensions["x1"], label="x1(theta1)")
    plot.add_line(axes[1], 1e3 * final.extensions["x3"], label="x3(theta2)")
    plot.add_hline(1e3 * mech.springs[0].x_max, label="x1 max")
    plot.add_hline(1e3 * mech.springs[2].x_max, label="x3 max", color="#2e8b57")
    plot.write(out / "extensions_wrap.svg")

    plot = SvgPlot(title="coupling spring extension (slices over theta2)",
                   xlabel="theta1 [rad]", ylabel="extension [mm]")
    x2 = final.extensions["x2"]
    for frac in (0.0, 0.5, 1.0):
        j = int(round(frac * (axes[1].size - 1)))
        plot.add_line(axes[0], 1e3 * x2[:, j], label=f"x2 @theta2={axes[1][j]:.2f}")
    plot.add_hline(1e3 * mech.springs[1].x_max, label="x2 max")
    plot.write(out / "extension_coupling.svg")


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
