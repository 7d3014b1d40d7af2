"""Run-configuration files.

Configs are TOML with explicit unit suffixes on every physical quantity
(`k = "1.10 N/mm"`), so catalog values can be transcribed verbatim and silent
unit mistakes are impossible.  See README for the schema.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - version shim
    import tomli as tomllib

from .balancing import RRArmParams, TabulatedTorque, polynomial_torque, rr_gravity_torques
from .errors import ConfigError, InvalidGeometryError
from .optimizer import CamGeometry, DesignVector, MechanismConfig
from .springs import SpringSpec
from .tangency import IdlerSpec
from .torque import FrictionModel

UNIT_FACTORS = {
    "length": {"m": 1.0, "cm": 1e-2, "mm": 1e-3},
    "stiffness": {"N/m": 1.0, "N/mm": 1e3, "N/cm": 1e2},
    "angle": {"rad": 1.0, "deg": math.pi / 180.0},
    "mass": {"kg": 1.0, "g": 1e-3},
    "force": {"N": 1.0, "kN": 1e3},
    "stress": {"Pa": 1.0, "kPa": 1e3, "MPa": 1e6, "GPa": 1e9},
    "acceleration": {"m/s^2": 1.0, "m/s2": 1.0},
    "torque": {"N*m": 1.0, "Nm": 1.0, "Nmm": 1e-3, "N*mm": 1e-3},
}


def parse_quantity(value, kind: str, where: str = "value") -> float:
    """Convert `value` to SI.  Strings need a unit suffix; numbers pass as SI."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"{where}: expected a number or '<number> <unit>' string")
    parts = value.split()
    if len(parts) != 2:
        raise ConfigError(f"{where}: expected '<number> <unit>', got {value!r}")
    try:
        magnitude = float(parts[0])
    except ValueError as exc:
        raise ConfigError(f"{where}: bad number in {value!r}") from exc
    units = UNIT_FACTORS.get(kind)
    if units is None:
        raise ConfigError(f"{where}: unknown quantity kind {kind!r}")
    factor = units.get(parts[1])
    if factor is None:
        raise ConfigError(
            f"{where}: unknown {kind} unit {parts[1]!r} (accepted: {sorted(units)})")
    return magnitude * factor


@dataclass
class RunConfig:
    """Everything a design or evaluation run needs."""

    mechanism: MechanismConfig
    initial: DesignVector
    tau_d: object
    torque_kind: str
    max_iterations: int = 300
    restarts: int = 0
    seed: int = 0


def _section(table: dict, name: str, where: str) -> dict:
    value = table.get(name)
    if not isinstance(value, dict):
        raise ConfigError(f"{where}: missing required section [{name}]")
    return value


def _require(table: dict, key: str, where: str):
    if key not in table:
        raise ConfigError(f"{where}: missing required key {key!r}")
    return table[key]


def _friction(table: dict, where: str) -> FrictionModel:
    mode = table.get("mode", "infinite")
    if mode == "infinite":
        return FrictionModel.infinite()
    if mode == "finite":
        mu = _require(table, "mu", where)
        if not isinstance(mu, (int, float)):
            raise ConfigError(f"{where}.mu: expected a dimensionless number")
        return FrictionModel.finite(float(mu))
    raise ConfigError(f"{where}.mode: expected 'finite' or 'infinite', got {mode!r}")


def _cam_geometry(table: dict, friction: FrictionModel, where: str) -> tuple:
    idler = IdlerSpec(
        radius=parse_quantity(_require(table, "idler_radius", where), "length",
                              f"{where}.idler_radius"),
        vertical_offset=parse_quantity(table.get("idler_offset", 0.0), "length",
                                       f"{where}.idler_offset"),
    )
    if "mu" in table:
        friction = FrictionModel.finite(float(table["mu"]))
    geom = CamGeometry(
        idler=idler,
        rho_min=parse_quantity(_require(table, "rho_min", where), "length",
                               f"{where}.rho_min"),
        rho_max=parse_quantity(_require(table, "rho_max", where), "length",
                               f"{where}.rho_max"),
        theta_min=parse_quantity(table.get("theta_min", 0.0), "angle",
                                 f"{where}.theta_min"),
        theta_max=parse_quantity(_require(table, "theta_max", where), "angle",
                                 f"{where}.theta_max"),
        friction=friction,
        phi_max=parse_quantity(table.get("phi_max", 2.5), "angle", f"{where}.phi_max"),
    )
    beta = _require(table, "beta_init_m", where)
    if (not isinstance(beta, list) or not beta
            or not all(isinstance(b, (int, float)) for b in beta)):
        raise ConfigError(f"{where}.beta_init_m: expected a list of numbers (meters, "
                          "lowest power first)")
    return geom, tuple(float(b) for b in beta)


def _springs(table: dict, n_springs: int, base: Path) -> tuple:
    """Spring specs plus initial pre-extensions from inline tables or a catalog."""
    where = "springs"
    if "catalog" in table:
        catalog = load_spring_catalog(base / str(table["catalog"]))
        names = _require(table, "use", where)
        if not isinstance(names, list) or len(names) != n_springs:
            raise ConfigError(f"{where}.use: expected {n_springs} catalog names")
        pre = table.get("x_pre_init", [0.0] * n_springs)
        if not isinstance(pre, list) or len(pre) != n_springs:
            raise ConfigError(f"{where}.x_pre_init: expected {n_springs} entries")
        specs = []
        for name in names:
            if name not in catalog:
                raise ConfigError(f"{where}.use: {name!r} not found in catalog "
                                  f"(has {sorted(catalog)})")
            specs.append(catalog[name])
        x_pre = tuple(parse_quantity(p, "length", f"{where}.x_pre_init") for p in pre)
        return tuple(specs), x_pre
    specs = []
    x_pre = []
    for i in range(n_springs):
        name = f"spring{i + 1}"
        sub = _section(table, name, where)
        sw = f"{where}.{name}"
        specs.append(SpringSpec(
            k=parse_quantity(_require(sub, "k", sw), "stiffness", f"{sw}.k"),
            x_pre=0.0,
            x_max=parse_quantity(_require(sub, "x_max", sw), "length", f"{sw}.x_max"),
        ))
        x_pre.append(parse_quantity(sub.get("x_pre_init", 0.0), "length",
                                    f"{sw}.x_pre_init"))
    return tuple(specs), tuple(x_pre)


def load_spring_catalog(path) -> dict:
    """Named SpringSpec entries from a TOML catalog file."""
    raw = _read_toml(path)
    catalog = {}
    for name, entry in raw.items():
        if not isinstance(entry, dict):
            raise ConfigError(f"catalog entry {name!r}: expected a table")
        catalog[name] = SpringSpec(
            k=parse_quantity(_require(entry, "k", name), "stiffness", f"{name}.k"),
            x_pre=0.0,
            x_max=parse_quantity(_require(entry, "x_max", name), "length",
                                 f"{name}.x_max"),
        )
    return catalog


def _desired_torque(table: dict, dof: int, base: Path):
    kind = _require(table, "type", "desired_torque")
    where = "desired_torque"
    if kind == "rr_arm":
        params = RRArmParams(
            m1=parse_quantity(_require(table, "m1", where), "mass", f"{where}.m1"),
            m2=parse_quantity(_require(table, "m2", where), "mass", f"{where}.m2"),
            l1=parse_quantity(_require(table, "l1", where), "length", f"{where}.l1"),
            lc1=parse_quantity(_require(table, "lc1", where), "length", f"{where}.lc1"),
            lc2=parse_quantity(_require(table, "lc2", where), "length", f"{where}.lc2"),
            g=parse_quantity(table.get("g", 9.81), "acceleration", f"{where}.g"),
        )
        if dof == 1:
            raise ConfigError(f"{where}: rr_arm torque needs dof = 2")
        return (lambda t1, t2: rr_gravity_torques(params, t1, t2)), kind
    if kind == "polynomial":
        coeffs = _require(table, "coeffs_Nm", where)
        if not isinstance(coeffs, list) or not coeffs:
            raise ConfigError(f"{where}.coeffs_Nm: expected a list of numbers")
        coeffs = tuple(float(c) for c in coeffs)
        if dof == 1:
            return (lambda th: polynomial_torque(coeffs, th)), kind
        raise ConfigError(f"{where}: polynomial torque needs dof = 1")
    if kind == "table":
        path = base / str(_require(table, "path", where))
        if not path.exists():
            raise ConfigError(f"{where}.path: no such file {path}")
        tab = TabulatedTorque.from_csv(path)
        if tab.dof != dof:
            raise ConfigError(f"{where}: table is {tab.dof}-DOF but config is {dof}-DOF")
        return tab, kind
    raise ConfigError(f"{where}.type: unknown desired-torque type {kind!r}")


def _read_toml(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"no such config file: {path}")
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def load_run_config(path) -> RunConfig:
    """Parse and validate a design-run TOML file."""
    path = Path(path)
    raw = _read_toml(path)
    dof = raw.get("dof")
    if dof not in (1, 2):
        raise ConfigError("dof: must be 1 or 2")

    friction = _friction(raw.get("friction", {}), "friction")
    cams = []
    betas = []
    cam_names = ["cam1"] if dof == 1 else ["cam1", "cam2"]
    for name in cam_names:
        geom, beta = _cam_geometry(_section(raw, name, "config"), friction, name)
        cams.append(geom)
        betas.append(beta)

    springs, x_pre = _springs(_section(raw, "springs", "config"), dof + 1, path.parent)

    opt = raw.get("optimization", {})
    n_weights = 3 if dof == 1 else 8
    weights = opt.get("weights")
    if (not isinstance(weights, list) or len(weights) != n_weights
            or not all(isinstance(w, (int, float)) for w in weights)):
        raise ConfigError(f"optimization.weights: expected {n_weights} numbers")
    grid = opt.get("grid", [61] if dof == 1 else [31, 31])
    if isinstance(grid, int):
        grid = [grid] * dof
    if not isinstance(grid, list) or len(grid) != dof:
        raise ConfigError(f"optimization.grid: expected {dof} grid size(s)")

    tau_d, kind = _desired_torque(_section(raw, "desired_torque", "config"), dof,
                                  path.parent)

    try:
        mechanism = MechanismConfig(
            dof=dof, cams=tuple(cams), springs=springs,
            weights=tuple(float(w) for w in weights),
            grid=tuple(int(n) for n in grid),
            n_quad=int(opt.get("n_quad", 512)),
            n_shape=int(opt.get("n_shape", 128)),
        )
    except InvalidGeometryError as exc:
        raise ConfigError(f"mechanism: {exc}") from exc

    initial = DesignVector(betas=tuple(betas), x_pre=x_pre)
    return RunConfig(
        mechanism=mechanism,
        initial=initial,
        tau_d=tau_d,
        torque_kind=kind,
        max_iterations=int(opt.get("max_iterations", 300)),
        restarts=int(opt.get("restarts", 0)),
        seed=int(opt.get("seed", 0)),
    )
