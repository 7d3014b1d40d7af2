"""Constrained design optimization of wire-wrapped cam mechanisms.

The design vector is the cam polynomial coefficients (per cam) plus the
spring pre-extensions.  A forward grid evaluator computes torques,
extensions and rate sensitivities over the joint-angle grid with
warm-started tangency solves; sequential quadratic programming (SLSQP)
minimizes the weighted torque-matching plus sensitivity objective subject
to convexity, radius-window and spring-travel constraints sampled on
dense grids.
"""
from __future__ import annotations

import math
import time
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import (InfeasibleGeometryError, InvalidGeometryError,
                     MaxIterationsError, NoFeasiblePointError,
                     NonConvergenceError)
from .geometry import CamProfile, polyval_d2
from .sensitivity import smooth_abs
from .springs import SpringSpec
from .tangency import _default_guess_raw, _solve_raw
from .torque import FINITE, wrap_torque_finite_batch

LENGTH_SCALE = 0.01       # m; design variables and length constraints in cm-ish units
CONVEXITY_MARGIN = 1e-6   # m^2, clearance kept on the convexity constraint
EXTENSION_MARGIN = 1e-6   # m, clearance kept on strict length inequalities
FEASIBILITY_TOL = 1e-8    # scaled units, for accepting a design as feasible
FD_REL_STEP = 1e-7
PENALTY_BASE = 1e6
SHAPE_PAD = 0.2           # rad beyond the largest observed wrap angle
CACHE_SIZE = 64

_SENS_NAMES_2DOF = ("dtau1_dk1", "dtau1_dk2", "dtau1_dk3",
                    "dtau2_dk1", "dtau2_dk2", "dtau2_dk3")


@dataclass(frozen=True)
class CamGeometry:
    """Fixed per-cam data: idler, radius window, joint range and friction."""

    idler: object
    rho_min: float
    rho_max: float
    theta_min: float
    theta_max: float
    friction: object
    phi_max: float = 2.5
    profile: CamProfile | None = None

    def __post_init__(self):
        if not self.rho_min < self.rho_max:
            raise NoFeasiblePointError(
                f"empty cam radius window [{self.rho_min}, {self.rho_max}]")
        if self.rho_min <= 0.0:
            raise InvalidGeometryError("rho_min must be positive")
        if not self.theta_min < self.theta_max:
            raise InvalidGeometryError("need theta_min < theta_max")

    def with_profile(self, profile: CamProfile) -> "CamGeometry":
        return CamGeometry(idler=self.idler, rho_min=self.rho_min,
                           rho_max=self.rho_max, theta_min=self.theta_min,
                           theta_max=self.theta_max, friction=self.friction,
                           phi_max=self.phi_max, profile=profile)


@dataclass(frozen=True)
class MechanismConfig:
    """Complete fixed description of a 1- or 2-DOF mechanism design task."""

    dof: int
    cams: tuple
    springs: tuple
    weights: tuple
    grid: tuple
    n_quad: int = 512
    n_shape: int = 128

    def __post_init__(self):
        object.__setattr__(self, "cams", tuple(self.cams))
        object.__setattr__(self, "springs", tuple(self.springs))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "grid", tuple(int(n) for n in self.grid))
        if self.dof not in (1, 2):
            raise InvalidGeometryError("dof must be 1 or 2")
        if len(self.cams) != self.dof:
            raise InvalidGeometryError(f"{self.dof}-DOF mechanism needs {self.dof} cam(s)")
        n_springs = self.dof + 1
        if len(self.springs) != n_springs:
            raise InvalidGeometryError(f"{self.dof}-DOF mechanism needs {n_springs} springs")
        n_weights = 3 if self.dof == 1 else 8
        if len(self.weights) != n_weights:
            raise InvalidGeometryError(f"{self.dof}-DOF objective needs {n_weights} weights")
        if any(w < 0 for w in self.weights):
            raise InvalidGeometryError("weights must be non-negative")
        if len(self.grid) != self.dof or any(n < 2 for n in self.grid):
            raise InvalidGeometryError("grid needs one resolution >= 2 per DOF")

    def theta_axes(self) -> list:
        return [np.linspace(cam.theta_min, cam.theta_max, n)
                for cam, n in zip(self.cams, self.grid)]

    def wrap_spring_index(self, cam_idx: int) -> int:
        """Spring wrapped around cam `cam_idx` (the middle spring is the idler one)."""
        return 0 if cam_idx == 0 else self.dof

    def with_design(self, design: "DesignVector") -> "MechanismConfig":
        """Bind a design's profiles and pre-extensions into the config."""
        cams = tuple(
            cam.with_profile(CamProfile(beta, cam.phi_max))
            for cam, beta in zip(self.cams, design.betas))
        springs = tuple(
            SpringSpec(k=s.k, x_pre=xp, x_max=s.x_max)
            for s, xp in zip(self.springs, design.x_pre))
        return MechanismConfig(dof=self.dof, cams=cams, springs=springs,
                               weights=self.weights, grid=self.grid,
                               n_quad=self.n_quad, n_shape=self.n_shape)


@dataclass(frozen=True)
class DesignVector:
    """Free parameters of a design: cam coefficients and spring pre-extensions."""

    betas: tuple
    x_pre: tuple

    def __post_init__(self):
        object.__setattr__(self, "betas",
                           tuple(tuple(float(b) for b in beta) for beta in self.betas))
        object.__setattr__(self, "x_pre", tuple(float(x) for x in self.x_pre))

    def flatten(self) -> np.ndarray:
        return np.array([b for beta in self.betas for b in beta] + list(self.x_pre))

    @classmethod
    def unflatten(cls, x, beta_sizes) -> "DesignVector":
        x = np.asarray(x, dtype=float)
        betas = []
        at = 0
        for n in beta_sizes:
            betas.append(tuple(x[at:at + n]))
            at += n
        return cls(betas=tuple(betas), x_pre=tuple(x[at:]))


@dataclass
class DesignReport:
    """Optimization outcome: design, fit metrics, margins and grids."""

    design: DesignVector
    objective: float
    rmse: tuple               # N*m per cam
    max_error: tuple          # N*m per cam
    iterations: int
    runtime_s: float
    feasible: bool
    worst_margin: float       # scaled units; >= -FEASIBILITY_TOL when feasible
    margins: dict
    theta_axes: list
    torque_grids: tuple
    desired_grids: tuple
    extensions: dict
    sensitivities: dict
    alpha_spans: tuple
    objective_history: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    @property
    def rmse_Nmm(self) -> tuple:
        return tuple(1e3 * v for v in self.rmse)

    @property
    def max_error_Nmm(self) -> tuple:
        return tuple(1e3 * v for v in self.max_error)


def evaluate_metrics(torque_grid, tau_d_grid) -> tuple:
    """(RMSE, max abs error) between achieved and desired torque grids."""
    a = np.asarray(torque_grid, dtype=float)
    b = np.asarray(tau_d_grid, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"grid shapes differ: {a.shape} vs {b.shape}")
    diff = a - b
    return float(np.sqrt(np.mean(diff * diff))), float(np.max(np.abs(diff)))


def _trapz_nd(values, axes) -> float:
    g = np.asarray(values, dtype=float)
    for ax in reversed(axes):
        g = g if ax.size == 1 else np.trapezoid(g, ax, axis=-1)
    return float(np.squeeze(g))


def desired_torque_grids(config: MechanismConfig, tau_d, axes=None) -> tuple:
    """Evaluate the desired torque callable(s) on the mechanism's grid axes."""
    if axes is None:
        axes = config.theta_axes()
    if config.dof == 1:
        return (np.asarray(tau_d(axes[0]), dtype=float),)
    t1 = axes[0][:, None]
    t2 = axes[1][None, :]
    if isinstance(tau_d, (tuple, list)):
        f1, f2 = tau_d
        out = (f1(t1, t2), f2(t1, t2))
    else:
        out = tau_d(t1, t2)
    shape = (axes[0].size, axes[1].size)
    g1 = np.broadcast_to(np.asarray(out[0], dtype=float), shape).copy()
    g2 = np.broadcast_to(np.asarray(out[1], dtype=float), shape).copy()
    return g1, g2


@dataclass
class _Eval:
    """One forward evaluation of a candidate design on the grid."""

    x: np.ndarray
    objective: float
    constraints: np.ndarray
    solved: bool                  # tangency succeeded everywhere
    torque_grids: tuple = ()
    desired_grids: tuple = ()
    extensions: dict = field(default_factory=dict)
    sensitivities: dict = field(default_factory=dict)
    alpha_spans: tuple = ()
    margins: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    @property
    def worst_margin(self) -> float:
        return float(np.min(self.constraints))

    @property
    def feasible(self) -> bool:
        return self.solved and self.worst_margin >= -FEASIBILITY_TOL


class GridEvaluator:
    """Forward model of one design task on fixed joint-angle grids.

    Keeps per-grid-point tangency warm starts between evaluations and an LRU
    cache of full evaluations so that finite-difference sweeps reuse work.
    """

    def __init__(self, config: MechanismConfig, tau_d, beta_sizes):
        self.config = config
        self.beta_sizes = tuple(int(n) for n in beta_sizes)
        self.axes = config.theta_axes()
        self.desired = desired_torque_grids(config, tau_d, self.axes)
        self._warm = [None] * config.dof
        self._warm0 = [None] * config.dof
        self._span = [cam.theta_max + 0.5 for cam in config.cams]
        self._cache = OrderedDict()
        self.cache_hits = 0
        self.cache_misses = 0
        self.penalty_evals = 0

    # -- tangency sweeps -----------------------------------------------------

    def _sweep_cam(self, idx: int, coeffs) -> tuple:
        """Contact angles for cam `idx` along its theta axis plus the theta=0 reference."""
        cam = self.config.cams[idx]
        r, a0 = cam.idler.radius, cam.idler.vertical_offset
        thetas = self.axes[idx]

        guess0 = self._warm0[idx] or _default_guess_raw(coeffs, cam.phi_max, r, a0, 0.0)
        alpha0, gamma0, _ = _solve_raw(coeffs, cam.phi_max, r, a0, 0.0, guess0)
        self._warm0[idx] = (alpha0, gamma0)

        warm = self._warm[idx]
        alphas = np.empty(thetas.size)
        gammas = np.empty(thetas.size)
        prev = (alpha0, gamma0)
        for k, theta in enumerate(thetas):
            guess = warm[k] if warm is not None else prev
            try:
                a, g, _ = _solve_raw(coeffs, cam.phi_max, r, a0, theta, guess)
            except (NonConvergenceError, InvalidGeometryError):
                if warm is None:
                    raise
                a, g, _ = _solve_raw(coeffs, cam.phi_max, r, a0, theta, prev)
            alphas[k] = a
            gammas[k] = g
            prev = (a, g)
        self._warm[idx] = list(zip(alphas, gammas))
        return (alpha0, gamma0), alphas, gammas

    # -- vectorized helpers ----------------------------------------------------

    @staticmethod
    def _arc_from_reference(coeffs, alpha0, alphas, n):
        """Signed cam arc length from alpha0 to each alpha (batched Simpson)."""
        alphas = np.asarray(alphas, dtype=float)
        if n % 2:
            n += 1
        t = np.linspace(0.0, 1.0, n + 1)
        span = alphas - alpha0
        phi = alpha0 + span[:, None] * t
        rho, d1, _ = polyval_d2(coeffs, phi)
        w = np.ones(n + 1)
        w[1:-1:2] = 4.0
        w[2:-2:2] = 2.0
        return (span / (3.0 * n)) * (np.hypot(rho, d1) @ w)

    @staticmethod
    def _contact_arms(coeffs, alphas, thetas, gammas) -> tuple:
        """Moment arms of unit tangential and unit normal forces at the contacts."""
        rho, d1, d2 = polyval_d2(coeffs, alphas)
        a = alphas - thetas
        ca, sa = np.cos(a), np.sin(a)
        nrm2 = rho * rho + d1 * d1
        nrm = np.sqrt(nrm2)
        wrap_arm = rho * rho / nrm
        tx = d1 * ca - rho * sa
        ty = d1 * sa + rho * ca
        dtx = (d2 - rho) * ca - 2.0 * d1 * sa
        dty = (d2 - rho) * sa + 2.0 * d1 * ca
        dn = d1 * (rho + d2) / nrm
        dux = dtx / nrm - tx * dn / nrm2
        duy = dty / nrm - ty * dn / nrm2
        dnorm = np.hypot(dux, duy)
        with np.errstate(divide="ignore", invalid="ignore"):
            nx = dux / dnorm
            ny = duy / dnorm
        # press from the idler center into the contact: along (cos g, sin g)
        flip = nx * np.cos(gammas) + ny * np.sin(gammas) < 0.0
        nx = np.where(flip, -nx, nx)
        ny = np.where(flip, -ny, ny)
        normal_arm = rho * (ca * ny - sa * nx)
        return wrap_arm, normal_arm

    def _wrap_torque(self, cam, coeffs, alphas, tensions, wrap_arm):
        if cam.friction.mode == FINITE:
            return wrap_torque_finite_batch(coeffs, alphas, tensions,
                                            cam.friction.mu, n=self.config.n_quad)
        return tensions * wrap_arm

    def _extension_sizes(self) -> list:
        n = [ax.size for ax in self.axes]
        if self.config.dof == 1:
            return [n[0], n[0]]
        return [n[0], n[0] * n[1], n[1]]

    def _rho_positive(self, idx: int, coeffs) -> bool:
        span = max(self._span[idx], self.config.cams[idx].theta_max + 0.5)
        rho = polyval_d2(coeffs, np.linspace(0.0, span, 256))[0]
        return bool(np.all(rho > 0.0))

    # -- main entry ------------------------------------------------------------

    def evaluate(self, x) -> _Eval:
        x = np.asarray(x, dtype=float)
        key = x.tobytes()
        hit = self._cache.get(key)
        if hit is not None:
            self._cache.move_to_end(key)
            self.cache_hits += 1
            return hit
        self.cache_misses += 1
        ev = self._evaluate_impl(x)
        self._cache[key] = ev
        if len(self._cache) > CACHE_SIZE:
            self._cache.popitem(last=False)
        return ev

    def _evaluate_impl(self, x: np.ndarray) -> _Eval:
        cfg = self.config
        design = DesignVector.unflatten(x, self.beta_sizes)
        coeffs_per_cam = [tuple(b) for b in design.betas]
        x_pre = design.x_pre

        sweeps = []
        for idx, coeffs in enumerate(coeffs_per_cam):
            if not self._rho_positive(idx, coeffs):
                return self._penalty_eval(x, coeffs_per_cam, x_pre,
                                          "non-positive cam radius")
            try:
                sweeps.append(self._sweep_cam(idx, coeffs))
            except (NonConvergenceError, InvalidGeometryError) as exc:
                return self._penalty_eval(x, coeffs_per_cam, x_pre, str(exc))

        wrap_ext = []      # wrap-spring extension along the cam's own axis
        normal_delta = []  # idler travel along the cam's own axis
        wrap_arms = []
        normal_arms = []
        spans = []
        for idx, (coeffs, ((alpha0, gamma0), alphas, gammas)) in enumerate(
                zip(coeffs_per_cam, sweeps)):
            cam = cfg.cams[idx]
            thetas = self.axes[idx]
            arc = self._arc_from_reference(coeffs, alpha0, alphas, cfg.n_quad)
            wrap_ext.append(arc + cam.idler.radius * (gammas - gamma0)
                            + x_pre[cfg.wrap_spring_index(idx)])
            rho_c = polyval_d2(coeffs, alphas)[0]
            rho_c0 = polyval_d2(coeffs, alpha0)[0]
            ref = rho_c0 * math.cos(alpha0) - cam.idler.radius * math.cos(gamma0)
            normal_delta.append(rho_c * np.cos(alphas - thetas)
                                - cam.idler.radius * np.cos(gammas) - ref)
            wa, na = self._contact_arms(coeffs, alphas, thetas, gammas)
            if not (np.all(np.isfinite(wa)) and np.all(np.isfinite(na))):
                return self._penalty_eval(x, coeffs_per_cam, x_pre,
                                          "degenerate contact frame")
            wrap_arms.append(wa)
            normal_arms.append(na)
            span = float(max(np.max(alphas), alpha0)) + SHAPE_PAD
            spans.append(span)
            self._span[idx] = span

        if cfg.dof == 1:
            return self._assemble_1dof(x, coeffs_per_cam, x_pre, sweeps, wrap_ext,
                                       normal_delta, wrap_arms, normal_arms, spans)
        return self._assemble_2dof(x, coeffs_per_cam, x_pre, sweeps, wrap_ext,
                                   normal_delta, wrap_arms, normal_arms, spans)

    # -- assembly ----------------------------------------------------------------

    def _assemble_1dof(self, x, coeffs_per_cam, x_pre, sweeps, wrap_ext,
                       normal_delta, wrap_arms, normal_arms, spans) -> _Eval:
        cfg = self.config
        cam = cfg.cams[0]
        coeffs = coeffs_per_cam[0]
        k1, k2 = cfg.springs[0].k, cfg.springs[1].k

        x1 = wrap_ext[0]
        x2 = normal_delta[0] + x_pre[1]
        tau_wrap = self._wrap_torque(cam, coeffs, sweeps[0][1], k1 * x1, wrap_arms[0])
        tau_normal = k2 * x2 * normal_arms[0]
        tau = tau_wrap + tau_normal
        dt_dk1 = tau_wrap / k1
        dt_dk2 = x2 * normal_arms[0]

        w1, w2, w3 = cfg.weights
        err = self.desired[0] - tau
        objective = w1 * _trapz_nd(err * err, self.axes)
        if w2:
            objective += w2 * _trapz_nd(smooth_abs(dt_dk1), self.axes)
        if w3:
            objective += w3 * _trapz_nd(smooth_abs(dt_dk2), self.axes)

        constraints, margins = self._constraints(coeffs_per_cam, spans,
                                                 [x1, x2], x_pre)
        return _Eval(
            x=x, objective=float(objective), constraints=constraints, solved=True,
            torque_grids=(tau,), desired_grids=self.desired,
            extensions={"x1": x1, "x2": x2},
            sensitivities={"dtau1_dk1": dt_dk1, "dtau1_dk2": dt_dk2},
            alpha_spans=tuple(spans), margins=margins,
            diagnostics={"alphas": (sweeps[0][1],), "gammas": (sweeps[0][2],),
                         "ref": (sweeps[0][0],)},
        )

    def _assemble_2dof(self, x, coeffs_per_cam, x_pre, sweeps, wrap_ext,
                       normal_delta, wrap_arms, normal_arms, spans) -> _Eval:
        cfg = self.config
        k1, k2, k3 = (s.k for s in cfg.springs)
        x1 = wrap_ext[0]                       # along theta1
        x3 = wrap_ext[1]                       # along theta2
        x2 = x_pre[1] + normal_delta[0][:, None] + normal_delta[1][None, :]

        tau11 = self._wrap_torque(cfg.cams[0], coeffs_per_cam[0], sweeps[0][1],
                                  k1 * x1, wrap_arms[0])
        tau23 = self._wrap_torque(cfg.cams[1], coeffs_per_cam[1], sweeps[1][1],
                                  k3 * x3, wrap_arms[1])
        tau12 = k2 * x2 * normal_arms[0][:, None]
        tau22 = k2 * x2 * normal_arms[1][None, :]
        tau1 = tau11[:, None] + tau12
        tau2 = tau23[None, :] + tau22

        zero = np.zeros_like(x2)
        sens = {
            "dtau1_dk1": np.broadcast_to((tau11 / k1)[:, None], x2.shape),
            "dtau1_dk2": x2 * normal_arms[0][:, None],
            "dtau1_dk3": zero,
            "dtau2_dk1": zero,
            "dtau2_dk2": x2 * normal_arms[1][None, :],
            "dtau2_dk3": np.broadcast_to((tau23 / k3)[None, :], x2.shape),
        }

        w = cfg.weights
        err1 = self.desired[0] - tau1
        err2 = self.desired[1] - tau2
        objective = _trapz_nd(w[0] * err1 * err1 + w[1] * err2 * err2, self.axes)
        for i, name in enumerate(_SENS_NAMES_2DOF):
            if w[2 + i]:
                objective += w[2 + i] * _trapz_nd(smooth_abs(sens[name]), self.axes)

        constraints, margins = self._constraints(coeffs_per_cam, spans,
                                                 [x1, x2, x3], x_pre)
        return _Eval(
            x=x, objective=float(objective), constraints=constraints, solved=True,
            torque_grids=(tau1, tau2), desired_grids=self.desired,
            extensions={"x1": x1, "x2": x2, "x3": x3},
            sensitivities=sens, alpha_spans=tuple(spans), margins=margins,
            diagnostics={"alphas": tuple(s[1] for s in sweeps),
                         "gammas": tuple(s[2] for s in sweeps),
                         "ref": tuple(s[0] for s in sweeps)},
        )

    def _constraints(self, coeffs_per_cam, spans, extensions, x_pre) -> tuple:
        cfg = self.config
        parts = []
        margins = {}
        for idx, (coeffs, span) in enumerate(zip(coeffs_per_cam, spans)):
            cam = cfg.cams[idx]
            cam_phi = np.linspace(0.0, span, cfg.n_shape)
            rho, d1, d2 = polyval_d2(coeffs, cam_phi)
            margin = rho * rho + 2.0 * d1 * d1 - rho * d2
            parts.append((margin - CONVEXITY_MARGIN) / LENGTH_SCALE ** 2)
            parts.append((rho - cam.rho_min - EXTENSION_MARGIN) / LENGTH_SCALE)
            parts.append((cam.rho_max - rho - EXTENSION_MARGIN) / LENGTH_SCALE)
            margins[f"cam{idx + 1}_min_convexity_m2"] = float(np.min(margin))
            margins[f"cam{idx + 1}_rho_range_m"] = (float(np.min(rho)), float(np.max(rho)))
        for i, ext in enumerate(extensions):
            lim = cfg.springs[i].x_max
            e = np.asarray(ext).ravel()
            parts.append(e / LENGTH_SCALE)
            parts.append((lim - EXTENSION_MARGIN - e) / LENGTH_SCALE)
            margins[f"x{i + 1}_range_m"] = (float(np.min(e)), float(np.max(e)))
        parts.append(np.asarray(x_pre) / LENGTH_SCALE)
        return np.concatenate(parts), margins

    def _penalty_eval(self, x, coeffs_per_cam, x_pre, reason: str) -> _Eval:
        """Large finite objective steering back toward solvable geometry.

        Keeps the constraint vector layout of regular evaluations: polynomial
        shape constraints stay exact, extension rows are marked violated.
        """
        self.penalty_evals += 1
        cfg = self.config
        parts = []
        viol = 0.0
        for idx, coeffs in enumerate(coeffs_per_cam):
            cam = cfg.cams[idx]
            cam_phi = np.linspace(0.0, self._span[idx], cfg.n_shape)
            rho, d1, d2 = polyval_d2(coeffs, cam_phi)
            margin = rho * rho + 2.0 * d1 * d1 - rho * d2
            parts.append((margin - CONVEXITY_MARGIN) / LENGTH_SCALE ** 2)
            parts.append((rho - cam.rho_min - EXTENSION_MARGIN) / LENGTH_SCALE)
            parts.append((cam.rho_max - rho - EXTENSION_MARGIN) / LENGTH_SCALE)
            viol += float(np.sum(np.maximum(cam.rho_min - rho, 0.0))
                          + np.sum(np.maximum(rho - cam.rho_max, 0.0))) / LENGTH_SCALE
        for size in self._extension_sizes():
            parts.append(np.full(size, -1.0))   # lower-bound rows
            parts.append(np.full(size, -1.0))   # travel-limit rows
        parts.append(np.asarray(x_pre) / LENGTH_SCALE)
        objective = PENALTY_BASE * (1.0 + viol / cfg.n_shape)
        return _Eval(x=np.asarray(x, dtype=float), objective=float(objective),
                     constraints=np.concatenate(parts), solved=False,
                     diagnostics={"penalty_reason": reason})


class _ScaledProblem:
    """Dimensionless view of the design problem for the SQP driver.

    Design variables are divided by a per-variable scale (LENGTH_SCALE shrunk
    by the wrap-angle power each coefficient multiplies, so every variable
    moves the radius by a comparable amount); objective and constraint
    gradients come from forward differences with a 1e-7 relative step, all
    routed through the evaluator's cache.  Tracks the best feasible design
    seen at any evaluated point.
    """

    def __init__(self, evaluator: GridEvaluator):
        self.ev = evaluator
        self.best_x = None
        self.best_objective = math.inf
        scale = []
        for cam, n in zip(evaluator.config.cams, evaluator.beta_sizes):
            span = cam.theta_max + 0.5
            scale.extend(LENGTH_SCALE / span ** j for j in range(n))
        scale.extend([LENGTH_SCALE] * len(evaluator.config.springs))
        self.scale = np.array(scale)

    def to_scaled(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) / self.scale

    def eval_scaled(self, xs) -> _Eval:
        e = self.ev.evaluate(np.asarray(xs, dtype=float) * self.scale)
        if e.feasible and e.objective < self.best_objective:
            self.best_objective = e.objective
            self.best_x = e.x.copy()
        return e

    def objective(self, xs) -> float:
        return self.eval_scaled(xs).objective

    def constraints(self, xs) -> np.ndarray:
        return self.eval_scaled(xs).constraints

    def _fd_points(self, xs):
        xs = np.asarray(xs, dtype=float)
        steps = FD_REL_STEP * np.maximum(np.abs(xs), 1.0)
        points = []
        for i, h in enumerate(steps):
            xp = xs.copy()
            xp[i] += h
            points.append((xp, h))
        return points

    def objective_grad(self, xs) -> np.ndarray:
        f0 = self.objective(xs)
        grad = np.empty(len(xs))
        for i, (xp, h) in enumerate(self._fd_points(xs)):
            grad[i] = (self.objective(xp) - f0) / h
        return grad

    def constraints_jac(self, xs) -> np.ndarray:
        c0 = self.constraints(xs)
        jac = np.empty((c0.size, len(xs)))
        for i, (xp, h) in enumerate(self._fd_points(xs)):
            jac[:, i] = (self.constraints(xp) - c0) / h
        return jac


def objective_1dof(design: DesignVector, config: MechanismConfig, tau_d) -> float:
    """Design objective of a single-cam mechanism (torque fit + sensitivities)."""
    if config.dof != 1:
        raise InvalidGeometryError("objective_1dof needs a 1-DOF config")
    ev = GridEvaluator(config, tau_d, [len(b) for b in design.betas])
    e = ev.evaluate(design.flatten())
    if not e.solved:
        raise InfeasibleGeometryError(
            f"tangency failed on the grid: {e.diagnostics.get('penalty_reason')}")
    return e.objective


def objective_2dof(design: DesignVector, config: MechanismConfig,
                   tau_d1, tau_d2) -> float:
    """Design objective of a two-cam mechanism (torque fits + six sensitivities)."""
    if config.dof != 2:
        raise InvalidGeometryError("objective_2dof needs a 2-DOF config")
    ev = GridEvaluator(config, (tau_d1, tau_d2), [len(b) for b in design.betas])
    e = ev.evaluate(design.flatten())
    if not e.solved:
        raise InfeasibleGeometryError(
            f"tangency failed on the grid: {e.diagnostics.get('penalty_reason')}")
    return e.objective


def optimize_design(config: MechanismConfig, tau_d, initial: DesignVector,
                    max_iterations: int = 150, restarts: int = 0, seed: int = 0,
                    ftol: float = 1e-12, callback=None) -> DesignReport:
    """Optimize cam coefficients and pre-extensions against the desired torque.

    Runs SLSQP from `initial` (plus `restarts` seeded jittered starts) and
    returns the best design that satisfies every sampled constraint within
    the feasibility tolerance.  Deterministic for fixed config, initial point
    and grid.  Raises NoFeasiblePointError when no evaluated point is
    feasible, MaxIterationsError when the iteration cap cut the search before
    any feasible point appeared.
    """
    t_start = time.perf_counter()
    # fail fast on an unsolvable reference configuration
    for cam, beta in zip(config.cams, initial.betas):
        try:
            _solve_raw(beta, cam.phi_max, cam.idler.radius,
                       cam.idler.vertical_offset, 0.0)
        except (NonConvergenceError, InvalidGeometryError) as exc:
            raise NoFeasiblePointError(
                f"initial design has no contact solution at theta=0: {exc}") from exc

    beta_sizes = [len(b) for b in initial.betas]
    rng = np.random.default_rng(seed)
    starts = [initial.flatten()]
    for _ in range(max(0, int(restarts))):
        x = initial.flatten()
        nb = sum(beta_sizes)
        x[:nb] *= 1.0 + 0.05 * rng.standard_normal(nb)
        x[nb:] = np.abs(x[nb:] + 0.002 * rng.standard_normal(len(x) - nb))
        starts.append(x)

    best = None            # (objective, x, evaluator, result, history, iters)
    hit_iteration_cap = False
    for x0 in starts:
        evaluator = GridEvaluator(config, tau_d, beta_sizes)
        problem = _ScaledProblem(evaluator)
        n_beta = sum(beta_sizes)
        bounds = [(None, None)] * n_beta + [(0.0, None)] * len(config.springs)
        history = []

        def record(_xs):
            history.append(problem.best_objective)
            if callback is not None:
                callback(problem.best_objective)

        # SLSQP restarts from the incumbent reset its quasi-Newton model,
        # which reliably recovers from premature line-search exits
        xs = problem.to_scaled(x0)
        iters = 0
        result = None
        for _ in range(4):
            prev_best = problem.best_objective
            result = minimize(
                problem.objective, xs, jac=problem.objective_grad, method="SLSQP",
                bounds=bounds,
                constraints=[{"type": "ineq", "fun": problem.constraints,
                              "jac": problem.constraints_jac}],
                options={"maxiter": int(max_iterations), "ftol": ftol},
                callback=record,
            )
            iters += int(result.nit)
            if result.status == 9:
                hit_iteration_cap = True
            if problem.best_x is None or result.status == 0:
                break
            improved = problem.best_objective < prev_best * (1.0 - 1e-6)
            if not improved and prev_best < math.inf:
                break
            xs = problem.to_scaled(problem.best_x)
        if problem.best_x is not None and (best is None
                                           or problem.best_objective < best[0]):
            best = (problem.best_objective, problem.best_x, evaluator,
                    result, history, iters)

    if best is None:
        if hit_iteration_cap:
            raise MaxIterationsError(
                "iteration cap reached before any feasible design was found")
        raise NoFeasiblePointError(
            "no design satisfying all constraints was found from this start")

    objective, x_best, evaluator, result, history, total_iters = best
    final = evaluator.evaluate(x_best)
    design = DesignVector.unflatten(x_best, beta_sizes)
    metrics = [evaluate_metrics(t, d)
               for t, d in zip(final.torque_grids, final.desired_grids)]
    runtime = time.perf_counter() - t_start
    return DesignReport(
        design=design,
        objective=objective,
        rmse=tuple(m[0] for m in metrics),
        max_error=tuple(m[1] for m in metrics),
        iterations=total_iters,
        runtime_s=runtime,
        feasible=final.feasible,
        worst_margin=final.worst_margin,
        margins=final.margins,
        theta_axes=evaluator.axes,
        torque_grids=final.torque_grids,
        desired_grids=final.desired_grids,
        extensions=final.extensions,
        sensitivities=final.sensitivities,
        alpha_spans=final.alpha_spans,
        objective_history=history,
        diagnostics={
            "solver_status": int(result.status),
            "solver_message": str(result.message),
            "cache_hits": evaluator.cache_hits,
            "cache_misses": evaluator.cache_misses,
            "penalty_evals": evaluator.penalty_evals,
        },
    )
