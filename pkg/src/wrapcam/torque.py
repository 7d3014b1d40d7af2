"""Cam torque under point-force (infinite friction) and capstan wire models.

With infinite friction the wire force is a single tangential pull at the
contact; with finite friction the tension decays exponentially toward the
anchor and the wire presses on the cam along the whole wrapped arc.  Both
models add the idler spring's normal force at the contact point.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import DomainError, InvalidGeometryError
from .geometry import CamProfile, PlanePoint, body_curve, polyval_d2
from .springs import (CamContactState, ExtensionState, normal_extension_delta,
                      normal_spring_extension, wrap_spring_extension)
from .tangency import IdlerSpec, TangencySolution, solve_tangency

if TYPE_CHECKING:  # pragma: no cover - typing only
    from .optimizer import MechanismConfig

INFINITE = "infinite"
FINITE = "finite"

DEFAULT_QUAD = 512


@dataclass(frozen=True)
class FrictionModel:
    """Wire/cam friction model: `infinite` (point force) or `finite` (capstan)."""

    mode: str
    mu: float = 0.0

    def __post_init__(self):
        if self.mode not in (INFINITE, FINITE):
            raise InvalidGeometryError(f"unknown friction mode {self.mode!r}")
        if self.mu < 0.0 or not math.isfinite(self.mu):
            raise InvalidGeometryError("friction coefficient must be >= 0")

    @classmethod
    def infinite(cls) -> "FrictionModel":
        return cls(mode=INFINITE)

    @classmethod
    def finite(cls, mu: float) -> "FrictionModel":
        return cls(mode=FINITE, mu=mu)


@dataclass(frozen=True)
class WireState:
    """Wire tension at the cam/idler contact, wrapped up to wrap angle alpha."""

    tension_at_contact: float
    alpha: float

    def __post_init__(self):
        if self.tension_at_contact < 0.0:
            raise InvalidGeometryError("wire tension must be non-negative")


@dataclass(frozen=True)
class TorqueBreakdown:
    """Scalar z-torque on a cam split into wrap-spring and idler-spring parts."""

    total: float
    wrap: float
    normal: float


@dataclass(frozen=True)
class ContactGeometry:
    """Contact point with unit tangent/normal and their torque moment arms."""

    point: PlanePoint
    tangent: PlanePoint
    normal: PlanePoint
    wrap_arm: float      # z-moment of a unit tangential force at the contact
    normal_arm: float    # z-moment of a unit normal force at the contact


def _cross_z(ax, ay, bx, by):
    return ax * by - ay * bx


def contact_geometry(profile: CamProfile, theta: float,
                     sol: TangencySolution) -> ContactGeometry:
    """World-frame contact frame at a solved tangency.

    The normal is the derivative direction of the unit tangent, flipped if
    needed so it presses from the idler into the cam.
    """
    alpha, gamma = sol.alpha, sol.gamma
    rho, d1, d2 = polyval_d2(profile.coeffs, alpha)
    a = alpha - theta
    ca, sa = math.cos(a), math.sin(a)
    tx = d1 * ca - rho * sa
    ty = d1 * sa + rho * ca
    nrm2 = rho * rho + d1 * d1
    nrm = math.sqrt(nrm2)
    if nrm < 1e-12:
        raise InvalidGeometryError(f"degenerate tangent at alpha={alpha:.4f}")
    ux, uy = tx / nrm, ty / nrm
    dtx = (d2 - rho) * ca - 2.0 * d1 * sa
    dty = (d2 - rho) * sa + 2.0 * d1 * ca
    dn = d1 * (rho + d2) / nrm
    dux = dtx / nrm - tx * dn / nrm2
    duy = dty / nrm - ty * dn / nrm2
    dnorm = math.hypot(dux, duy)
    if dnorm < 1e-12:
        raise InvalidGeometryError(f"undefined contact normal at alpha={alpha:.4f}")
    nx, ny = dux / dnorm, duy / dnorm
    # positive contact pressure: the normal points from the idler center into
    # the contact, i.e. along (cos gamma, sin gamma)
    if nx * math.cos(gamma) + ny * math.sin(gamma) < 0.0:
        nx, ny = -nx, -ny
    px, py = rho * ca, rho * sa
    return ContactGeometry(
        point=PlanePoint(px, py),
        tangent=PlanePoint(ux, uy),
        normal=PlanePoint(nx, ny),
        wrap_arm=_cross_z(px, py, ux, uy),
        normal_arm=_cross_z(px, py, nx, ny),
    )


def wire_tension(eta_alpha: float, mu: float, alpha: float, phi) -> float:
    """Capstan tension eta(phi) = eta(alpha) * exp(mu (phi - alpha)), phi in [0, alpha]."""
    phi_arr = np.asarray(phi, dtype=float)
    if np.any(phi_arr < -1e-12) or np.any(phi_arr > alpha + 1e-12):
        raise DomainError(f"phi must lie in [0, {alpha}], got {phi}")
    out = eta_alpha * np.exp(mu * (phi_arr - alpha))
    return float(out) if np.isscalar(phi) else out


def wire_internal_force(profile: CamProfile, phi, wire: WireState, mu: float):
    """Wire internal force psi(phi): tension along the local wire tangent."""
    r, r1, _ = body_curve(profile, phi)
    eta = wire_tension(wire.tension_at_contact, mu, wire.alpha, phi)
    nrm = np.linalg.norm(r1, axis=-1, keepdims=True)
    return np.asarray(eta)[..., None] * r1 / nrm


def wire_internal_force_derivative(profile: CamProfile, phi, wire: WireState, mu: float):
    """Analytic d psi / d phi.

    Derivative of eta(phi) r'/|r'|; the projection term removes the component
    of r'' along r' so that psi stays tangent with magnitude eta.
    """
    _, r1, r2 = body_curve(profile, phi)
    eta = np.asarray(wire_tension(wire.tension_at_contact, mu, wire.alpha, phi))
    nrm2 = np.sum(r1 * r1, axis=-1)
    nrm = np.sqrt(nrm2)
    dot = np.sum(r1 * r2, axis=-1)
    bracket = mu * r1 + r2 - r1 * (dot / nrm2)[..., None]
    return (eta / nrm)[..., None] * bracket


def distributed_wire_force(profile: CamProfile, phi, wire: WireState, mu: float):
    """Distributed load f(phi) on the wire from the cam, per unit wrap angle.

    Force balance gives f = -psi'.  Its component along the wire tangent is
    the friction traction, the perpendicular remainder the contact pressure.
    """
    return -wire_internal_force_derivative(profile, phi, wire, mu)


def _simpson_weights(n: int) -> np.ndarray:
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-2:2] = 2.0
    return w


def wrap_torque_finite_batch(coeffs, alphas, etas, mu: float,
                             n: int = DEFAULT_QUAD) -> np.ndarray:
    """Capstan wrap torque for many contacts of one cam at once.

    For each (alpha_i, eta_i): anchor moment of psi(0) plus the Simpson
    integral of the distributed-load moment over [0, alpha_i].  The z-moment
    integrand collapses to scalars:
        cross(r, psi') = eta/|r'| (mu rho^2 + 2 rho rho' - rho^2 rho'(rho+rho'')/|r'|^2)
    """
    alphas = np.asarray(alphas, dtype=float)
    etas = np.asarray(etas, dtype=float)
    n = int(n)
    if n % 2:
        n += 1
    t = np.linspace(0.0, 1.0, n + 1)
    phi = alphas[..., None] * t
    rho, d1, d2 = polyval_d2(coeffs, phi)
    nrm2 = rho * rho + d1 * d1
    nrm = np.sqrt(nrm2)
    eta = etas[..., None] * np.exp(mu * (phi - alphas[..., None]))
    integrand = eta / nrm * (mu * rho * rho + 2.0 * rho * d1
                             - rho * rho * d1 * (rho + d2) / nrm2)
    w = _simpson_weights(n)
    integral = (alphas / (3.0 * n)) * (integrand @ w)
    rho0 = coeffs[0]
    d10 = coeffs[1] if len(coeffs) > 1 else 0.0
    anchor = etas * np.exp(-mu * alphas) * rho0 * rho0 / math.hypot(rho0, d10)
    return anchor + integral


def cam_torque_finite(profile: CamProfile, wire: WireState, mu: float,
                      n: int = DEFAULT_QUAD) -> float:
    """z-torque applied by the wrapped wire on the cam under capstan friction.

    The caller supplies the contact tension (wrap-spring rate times extension);
    the idler spring's normal contribution is not included here and adds on
    exactly as in the infinite-friction model.
    """
    return float(wrap_torque_finite_batch(profile.coeffs, wire.alpha,
                                          wire.tension_at_contact, mu, n=n))


def cam_torque_infinite(profile: CamProfile, idler: IdlerSpec, theta: float,
                        sol: TangencySolution, k1: float, x1: float,
                        k2: float, x2: float) -> TorqueBreakdown:
    """z-torque on the cam with both spring forces lumped at the contact point."""
    geom = contact_geometry(profile, theta, sol)
    wrap = k1 * x1 * geom.wrap_arm
    normal = k2 * x2 * geom.normal_arm
    return TorqueBreakdown(total=wrap + normal, wrap=wrap, normal=normal)


def solve_extension_state(mech: "MechanismConfig", theta1: float,
                          theta2: float | None = None,
                          n_quad: int = DEFAULT_QUAD) -> tuple:
    """Solve all contacts and spring extensions at one joint configuration.

    Returns (ExtensionState, per-cam CamContactState list).  For two-cam
    mechanisms spring 2 couples the idler carriages, so its extension carries
    one travel contribution per cam.
    """
    if any(cam.profile is None for cam in mech.cams):
        raise InvalidGeometryError(
            "mechanism has no cam profiles bound; use config.with_design(design)")
    thetas = (theta1,) if mech.dof == 1 else (theta1, theta2)
    if mech.dof == 2 and theta2 is None:
        raise InvalidGeometryError("two-DOF mechanism needs both joint angles")
    states = []
    for cam, theta in zip(mech.cams, thetas):
        sol0 = solve_tangency(cam.profile, cam.idler, 0.0)
        sol = solve_tangency(cam.profile, cam.idler, theta,
                             guess=(sol0.alpha, sol0.gamma))
        states.append(CamContactState(cam.profile, cam.idler, theta, sol, sol0))
    x1 = wrap_spring_extension(states[0].profile, states[0].idler, thetas[0],
                               states[0].sol, states[0].sol0,
                               mech.springs[0].x_pre, n_quad=n_quad)
    if mech.dof == 1:
        x2 = normal_spring_extension(states[0].profile, states[0].idler, thetas[0],
                                     states[0].sol, states[0].sol0,
                                     mech.springs[1].x_pre)
        return ExtensionState(x1=x1, x2=x2), states
    x3 = wrap_spring_extension(states[1].profile, states[1].idler, thetas[1],
                               states[1].sol, states[1].sol0,
                               mech.springs[2].x_pre, n_quad=n_quad)
    deltas = tuple(
        normal_extension_delta(s.profile, s.idler, s.theta, s.sol, s.sol0)
        for s in states)
    x2 = mech.springs[1].x_pre + deltas[0] + deltas[1]
    return ExtensionState(x1=x1, x2=x2, x3=x3, coupling_contributions=deltas), states


def cam_torques_2dof(mech: "MechanismConfig", theta1: float, theta2: float,
                     n_quad: int = DEFAULT_QUAD) -> tuple:
    """Torques (tau1, tau2) of a two-cam mechanism at joint angles (theta1, theta2).

    Springs 1 and 3 wrap cams 1 and 2; spring 2 joins the idler carriages and
    presses both contacts, coupling the joints.  One-shot convenience: solves
    all tangencies fresh (grid studies use the evaluator in the optimizer
    module instead).
    """
    if mech.dof != 2:
        raise InvalidGeometryError("cam_torques_2dof needs a two-DOF mechanism")
    ext, states = solve_extension_state(mech, theta1, theta2, n_quad=n_quad)
    k2 = mech.springs[1].k
    taus = []
    wrap_specs = ((mech.springs[0].k, ext.x1), (mech.springs[2].k, ext.x3))
    for state, cam, (kw, xw) in zip(states, mech.cams, wrap_specs):
        geom = contact_geometry(state.profile, state.theta, state.sol)
        if cam.friction.mode == FINITE:
            wrap = cam_torque_finite(state.profile, WireState(kw * xw, state.sol.alpha),
                                     cam.friction.mu, n=n_quad)
        else:
            wrap = kw * xw * geom.wrap_arm
        taus.append(wrap + k2 * ext.x2 * geom.normal_arm)
    return taus[0], taus[1]


def cam_torque_1dof(profile: CamProfile, idler: IdlerSpec, theta: float,
                    sol: TangencySolution, sol0: TangencySolution,
                    spring1, spring2, friction: FrictionModel,
                    n_quad: int = DEFAULT_QUAD) -> TorqueBreakdown:
    """Full single-cam torque from solved contacts and spring specs."""
    x1 = wrap_spring_extension(profile, idler, theta, sol, sol0, spring1.x_pre,
                               n_quad=n_quad)
    x2 = normal_spring_extension(profile, idler, theta, sol, sol0, spring2.x_pre)
    geom = contact_geometry(profile, theta, sol)
    if friction.mode == FINITE:
        wrap = cam_torque_finite(profile, WireState(spring1.k * x1, sol.alpha),
                                 friction.mu, n=n_quad)
    else:
        wrap = spring1.k * x1 * geom.wrap_arm
    normal = spring2.k * x2 * geom.normal_arm
    return TorqueBreakdown(total=wrap + normal, wrap=wrap, normal=normal)


def export_torque_grid_csv(theta1_grid, theta2_grid, tau1_grid, tau2_grid, path) -> None:
    """Write torque grids as CSV `theta1_rad,theta2_rad,tau1_Nmm,tau2_Nmm`."""
    tau1 = np.asarray(tau1_grid)
    tau2 = np.asarray(tau2_grid)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theta1_rad", "theta2_rad", "tau1_Nmm", "tau2_Nmm"])
        for i, t1 in enumerate(theta1_grid):
            for j, t2 in enumerate(theta2_grid):
                writer.writerow([f"{t1:.9f}", f"{t2:.9f}",
                                 f"{tau1[i, j] * 1e3:.6f}", f"{tau2[i, j] * 1e3:.6f}"])
