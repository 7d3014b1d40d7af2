"""Cam/idler contact solution.

The wire leaves the cam at a point where cam outline and idler circle share
a tangent line.  The contact is parameterized by the cam wrap angle alpha and
the idler angle gamma; both are recovered per cam rotation theta by damped
least squares on the tangency residual.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidGeometryError, NonConvergenceError
from .geometry import CamProfile, polyval_d2

MAX_ITERATIONS = 200
LAMBDA_INIT = 1e-3
STEP_STALL = 1e-15


@dataclass(frozen=True)
class IdlerSpec:
    """Idler roller: radius and the fixed height of its center above the cam axis."""

    radius: float
    vertical_offset: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.radius) and self.radius > 0.0):
            raise InvalidGeometryError(f"idler radius must be positive, got {self.radius}")
        if not math.isfinite(self.vertical_offset):
            raise InvalidGeometryError("idler vertical offset must be finite")


@dataclass(frozen=True)
class TangencySolution:
    """Contact angles at one cam rotation: alpha on the cam, gamma on the idler."""

    alpha: float
    gamma: float
    residual_norm: float


def tangency_residual(profile: CamProfile, idler: IdlerSpec, theta: float,
                      alpha: float, gamma: float) -> np.ndarray:
    """Residual vector of the contact conditions; zero iff a valid tangency.

    Components: the two coordinates of t_hat(alpha) + t_hat(gamma), then the
    height-matching condition rho(alpha) sin(alpha-theta) - r sin(gamma) - a0
    scaled by 1/rho(0) so all three entries are dimensionless.
    """
    res, _ = _residual_jac(profile.coeffs, idler.radius, idler.vertical_offset,
                           theta, alpha, gamma)
    return np.array(res)


def _residual_jac(coeffs, r, a0, theta, alpha, gamma):
    """Residual and its 3x2 Jacobian w.r.t. (alpha, gamma), as plain tuples."""
    rho, d1, d2 = polyval_d2(coeffs, alpha)
    a = alpha - theta
    ca, sa = math.cos(a), math.sin(a)
    nrm2 = rho * rho + d1 * d1
    nrm = math.sqrt(nrm2)
    if nrm < 1e-12:
        raise InvalidGeometryError(f"degenerate cam tangent at alpha={alpha:.4f}")
    # t(alpha) and d t(alpha)/d alpha in the world frame
    tx = d1 * ca - rho * sa
    ty = d1 * sa + rho * ca
    dtx = (d2 - rho) * ca - 2.0 * d1 * sa
    dty = (d2 - rho) * sa + 2.0 * d1 * ca
    dn = d1 * (rho + d2) / nrm          # d||t||/d alpha
    uax = tx / nrm
    uay = ty / nrm
    duax = dtx / nrm - tx * dn / nrm2
    duay = dty / nrm - ty * dn / nrm2
    cg, sg = math.cos(gamma), math.sin(gamma)
    rho0 = coeffs[0]
    if not rho0 > 1e-9:
        raise InvalidGeometryError("anchor radius rho(0) must be positive")
    r1 = uax - sg
    r2 = uay + cg
    r3 = (rho * sa - r * sg - a0) / rho0
    jac = (
        (duax, -cg),
        (duay, -sg),
        ((d1 * sa + rho * ca) / rho0, -r * cg / rho0),
    )
    return (r1, r2, r3), jac


def default_guess(profile: CamProfile, idler: IdlerSpec, theta: float) -> tuple:
    """Two-circle heuristic start: exact for circular cams, close for near-circular."""
    return _default_guess_raw(profile.coeffs, profile.phi_max,
                              idler.radius, idler.vertical_offset, theta)


def _default_guess_raw(coeffs, phi_cap, r, a0, theta):
    phi0 = min(max(theta, 0.0), phi_cap)
    rho = polyval_d2(coeffs, phi0)[0]
    ratio = a0 / (rho + r) if rho + r > 0.0 else 0.0
    ratio = min(max(ratio, -0.99), 0.99)
    alpha = theta + math.asin(ratio)
    return alpha, alpha - theta + math.pi


def solve_tangency(profile: CamProfile, idler: IdlerSpec, theta: float,
                   guess: tuple | None = None, tol: float = 1e-9,
                   max_iterations: int = MAX_ITERATIONS) -> TangencySolution:
    """Solve the contact angles (alpha, gamma) at cam rotation theta.

    Levenberg-Marquardt on the tangency residual with its analytic Jacobian;
    the damping factor starts at 1e-3 and is divided/multiplied by 10 on
    accepted/rejected steps.  Deterministic for a fixed guess.  Raises
    NonConvergenceError if the residual norm cannot be driven below `tol`
    within `max_iterations` (geometrically infeasible or ill-posed setups).
    """
    alpha, gamma, norm = _solve_raw(profile.coeffs, profile.phi_max,
                                    idler.radius, idler.vertical_offset,
                                    theta, guess, tol, max_iterations)
    return TangencySolution(alpha=alpha, gamma=gamma, residual_norm=norm)


def _solve_raw(coeffs, phi_cap, r, a0, theta, guess=None, tol=1e-9,
               max_iterations=MAX_ITERATIONS):
    if guess is None:
        guess = _default_guess_raw(coeffs, phi_cap, r, a0, theta)
    alpha, gamma = float(guess[0]), float(guess[1])

    try:
        res, jac = _residual_jac(coeffs, r, a0, theta, alpha, gamma)
    except InvalidGeometryError as exc:
        raise NonConvergenceError(f"tangency start point is degenerate: {exc}",
                                  theta=theta) from exc
    sq = res[0] * res[0] + res[1] * res[1] + res[2] * res[2]
    lam = LAMBDA_INIT
    # keep iterating past tol while cheap progress is available: downstream
    # finite differences benefit from residuals near machine precision
    target_sq = 1e-28
    for _ in range(max_iterations):
        if sq <= target_sq:
            break
        # normal equations J^T J + lam I, J^T res (2x2, closed form)
        g00 = jac[0][0] * jac[0][0] + jac[1][0] * jac[1][0] + jac[2][0] * jac[2][0]
        g01 = jac[0][0] * jac[0][1] + jac[1][0] * jac[1][1] + jac[2][0] * jac[2][1]
        g11 = jac[0][1] * jac[0][1] + jac[1][1] * jac[1][1] + jac[2][1] * jac[2][1]
        b0 = jac[0][0] * res[0] + jac[1][0] * res[1] + jac[2][0] * res[2]
        b1 = jac[0][1] * res[0] + jac[1][1] * res[1] + jac[2][1] * res[2]
        a00 = g00 + lam
        a11 = g11 + lam
        det = a00 * a11 - g01 * g01
        if det <= 0.0 or not math.isfinite(det):
            lam *= 10.0
            continue
        da = (-b0 * a11 + b1 * g01) / det
        dg = (-b1 * a00 + b0 * g01) / det
        step = abs(da) + abs(dg)
        if step < STEP_STALL:
            break
        try:
            res_new, jac_new = _residual_jac(coeffs, r, a0, theta, alpha + da, gamma + dg)
        except InvalidGeometryError:
            lam *= 10.0
            continue
        sq_new = res_new[0] ** 2 + res_new[1] ** 2 + res_new[2] ** 2
        if sq_new < sq and math.isfinite(sq_new):
            alpha += da
            gamma += dg
            res, jac, sq = res_new, jac_new, sq_new
            lam = max(lam / 10.0, 1e-14)
        else:
            lam *= 10.0
            if lam > 1e14:
                break

    norm = math.sqrt(sq)
    if norm > tol:
        raise NonConvergenceError(
            f"tangency solve stalled at residual {norm:.3e} (theta={theta:.4f})",
            theta=theta,
        )
    rho_alpha = polyval_d2(coeffs, alpha)[0]
    if rho_alpha <= 0.0:
        raise NonConvergenceError(
            f"tangency solve landed on non-positive radius at theta={theta:.4f}",
            theta=theta,
        )
    # an idler on the horizontal rail can only touch the quarter-turn sector
    # facing it; roots beyond that are polynomial-extrapolation artifacts
    if abs(alpha - theta) > math.pi / 2 + 0.3:
        raise NonConvergenceError(
            f"contact angle {alpha - theta:.3f} rad outside the physical sector "
            f"(theta={theta:.4f})",
            theta=theta,
        )
    return alpha, gamma, norm


def sweep_tangency(profile: CamProfile, idler: IdlerSpec, theta_grid,
                   guess: tuple | None = None, tol: float = 1e-9) -> list:
    """Solve the contact along a monotone theta grid, warm-starting each point.

    Each converged solution seeds the next theta; the first failure aborts the
    sweep with a NonConvergenceError carrying the offending theta.
    """
    thetas = [float(t) for t in theta_grid]
    if len(thetas) >= 2:
        diffs = [b - a for a, b in zip(thetas, thetas[1:])]
        if not (all(d >= 0 for d in diffs) or all(d <= 0 for d in diffs)):
            raise ValueError("theta grid must be monotone")
    out = []
    for theta in thetas:
        sol = solve_tangency(profile, idler, theta, guess=guess, tol=tol)
        out.append(sol)
        guess = (sol.alpha, sol.gamma)
    return out


def export_sweep_csv(theta_grid, solutions, path) -> None:
    """Write a contact sweep as CSV `theta_rad,alpha_rad,gamma_rad`."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theta_rad", "alpha_rad", "gamma_rad"])
        for theta, sol in zip(theta_grid, solutions):
            writer.writerow([f"{theta:.9f}", f"{sol.alpha:.12f}", f"{sol.gamma:.12f}"])
