"""Polar polynomial cam profiles.

A cam outline is described by a polar radius rho(phi) expressed as a
polynomial in the wrap angle phi (monomial basis, coefficients stored lowest
power first, SI meters).  This module evaluates the curve, its derivatives,
its Cartesian embedding, the local convexity margin and arc length.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTangentError, InvalidGeometryError

MAX_COEFFS = 8          # polynomial orders above 7 condition badly
POSITIVITY_SAMPLES = 1024


def polyval_d2(coeffs, phi):
    """Polynomial value and first two derivatives by Horner's rule.

    `coeffs` is ordered lowest power first; `phi` may be a scalar or ndarray.
    Returns (p, dp, ddp).
    """
    p = phi * 0.0
    d1 = phi * 0.0
    d2 = phi * 0.0
    for c in reversed(coeffs):
        d2 = d2 * phi + 2.0 * d1
        d1 = d1 * phi + p
        p = p * phi + c
    return p, d1, d2


@dataclass(frozen=True)
class PlanePoint:
    """Point (or vector) in the mechanism plane; torque is about the +z axis."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InvalidGeometryError(f"non-finite plane point ({self.x}, {self.y})")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def norm(self) -> float:
        return math.hypot(self.x, self.y)


@dataclass(frozen=True)
class CamProfile:
    """Polar cam curve rho(phi) over the wrap-angle domain [0, phi_max].

    coeffs : polynomial coefficients, lowest power first, meters.
    phi_max: largest wrap angle the profile must be valid over, radians.

    Construction validates that rho stays strictly positive on a dense
    sample of the domain (positivity is sampled, not proven symbolically).
    """

    coeffs: tuple
    phi_max: float

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coeffs)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "phi_max", float(self.phi_max))
        if not 1 <= len(coeffs) <= MAX_COEFFS:
            raise InvalidGeometryError(
                f"cam polynomial needs 1..{MAX_COEFFS} coefficients, got {len(coeffs)}"
            )
        if not all(math.isfinite(c) for c in coeffs):
            raise InvalidGeometryError("cam coefficients must be finite")
        if not (math.isfinite(self.phi_max) and self.phi_max > 0.0):
            raise InvalidGeometryError("phi_max must be finite and positive")
        grid = np.linspace(0.0, self.phi_max, POSITIVITY_SAMPLES)
        rho = polyval_d2(coeffs, grid)[0]
        if not np.all(rho > 0.0):
            bad = float(grid[int(np.argmin(rho))])
            raise InvalidGeometryError(
                f"cam radius is non-positive near phi={bad:.4f} rad"
            )


def eval_rho(profile: CamProfile, phi):
    """rho(phi) with analytic first and second derivatives: (rho, rho', rho'')."""
    return polyval_d2(profile.coeffs, phi)


def cam_point(profile: CamProfile, phi: float, theta: float = 0.0) -> PlanePoint:
    """World-frame point of the cam surface at wrap angle phi, cam rotation theta."""
    rho = polyval_d2(profile.coeffs, phi)[0]
    a = phi - theta
    return PlanePoint(rho * math.cos(a), rho * math.sin(a))


def body_curve(profile: CamProfile, phi):
    """Cam-frame wire path r(phi) with analytic derivatives.

    Returns (r, r', r'') as arrays of shape phi.shape + (2,); this is the
    curve the wrapped wire follows on the cam, independent of cam rotation.
    """
    phi = np.asarray(phi, dtype=float)
    rho, d1, d2 = polyval_d2(profile.coeffs, phi)
    c, s = np.cos(phi), np.sin(phi)
    r = np.stack([rho * c, rho * s], axis=-1)
    r1 = np.stack([d1 * c - rho * s, d1 * s + rho * c], axis=-1)
    r2 = np.stack([(d2 - rho) * c - 2.0 * d1 * s, (d2 - rho) * s + 2.0 * d1 * c], axis=-1)
    return r, r1, r2


def tangent_unit(profile: CamProfile, phi: float, theta: float = 0.0) -> PlanePoint:
    """Unit tangent of the cam outline at wrap angle phi (world frame)."""
    rho, d1, _ = polyval_d2(profile.coeffs, phi)
    nrm = math.hypot(rho, d1)
    if nrm < 1e-12:
        raise DegenerateTangentError(f"zero tangent at phi={phi:.4f} (rho=rho'=0)")
    a = phi - theta
    c, s = math.cos(a), math.sin(a)
    return PlanePoint((d1 * c - rho * s) / nrm, (d1 * s + rho * c) / nrm)


def convexity_margin(profile: CamProfile, phi):
    """Local convexity margin rho^2 + 2 rho'^2 - rho rho'' (m^2); > 0 iff convex."""
    rho, d1, d2 = polyval_d2(profile.coeffs, phi)
    return rho * rho + 2.0 * d1 * d1 - rho * d2


def arc_length(profile: CamProfile, phi_a: float, phi_b: float, n: int = 512) -> float:
    """Arc length of the cam outline between wrap angles phi_a <= phi_b.

    Composite Simpson quadrature of sqrt(rho^2 + rho'^2) on n subintervals.
    """
    if phi_b < phi_a:
        raise ValueError(f"phi_a={phi_a} must not exceed phi_b={phi_b}")
    if phi_b == phi_a:
        return 0.0
    n = int(n)
    if n % 2:
        n += 1
    phi = np.linspace(phi_a, phi_b, n + 1)
    rho, d1, _ = polyval_d2(profile.coeffs, phi)
    return float(simpson_integrate(np.hypot(rho, d1), (phi_b - phi_a) / n))


def simpson_integrate(values: np.ndarray, h: float) -> float:
    """Composite Simpson rule over uniformly spaced samples (odd count)."""
    n = values.shape[0] - 1
    if n % 2:
        raise ValueError("Simpson rule needs an even number of subintervals")
    if n == 0:
        return 0.0
    return (h / 3.0) * float(
        values[0] + values[-1] + 4.0 * values[1:-1:2].sum() + 2.0 * values[2:-2:2].sum()
    )


def export_profile_csv(profile: CamProfile, path, rows: int = 512) -> None:
    """Write the outline as CSV `phi_rad,rho_m,x_m,y_m` on a uniform phi grid."""
    rows = max(int(rows), 360)
    phi = np.linspace(0.0, profile.phi_max, rows)
    rho = polyval_d2(profile.coeffs, phi)[0]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["phi_rad", "rho_m", "x_m", "y_m"])
        for p, r in zip(phi, rho):
            writer.writerow([f"{p:.9f}", f"{r:.9f}", f"{r * math.cos(p):.9f}", f"{r * math.sin(p):.9f}"])
