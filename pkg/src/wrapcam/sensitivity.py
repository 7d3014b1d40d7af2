"""First-order sensitivity of cam torque to spring-rate deviations.

Torque is exactly linear in each spring rate once the geometry is fixed, so
the partials are the per-spring torque contributions divided by their rates;
they are also computed from explicit formulas here and cross-checked in the
tests.  The weighted integrals of their magnitudes feed the design objective.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import CamProfile
from .tangency import IdlerSpec, TangencySolution
from .torque import DEFAULT_QUAD, contact_geometry, wrap_torque_finite_batch

ABS_SMOOTHING = 1e-9  # N*m; rounds the |.| kink for gradient-based optimizers


def smooth_abs(values, delta: float = ABS_SMOOTHING):
    """sqrt(v^2 + delta^2): smooth stand-in for |v| near zero."""
    return np.sqrt(np.square(values) + delta * delta)


def dtau_dk_infinite(profile: CamProfile, idler: IdlerSpec, theta: float,
                     sol: TangencySolution, x1: float, x2: float) -> tuple:
    """Exact partials (d tau / d k_wrap, d tau / d k_normal), point-force model.

    These are the unit-rate spring moments: extension times moment arm.
    """
    geom = contact_geometry(profile, theta, sol)
    return x1 * geom.wrap_arm, x2 * geom.normal_arm


def dtau_dk_finite(profile: CamProfile, alpha: float, mu: float, x1: float,
                   n: int = DEFAULT_QUAD) -> float:
    """d tau / d k_wrap under capstan friction.

    Same anchor-plus-integral expression as the wrap torque with the contact
    tension replaced by the bare extension x1 (the torque is linear in the
    rate, which only enters through the tension k1 x1).
    """
    return float(wrap_torque_finite_batch(profile.coeffs, alpha, x1, mu, n=n))


@dataclass(frozen=True)
class SensitivityGrid:
    """Torque/rate partials tabulated over the joint-angle grid.

    `grids` maps names like "dtau1_dk2" to arrays over `axes` (one axis per
    joint); `weights` pairs each grid with its objective weight.
    """

    grids: dict
    weights: dict
    axes: tuple = field(default_factory=tuple)

    def __post_init__(self):
        for name, grid in self.grids.items():
            if not np.all(np.isfinite(grid)):
                raise ValueError(f"sensitivity grid {name} has non-finite entries")

    def objective(self, delta: float = ABS_SMOOTHING) -> float:
        names = sorted(self.grids)
        return sensitivity_objective([self.grids[n] for n in names],
                                     [self.weights.get(n, 0.0) for n in names],
                                     self.axes, delta=delta)


def sensitivity_objective(grids, weights, domain, delta: float = ABS_SMOOTHING) -> float:
    """Weighted integral of |d tau / d k| over the joint-angle domain.

    grids/weights: matching sequences of sensitivity grids (1-D arrays over a
    theta grid, or 2-D arrays over a theta1 x theta2 grid) and scalar weights.
    domain: the grid axes, (theta,) or (theta1, theta2).  Uses trapezoid
    quadrature on the same grid the torque objective uses.
    """
    axes = [np.asarray(a, dtype=float) for a in domain]
    if not 1 <= len(axes) <= 2:
        raise ValueError("domain must have one or two axes")
    total = 0.0
    for grid, w in zip(grids, weights):
        if w == 0.0:
            continue
        g = smooth_abs(np.asarray(grid, dtype=float), delta)
        for ax in reversed(axes):
            g = g if ax.size == 1 else np.trapezoid(g, ax, axis=-1)
        total += w * float(np.squeeze(g))
    return total
