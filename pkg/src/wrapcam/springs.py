"""Spring extension kinematics and helical spring sizing.

Extensions follow from rigid geometry alone: the wrap spring pays out wire as
the cam rotates, the normal spring follows the idler's horizontal travel, and
the two-cam coupling spring adds both idler travels.  Springs themselves are
plain linear rate elements; `design_spring` sizes one from wire geometry with
a yield-stress deflection limit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidGeometryError
from .geometry import CamProfile, arc_length, polyval_d2
from .tangency import IdlerSpec, TangencySolution


@dataclass(frozen=True)
class SpringSpec:
    """Linear extension spring: rate k (N/m), pre-extension and travel limit (m)."""

    k: float
    x_pre: float = 0.0
    x_max: float = math.inf

    def __post_init__(self):
        if not (math.isfinite(self.k) and self.k > 0.0):
            raise InvalidGeometryError(f"spring rate must be positive, got {self.k}")
        if not 0.0 <= self.x_pre <= self.x_max:
            raise InvalidGeometryError(
                f"need 0 <= x_pre <= x_max, got x_pre={self.x_pre}, x_max={self.x_max}"
            )


@dataclass(frozen=True)
class SpringWireGeometry:
    """Helical spring wire geometry and material limits (SI units)."""

    d: float                  # wire diameter, m
    D: float                  # outer coil diameter, m
    n_coils: float
    shear_modulus: float      # Pa
    yield_stress: float       # Pa
    safety_factor: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.d < self.D:
            raise InvalidGeometryError(f"need 0 < d < D, got d={self.d}, D={self.D}")
        if self.n_coils < 1:
            raise InvalidGeometryError(f"need at least one coil, got {self.n_coils}")
        if self.safety_factor < 1.0:
            raise InvalidGeometryError("safety factor must be >= 1")
        if self.shear_modulus <= 0.0 or self.yield_stress <= 0.0:
            raise InvalidGeometryError("material moduli must be positive")


@dataclass(frozen=True)
class SpringDesign:
    """Result of sizing a spring from wire geometry."""

    k: float            # N/m
    x_max: float        # m
    f_max: float        # N
    mean_coil_diameter: float
    spring_index: float
    stress_factor: float

    def to_spec(self, x_pre: float = 0.0) -> SpringSpec:
        return SpringSpec(k=self.k, x_pre=x_pre, x_max=self.x_max)


@dataclass(frozen=True)
class CamContactState:
    """One cam's contact at rotation theta plus its theta=0 reference contact."""

    profile: CamProfile
    idler: IdlerSpec
    theta: float
    sol: TangencySolution
    sol0: TangencySolution


@dataclass(frozen=True)
class ExtensionState:
    """All spring extensions of a mechanism at one joint configuration.

    x3 stays None for single-cam mechanisms; `coupling_contributions` holds the
    per-cam idler travels that add up inside x2 on two-cam mechanisms.
    """

    x1: float
    x2: float
    x3: float | None = None
    coupling_contributions: tuple = ()

    def all_feasible(self, limits) -> bool:
        """True when every extension lies in [0, its limit]."""
        values = [self.x1, self.x2] + ([] if self.x3 is None else [self.x3])
        return all(0.0 <= v <= lim for v, lim in zip(values, limits))


def wrap_spring_extension(profile: CamProfile, idler: IdlerSpec, theta: float,
                          sol: TangencySolution, sol0: TangencySolution,
                          x_pre: float, n_quad: int = 512) -> float:
    """Extension of the wire-tensioning spring at cam rotation theta.

    Wire is inextensible, so the spring absorbs the wrapped cam arc plus the
    idler arc swept since theta=0, on top of the pre-extension.
    """
    wrapped = arc_length(profile, min(sol0.alpha, sol.alpha), max(sol0.alpha, sol.alpha), n=n_quad)
    if sol.alpha < sol0.alpha:
        wrapped = -wrapped
    return wrapped + idler.radius * (sol.gamma - sol0.gamma) + x_pre


def normal_extension_delta(profile: CamProfile, idler: IdlerSpec, theta: float,
                           sol: TangencySolution, sol0: TangencySolution) -> float:
    """Horizontal idler travel since theta=0 (one cam's pull on its idler spring)."""
    rho = polyval_d2(profile.coeffs, sol.alpha)[0]
    rho0 = polyval_d2(profile.coeffs, sol0.alpha)[0]
    now = rho * math.cos(sol.alpha - theta) - idler.radius * math.cos(sol.gamma)
    ref = rho0 * math.cos(sol0.alpha) - idler.radius * math.cos(sol0.gamma)
    return now - ref


def normal_spring_extension(profile: CamProfile, idler: IdlerSpec, theta: float,
                            sol: TangencySolution, sol0: TangencySolution,
                            x_pre: float) -> float:
    """Extension of the idler-loading spring at cam rotation theta."""
    return normal_extension_delta(profile, idler, theta, sol, sol0) + x_pre


def coupling_spring_extension_2dof(state1: CamContactState, state2: CamContactState,
                                   x_pre: float) -> float:
    """Extension of the spring joining the two idler carriages.

    Each cam contributes its own idler travel; contributions superpose on the
    shared pre-extension.
    """
    d1 = normal_extension_delta(state1.profile, state1.idler, state1.theta,
                                state1.sol, state1.sol0)
    d2 = normal_extension_delta(state2.profile, state2.idler, state2.theta,
                                state2.sol, state2.sol0)
    return x_pre + d1 + d2


def design_spring(geom: SpringWireGeometry) -> SpringDesign:
    """Size a helical extension spring from wire geometry.

    Returns rate, yield-limited force and the matching deflection limit.  The
    shear-stress correction uses the Bergstrasser factor (4c+2)/(4c-3), so
    spring indices at or below 3/4 are rejected as unphysical.
    """
    dbar = geom.D - geom.d
    if dbar <= 0.0:
        raise InvalidGeometryError("mean coil diameter must be positive")
    c = dbar / geom.d
    if c <= 0.75:
        raise InvalidGeometryError(f"spring index c={c:.3f} is at or below the 3/4 pole")
    k_b = (4.0 * c + 2.0) / (4.0 * c - 3.0)
    f_max = math.pi * geom.d ** 3 * geom.yield_stress / (
        16.0 * geom.safety_factor * k_b * dbar)
    compliance = 8.0 * dbar ** 3 * geom.n_coils * (1.0 + 1.0 / (2.0 * c * c)) / (
        geom.d ** 4 * geom.shear_modulus)
    x_max = f_max * compliance
    k = 1.0 / compliance
    return SpringDesign(k=k, x_max=x_max, f_max=f_max, mean_coil_diameter=dbar,
                        spring_index=c, stress_factor=k_b)
