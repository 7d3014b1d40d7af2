"""Desired-torque generators and the capstan slip-test utility.

These define the problem side of a balancing design: the torque a mechanism
must supply as a function of joint angles, and the friction coefficient
extracted from a wire slip measurement.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidGeometryError

G_STANDARD = 9.81  # m/s^2


@dataclass(frozen=True)
class RRArmParams:
    """Planar RR arm: link masses, lengths and centers of mass."""

    m1: float
    m2: float
    l1: float
    lc1: float
    lc2: float
    g: float = G_STANDARD

    def __post_init__(self):
        if min(self.m1, self.m2, self.l1, self.lc1, self.lc2) <= 0.0:
            raise InvalidGeometryError("arm masses and lengths must be positive")


def rr_gravity_torques(params: RRArmParams, theta1, theta2) -> tuple:
    """Joint torques that cancel gravity on a planar RR arm.

    Angles are measured from the vertical; accepts scalars or broadcastable
    arrays and returns (tau1, tau2) in N*m.
    """
    s1 = np.sin(theta1)
    s12 = np.sin(np.add(theta1, theta2))
    tau1 = (params.m1 * params.g * params.lc1 * s1
            + params.m2 * params.g * (params.l1 * s1 + params.lc2 * s12))
    tau2 = params.m2 * params.g * params.lc2 * s12
    return tau1, tau2


def polynomial_torque(coeffs, theta):
    """Torque polynomial in the joint angle; coeffs lowest power first, N*m."""
    th = np.asarray(theta, dtype=float)
    out = th * 0.0
    for c in reversed(tuple(coeffs)):
        out = out * th + c
    return float(out) if np.ndim(out) == 0 else out


def friction_mu_from_slip(f: float, f0: float, wrap_angle: float = math.pi) -> float:
    """Static friction coefficient from a capstan slip test.

    A holding force f0 on one wire end resists a pulling force f across a
    wrapped arc; at incipient slip mu = ln(f / f0) / wrap_angle.
    """
    if f0 <= 0.0:
        raise DomainError(f"holding force must be positive, got {f0}")
    if f < f0:
        raise DomainError(f"slip force {f} must be at least the holding force {f0}")
    if wrap_angle <= 0.0:
        raise DomainError("wrap angle must be positive")
    return math.log(f / f0) / wrap_angle


class TabulatedTorque:
    """Desired torque interpolated from a CSV table.

    One-joint tables use columns `theta1_rad,tau_d1_Nm` (linear interpolation);
    two-joint tables use `theta1_rad,theta2_rad,tau_d1_Nm,tau_d2_Nm` on a full
    rectangular grid (bilinear interpolation).
    """

    def __init__(self, theta1, tau1, theta2=None, tau2=None):
        self.theta1 = np.asarray(theta1, dtype=float)
        self.tau1 = np.asarray(tau1, dtype=float)
        self.theta2 = None if theta2 is None else np.asarray(theta2, dtype=float)
        self.tau2 = None if tau2 is None else np.asarray(tau2, dtype=float)
        if self.theta1.ndim != 1 or self.theta1.size < 2:
            raise DomainError("need at least two grid points per axis")
        if np.any(np.diff(self.theta1) <= 0):
            raise DomainError("grid axes must be strictly increasing")
        if self.theta2 is not None:
            if np.any(np.diff(self.theta2) <= 0):
                raise DomainError("grid axes must be strictly increasing")
            expected = (self.theta1.size, self.theta2.size)
            if self.tau1.shape != expected or self.tau2.shape != expected:
                raise DomainError(f"torque grids must have shape {expected}")

    @property
    def dof(self) -> int:
        return 1 if self.theta2 is None else 2

    @classmethod
    def from_csv(cls, path) -> "TabulatedTorque":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = [h.strip() for h in next(reader)]
            rows = [[float(v) for v in row] for row in reader if row]
        if header[:2] == ["theta1_rad", "tau_d1_Nm"]:
            data = np.asarray(rows)
            order = np.argsort(data[:, 0])
            return cls(data[order, 0], data[order, 1])
        if header[:4] == ["theta1_rad", "theta2_rad", "tau_d1_Nm", "tau_d2_Nm"]:
            data = np.asarray(rows)
            t1 = np.unique(data[:, 0])
            t2 = np.unique(data[:, 1])
            if data.shape[0] != t1.size * t2.size:
                raise DomainError("two-joint torque table must cover a full grid")
            tau1 = np.full((t1.size, t2.size), np.nan)
            tau2 = np.full((t1.size, t2.size), np.nan)
            i = np.searchsorted(t1, data[:, 0])
            j = np.searchsorted(t2, data[:, 1])
            tau1[i, j] = data[:, 2]
            tau2[i, j] = data[:, 3]
            if np.any(np.isnan(tau1)) or np.any(np.isnan(tau2)):
                raise DomainError("two-joint torque table must cover a full grid")
            return cls(t1, tau1, t2, tau2)
        raise DomainError(f"unrecognized torque table header {header}")

    def __call__(self, theta1, theta2=None):
        if self.dof == 1:
            return np.interp(theta1, self.theta1, self.tau1)
        if theta2 is None:
            raise DomainError("two-joint table needs both angles")
        return (self._bilinear(self.tau1, theta1, theta2),
                self._bilinear(self.tau2, theta1, theta2))

    def _bilinear(self, grid, q1, q2):
        q1 = np.clip(q1, self.theta1[0], self.theta1[-1])
        q2 = np.clip(q2, self.theta2[0], self.theta2[-1])
        i = np.clip(np.searchsorted(self.theta1, q1) - 1, 0, self.theta1.size - 2)
        j = np.clip(np.searchsorted(self.theta2, q2) - 1, 0, self.theta2.size - 2)
        t = (q1 - self.theta1[i]) / (self.theta1[i + 1] - self.theta1[i])
        u = (q2 - self.theta2[j]) / (self.theta2[j + 1] - self.theta2[j])
        val = ((1 - t) * (1 - u) * grid[i, j] + t * (1 - u) * grid[i + 1, j]
               + (1 - t) * u * grid[i, j + 1] + t * u * grid[i + 1, j + 1])
        return float(val) if np.ndim(val) == 0 else val
