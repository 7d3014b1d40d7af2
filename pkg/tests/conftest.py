import math

import numpy as np
import pytest

import wrapcam as wc
from wrapcam.optimizer import CamGeometry, MechanismConfig


@pytest.fixture
def circle():
    return wc.CamProfile((0.05,), 2.4)


@pytest.fixture
def std_idler():
    return wc.IdlerSpec(radius=0.02, vertical_offset=0.015)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_convex_profile(rng, phi_span=2.2):
    """Random positive, convex polar polynomial over [0, phi_span]."""
    from wrapcam.geometry import polyval_d2

    while True:
        coeffs = (rng.uniform(0.02, 0.06),
                  rng.uniform(-0.005, 0.02),
                  rng.uniform(-0.01, 0.015),
                  rng.uniform(-0.006, 0.004))
        phi = np.linspace(0.0, phi_span, 400)
        rho, d1, d2 = polyval_d2(coeffs, phi)
        if np.all(rho > 0.005) and np.all(rho * rho + 2 * d1 * d1 - rho * d2 > 1e-5):
            return wc.CamProfile(coeffs, phi_span)


def paper_2dof_config(weights=(10.0, 10.0, 0, 0, 0, 0, 0, 0), grid=(31, 31),
                      friction=None):
    """Two-cam benchmark mechanism used across optimizer/acceptance tests."""
    if friction is None:
        friction = wc.FrictionModel.finite(0.3273)
    cam = CamGeometry(idler=wc.IdlerSpec(0.02, 0.015), rho_min=0.025, rho_max=0.5,
                      theta_min=0.0, theta_max=math.pi / 2, friction=friction,
                      phi_max=2.5)
    springs = (wc.SpringSpec(1100.0, 0.0, 0.05766),
               wc.SpringSpec(7350.0, 0.0, 0.032),
               wc.SpringSpec(580.0, 0.0, 0.105))
    return MechanismConfig(dof=2, cams=(cam, cam), springs=springs,
                           weights=weights, grid=grid)
