import math

import numpy as np
import pytest

import wrapcam as wc
from wrapcam.torque import (cam_torque_1dof, contact_geometry,
                            wire_internal_force, wire_internal_force_derivative,
                            wrap_torque_finite_batch)

from conftest import paper_2dof_config, random_convex_profile


def test_wire_tension_frictionless_is_constant():
    for phi in (0.0, 0.5, 1.2):
        assert wc.wire_tension(8.0, 0.0, 1.2, phi) == 8.0


def test_wire_tension_boundary_and_half_wrap():
    assert wc.wire_tension(5.0, 0.7, 1.5, 1.5) == pytest.approx(5.0)
    expect = 5.0 * math.exp(-0.3273 * math.pi)
    assert wc.wire_tension(5.0, 0.3273, math.pi, 0.0) == pytest.approx(expect, rel=1e-12)


def test_wire_tension_domain_error():
    with pytest.raises(wc.DomainError):
        wc.wire_tension(5.0, 0.3, 1.0, -0.2)
    with pytest.raises(wc.DomainError):
        wc.wire_tension(5.0, 0.3, 1.0, 1.4)


def test_distributed_force_circle_frictionless(circle):
    # cam pushes the wire purely radially outward, magnitude = tension per rad
    wire = wc.WireState(6.0, 1.8)
    for phi in (0.2, 0.9, 1.6):
        f = wc.distributed_wire_force(circle, phi, wire, 0.0)
        radial = np.array([math.cos(phi), math.sin(phi)])
        assert float(f @ radial) == pytest.approx(6.0, rel=1e-12)
        t = wc.tangent_unit(circle, phi).as_array()
        assert float(f @ t) == pytest.approx(0.0, abs=1e-12)


def test_distributed_force_circle_friction_traction(circle):
    wire = wc.WireState(6.0, 1.8)
    mu = 0.4
    for phi in (0.2, 1.0):
        f = wc.distributed_wire_force(circle, phi, wire, mu)
        t = wc.tangent_unit(circle, phi).as_array()
        eta = wc.wire_tension(6.0, mu, 1.8, phi)
        assert abs(float(f @ t)) == pytest.approx(mu * eta, rel=1e-12)


def test_distributed_force_zero_tension(rng):
    prof = random_convex_profile(rng)
    f = wc.distributed_wire_force(prof, 0.7, wc.WireState(0.0, 1.5), 0.35)
    assert np.allclose(f, 0.0)


def test_wire_internal_force_tangent_with_tension_magnitude(rng):
    for _ in range(6):
        prof = random_convex_profile(rng)
        wire = wc.WireState(rng.uniform(1.0, 20.0), 1.9)
        mu = rng.uniform(0.0, 0.8)
        phi = np.linspace(0.0, wire.alpha, 15)
        psi = wire_internal_force(prof, phi, wire, mu)
        eta = wc.wire_tension(wire.tension_at_contact, mu, wire.alpha, phi)
        assert np.max(np.abs(np.linalg.norm(psi, axis=-1) - eta)) < 1e-10 * np.max(eta)


def test_wire_internal_force_derivative_matches_finite_differences(rng):
    h = 1e-6
    for _ in range(6):
        prof = random_convex_profile(rng)
        wire = wc.WireState(7.0, 1.9)
        mu = rng.uniform(0.0, 0.6)
        for phi in rng.uniform(0.1, 1.7, size=3):
            an = wire_internal_force_derivative(prof, phi, wire, mu)
            fd = (wire_internal_force(prof, phi + h, wire, mu)
                  - wire_internal_force(prof, phi - h, wire, mu)) / (2.0 * h)
            assert np.max(np.abs(an - fd)) <= 1e-6 * max(np.max(np.abs(fd)), 1e-12)


def test_cam_torque_infinite_zero_extensions(circle, std_idler):
    sol = wc.solve_tangency(circle, std_idler, 0.4)
    tb = wc.cam_torque_infinite(circle, std_idler, 0.4, sol, 1100.0, 0.0, 7350.0, 0.0)
    assert tb.total == 0.0


def test_cam_torque_infinite_circle_oracle(circle, std_idler):
    sol = wc.solve_tangency(circle, std_idler, 0.6)
    tb = wc.cam_torque_infinite(circle, std_idler, 0.6, sol, 1100.0, 0.02, 7350.0, 0.011)
    assert tb.wrap == pytest.approx(0.05 * 1100.0 * 0.02, rel=1e-9)
    assert tb.normal == pytest.approx(0.0, abs=1e-10)


def test_cam_torque_finite_circle_equals_r_eta(circle):
    for mu in (0.0, 0.1, 0.3273, 1.0):
        for alpha in (math.pi / 6, math.pi / 2, math.pi):
            tau = wc.cam_torque_finite(circle, wc.WireState(10.0, alpha), mu)
            assert tau == pytest.approx(0.05 * 10.0, rel=1e-9)


def test_cam_torque_finite_zero_tension(circle):
    assert wc.cam_torque_finite(circle, wc.WireState(0.0, 1.0), 0.5) == 0.0


def test_cam_torque_finite_high_friction_approaches_contact_moment():
    # benchmark cubic cam; with huge friction the anchor term dies off and the
    # torque comes from the distributed load alone (quadrature refined to
    # resolve the exponential boundary layer)
    prof = wc.CamProfile((0.0250, 0.0046, 0.0133, -0.0052), 2.5)
    idler = wc.IdlerSpec(0.02, 0.015)
    theta = 1.2
    sol = wc.solve_tangency(prof, idler, theta)
    k1x1 = 40.0
    geom = contact_geometry(prof, theta, sol)
    infinite = k1x1 * geom.wrap_arm
    finite = wc.cam_torque_finite(prof, wc.WireState(k1x1, sol.alpha), 1e3, n=1 << 15)
    assert finite == pytest.approx(infinite, rel=1e-3)


def test_cam_torque_finite_equals_infinite_for_any_convex_cam(rng):
    # the corrected tangential force field makes the wire moment telescope to
    # the contact-tension moment for every cam shape, not just circles
    idler = wc.IdlerSpec(0.02, 0.015)
    for _ in range(5):
        prof = random_convex_profile(rng)
        theta = rng.uniform(0.2, 1.3)
        sol = wc.solve_tangency(prof, idler, theta)
        k1x1 = rng.uniform(5.0, 60.0)
        geom = contact_geometry(prof, theta, sol)
        finite = wc.cam_torque_finite(prof, wc.WireState(k1x1, sol.alpha), 0.3273)
        assert finite == pytest.approx(k1x1 * geom.wrap_arm, rel=1e-9)


def test_torque_linear_in_spring_rates(circle, std_idler, rng):
    prof = random_convex_profile(rng)
    idler = std_idler
    theta = 0.8
    sol0 = wc.solve_tangency(prof, idler, 0.0)
    sol = wc.solve_tangency(prof, idler, theta, guess=(sol0.alpha, sol0.gamma))
    s2 = wc.SpringSpec(7350.0, 0.006, 0.2)
    for friction in (wc.FrictionModel.infinite(), wc.FrictionModel.finite(0.3273)):
        base = cam_torque_1dof(prof, idler, theta, sol, sol0,
                               wc.SpringSpec(1100.0, 0.004, 0.2), s2, friction)
        scaled = cam_torque_1dof(prof, idler, theta, sol, sol0,
                                 wc.SpringSpec(3.0 * 1100.0, 0.004, 0.2), s2, friction)
        assert scaled.wrap == pytest.approx(3.0 * base.wrap, rel=1e-12)
        assert scaled.normal == base.normal


def test_wrap_torque_batch_matches_scalar(rng):
    prof = random_convex_profile(rng)
    alphas = np.array([0.3, 0.9, 1.6])
    etas = np.array([5.0, 11.0, 17.0])
    batch = wrap_torque_finite_batch(prof.coeffs, alphas, etas, 0.3273)
    for a, e, b in zip(alphas, etas, batch):
        assert wc.cam_torque_finite(prof, wc.WireState(e, a), 0.3273) == pytest.approx(
            float(b), rel=1e-13)


def test_cam_torques_2dof_zero_extensions():
    cfg = paper_2dof_config()
    cfg = cfg.with_design(wc.DesignVector(
        betas=((0.05,), (0.05,)), x_pre=(0.0, 0.0, 0.0)))
    tau1, tau2 = wc.cam_torques_2dof(cfg, 0.0, 0.0)
    assert tau1 == pytest.approx(0.0, abs=1e-12)
    assert tau2 == pytest.approx(0.0, abs=1e-12)


def test_cam_torques_2dof_circular_superposition():
    cfg = paper_2dof_config()
    cfg = cfg.with_design(wc.DesignVector(
        betas=((0.05,), (0.05,)), x_pre=(0.004, 0.0, 0.002)))
    # circular cams leave the coupling spring inert, so tau1 depends on theta1
    # only and matches the wrap-spring moment R k1 x1
    for t1, t2 in ((0.5, 0.0), (0.5, 1.0)):
        tau1, tau2 = wc.cam_torques_2dof(cfg, t1, t2)
        x1 = 0.05 * t1 + 0.004
        assert tau1 == pytest.approx(0.05 * 1100.0 * x1, rel=1e-7)
    t2 = 0.8
    x3 = 0.05 * t2 + 0.002
    tau1, tau2 = wc.cam_torques_2dof(cfg, 0.3, t2)
    assert tau2 == pytest.approx(0.05 * 580.0 * x3, rel=1e-7)


def test_cam_torques_2dof_requires_profiles():
    cfg = paper_2dof_config()
    with pytest.raises(wc.InvalidGeometryError):
        wc.cam_torques_2dof(cfg, 0.0, 0.0)


def test_export_torque_grid_csv(tmp_path):
    t1 = np.linspace(0.0, 1.0, 3)
    t2 = np.linspace(0.0, 0.5, 2)
    tau1 = np.arange(6.0).reshape(3, 2) * 1e-3
    tau2 = tau1 + 1e-3
    path = tmp_path / "grid.csv"
    wc.torque.export_torque_grid_csv(t1, t2, tau1, tau2, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "theta1_rad,theta2_rad,tau1_Nmm,tau2_Nmm"
    assert len(lines) == 7
    cells = lines[2].split(",")
    assert float(cells[2]) == pytest.approx(1.0)   # N*m exported as Nmm
    assert float(cells[3]) == pytest.approx(2.0)


def test_solve_extension_state_2dof():
    cfg = paper_2dof_config().with_design(wc.DesignVector(
        betas=((0.05,), (0.05,)), x_pre=(0.004, 0.003, 0.002)))
    ext, states = wc.solve_extension_state(cfg, 0.5, 0.8)
    assert ext.x1 == pytest.approx(0.05 * 0.5 + 0.004, rel=1e-8)
    assert ext.x3 == pytest.approx(0.05 * 0.8 + 0.002, rel=1e-8)
    assert ext.x2 == pytest.approx(0.003, abs=1e-9)
    assert len(ext.coupling_contributions) == 2
    assert ext.all_feasible([s.x_max for s in cfg.springs])
    assert len(states) == 2


def test_solve_extension_state_1dof():
    from wrapcam.optimizer import CamGeometry
    cam = CamGeometry(idler=wc.IdlerSpec(0.02, 0.015), rho_min=0.01, rho_max=0.5,
                      theta_min=0.0, theta_max=1.5,
                      friction=wc.FrictionModel.infinite(), phi_max=2.4,
                      profile=wc.CamProfile((0.05,), 2.4))
    cfg = wc.MechanismConfig(dof=1, cams=(cam,),
                             springs=(wc.SpringSpec(1100.0, 0.004, 0.2),
                                      wc.SpringSpec(7350.0, 0.006, 0.2)),
                             weights=(1.0, 0.0, 0.0), grid=(11,))
    ext, _ = wc.solve_extension_state(cfg, 0.9)
    assert ext.x1 == pytest.approx(0.05 * 0.9 + 0.004, rel=1e-8)
    assert ext.x2 == pytest.approx(0.006, abs=1e-9)
    assert ext.x3 is None
