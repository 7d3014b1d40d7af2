import math

import numpy as np
import pytest

import wrapcam as wc

from conftest import random_convex_profile


def test_residual_zero_for_circle_on_axis():
    prof = wc.CamProfile((0.05,), 2.4)
    idler = wc.IdlerSpec(0.05, 0.0)
    res = wc.tangency_residual(prof, idler, 0.0, 0.0, math.pi)
    assert np.allclose(res, 0.0, atol=1e-15)


def test_residual_rotation_invariance_of_circle():
    prof = wc.CamProfile((0.05,), 2.4)
    idler = wc.IdlerSpec(0.05, 0.0)
    res = wc.tangency_residual(prof, idler, 0.5, 0.5, math.pi)
    assert np.allclose(res, 0.0, atol=1e-14)


def test_residual_two_circle_analytic_contact():
    prof = wc.CamProfile((0.05,), 2.4)
    idler = wc.IdlerSpec(0.02, 0.015)
    alpha = math.asin(0.015 / 0.07)
    res = wc.tangency_residual(prof, idler, 0.0, alpha, alpha + math.pi)
    assert np.max(np.abs(res)) < 1e-10


def test_solve_circular_cam_any_theta():
    prof = wc.CamProfile((0.05,), 2.4)
    idler = wc.IdlerSpec(0.02, 0.0)
    for theta in (0.0, 0.3, 1.1):
        sol = wc.solve_tangency(prof, idler, theta, guess=(theta + 0.1, math.pi - 0.1))
        assert sol.alpha == pytest.approx(theta, abs=1e-8)
        assert sol.gamma == pytest.approx(math.pi, abs=1e-8)


def test_solve_two_circle_oracle():
    prof = wc.CamProfile((0.05,), 2.4)
    idler = wc.IdlerSpec(0.02, 0.015)
    sol = wc.solve_tangency(prof, idler, 0.0)
    expect = math.asin(0.015 / (0.05 + 0.02))
    assert sol.alpha == pytest.approx(expect, abs=1e-6)
    assert sol.gamma == pytest.approx(expect + math.pi, abs=1e-6)


def test_solve_benchmark_cam_regression_snapshot():
    # cubic benchmark cam; alpha frozen from a converged run (residual ~1e-15)
    prof = wc.CamProfile((0.0250, 0.0046, 0.0133, -0.0052), 2.5)
    idler = wc.IdlerSpec(0.02, 0.015)
    sol = wc.solve_tangency(prof, idler, 0.0)
    assert sol.residual_norm < 1e-9
    assert sol.alpha == pytest.approx(0.487456304647, abs=1e-8)


def test_solution_reconstructs_contact_point(rng):
    for _ in range(8):
        prof = random_convex_profile(rng)
        idler = wc.IdlerSpec(rng.uniform(0.01, 0.03), rng.uniform(-0.01, 0.02))
        theta = rng.uniform(0.0, 1.2)
        sol = wc.solve_tangency(prof, idler, theta)
        p = wc.cam_point(prof, sol.alpha, theta)
        # idler center sits at the configured height; the contact is one idler
        # radius away along (cos gamma, sin gamma)
        assert p.y - idler.radius * math.sin(sol.gamma) == pytest.approx(
            idler.vertical_offset, abs=1e-8)
        # tangents antiparallel
        t_cam = wc.tangent_unit(prof, sol.alpha, theta)
        t_idl = (-math.sin(sol.gamma), math.cos(sol.gamma))
        assert t_cam.x + t_idl[0] == pytest.approx(0.0, abs=1e-8)
        assert t_cam.y + t_idl[1] == pytest.approx(0.0, abs=1e-8)


def test_sweep_circular_invariance():
    prof = wc.CamProfile((0.05,), 2.4)
    idler = wc.IdlerSpec(0.02, 0.015)
    thetas = np.linspace(0.0, math.pi / 2, 10)
    sols = wc.sweep_tangency(prof, idler, thetas)
    offsets = [s.alpha - t for s, t in zip(sols, thetas)]
    assert np.ptp(offsets) < 1e-9
    gammas = [s.gamma for s in sols]
    assert np.ptp(gammas) < 1e-9


def test_sweep_empty_and_single_point():
    prof = wc.CamProfile((0.05,), 2.4)
    idler = wc.IdlerSpec(0.02, 0.015)
    assert wc.sweep_tangency(prof, idler, []) == []
    single = wc.sweep_tangency(prof, idler, [0.4])
    direct = wc.solve_tangency(prof, idler, 0.4)
    assert single[0].alpha == pytest.approx(direct.alpha, abs=1e-12)


def test_sweep_continuity(rng):
    prof = random_convex_profile(rng)
    idler = wc.IdlerSpec(0.02, 0.015)
    thetas = np.linspace(0.0, math.pi / 2, 61)
    sols = wc.sweep_tangency(prof, idler, thetas)
    alphas = np.array([s.alpha for s in sols])
    dalpha = np.abs(np.diff(alphas))
    dtheta = np.diff(thetas)
    assert np.all(dalpha <= 10.0 * dtheta)


def test_sweep_requires_monotone_grid():
    prof = wc.CamProfile((0.05,), 2.4)
    idler = wc.IdlerSpec(0.02, 0.0)
    with pytest.raises(ValueError):
        wc.sweep_tangency(prof, idler, [0.0, 0.5, 0.2])


def test_nonconvergence_on_unreachable_idler():
    prof = wc.CamProfile((0.05,), 2.4)
    idler = wc.IdlerSpec(0.02, 0.5)   # idler far above any contact
    with pytest.raises(wc.NonConvergenceError) as err:
        wc.solve_tangency(prof, idler, 0.0)
    assert err.value.theta == 0.0


def test_sweep_reports_first_failing_theta():
    # shrinking cam: contact solvable at small theta, impossible once the
    # radius falls below the idler offset geometry
    prof = wc.CamProfile((0.05, -0.015), 2.2)
    idler = wc.IdlerSpec(0.01, 0.03)
    thetas = np.linspace(0.0, 2.0, 41)
    wc.solve_tangency(prof, idler, 0.0)   # start is solvable
    with pytest.raises(wc.NonConvergenceError) as err:
        wc.sweep_tangency(prof, idler, thetas)
    assert err.value.theta is not None and 0.0 < err.value.theta <= 2.0


def test_export_sweep_csv(tmp_path):
    prof = wc.CamProfile((0.05,), 2.4)
    idler = wc.IdlerSpec(0.02, 0.015)
    thetas = np.linspace(0.0, 1.0, 5)
    sols = wc.sweep_tangency(prof, idler, thetas)
    path = tmp_path / "sweep.csv"
    wc.tangency.export_sweep_csv(thetas, sols, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "theta_rad,alpha_rad,gamma_rad"
    assert len(lines) == 6
