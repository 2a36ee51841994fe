import numpy as np
import pytest
from scipy import integrate

from chemokin.classify import classify_points
from chemokin.diagnostics import (angular_asymmetry, front_radius, mean_radius,
                                  radial_profile, section_profile, tail_slope,
                                  total_mass)
from chemokin.meshing import N_GHOST, build_space_mesh, build_velocity_grid

G = N_GHOST


@pytest.fixture(scope="module")
def square():
    mesh = build_space_mesh((-0.25, 0.25, -0.25, 0.25), 60, 60)
    cls = classify_points(None, mesh)
    vg = build_velocity_grid(1.0, 8)
    return mesh, cls, vg


def test_total_mass_zero_and_uniform(square):
    mesh, cls, vg = square
    f = np.zeros(mesh.shape_ext + (vg.n_v,))
    assert total_mass(f, cls, vg) == 0.0
    f[:] = 1.0
    expect = 2 * np.pi * mesh.dx * mesh.dy * cls.n_interior
    assert total_mass(f, cls, vg) == pytest.approx(expect, rel=1e-13)


def test_mean_radius_point_mass(square):
    mesh, cls, vg = square
    rho = np.zeros(mesh.shape_ext)
    centre_idx = (G + 30, G + 30)
    rho[centre_idx] = 5.0
    assert mean_radius(rho, cls) == pytest.approx(0.0, abs=1e-14)


def test_mean_radius_exponential_against_quadrature_oracle(square):
    mesh, cls, vg = square
    lam = 20.0
    X, Y = mesh.grids_ext()
    rho = np.exp(-lam * np.hypot(X, Y))
    got = mean_radius(rho, cls)
    num, _ = integrate.dblquad(
        lambda y, x: np.hypot(x, y) * np.exp(-lam * np.hypot(x, y)),
        -0.25, 0.25, -0.25, 0.25)
    den, _ = integrate.dblquad(
        lambda y, x: np.exp(-lam * np.hypot(x, y)),
        -0.25, 0.25, -0.25, 0.25)
    oracle = num / den
    assert got == pytest.approx(oracle, rel=0.01)
    # 2D radial convention gives ~2/lambda (domain truncation at lam*R = 5
    # accounts for ~6% here); the 1D-section convention gives ~1/lambda
    assert oracle == pytest.approx(2.0 / lam, rel=0.08)
    one_d = integrate.quad(lambda x: abs(x) * np.exp(-lam * abs(x)), -0.25, 0.25)[0] \
        / integrate.quad(lambda x: np.exp(-lam * abs(x)), -0.25, 0.25)[0]
    assert oracle / one_d == pytest.approx(2.0, rel=0.1)


def test_mean_radius_scale_invariance(square):
    mesh, cls, vg = square
    rng = np.random.default_rng(1)
    rho = np.zeros(mesh.shape_ext)
    rho[cls.interior_mask] = rng.random(cls.n_interior)
    assert mean_radius(2.0 * rho, cls) == mean_radius(rho, cls)


def test_mean_radius_rejects_empty(square):
    mesh, cls, vg = square
    with pytest.raises(ValueError):
        mean_radius(np.zeros(mesh.shape_ext), cls)


def test_tail_slope_exact_exponential(square):
    mesh, cls, vg = square
    lam = 18.0
    coords, _ = section_profile(np.zeros(mesh.shape_ext), mesh, "x", 0.0)
    values = 3.0 * np.exp(-lam * np.abs(coords))
    slope, r2 = tail_slope(coords, values, (0.075, 0.2))
    assert slope == pytest.approx(lam, rel=1e-10)
    assert r2 == pytest.approx(1.0, abs=1e-12)


def test_tail_slope_scale_invariance(square):
    mesh, cls, vg = square
    coords = np.linspace(-0.25, 0.25, 101)
    values = np.exp(-12 * np.abs(coords)) * (1 + 0.05 * np.sin(40 * coords))
    s1, r1 = tail_slope(coords, values, (0.07, 0.2))
    s2, r2 = tail_slope(coords, 7.5 * values, (0.07, 0.2))
    assert s1 == pytest.approx(s2, rel=1e-12)
    assert r1 == pytest.approx(r2, abs=1e-12)


def test_tail_slope_distinguishes_gaussian(square):
    # must land below the 0.98 threshold that certifies an exponential tail
    coords = np.linspace(-0.25, 0.25, 101)
    gauss = np.exp(-80 * coords ** 2)
    _, r2 = tail_slope(coords, gauss, (0.04, 0.24))
    assert r2 < 0.98


def test_tail_slope_needs_enough_points():
    with pytest.raises(ValueError):
        tail_slope(np.array([0.0, 0.1, 0.2]), np.array([1.0, 0.5, 0.2]), (0.05, 0.15))


def test_front_radius_centred_gaussian(square):
    mesh, cls, vg = square
    X, Y = mesh.grids_ext()
    rho = np.exp(-50 * (X ** 2 + Y ** 2))
    assert front_radius(rho, cls) <= max(mesh.dx, mesh.dy)


def test_front_radius_ring(square):
    mesh, cls, vg = square
    X, Y = mesh.grids_ext()
    r = np.hypot(X, Y)
    rho = np.exp(-200 * (r - 0.15) ** 2)
    assert front_radius(rho, cls) == pytest.approx(0.15, abs=max(mesh.dx, mesh.dy))


def test_front_radius_rotation_invariant(square):
    mesh, cls, vg = square
    rng = np.random.default_rng(2)
    X, Y = mesh.grids_ext()
    r = np.hypot(X, Y)
    rho = np.exp(-100 * (r - 0.12) ** 2) * (1 + 0.2 * np.cos(3 * np.arctan2(Y, X)))
    rho[~cls.interior_mask] = 0.0
    base = front_radius(rho, cls)
    inner = rho[G:-G, G:-G]
    rot = np.zeros_like(rho)
    rot[G:-G, G:-G] = np.rot90(inner)
    assert abs(front_radius(rot, cls) - base) <= max(mesh.dx, mesh.dy)


def test_section_profile_symmetry_and_constant(square):
    mesh, cls, vg = square
    X, Y = mesh.grids_ext()
    rho = np.exp(-30 * (X ** 2 + Y ** 2))
    coords, vals = section_profile(rho, mesh, "x", 0.0)
    assert np.allclose(vals, vals[::-1], atol=1e-12)
    f = np.ones(mesh.shape_ext + (vg.n_v,))
    from chemokin.diffusion import density_moment
    rho_c = density_moment(f, vg)
    _, vals_c = section_profile(rho_c, mesh, "y", 0.1)
    assert np.allclose(vals_c, 2 * np.pi, rtol=1e-13)


def test_section_profile_rejects_outside_offset(square):
    mesh, cls, vg = square
    with pytest.raises(ValueError):
        section_profile(np.zeros(mesh.shape_ext), mesh, "x", 0.5)


def test_angular_asymmetry_zero_for_radial(square):
    mesh, cls, vg = square
    X, Y = mesh.grids_ext()
    r = np.hypot(X, Y)
    rho = np.exp(-r)
    # binned average of a radial field is nearly the field itself
    assert angular_asymmetry(rho, cls) <= 0.01
