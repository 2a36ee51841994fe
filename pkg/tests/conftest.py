import numpy as np
import pytest

from chemokin import shapes
from chemokin.boundary import GhostFillTables
from chemokin.classify import classify_points
from chemokin.meshing import build_space_mesh, build_velocity_grid


@pytest.fixture(scope="session")
def box_setup():
    """Small full-box domain with its fill tables (n_v = 8)."""
    mesh = build_space_mesh((-0.25, 0.25, -0.25, 0.25), 24, 24)
    vgrid = build_velocity_grid(1.0, 8)
    cls = classify_points(None, mesh)
    tables = GhostFillTables(cls, vgrid)
    return mesh, vgrid, cls, tables


@pytest.fixture(scope="session")
def disc_setup():
    """Disc of radius 2.7 inside [-3, 3]^2 (boundary off-grid everywhere)."""
    mesh = build_space_mesh((-3.0, 3.0, -3.0, 3.0), 40, 40)
    vgrid = build_velocity_grid(1.0, 8)
    cls = classify_points(shapes.disc((0.0, 0.0), 2.7), mesh)
    tables = GhostFillTables(cls, vgrid)
    return mesh, vgrid, cls, tables


def smooth_positive_field(mesh, vgrid, rng, floor=0.2):
    """Random smooth strictly positive kinetic field on the full lattice."""
    X, Y = mesh.grids_ext()
    n_v = vgrid.n_v
    f = np.empty(mesh.shape_ext + (n_v,))
    for j in range(n_v):
        a, b = rng.uniform(0.5, 2.0, size=2)
        kx, ky = rng.integers(1, 4, size=2)
        px, py = rng.uniform(0, 2 * np.pi, size=2)
        f[:, :, j] = floor + a + b * np.sin(kx * X * np.pi + px) * np.cos(ky * Y * np.pi + py)
    return np.maximum(f, floor)
