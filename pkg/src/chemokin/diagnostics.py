"""Observables: mass, cluster radius, tail fits, front tracking, sections.

All functions are pure; fields come in on the extended lattice together with
the classification that says which points are interior.
"""

from __future__ import annotations

import numpy as np

from .classify import GridClassification
from .meshing import N_GHOST, SpaceMesh, VelocityGrid


def total_mass(f, classification: GridClassification, vgrid: VelocityGrid) -> float:
    """M = dx dy dv sum over interior points and velocities of f."""
    mesh = classification.mesh
    inner = f[classification.interior_mask]
    return float(mesh.dx * mesh.dy * vgrid.dv * inner.sum())


def scalar_integral(u, classification: GridClassification) -> float:
    """dx dy sum over interior points (midpoint quadrature)."""
    mesh = classification.mesh
    return float(mesh.dx * mesh.dy * u[classification.interior_mask].sum())


def mean_radius(rho, classification: GridClassification, center=(0.0, 0.0)) -> float:
    """<|x|> = sum |x - center| rho / sum rho over interior points."""
    mesh = classification.mesh
    X, Y = mesh.grids_ext()
    mask = classification.interior_mask
    weights = rho[mask]
    total = float(weights.sum())
    if total <= 0.0:
        raise ValueError("mean_radius needs a nonzero density")
    r = np.hypot(X[mask] - center[0], Y[mask] - center[1])
    return float((r * weights).sum() / total)


def section_profile(rho, mesh: SpaceMesh, axis: str = "x", offset: float = 0.0):
    """Extract the 1D profile along the row/column nearest the given line.

    ``axis='x'`` walks along x at y ~ offset.  Returns (coords, values) over
    the real mesh points.
    """
    g = N_GHOST
    if axis == "x":
        if not mesh.y_min <= offset <= mesh.y_max:
            raise ValueError(f"offset {offset} outside [{mesh.y_min}, {mesh.y_max}]")
        iy = g + int(np.round((offset - mesh.y_min) / mesh.dy))
        return mesh.xs_ext[g:-g].copy(), rho[g:-g, iy].copy()
    if axis == "y":
        if not mesh.x_min <= offset <= mesh.x_max:
            raise ValueError(f"offset {offset} outside [{mesh.x_min}, {mesh.x_max}]")
        ix = g + int(np.round((offset - mesh.x_min) / mesh.dx))
        return mesh.ys_ext[g:-g].copy(), rho[ix, g:-g].copy()
    raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")


def tail_slope(coords, values, window, center: float = 0.0):
    """Least-squares fit of log(values) against |coords - center|.

    ``window = (r_min, r_max)`` restricts the fit to that radius range;
    returns (slope magnitude, r^2).  Requires at least 4 positive samples
    in the window.
    """
    r = np.abs(np.asarray(coords, dtype=float) - center)
    v = np.asarray(values, dtype=float)
    keep = (r >= window[0]) & (r <= window[1]) & (v > 0.0)
    if keep.sum() < 4:
        raise ValueError(
            f"tail fit window {window} holds only {int(keep.sum())} usable points"
        )
    x = r[keep]
    y = np.log(v[keep])
    slope, intercept = np.polyfit(x, y, 1)
    fit = slope * x + intercept
    ss_res = float(((y - fit) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(abs(slope)), r2


def radial_profile(rho, classification: GridClassification, center=(0.0, 0.0)):
    """Angularly averaged density per radial bin of width max(dx, dy).

    Returns (bin_centres, mean_density); empty bins are dropped.
    """
    mesh = classification.mesh
    X, Y = mesh.grids_ext()
    mask = classification.interior_mask
    r = np.hypot(X[mask] - center[0], Y[mask] - center[1])
    v = rho[mask]
    width = max(mesh.dx, mesh.dy)
    bins = np.floor(r / width).astype(np.int64)
    counts = np.bincount(bins)
    sums = np.bincount(bins, weights=v)
    nonempty = counts > 0
    centres = (np.arange(len(counts))[nonempty] + 0.5) * width
    return centres, sums[nonempty] / counts[nonempty]


def front_radius(rho, classification: GridClassification, center=(0.0, 0.0)) -> float:
    """Radius where the angularly averaged profile peaks."""
    centres, mean = radial_profile(rho, classification, center)
    return float(centres[int(np.argmax(mean))])


def angular_asymmetry(rho, classification: GridClassification,
                      center=(0.0, 0.0)) -> float:
    """Relative L2 deviation of rho from its angular average.

    The reference profile is interpolated linearly between radial bin
    centres so the measure reflects genuine angular variation rather than
    the bin discretisation.
    """
    mesh = classification.mesh
    X, Y = mesh.grids_ext()
    mask = classification.interior_mask
    r = np.hypot(X[mask] - center[0], Y[mask] - center[1])
    v = rho[mask]
    width = max(mesh.dx, mesh.dy)
    bins = np.floor(r / width).astype(np.int64)
    n = np.bincount(bins).astype(float)
    sr = np.bincount(bins, weights=r)
    srr = np.bincount(bins, weights=r * r)
    sv = np.bincount(bins, weights=v)
    srv = np.bincount(bins, weights=r * v)
    # per-bin linear fit v ~ a + b r removes the first-order radial bias
    det = n * srr - sr * sr
    safe = det > 1e-12 * np.maximum(n, 1) * width ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        b = np.where(safe, (n * srv - sr * sv) / np.where(safe, det, 1.0), 0.0)
        a = np.where(n > 0, (sv - b * sr) / np.maximum(n, 1), 0.0)
    reference = a[bins] + b[bins] * r
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        return 0.0
    return float(np.linalg.norm(v - reference) / norm)
