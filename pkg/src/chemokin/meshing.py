"""Uniform Cartesian space mesh and discrete velocity grid.

The space mesh carries the grid points ``x_i = x_min + i*dx`` for
``0 <= i <= n_x`` (and likewise in y) plus a two-layer halo on every side so
that second-order transport stencils and ghost-point construction never fall
off the lattice.  The velocity grid holds ``n_v`` directions on the circle of
radius ``v0`` at angles ``theta_j = (j + 1/2) * dv`` with ``dv = 2*pi/n_v``.

``n_v`` must be even: with the half-offset angles, an even count makes the
mirror image of every discrete velocity under an axis-aligned wall another
discrete velocity, which is what makes specular ghost fill on grid-aligned
walls exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

N_GHOST = 2  # halo layers on each side; transport reads two upwind neighbours


@dataclass(frozen=True)
class SpaceMesh:
    """Uniform vertex mesh on [x_min, x_max] x [y_min, y_max]."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    n_x: int
    n_y: int
    dx: float = field(init=False)
    dy: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "dx", (self.x_max - self.x_min) / self.n_x)
        object.__setattr__(self, "dy", (self.y_max - self.y_min) / self.n_y)

    @property
    def shape(self):
        """Number of real mesh points per axis: (n_x + 1, n_y + 1)."""
        return (self.n_x + 1, self.n_y + 1)

    @property
    def shape_ext(self):
        """Shape of arrays including the two-layer halo on each side."""
        return (self.n_x + 1 + 2 * N_GHOST, self.n_y + 1 + 2 * N_GHOST)

    @property
    def xs_ext(self) -> np.ndarray:
        """x coordinates of the extended lattice (halo included)."""
        return self.x_min + (np.arange(self.shape_ext[0]) - N_GHOST) * self.dx

    @property
    def ys_ext(self) -> np.ndarray:
        return self.y_min + (np.arange(self.shape_ext[1]) - N_GHOST) * self.dy

    def point(self, i_x: int, i_y: int):
        """Coordinates of real mesh point (i_x, i_y), 0 <= i_x <= n_x."""
        return (self.x_min + i_x * self.dx, self.y_min + i_y * self.dy)

    def grids_ext(self):
        """Broadcastable coordinate grids over the extended lattice."""
        return np.meshgrid(self.xs_ext, self.ys_ext, indexing="ij")

    @property
    def interior_slice(self):
        """Slice selecting the real mesh points inside an extended array."""
        return (slice(N_GHOST, -N_GHOST), slice(N_GHOST, -N_GHOST))


def build_space_mesh(bounds, n_x: int, n_y: int) -> SpaceMesh:
    """Build the uniform mesh; ``bounds = (x_min, x_max, y_min, y_max)``.

    Raises ``ValueError`` for nonpositive counts or inverted bounds.
    """
    x_min, x_max, y_min, y_max = (float(b) for b in bounds)
    if n_x < 1 or n_y < 1:
        raise ValueError(f"mesh counts must be positive, got n_x={n_x}, n_y={n_y}")
    if x_max <= x_min or y_max <= y_min:
        raise ValueError(f"inverted or empty bounds: {bounds}")
    return SpaceMesh(x_min, x_max, y_min, y_max, int(n_x), int(n_y))


@dataclass(frozen=True)
class VelocityGrid:
    """Discrete directions on the circle of radius v0.

    ``vx``/``vy`` are the Cartesian components with reflection symmetry
    enforced bitwise: the image of grid velocity j under a wall normal to
    x is index ``n_v/2 - 1 - j (mod n_v)`` and under a wall normal to y is
    ``n_v - 1 - j``, with exactly opposite/equal components.
    """

    v0: float
    n_v: int
    dv: float
    theta: np.ndarray
    vx: np.ndarray
    vy: np.ndarray

    def reflect_index_x(self) -> np.ndarray:
        """Index map j -> j' for specular reflection off a wall normal to x."""
        j = np.arange(self.n_v)
        return (self.n_v // 2 - 1 - j) % self.n_v

    def reflect_index_y(self) -> np.ndarray:
        """Index map for reflection off a wall normal to y."""
        return self.n_v - 1 - np.arange(self.n_v)

    def angular_interpolation(self, vpx, vpy, snap_tol=1e-10):
        """Locate off-grid velocities (vpx, vpy) between grid directions.

        Returns (j0, j1, w) with the periodic-linear reconstruction
        ``f(v') = (1 - w) f_{j0} + w f_{j1}``.  Angles within ``snap_tol``
        of a grid direction snap to it exactly (w = 0).
        """
        theta_p = np.mod(np.arctan2(vpy, vpx), 2.0 * np.pi)
        u = theta_p / self.dv - 0.5
        j0 = np.floor(u).astype(np.int64)
        w = u - j0
        j0 = np.mod(j0, self.n_v)
        snap_hi = w > 1.0 - snap_tol
        j0 = np.where(snap_hi, (j0 + 1) % self.n_v, j0)
        w = np.where(snap_hi | (w < snap_tol), 0.0, w)
        j1 = (j0 + 1) % self.n_v
        return j0, j1, w


def build_velocity_grid(v0: float, n_v: int) -> VelocityGrid:
    """Build the velocity grid; n_v must be even (and >= 2).

    Oddness is rejected because an odd grid has no exact image under
    specular reflection off axis-aligned walls, which would break the exact
    ghost fill on grid-aligned geometry.
    """
    if v0 <= 0:
        raise ValueError(f"v0 must be positive, got {v0}")
    if n_v < 2 or n_v % 2 != 0:
        raise ValueError(
            f"n_v must be even and >= 2 (got {n_v}): with theta_j = (j+1/2)*dv, "
            "only an even count keeps specular wall reflections on the velocity "
            "grid"
        )
    dv = 2.0 * np.pi / n_v
    theta = (np.arange(n_v) + 0.5) * dv
    vx = v0 * np.cos(theta)
    vy = v0 * np.sin(theta)
    # Enforce the reflection symmetries bitwise.  Lower half mirrors the
    # upper half (theta -> 2*pi - theta), and within the upper half the
    # x-mirror pairs j <-> n_v/2 - 1 - j carry exactly opposite vx.
    half = n_v // 2
    for j in range(half):
        p = half - 1 - j
        if p > j:
            vx[p] = -vx[j]
            vy[p] = vy[j]
        elif p == j:
            vx[j] = 0.0
            vy[j] = v0
    for j in range(half):
        k = n_v - 1 - j
        vx[k] = vx[j]
        vy[k] = -vy[j]
    vx.setflags(write=False)
    vy.setflags(write=False)
    theta.setflags(write=False)
    return VelocityGrid(float(v0), int(n_v), dv, theta, vx, vy)
