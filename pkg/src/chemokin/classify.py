"""Grid-point classification and ghost-point metadata.

Every point of the extended lattice is tagged Interior, Ghost, or Exterior.
Interior points satisfy phi < 0 strictly; ghost points are non-interior
points within two index layers (max norm) of an interior point; everything
else is exterior and carries no metadata.

The computational box itself always acts as a wall: its faces sit half a
spacing outside the outermost mesh points, so every mesh point owns a full
cell and, for domains that fill the box, specular ghost fill mirrors ghost
cells onto real cells exactly.  A user shape is combined with this implicit
box by intersection; each ghost projects onto whichever wall it violates
most.

For every ghost the mirror construction is precomputed: boundary point x_p,
unit inward normal n, mirror point x_m = 2 x_p - x_g, and the interpolation
or extrapolation stencil found by crossing grid lines along the dominant
normal direction and taking the nearest interior points per line (degree 2,
with degree 1 / degree 0 fallbacks).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .meshing import N_GHOST, SpaceMesh
from .shapes import Rectangle, Shape

INTERIOR, GHOST, EXTERIOR = 0, 1, 2

# How far (in spacings) along a line a stencil point may sit from its cross
# point.  Anything farther signals a geometry too coarse for that line and
# triggers the degree fallback instead of coupling across an exterior gap.
_LOCALITY_CAP = 3.0

_SNAP_TOL = 1e-9  # mirror points this close to a lattice node snap onto it


class ClassificationError(RuntimeError):
    pass


@dataclass(frozen=True)
class StencilLine:
    """Points selected on one crossed grid line."""

    fixed_index: int          # lattice index along the dominant axis
    var_indices: tuple        # lattice indices along the varying axis
    cross_coord: float        # varying coordinate of the cross point


@dataclass(frozen=True)
class Stencil:
    """Interpolation/extrapolation stencil of degree 0, 1 or 2.

    ``points`` lists (ix, iy) extended-lattice indices, line by line; degree
    2 carries 3 lines x 3 points, degree 1 carries 2 x 2, degree 0 a single
    point with no line structure.
    """

    degree: int
    dominant: str             # 'x' or 'y': the axis the crossed lines stack along
    lines: tuple
    points: tuple


@dataclass(frozen=True)
class GhostInfo:
    index: tuple              # (ix, iy) on the extended lattice
    boundary_point: tuple     # x_p
    normal: tuple             # unit inward n(x_p)
    mirror_point: tuple       # x_m, snapped to lattice nodes when close
    stencil: Stencil
    mode: str                 # 'interpolate' or 'weno'


class GridClassification:
    """Tags plus ghost metadata for one (shape, mesh) pair."""

    def __init__(self, mesh: SpaceMesh, tag: np.ndarray, ghosts: list):
        self.mesh = mesh
        self.tag = tag
        self.ghosts = ghosts
        self.interior_mask = tag == INTERIOR

    @property
    def n_interior(self) -> int:
        return int(self.interior_mask.sum())

    def dump_csv(self, path):
        """Write per-point tags and ghost metadata (debug interface)."""
        by_index = {g.index: g for g in self.ghosts}
        with open(path, "w") as fh:
            fh.write("i_x,i_y,tag,x_p_x,x_p_y,n_x,n_y,x_m_x,x_m_y,stencil_degree\n")
            nx, ny = self.tag.shape
            for ix in range(nx):
                for iy in range(ny):
                    tag = int(self.tag[ix, iy])
                    base = f"{ix - N_GHOST},{iy - N_GHOST},{tag}"
                    g = by_index.get((ix, iy))
                    if g is None:
                        fh.write(base + ",,,,,,,\n")
                    else:
                        fh.write(
                            base
                            + f",{g.boundary_point[0]!r},{g.boundary_point[1]!r}"
                            + f",{g.normal[0]!r},{g.normal[1]!r}"
                            + f",{g.mirror_point[0]!r},{g.mirror_point[1]!r}"
                            + f",{g.stencil.degree}\n"
                        )


def bounding_box_shape(mesh: SpaceMesh) -> Rectangle:
    """The implicit wall of the computational box, on cell faces."""
    return Rectangle(
        mesh.x_min - 0.5 * mesh.dx,
        mesh.x_max + 0.5 * mesh.dx,
        mesh.y_min - 0.5 * mesh.dy,
        mesh.y_max + 0.5 * mesh.dy,
    )


def project_to_boundary(shape: Shape, x: float, y: float, mesh: SpaceMesh):
    """Project an outside point onto the wall; returns (x_p, n).

    Uses the shape's closed form when available, otherwise damped Newton on
    phi.  The boundary point satisfies |phi| <= 1e-12 * max(dx, dy).
    """
    h = max(mesh.dx, mesh.dy)
    tol = 1e-12 * h
    step = 1e-6 * h
    px, py = shape.project(x, y, tol, step)
    n = shape.normal(px, py, step)
    return (px, py), (float(n[0]), float(n[1]))


def _snap(value: float, coords: np.ndarray, spacing: float) -> float:
    k = int(np.clip(np.round((value - coords[0]) / spacing), 0, len(coords) - 1))
    if abs(value - coords[k]) <= _SNAP_TOL * spacing:
        return float(coords[k])
    return value


def _nearest_on_line(mask_line, coords, cross, count, spacing):
    """Indices of the `count` interior points nearest `cross` on one line."""
    cand = np.flatnonzero(mask_line)
    if cand.size < count:
        return None
    dist = np.abs(coords[cand] - cross)
    keep = dist <= _LOCALITY_CAP * spacing + 0.5 * spacing
    cand, dist = cand[keep], dist[keep]
    if cand.size < count:
        return None
    # Sort by distance, ties toward the smaller lattice index.
    order = np.lexsort((cand, dist))
    chosen = np.sort(cand[order[:count]])
    return tuple(int(i) for i in chosen)


def build_stencil(interior_mask, mesh: SpaceMesh, x_p, n, x_m) -> Stencil:
    """Select the stencil for a ghost with boundary point x_p and normal n.

    Crosses three consecutive grid lines perpendicular to the dominant
    normal component, starting from the line nearest x_p on the interior
    side, and takes the three interior points nearest each cross point.
    Falls back to 2 lines x 2 points, then to the single nearest interior
    point; a ghost with no interior point in reach is a hard error.
    """
    if abs(n[1]) >= abs(n[0]):
        dominant, ortho = "y", "x"
        line_coords, var_coords = mesh.ys_ext, mesh.xs_ext
        line_h, var_h = mesh.dy, mesh.dx
        n_line, n_var = n[1], n[0]
        p_line, p_var = x_p[1], x_p[0]
        mask = interior_mask  # mask[var, line]
    else:
        dominant, ortho = "x", "y"
        line_coords, var_coords = mesh.xs_ext, mesh.ys_ext
        line_h, var_h = mesh.dx, mesh.dy
        n_line, n_var = n[0], n[1]
        p_line, p_var = x_p[0], x_p[1]
        mask = interior_mask.T

    s = 1 if n_line > 0 else -1
    # First line on the interior side of x_p (a line through x_p counts).
    if s > 0:
        l0 = int(np.ceil((p_line - line_coords[0]) / line_h - _SNAP_TOL))
    else:
        l0 = int(np.floor((p_line - line_coords[0]) / line_h + _SNAP_TOL))

    def collect(n_lines, per_line):
        lines = []
        for k in range(n_lines):
            l = l0 + k * s
            if not 0 <= l < len(line_coords):
                return None
            t = (line_coords[l] - p_line) / n_line
            cross = p_var + t * n_var
            idx = _nearest_on_line(mask[:, l], var_coords, cross, per_line, var_h)
            if idx is None:
                return None
            lines.append(StencilLine(l, idx, float(cross)))
        return lines

    for degree, n_lines, per_line in ((2, 3, 3), (1, 2, 2)):
        lines = collect(n_lines, per_line)
        if lines is not None:
            points = []
            for ln in lines:
                for v in ln.var_indices:
                    points.append((v, ln.fixed_index) if dominant == "y"
                                  else (ln.fixed_index, v))
            return Stencil(degree, dominant, tuple(lines), tuple(points))

    # Degree 0: nearest interior point anywhere in the ghost's neighbourhood.
    gx = int(np.clip(np.round((x_p[0] - mesh.xs_ext[0]) / mesh.dx), 0,
                     interior_mask.shape[0] - 1))
    gy = int(np.clip(np.round((x_p[1] - mesh.ys_ext[0]) / mesh.dy), 0,
                     interior_mask.shape[1] - 1))
    best = None
    for r in (2, 4):
        xlo, xhi = max(gx - r, 0), min(gx + r + 1, interior_mask.shape[0])
        ylo, yhi = max(gy - r, 0), min(gy + r + 1, interior_mask.shape[1])
        sub = interior_mask[xlo:xhi, ylo:yhi]
        cand = np.argwhere(sub)
        if cand.size:
            cx = mesh.xs_ext[cand[:, 0] + xlo]
            cy = mesh.ys_ext[cand[:, 1] + ylo]
            d2 = (cx - x_p[0]) ** 2 + (cy - x_p[1]) ** 2
            order = np.lexsort((cand[:, 1], cand[:, 0], d2))
            pick = cand[order[0]]
            best = (int(pick[0] + xlo), int(pick[1] + ylo))
            break
    if best is None:
        raise ClassificationError(
            f"ghost near boundary point ({x_p[0]:.6g}, {x_p[1]:.6g}) has no "
            "interior point within reach"
        )
    return Stencil(0, "y", (), (best,))


def _stencil_mode(stencil: Stencil, mesh: SpaceMesh, x_m) -> str:
    """Interpolate when x_m lies inside the stencil's bounding box."""
    xs = mesh.xs_ext[[p[0] for p in stencil.points]]
    ys = mesh.ys_ext[[p[1] for p in stencil.points]]
    eps_x = _SNAP_TOL * mesh.dx
    eps_y = _SNAP_TOL * mesh.dy
    inside = (xs.min() - eps_x <= x_m[0] <= xs.max() + eps_x
              and ys.min() - eps_y <= x_m[1] <= ys.max() + eps_y)
    return "interpolate" if inside else "weno"


def _warn_if_underresolved(interior_mask):
    """Warn when some interior point sits in a < 3-point run both ways."""

    def run_lengths(mask_1d):
        out = np.zeros(mask_1d.shape, dtype=np.int64)
        count = 0
        for i, m in enumerate(mask_1d):
            count = count + 1 if m else 0
            out[i] = count
        for i in range(len(mask_1d) - 2, -1, -1):
            if mask_1d[i] and mask_1d[i + 1]:
                out[i] = out[i + 1]
        return out

    row_runs = np.zeros_like(interior_mask, dtype=np.int64)
    col_runs = np.zeros_like(interior_mask, dtype=np.int64)
    for j in range(interior_mask.shape[1]):
        col = interior_mask[:, j]
        row_runs[:, j] = run_lengths(col)
    for i in range(interior_mask.shape[0]):
        col_runs[i, :] = run_lengths(interior_mask[i, :])
    width = np.minimum(row_runs, col_runs)
    thin = interior_mask & (width < 3)
    n_int = int(interior_mask.sum())
    # A handful of short runs is normal where a curved wall grazes a grid
    # line; a large fraction means the mesh cannot resolve a channel.
    if n_int and thin.sum() > 0.1 * n_int:
        warnings.warn(
            f"{int(thin.sum())} of {n_int} interior points lie in features "
            "narrower than 3 mesh points; the mesh may not resolve the geometry",
            stacklevel=3,
        )


def classify_points(shape, mesh: SpaceMesh) -> GridClassification:
    """Tag the extended lattice and build ghost metadata.

    ``shape`` may be None, in which case the domain is the full computational
    box (walls on the box faces).  Otherwise the domain is the intersection
    of the shape with the box.
    """
    box = bounding_box_shape(mesh)
    pieces = [box] if shape is None else [shape, box]

    X, Y = mesh.grids_ext()
    phis = np.stack([np.asarray(p.phi(X, Y), dtype=float) for p in pieces])
    phi = phis.max(axis=0)
    active = phis.argmax(axis=0)

    interior = phi < 0.0
    band = ndimage.binary_dilation(interior, structure=np.ones((3, 3), bool),
                                   iterations=N_GHOST)
    tag = np.full(mesh.shape_ext, EXTERIOR, dtype=np.int8)
    tag[interior] = INTERIOR
    tag[band & ~interior] = GHOST

    _warn_if_underresolved(interior)

    ghosts = []
    xs, ys = mesh.xs_ext, mesh.ys_ext
    for ix, iy in np.argwhere(tag == GHOST):
        piece = pieces[active[ix, iy]]
        xg = (float(xs[ix]), float(ys[iy]))
        x_p, n = project_to_boundary(piece, xg[0], xg[1], mesh)
        x_m = (
            _snap(2.0 * x_p[0] - xg[0], xs, mesh.dx),
            _snap(2.0 * x_p[1] - xg[1], ys, mesh.dy),
        )
        stencil = build_stencil(interior, mesh, x_p, n, x_m)
        mode = _stencil_mode(stencil, mesh, x_m)
        ghosts.append(GhostInfo((int(ix), int(iy)), x_p, n, x_m, stencil, mode))

    return GridClassification(mesh, tag, ghosts)
