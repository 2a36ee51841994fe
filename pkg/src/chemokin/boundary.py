"""Ghost-value construction: Lagrange stencil evaluation, WENO-type
extrapolation, specular fill of the kinetic field, and the Neumann closure
for scalar fields.

The kinetic fill realises f(x_g, v) = f(x_m, v') with v' = v - 2 (v.n) n.
Values at the mirror point are reconstructed per velocity slice with the
ghost's stencil (plain Lagrange interpolation when the mirror point lies
inside the stencil footprint, WENO-weighted nested extrapolation otherwise),
then off-grid reflected velocities are reconstructed by periodic linear
interpolation between the two neighbouring grid directions.

The WENO weights follow the scale-invariant form: alpha_r = d_r/(eps+beta_r)^2
with d_0 = dx^2+dy^2, d_1 = sqrt(dx^2+dy^2), d_2 = 1-d_0-d_1, eps = 1e-6, and
smoothness indicators

    beta_0 = dx^2 + dy^2,
    beta_r = (sum_{x in S_r} f(x)^2)^-1
             * sum_{1<=|s|<=r} int_K |K|^{|s|-1} (D^s q_r)^2 dx   (r >= 1),

with beta_r = 0 when every value on S_r vanishes.  K is the dx-by-dy cell
centred on the boundary point.  The integrals are evaluated in closed form
(q_r is polynomial), so each beta_r reduces to a precomputed quadratic form
in the stencil data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classify import GridClassification, Stencil, StencilLine
from .meshing import N_GHOST, SpaceMesh, VelocityGrid

WENO_EPS = 1e-6

degenerate_fallbacks = 0  # times a singular stencil arrangement was reduced


def _basis_1d(coords, t):
    """Lagrange basis values at t for the given 1D nodes (exact at nodes)."""
    coords = np.asarray(coords, dtype=float)
    n = len(coords)
    out = np.empty(n)
    for i in range(n):
        num = 1.0
        den = 1.0
        for k in range(n):
            if k == i:
                continue
            num *= t - coords[k]
            den *= coords[i] - coords[k]
        out[i] = num / den
    return out


def _degenerate_reduction(stencil: Stencil) -> Stencil:
    """Drop duplicated lines/points so the Lagrange fit is solvable again."""
    seen_lines = {}
    for ln in stencil.lines:
        if ln.fixed_index not in seen_lines:
            var = tuple(dict.fromkeys(ln.var_indices))
            seen_lines[ln.fixed_index] = StencilLine(ln.fixed_index, var,
                                                     ln.cross_coord)
    lines = list(seen_lines.values())
    per_line = min(len(ln.var_indices) for ln in lines)
    degree = min(len(lines), per_line) - 1
    count = degree + 1
    lines = [StencilLine(ln.fixed_index, ln.var_indices[:count], ln.cross_coord)
             for ln in lines[:count]]
    if degree <= 0:
        ln = lines[0]
        pt = ((ln.var_indices[0], ln.fixed_index) if stencil.dominant == "y"
              else (ln.fixed_index, ln.var_indices[0]))
        return Stencil(0, stencil.dominant, (), (pt,))
    points = []
    for ln in lines:
        for v in ln.var_indices:
            points.append((v, ln.fixed_index) if stencil.dominant == "y"
                          else (ln.fixed_index, v))
    return Stencil(degree, stencil.dominant, tuple(lines), tuple(points))


def _is_degenerate(stencil: Stencil) -> bool:
    fixed = [ln.fixed_index for ln in stencil.lines]
    if len(set(fixed)) != len(fixed):
        return True
    return any(len(set(ln.var_indices)) != len(ln.var_indices)
               for ln in stencil.lines)


def lagrange_weights(stencil: Stencil, mesh: SpaceMesh, target) -> np.ndarray:
    """Weights w with  q(target) = sum_i w_i f(points_i).

    Line-by-line construction: 1D Lagrange along each crossed line, then 1D
    Lagrange across the lines, which for the full stencil equals the tensor
    Q_r fit on those points.  A degenerate arrangement (coincident points or
    lines) falls back one degree and bumps ``degenerate_fallbacks``.
    """
    if stencil.degree == 0:
        return np.array([1.0])
    if _is_degenerate(stencil):
        global degenerate_fallbacks
        degenerate_fallbacks += 1
        reduced = _degenerate_reduction(stencil)
        w_red = lagrange_weights(reduced, mesh, target)
        lookup = {}
        for p, w in zip(reduced.points, w_red):
            lookup[p] = w
        out = np.zeros(len(stencil.points))
        used = set()
        for k, p in enumerate(stencil.points):
            if p in lookup and p not in used:
                out[k] = lookup[p]
                used.add(p)
        return out
    if stencil.dominant == "y":
        line_coords, var_coords = mesh.ys_ext, mesh.xs_ext
        t_line, t_var = target[1], target[0]
    else:
        line_coords, var_coords = mesh.xs_ext, mesh.ys_ext
        t_line, t_var = target[0], target[1]
    across = _basis_1d([line_coords[ln.fixed_index] for ln in stencil.lines], t_line)
    weights = []
    for c, ln in zip(across, stencil.lines):
        along = _basis_1d(var_coords[list(ln.var_indices)], t_var)
        weights.append(c * along)
    return np.concatenate(weights)


def evaluate_lagrange(stencil: Stencil, values, target, mesh: SpaceMesh) -> float:
    """Evaluate the stencil's Lagrange polynomial at target.

    ``values`` are aligned with ``stencil.points``.
    """
    w = lagrange_weights(stencil, mesh, target)
    return float(np.dot(w, np.asarray(values, dtype=float)))


# --- substencil family -------------------------------------------------


def _nearest_sub_line(line: StencilLine, var_coords, count):
    dist = np.abs(var_coords[list(line.var_indices)] - line.cross_coord)
    order = np.lexsort((np.array(line.var_indices), dist))
    chosen = tuple(sorted(line.var_indices[k] for k in order[:count]))
    return StencilLine(line.fixed_index, chosen, line.cross_coord)


def substencil_family(stencil: Stencil, mesh: SpaceMesh, x_p):
    """Nested substencil family [S_0, S_1, (S_2)] reusing the stencil points.

    S_2 is the full degree-2 stencil; S_1 keeps the two points nearest each
    cross point on the first two lines; S_0 is the single stencil point
    nearest the boundary point.  A degree-1 primary stencil yields (S_0,
    S_1); degree 0 has no family.
    """
    if stencil.degree == 0:
        return [stencil]
    var_coords = mesh.xs_ext if stencil.dominant == "y" else mesh.ys_ext

    def line_points(line):
        if stencil.dominant == "y":
            return [(v, line.fixed_index) for v in line.var_indices]
        return [(line.fixed_index, v) for v in line.var_indices]

    family = []
    # S_0: stencil point nearest x_p.
    pts = np.array(stencil.points)
    px = mesh.xs_ext[pts[:, 0]]
    py = mesh.ys_ext[pts[:, 1]]
    d2 = (px - x_p[0]) ** 2 + (py - x_p[1]) ** 2
    order = np.lexsort((pts[:, 1], pts[:, 0], d2))
    s0_point = tuple(int(v) for v in pts[order[0]])
    family.append(Stencil(0, stencil.dominant, (), (s0_point,)))

    if stencil.degree == 1:
        family.append(stencil)
        return family

    lines1 = tuple(_nearest_sub_line(ln, var_coords, 2) for ln in stencil.lines[:2])
    pts1 = []
    for ln in lines1:
        pts1.extend(line_points(ln))
    family.append(Stencil(1, stencil.dominant, lines1, tuple(pts1)))
    family.append(stencil)
    return family


def _point_index_in(stencil: Stencil, sub: Stencil) -> np.ndarray:
    lookup = {p: k for k, p in enumerate(stencil.points)}
    return np.array([lookup[p] for p in sub.points], dtype=np.int64)


# --- smoothness indicators ---------------------------------------------


def _moment(k: int) -> float:
    """int_{-1/2}^{1/2} t^k dt."""
    if k % 2 == 1:
        return 0.0
    return (0.5 ** k) / (k + 1)


def _fit_matrix(sub: Stencil, mesh: SpaceMesh, x_p) -> tuple:
    """Map stencil data to scaled monomial coefficients: coeffs = A @ f.

    Coordinates are shifted to x_p and scaled by (dx, dy), so the monomials
    are xi^a eta^b with a, b <= degree.
    """
    r = sub.degree
    pts = np.array(sub.points)
    xi = (mesh.xs_ext[pts[:, 0]] - x_p[0]) / mesh.dx
    eta = (mesh.ys_ext[pts[:, 1]] - x_p[1]) / mesh.dy
    monomials = [(a, b) for a in range(r + 1) for b in range(r + 1)]
    V = np.empty((len(pts), len(monomials)))
    for m, (a, b) in enumerate(monomials):
        V[:, m] = xi ** a * eta ** b
    return np.linalg.inv(V), monomials


def _derivative_matrix(monomials, p, q) -> np.ndarray:
    """Coefficient map of d^{p+q}/(dxi^p deta^q) in the monomial basis."""
    n = len(monomials)
    index = {m: k for k, m in enumerate(monomials)}
    T = np.zeros((n, n))
    for k, (a, b) in enumerate(monomials):
        if a < p or b < q:
            continue
        fac = 1.0
        for i in range(p):
            fac *= a - i
        for i in range(q):
            fac *= b - i
        T[index[(a - p, b - q)], k] = fac
    return T


def smoothness_form(sub: Stencil, mesh: SpaceMesh, x_p) -> np.ndarray:
    """Matrix B with  beta = (f' B f) / (f' f)  for substencil data f."""
    r = sub.degree
    A, monomials = _fit_matrix(sub, mesh, x_p)
    gram = np.empty((len(monomials), len(monomials)))
    for i, (a1, b1) in enumerate(monomials):
        for j, (a2, b2) in enumerate(monomials):
            gram[i, j] = _moment(a1 + a2) * _moment(b1 + b2)
    cell = mesh.dx * mesh.dy
    B = np.zeros((len(sub.points), len(sub.points)))
    for p in range(r + 1):
        for q in range(r + 1):
            if not 1 <= p + q <= r:
                continue
            T = _derivative_matrix(monomials, p, q)
            M = T.T @ gram @ T
            scale = cell ** (p + q - 1) * cell * mesh.dx ** (-2 * p) * mesh.dy ** (-2 * q)
            B += scale * (A.T @ M @ A)
    return B


@dataclass
class WenoWeights:
    """Linear weights, smoothness indicators and nonlinear weights."""

    d: np.ndarray
    beta: np.ndarray
    w: np.ndarray
    eps: float = WENO_EPS


def linear_weight_table(mesh: SpaceMesh, levels: int) -> np.ndarray:
    """d_r for the substencil family; renormalised when only two levels."""
    d0 = mesh.dx ** 2 + mesh.dy ** 2
    d1 = np.sqrt(mesh.dx ** 2 + mesh.dy ** 2)
    d2 = 1.0 - d0 - d1
    if d2 <= 0:
        raise ValueError(
            f"mesh too coarse for WENO linear weights (dx={mesh.dx}, dy={mesh.dy})"
        )
    d = np.array([d0, d1, d2])
    return d[:levels]


def weno_extrapolate(stencil: Stencil, values, target, mesh: SpaceMesh, x_p,
                     return_weights: bool = False):
    """WENO-weighted evaluation of the nested substencil family at target.

    ``values`` are aligned with ``stencil.points``.
    """
    values = np.asarray(values, dtype=float)
    family = substencil_family(stencil, mesh, x_p)
    if len(family) == 1:
        result = float(values[0])
        if return_weights:
            return result, WenoWeights(np.array([1.0]), np.array([0.0]),
                                       np.array([1.0]))
        return result
    d = linear_weight_table(mesh, len(family))
    beta = np.empty(len(family))
    q = np.empty(len(family))
    beta[0] = mesh.dx ** 2 + mesh.dy ** 2
    for r, sub in enumerate(family):
        sel = _point_index_in(stencil, sub)
        fsub = values[sel]
        q[r] = np.dot(lagrange_weights(sub, mesh, target), fsub)
        if r >= 1:
            ssq = float(np.dot(fsub, fsub))
            if ssq == 0.0:
                beta[r] = 0.0
            else:
                B = smoothness_form(sub, mesh, x_p)
                beta[r] = float(fsub @ B @ fsub) / ssq
    alpha = d / (WENO_EPS + beta) ** 2
    w = alpha / alpha.sum()
    result = float(np.dot(w, q))
    if return_weights:
        return result, WenoWeights(d, beta, w)
    return result


# --- precomputed fill tables --------------------------------------------


class _FillGroup:
    """Ghosts sharing a reconstruction flavour, laid out for vector fill."""

    __slots__ = ("ghost_flat", "stencil_idx", "interp_w", "sub_sel", "sub_eval",
                 "sub_forms", "d", "j0", "j1", "wfrac", "weno")

    def __init__(self):
        self.ghost_flat = []
        self.stencil_idx = []
        self.interp_w = []
        self.sub_sel = []
        self.sub_eval = []
        self.sub_forms = []
        self.d = None
        self.j0 = []
        self.j1 = []
        self.wfrac = []
        self.weno = False


class GhostFillTables:
    """Precomputed kinetic ghost fill and scalar Neumann closure.

    Built once per (classification, velocity grid); the per-step fill is a
    handful of gathers, small einsums and one scatter.  ``clamp_count``
    accumulates how many ghost values were clamped to zero.
    """

    def __init__(self, classification: GridClassification, vgrid: VelocityGrid):
        self.classification = classification
        self.vgrid = vgrid
        self.mesh = classification.mesh
        self.clamp_count = 0
        self.overshoot_count = 0
        self._closure = []          # (ghost_flat, stencil_flat, weights)
        self._groups = self._build()

    # -- construction --

    def _build(self):
        mesh = self.mesh
        nx, ny = mesh.shape_ext
        vg = self.vgrid
        groups = {}
        for g in self.classification.ghosts:
            flat = g.index[0] * ny + g.index[1]
            stencil_flat = np.array([p[0] * ny + p[1] for p in g.stencil.points],
                                    dtype=np.int64)
            w_lin = lagrange_weights(g.stencil, mesh, g.mirror_point)
            self._closure.append((flat, stencil_flat, w_lin))

            nxn, nyn = g.normal
            vdotn = vg.vx * nxn + vg.vy * nyn
            vpx = vg.vx - 2.0 * vdotn * nxn
            vpy = vg.vy - 2.0 * vdotn * nyn
            j0, j1, wfrac = vg.angular_interpolation(vpx, vpy)

            use_weno = g.mode == "weno" and g.stencil.degree >= 1
            key = ("weno", g.stencil.degree) if use_weno else \
                ("interp", len(g.stencil.points))
            grp = groups.setdefault(key, _FillGroup())
            grp.ghost_flat.append(flat)
            grp.stencil_idx.append(stencil_flat)
            grp.j0.append(j0)
            grp.j1.append(j1)
            grp.wfrac.append(wfrac)
            if use_weno:
                grp.weno = True
                family = substencil_family(g.stencil, mesh, g.boundary_point)
                sels, evals, forms = [], [], []
                for r, sub in enumerate(family):
                    sels.append(_point_index_in(g.stencil, sub))
                    evals.append(lagrange_weights(sub, mesh, g.mirror_point))
                    if r == 0:
                        forms.append(None)
                    else:
                        forms.append(smoothness_form(sub, mesh, g.boundary_point))
                grp.sub_sel.append(sels)
                grp.sub_eval.append(evals)
                grp.sub_forms.append(forms)
            else:
                grp.interp_w.append(w_lin)

        for key, grp in groups.items():
            grp.ghost_flat = np.array(grp.ghost_flat, dtype=np.int64)
            grp.stencil_idx = np.array(grp.stencil_idx, dtype=np.int64)
            grp.j0 = np.array(grp.j0, dtype=np.int64)
            grp.j1 = np.array(grp.j1, dtype=np.int64)
            grp.wfrac = np.array(grp.wfrac, dtype=float)
            if grp.weno:
                levels = len(grp.sub_sel[0])
                grp.d = linear_weight_table(self.mesh, levels)
                grp.sub_sel = [
                    np.array([s[r] for s in grp.sub_sel], dtype=np.int64)
                    for r in range(levels)
                ]
                grp.sub_eval = [
                    np.array([e[r] for e in grp.sub_eval], dtype=float)
                    for r in range(levels)
                ]
                grp.sub_forms = [None] + [
                    np.array([f[r] for f in grp.sub_forms], dtype=float)
                    for r in range(1, levels)
                ]
            else:
                grp.interp_w = np.array(grp.interp_w, dtype=float)
        return list(groups.values())

    # -- kinetic fill --

    def fill_kinetic_ghosts(self, f: np.ndarray) -> int:
        """Fill every ghost entry of f in place; returns clamp count.

        Reconstructions are clamped below at zero and above at the stencil's
        own slice maximum: a specular wall only mirrors interior data, so a
        ghost value beyond the local data range is an extrapolation artefact
        that would otherwise pump mass through the wall at steep fronts.
        """
        nx, ny = self.mesh.shape_ext
        n_v = self.vgrid.n_v
        fview = f.reshape(nx * ny, n_v)
        clamped = 0
        overshoot = 0
        for grp in self._groups:
            data = fview[grp.stencil_idx]            # (G, P, n_v)
            if grp.weno:
                slice_vals = self._weno_group(grp, data)
            else:
                slice_vals = np.einsum("gp,gpv->gv", grp.interp_w, data)
            bound = data.max(axis=1)
            over = slice_vals > bound
            overshoot += int(over.sum())
            if over.any():
                slice_vals = np.where(over, bound, slice_vals)
            lo = np.take_along_axis(slice_vals, grp.j0, axis=1)
            hi = np.take_along_axis(slice_vals, grp.j1, axis=1)
            vals = (1.0 - grp.wfrac) * lo + grp.wfrac * hi
            neg = vals < 0.0
            clamped += int(neg.sum())
            if neg.any():
                vals = np.where(neg, 0.0, vals)
            fview[grp.ghost_flat] = vals
        self.clamp_count += clamped
        self.overshoot_count += overshoot
        return clamped

    @staticmethod
    def _weno_group(grp: _FillGroup, data: np.ndarray) -> np.ndarray:
        levels = len(grp.sub_eval)
        G, _, n_v = data.shape
        beta = np.empty((levels, G, n_v))
        q = np.empty((levels, G, n_v))
        beta[0] = 0.0  # replaced by the constant beta_0 below
        for r in range(levels):
            sel = grp.sub_sel[r]
            sub = np.take_along_axis(data, sel[:, :, None], axis=1)
            q[r] = np.einsum("gp,gpv->gv", grp.sub_eval[r], sub)
            if r >= 1:
                ssq = np.einsum("gpv,gpv->gv", sub, sub)
                quad = np.einsum("gpv,gpq,gqv->gv", sub, grp.sub_forms[r], sub)
                with np.errstate(invalid="ignore", divide="ignore"):
                    beta[r] = np.where(ssq > 0.0, quad / ssq, 0.0)
        beta[0] = grp.d[0]  # beta_0 = dx^2 + dy^2 = d_0
        alpha = grp.d[:, None, None] / (WENO_EPS + beta) ** 2
        w = alpha / alpha.sum(axis=0)
        return np.einsum("rgv,rgv->gv", w, q)

    # -- scalar closure --

    def apply_scalar_closure(self, u: np.ndarray) -> None:
        """Set ghost values of a scalar field to the mirror reconstruction.

        The homogeneous Neumann condition across the wall is u(x_g) = u(x_m);
        the mirror value uses the ghost's Lagrange weights, the same affine
        relation that is folded into the implicit system.
        """
        nx, ny = self.mesh.shape_ext
        uview = u.reshape(nx * ny)
        for flat, stencil_flat, w in self._closure:
            uview[flat] = float(np.dot(w, uview[stencil_flat]))

    def closure_entries(self):
        """Iterable of (ghost_flat_index, stencil_flat_indices, weights)."""
        return self._closure

    def neumann_ghost_closure(self, u: np.ndarray) -> None:
        """Spec-facing name for the scalar ghost closure."""
        self.apply_scalar_closure(u)

    def dump_weights(self, path):
        """Write per-ghost reconstruction weights as CSV (debug interface)."""
        nx, ny = self.mesh.shape_ext
        ghosts = {g.index: g for g in self.classification.ghosts}
        with open(path, "w") as fh:
            fh.write("i_x,i_y,mode,degree,n_points,weights\n")
            for flat, stencil_flat, w in self._closure:
                ix, iy = divmod(flat, ny)
                g = ghosts[(ix, iy)]
                wtxt = ";".join(repr(float(v)) for v in w)
                fh.write(f"{ix - N_GHOST},{iy - N_GHOST},{g.mode},"
                         f"{g.stencil.degree},{len(w)},{wtxt}\n")
