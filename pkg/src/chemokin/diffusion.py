"""Implicit Euler update of nutrient and chemoattractant.

Both scalars live on the staggered half-step time grid.  The five-point
Laplacian is closed at the wall by the homogeneous Neumann mirror relation
u(x_g) = u(x_m), folded as an affine combination of interior values into the
matrix rows, so the solve only carries interior unknowns.  Reaction terms
that are linear in the unknown (chemoattractant decay -a S, nutrient
consumption -c N rho with rho frozen at the current step) are treated
implicitly.
"""

from __future__ import annotations

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.linalg import splu

from .boundary import GhostFillTables
from .classify import GridClassification
from .meshing import VelocityGrid

SOLVER_TOL = 1e-10
_FIXED_POINT_MAX_ITER = 12


class SolverError(RuntimeError):
    pass


def density_moment(f, vgrid: VelocityGrid):
    """rho = dv sum_j f_j (trapezoidal rule on the periodic velocity grid)."""
    return vgrid.dv * np.asarray(f).sum(axis=-1)


def time_derivative(u_new, u_old, dt: float):
    """Staggered discrete time derivative (u^{n+1/2} - u^{n-1/2}) / dt."""
    return (np.asarray(u_new) - np.asarray(u_old)) / dt


class ImplicitDiffusion:
    """Shared machinery for the two scalar solves on one classification.

    Assembles the Neumann-closed five-point Laplacian over interior unknowns
    once; per step the solves add the 1/dt and reaction diagonals.  Direct
    sparse factorisation serves as the baseline solver; the nutrient system,
    whose diagonal moves with rho^n, first tries a few preconditioned
    fixed-point sweeps with the cached dt-factorisation before falling back
    to a fresh factorisation.  Every solve is residual-checked to relative
    1e-10.
    """

    def __init__(self, classification: GridClassification,
                 tables: GhostFillTables):
        self.mesh = classification.mesh
        self.classification = classification
        self.tables = tables
        self._build_operator(classification, tables)
        self._cached = {}   # (dt, D, react) -> splu of I/dt + react*I - D*L
        self.clip_count = 0

    # -- assembly --

    def _build_operator(self, classification, tables):
        mesh = self.mesh
        nx, ny = mesh.shape_ext
        interior = classification.interior_mask
        ids = np.full(nx * ny, -1, dtype=np.int64)
        flat_interior = np.flatnonzero(interior.reshape(-1))
        ids[flat_interior] = np.arange(flat_interior.size)
        self.n_unknowns = flat_interior.size
        self.interior_flat = flat_interior

        closure = {flat: (stencil_flat, w)
                   for flat, stencil_flat, w in tables.closure_entries()}

        rows, cols, vals = [], [], []

        def add(r, flat_col, coef):
            uid = ids[flat_col]
            if uid >= 0:
                rows.append(r)
                cols.append(uid)
                vals.append(coef)
                return
            stencil_flat, w = closure[flat_col]
            for sf, wk in zip(stencil_flat, w):
                rows.append(r)
                cols.append(ids[sf])
                vals.append(coef * wk)

        inv_dx2 = 1.0 / mesh.dx ** 2
        inv_dy2 = 1.0 / mesh.dy ** 2
        for r, flat in enumerate(flat_interior):
            ix, iy = divmod(flat, ny)
            add(r, flat, -2.0 * (inv_dx2 + inv_dy2))
            add(r, (ix + 1) * ny + iy, inv_dx2)
            add(r, (ix - 1) * ny + iy, inv_dx2)
            add(r, ix * ny + (iy + 1), inv_dy2)
            add(r, ix * ny + (iy - 1), inv_dy2)

        n = self.n_unknowns
        self.laplacian = csr_matrix(
            (np.array(vals), (np.array(rows), np.array(cols))), shape=(n, n)
        )
        self.identity = csr_matrix(
            (np.ones(n), (np.arange(n), np.arange(n))), shape=(n, n)
        )

    # -- solves --

    def _base_matrix(self, dt: float, diffusivity: float, react: float):
        key = (dt, diffusivity, react)
        entry = self._cached.get(key)
        if entry is None:
            A = ((1.0 / dt + react) * self.identity
                 - diffusivity * self.laplacian).tocsc()
            entry = (A, splu(A))
            self._cached[key] = entry
        return entry

    def _check_residual(self, A, x, rhs, extra_diag=None):
        r = A @ x - rhs
        if extra_diag is not None:
            r = r + extra_diag * x
        norm = float(np.linalg.norm(rhs))
        res = float(np.linalg.norm(r))
        if res > SOLVER_TOL * max(norm, 1e-300):
            raise SolverError(
                f"implicit solve residual {res:.3e} above tolerance "
                f"{SOLVER_TOL:.1e} * |rhs| = {SOLVER_TOL * norm:.3e}"
            )

    def _finalize(self, x):
        neg = x < 0.0
        if neg.any():
            self.clip_count += int(neg.sum())
            x = np.where(neg, 0.0, x)
        u = np.zeros(self.mesh.shape_ext, dtype=float)
        u.reshape(-1)[self.interior_flat] = x
        self.tables.apply_scalar_closure(u)
        return u

    def interior_values(self, u):
        return np.asarray(u).reshape(-1)[self.interior_flat]

    def solve_chemoattractant(self, s_prev, rho, dt: float, diffusivity: float,
                              a: float, b: float):
        """u/dt - D lap u + a u = s_prev/dt + b rho; returns extended field."""
        rhs = (self.interior_values(s_prev) / dt
               + b * self.interior_values(rho))
        A, lu = self._base_matrix(dt, diffusivity, a)
        x = lu.solve(rhs)
        self._check_residual(A, x, rhs)
        return self._finalize(x)

    def solve_nutrient(self, n_prev, rho, dt: float, diffusivity: float,
                       c: float):
        """u/dt - D lap u + c rho u = n_prev/dt; rho is frozen at step n."""
        rhs = self.interior_values(n_prev) / dt
        A, lu = self._base_matrix(dt, diffusivity, 0.0)
        extra = c * self.interior_values(rho)
        if c == 0.0 or not extra.any():
            x = lu.solve(rhs)
            self._check_residual(A, x, rhs)
            return self._finalize(x)

        # Fixed point u <- A^-1 (rhs - c rho u), contraction ~ c max(rho) dt.
        x = lu.solve(rhs)
        converged = False
        norm_rhs = max(float(np.linalg.norm(rhs)), 1e-300)
        for _ in range(_FIXED_POINT_MAX_ITER):
            res = A @ x + extra * x - rhs
            if float(np.linalg.norm(res)) <= SOLVER_TOL * norm_rhs:
                converged = True
                break
            x = x - lu.solve(res)
        if not converged:
            full = (A + csr_matrix(
                (extra, (np.arange(self.n_unknowns), np.arange(self.n_unknowns))),
                shape=A.shape)).tocsc()
            x = splu(full).solve(rhs)
            self._check_residual(A, x, rhs, extra_diag=extra)
        return self._finalize(x)
