"""Explicit update of the kinetic cell density.

One step combines second-order limited upwind transport, the trapezoidal
tumbling operator with logarithmic-sensing rates, growth, and the optional
over-crowding sink that moves cells into a quiescent state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .meshing import N_GHOST, SpaceMesh, VelocityGrid

EPS_CONCENTRATION = 1e-10  # floor for log-sensing; every test starts at S = 0


@dataclass(frozen=True)
class ResponseParams:
    """Tumbling response: psi(X) = psi_0 (1 - chi tanh(X / delta))."""

    psi_0: float
    chi_N: float
    chi_S: float
    delta_N: float
    delta_S: float
    eps_c: float = EPS_CONCENTRATION

    def __post_init__(self):
        if self.psi_0 <= 0:
            raise ValueError("psi_0 must be positive")
        for name, chi in (("chi_N", self.chi_N), ("chi_S", self.chi_S)):
            if not 0.0 <= chi < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {chi}")
        if self.delta_N <= 0 or self.delta_S <= 0:
            raise ValueError("response rates delta_N, delta_S must be positive")

    @property
    def chi_max(self) -> float:
        return max(self.chi_N, self.chi_S)


@dataclass(frozen=True)
class GrowthParams:
    """Division rate and quiescence sink.

    mode 'constant' uses the fixed rate r; mode 'monod' uses
    r = G_0 N / (sigma + N).  gamma > 0 enables the sink that removes
    density at rate gamma wherever rho exceeds rho_inf (strictly; ties do
    not trigger).
    """

    mode: str = "constant"
    rate: float = 0.0
    G_0: float = 0.0
    sigma: float = 1.0
    gamma: float = 0.0
    rho_inf: float = 0.0

    def __post_init__(self):
        if self.mode not in ("constant", "monod"):
            raise ValueError(f"unknown growth mode {self.mode!r}")
        for name in ("rate", "G_0", "gamma", "rho_inf"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.mode == "monod" and self.sigma <= 0:
            raise ValueError("sigma must be positive for monod growth")

    def effective_rate(self, n_half):
        if self.mode == "constant":
            return self.rate
        return self.G_0 * n_half / (self.sigma + n_half)


def response(X, psi_0: float, chi: float, delta: float):
    """Tumbling frequency psi_0 (1 - chi tanh(X / delta))."""
    return psi_0 * (1.0 - chi * np.tanh(np.asarray(X, dtype=float) / delta))


def log_sensing_argument(c_half, dc_dt, grad_x, grad_y, vgrid: VelocityGrid,
                         eps_c: float = EPS_CONCENTRATION):
    """Material derivative of log concentration along each grid velocity.

    X = (D_h C + v . grad C) / max(C, eps_c); where the concentration sits
    below the floor and the numerator is below it too, the argument is
    neutral (0).  Returns an array with one velocity axis appended.
    """
    c_half = np.asarray(c_half, dtype=float)
    numer = (np.asarray(dc_dt, dtype=float)[..., None]
             + vgrid.vx * np.asarray(grad_x, dtype=float)[..., None]
             + vgrid.vy * np.asarray(grad_y, dtype=float)[..., None])
    X = numer / np.maximum(c_half, eps_c)[..., None]
    neutral = (c_half < eps_c)[..., None] & (np.abs(numer) < eps_c)
    return np.where(neutral, 0.0, X)


def tumbling_rates(n_half, dn_dt, grad_n, s_half, ds_dt, grad_s,
                   params: ResponseParams, vgrid: VelocityGrid,
                   coupling: str = "both"):
    """Discrete tumbling rate lambda at every point and velocity.

    The full rate is the mean of the nutrient and chemoattractant responses;
    ``coupling`` restricts it to one channel for scenarios whose kernel only
    senses one chemical.
    """
    if coupling not in ("both", "chemoattractant_only", "nutrient_only"):
        raise ValueError(f"unknown coupling {coupling!r}")
    lam_n = lam_s = None
    if coupling in ("both", "nutrient_only"):
        X = log_sensing_argument(n_half, dn_dt, grad_n[0], grad_n[1], vgrid,
                                 params.eps_c)
        lam_n = response(X, params.psi_0, params.chi_N, params.delta_N)
    if coupling in ("both", "chemoattractant_only"):
        X = log_sensing_argument(s_half, ds_dt, grad_s[0], grad_s[1], vgrid,
                                 params.eps_c)
        lam_s = response(X, params.psi_0, params.chi_S, params.delta_S)
    if coupling == "both":
        return 0.5 * (lam_n + lam_s)
    return lam_s if lam_s is not None else lam_n


def tumbling_operator(f, lam, vgrid: VelocityGrid):
    """Q_j = (dv / 2 pi) sum_l lambda_l f_l - lambda_j f_j.

    The constant reorientation kernel K = 1/(2 pi) collapses the loss
    integral to lambda_j f_j, so the velocity sum of Q vanishes identically.
    """
    lam_f = lam * f
    gain = (vgrid.dv / (2.0 * np.pi)) * lam_f.sum(axis=-1, keepdims=True)
    return gain - lam_f


def _van_leer_slope(dl, dr):
    """Symmetric harmonic-mean slope; zero across extrema.

    Odd and symmetric in its arguments, which is what makes the specular
    wall flux cancellation exact on grid-aligned walls.
    """
    prod = dl * dr
    denom = dl + dr
    out = np.zeros_like(prod)
    np.divide(2.0 * prod, denom, out=out, where=prod > 0.0)
    return out


def transport_term(f, vgrid: VelocityGrid, mesh: SpaceMesh, dt=None):
    """Conservative flux-difference form of v . grad f.

    MUSCL reconstruction with the van Leer harmonic slope, upwinded per
    velocity component, dimension by dimension.  When ``dt`` is given the
    slope contribution carries the Courant factor (1 - |v| dt / h), the
    spatio-temporally second-order form used by the explicit step.  The
    result is populated on the real lattice slab; the halo stays zero.
    """
    g = N_GHOST
    T = np.zeros_like(f)
    for axis, vel, h in ((0, vgrid.vx, mesh.dx), (1, vgrid.vy, mesh.dy)):
        diff = np.diff(f, axis=axis)
        lo = [slice(None)] * 3
        hi = [slice(None)] * 3
        lo[axis] = slice(None, -1)
        hi[axis] = slice(1, None)
        slope = np.zeros_like(f)
        mid = [slice(None)] * 3
        mid[axis] = slice(1, -1)
        slope[tuple(mid)] = _van_leer_slope(diff[tuple(lo)], diff[tuple(hi)])
        half = 0.5 if dt is None else 0.5 * (1.0 - np.abs(vel) * (dt / h))
        left = f + half * slope    # state just left of face i+1/2, at cell i
        right = f - half * slope   # state just right of face i-1/2, at cell i
        # Face flux F_{i+1/2} lives at index i along `axis`.
        flux = np.where(vel > 0.0,
                        vel * left[tuple(lo)],
                        vel * right[tuple(hi)])
        dflux = np.diff(flux, axis=axis)
        # dflux[i] = F_{i+3/2} - F_{i+1/2}; point i needs dflux[i-1].
        tgt = [slice(g, -g), slice(g, -g), slice(None)]
        src = [slice(g, -g), slice(g, -g), slice(None)]
        src[axis] = slice(g - 1, -(g - 1) if g > 1 else None)
        T[tuple(tgt)] += dflux[tuple(src)] / h
    return T


def step_kinetic(f, lam, rho, n_half, growth: GrowthParams, dt: float,
                 mesh: SpaceMesh, vgrid: VelocityGrid, interior_mask,
                 eps_c: float = EPS_CONCENTRATION, debug: bool = False):
    """One explicit step of the kinetic equation on the interior points.

    f^{n+1} = f^n + dt (-T + Q + r_eff f^n - sink); the quiescence sink is
    apportioned proportionally to f so that it removes exactly gamma per
    unit time from rho while preserving nonnegativity.

    Ghosts of f must be filled for the current step.  Returns
    (f_new, clamp_count).
    """
    T = transport_term(f, vgrid, mesh, dt)
    Q = tumbling_operator(f, lam, vgrid)
    rhs = -T + Q
    r_eff = growth.effective_rate(n_half)
    if growth.mode == "monod":
        rhs = rhs + np.asarray(r_eff)[..., None] * f
    elif growth.rate != 0.0:
        rhs = rhs + growth.rate * f
    if growth.gamma > 0.0:
        active = (rho > growth.rho_inf) & (rho > 0.0)
        share = np.where(active, growth.gamma / np.maximum(rho, eps_c), 0.0)
        rhs = rhs - share[..., None] * f
    f_new = f + dt * rhs
    f_new = np.where(interior_mask[..., None], f_new, f)

    interior_vals = f_new[interior_mask]
    clamp_count = 0
    if interior_vals.size:
        min_val = float(interior_vals.min())
        if min_val < 0.0:
            if debug and min_val < -1e-12 * max(float(interior_vals.max()), 1.0):
                raise FloatingPointError(
                    f"kinetic step lost positivity: min f = {min_val:.3e}"
                )
            neg = (f_new < 0.0) & interior_mask[..., None]
            clamp_count = int(neg.sum())
            f_new = np.where(neg, 0.0, f_new)
    return f_new, clamp_count


def cfl_time_step(mesh: SpaceMesh, vgrid: VelocityGrid, params: ResponseParams,
                  cfl: float = 0.45) -> float:
    """Time step contract: transport CFL plus tumbling-loss positivity cap.

    dt = CFL min(dx, dy) / v0, additionally capped so that
    dt psi_0 (1 + max chi) <= 0.9.
    """
    dt_transport = cfl * min(mesh.dx, mesh.dy) / vgrid.v0
    dt_tumbling = 0.9 / (params.psi_0 * (1.0 + params.chi_max))
    return min(dt_transport, dt_tumbling)
