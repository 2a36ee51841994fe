"""Scenario execution: the staggered time loop, frame output, checkpoints.

One step advances the scalars from t^{n-1/2} to t^{n+1/2} (implicit Euler
with ghost-folded Neumann closure), evaluates the tumbling rates at the half
step, fills the kinetic ghosts, and advances f explicitly from t^n to
t^{n+1}.  Output frames carry the density moment and both scalars as CSV
grids next to a JSON manifest; observables are appended to one CSV series.
"""

from __future__ import annotations

import json
import subprocess
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .boundary import GhostFillTables
from .classify import classify_points
from .config import ScenarioConfig
from .diagnostics import (front_radius, mean_radius, section_profile,
                          tail_slope, total_mass)
from .diffusion import ImplicitDiffusion, density_moment, time_derivative
from .kinetic import (cfl_time_step, step_kinetic, tumbling_rates)
from .meshing import N_GHOST, build_space_mesh, build_velocity_grid
from . import shapes

OBSERVABLE_COLUMNS = ("t", "mass", "max_density", "mean_radius",
                      "front_radius", "tail_slope", "tail_r2")


class SimulationError(RuntimeError):
    pass


def build_shape(geometry: dict):
    kind = geometry["kind"]
    if kind == "box":
        return None
    if kind == "rectangle":
        return shapes.rectangle(*geometry["bounds"])
    if kind == "disc":
        return shapes.disc(geometry["center"], geometry["radius"])
    if kind == "u_channel":
        return shapes.u_channel(geometry["center"], geometry["r_inner"],
                                geometry["r_outer"], geometry["leg_length"],
                                geometry["opening"])
    raise ValueError(f"unknown geometry kind {kind!r}")


def initial_kinetic_field(cfg: ScenarioConfig, mesh, vgrid, interior_mask):
    X, Y = mesh.grids_ext()
    ic = cfg.initial_f
    kind = ic["kind"]
    if kind == "gaussian":
        cx, cy = ic.get("center", (0.0, 0.0))
        width = float(ic["width"])
        mass = float(ic["mass"])
        # f = (width m / pi) exp(-width |x|^2); integral of f over the plane
        # is m, so the total kinetic mass (with the velocity measure) is
        # 2 pi m.
        profile = (width * mass / np.pi) * np.exp(
            -width * ((X - cx) ** 2 + (Y - cy) ** 2))
    elif kind == "band":
        lo, hi = ic["range"]
        coord = Y if ic.get("axis", "y") == "y" else X
        profile = np.where((coord >= lo) & (coord <= hi),
                           float(ic["value"]), 0.0)
    elif kind == "disc":
        cx, cy = ic.get("center", (0.0, 0.0))
        r = np.hypot(X - cx, Y - cy)
        profile = np.where(r <= float(ic["radius"]), float(ic["value"]), 0.0)
    elif kind == "uniform":
        profile = np.full(mesh.shape_ext, float(ic["value"]))
    else:
        raise ValueError(f"unknown initial condition {kind!r}")

    amp = float(cfg.perturbation.get("amplitude", 0.0))
    if amp > 0.0:
        rng = np.random.default_rng(cfg.perturbation.get("seed", cfg.seed))
        profile = profile * (1.0 + amp * (2.0 * rng.random(profile.shape) - 1.0))

    f = np.repeat(profile[:, :, None], vgrid.n_v, axis=2)
    f[~interior_mask] = 0.0
    return f


def centered_gradient(u, mesh):
    """Five-point centred differences; valid on the real lattice slab."""
    gx = np.zeros_like(u)
    gy = np.zeros_like(u)
    gx[1:-1, :] = (u[2:, :] - u[:-2, :]) / (2.0 * mesh.dx)
    gy[:, 1:-1] = (u[:, 2:] - u[:, :-2]) / (2.0 * mesh.dy)
    return gx, gy


def _git_describe():
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent, capture_output=True,
            text=True, timeout=5)
        if out.returncode == 0:
            return out.stdout.strip()
    except OSError:
        pass
    return None


def _write_grid_csv(path, values, mesh, interior_mask):
    g = N_GHOST
    xs, ys = mesh.xs_ext, mesh.ys_ext
    inner = values[g:-g, g:-g]
    mask = interior_mask[g:-g, g:-g]
    with open(path, "w") as fh:
        fh.write("i_x,i_y,x,y,value\n")
        for ix in range(inner.shape[0]):
            x_repr = repr(float(xs[ix + g]))
            for iy in range(inner.shape[1]):
                val = float(inner[ix, iy]) if mask[ix, iy] else 0.0
                fh.write(f"{ix},{iy},{x_repr},{float(ys[iy + g])!r},{val!r}\n")


def read_grid_csv(path):
    """Load a frame CSV back into a (n_x+1, n_y+1) array."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    n_x = int(data["i_x"].max()) + 1
    n_y = int(data["i_y"].max()) + 1
    out = np.empty((n_x, n_y))
    out[data["i_x"].astype(int), data["i_y"].astype(int)] = data["value"]
    return out


@dataclass
class RunState:
    """Mutable simulation state passed between steps and checkpoints."""

    f: np.ndarray
    n_prev: np.ndarray
    s_prev: np.ndarray
    t: float = 0.0
    step: int = 0
    frame_index: int = 0
    next_output: float = 0.0


@dataclass
class RunResult:
    out_dir: Path
    steps: int
    final_time: float
    dt: float
    observables: list = field(default_factory=list)
    manifest: dict = field(default_factory=dict)


class ScenarioRunner:
    """Owns the discretisation objects for one scenario."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.mesh = build_space_mesh(cfg.mesh_bounds, cfg.n_x, cfg.n_y)
        self.vgrid = build_velocity_grid(cfg.v0, cfg.n_v)
        self.shape = build_shape(cfg.geometry)
        self.classification = classify_points(self.shape, self.mesh)
        if self.classification.n_interior == 0:
            raise SimulationError("geometry leaves no interior points")
        self.tables = GhostFillTables(self.classification, self.vgrid)
        self.solver = ImplicitDiffusion(self.classification, self.tables)
        self.dt = cfl_time_step(self.mesh, self.vgrid, cfg.response, cfg.cfl)
        self.center = self._domain_center()

    def _domain_center(self):
        geo = self.cfg.geometry
        if "center" in geo:
            return tuple(geo["center"])
        b = self.cfg.mesh_bounds
        return (0.5 * (b[0] + b[1]), 0.5 * (b[2] + b[3]))

    def initial_state(self) -> RunState:
        cfg = self.cfg
        f = initial_kinetic_field(cfg, self.mesh, self.vgrid,
                                  self.classification.interior_mask)
        n_prev = np.zeros(self.mesh.shape_ext)
        s_prev = np.zeros(self.mesh.shape_ext)
        n_prev[self.classification.interior_mask] = cfg.initial_N
        s_prev[self.classification.interior_mask] = cfg.initial_S
        self.tables.apply_scalar_closure(n_prev)
        self.tables.apply_scalar_closure(s_prev)
        return RunState(f=f, n_prev=n_prev, s_prev=s_prev)

    def advance(self, state: RunState):
        """One full staggered step; mutates the state in place."""
        cfg, mesh, vgrid = self.cfg, self.mesh, self.vgrid
        dt = self.dt
        rho = density_moment(state.f, vgrid)

        n_half = self.solver.solve_nutrient(state.n_prev, rho, dt,
                                            cfg.scalars.D_N, cfg.scalars.c)
        s_half = self.solver.solve_chemoattractant(state.s_prev, rho, dt,
                                                   cfg.scalars.D_S,
                                                   cfg.scalars.a, cfg.scalars.b)
        dn_dt = time_derivative(n_half, state.n_prev, dt)
        ds_dt = time_derivative(s_half, state.s_prev, dt)
        lam = tumbling_rates(n_half, dn_dt, centered_gradient(n_half, mesh),
                             s_half, ds_dt, centered_gradient(s_half, mesh),
                             cfg.response, vgrid, cfg.coupling)

        self.tables.fill_kinetic_ghosts(state.f)
        state.f, _ = step_kinetic(state.f, lam, rho, n_half, cfg.growth, dt,
                                  mesh, vgrid,
                                  self.classification.interior_mask)
        state.n_prev = n_half
        state.s_prev = s_half
        state.step += 1
        state.t = state.step * dt

    def observables_row(self, state: RunState):
        rho = density_moment(state.f, self.vgrid)
        mass = total_mass(state.f, self.classification, self.vgrid)
        inner = rho[self.classification.interior_mask]
        max_density = float(inner.max()) if inner.size else 0.0
        try:
            mr = mean_radius(rho, self.classification, self.center)
        except ValueError:
            mr = float("nan")
        fr = front_radius(rho, self.classification, self.center)
        b = self.cfg.mesh_bounds
        half_width = 0.5 * min(b[1] - b[0], b[3] - b[2])
        coords, vals = section_profile(rho, self.mesh, "x", self.center[1])
        try:
            slope, r2 = tail_slope(coords - self.center[0], vals,
                                   (0.3 * half_width, 0.8 * half_width))
        except ValueError:
            slope, r2 = float("nan"), float("nan")
        return (state.t, mass, max_density, mr, fr, slope, r2)


def _load_checkpoint(path):
    with np.load(path) as data:
        return RunState(
            f=data["f"], n_prev=data["n_prev"], s_prev=data["s_prev"],
            t=float(data["t"]), step=int(data["step"]),
            frame_index=int(data["frame_index"]),
            next_output=float(data["next_output"]),
        )


def _save_checkpoint(path, state: RunState):
    np.savez_compressed(path, f=state.f, n_prev=state.n_prev,
                        s_prev=state.s_prev, t=state.t, step=state.step,
                        frame_index=state.frame_index,
                        next_output=state.next_output)


def run_scenario(cfg: ScenarioConfig, out_dir, *, frames=None, dump_f=False,
                 dump_classification=False, dump_weights=False, restart=None,
                 checkpoint=True) -> RunResult:
    """Execute a scenario and write outputs under ``out_dir``.

    Layout: manifest.json, observables.csv, frames/t_<k>_{rho,N,S}.csv.
    ``frames`` caps the number of frames (defaults to one per output
    interval).  ``restart`` resumes from a checkpoint.npz written by an
    earlier run of the same scenario.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    frame_dir = out_dir / "frames"
    frame_dir.mkdir(exist_ok=True)

    manifest = {
        "name": cfg.name,
        "status": "running",
        "version": __version__,
        "build": _git_describe(),
        "mesh": {"bounds": list(cfg.mesh_bounds), "n_x": cfg.n_x,
                 "n_y": cfg.n_y},
        "n_v": cfg.n_v,
        "end_time": cfg.end_time,
        "coupling": cfg.coupling,
        "notes": list(cfg.notes),
        "config": cfg.raw,
        "frames": [],
    }

    def write_manifest():
        with open(out_dir / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2)

    try:
        runner = ScenarioRunner(cfg)
    except Exception as exc:
        manifest["status"] = "failed"
        manifest["error"] = f"{type(exc).__name__}: {exc}"
        write_manifest()
        raise
    mesh, cls = runner.mesh, runner.classification
    dt = runner.dt
    manifest["mesh"]["dx"] = mesh.dx
    manifest["mesh"]["dy"] = mesh.dy
    manifest["dt"] = dt
    if frames is not None and frames > 0:
        output_interval = cfg.end_time / frames
    else:
        output_interval = cfg.output_interval

    if dump_classification:
        cls.dump_csv(out_dir / "classification.csv")
    if dump_weights:
        runner.tables.dump_weights(out_dir / "ghost_weights.csv")

    if restart is not None:
        state = _load_checkpoint(restart)
        obs_mode = "a"
    else:
        state = runner.initial_state()
        obs_mode = "w"

    obs_path = out_dir / "observables.csv"
    obs_rows = []

    def emit_frame(st: RunState):
        rho = density_moment(st.f, runner.vgrid)
        k = st.frame_index
        names = {}
        for tag_name, field_vals in (("rho", rho), ("N", st.n_prev),
                                     ("S", st.s_prev)):
            fname = f"t_{k:04d}_{tag_name}.csv"
            _write_grid_csv(frame_dir / fname, field_vals, mesh,
                            cls.interior_mask)
            names[tag_name] = f"frames/{fname}"
        if dump_f:
            fname = f"t_{k:04d}_f.npz"
            np.savez_compressed(frame_dir / fname, f=st.f)
            names["f"] = f"frames/{fname}"
        manifest["frames"].append({"index": k, "t": st.t, "files": names})
        st.frame_index += 1

    try:
        with open(obs_path, obs_mode) as obs_fh:
            if obs_mode == "w":
                obs_fh.write(",".join(OBSERVABLE_COLUMNS) + "\n")
            while True:
                if state.t >= state.next_output - 0.5 * dt:
                    row = runner.observables_row(state)
                    obs_rows.append(row)
                    obs_fh.write(",".join(repr(float(v)) for v in row) + "\n")
                    emit_frame(state)
                    state.next_output += output_interval
                if state.t >= cfg.end_time - 0.5 * dt:
                    break
                runner.advance(state)
    except Exception as exc:
        manifest["status"] = "failed"
        manifest["error"] = f"{type(exc).__name__}: {exc}"
        write_manifest()
        raise

    manifest["status"] = "completed"
    manifest["steps"] = state.step
    manifest["final_time"] = state.t
    manifest["counters"] = {
        "ghost_clamps": runner.tables.clamp_count,
        "ghost_overshoots": runner.tables.overshoot_count,
        "scalar_clips": runner.solver.clip_count,
    }
    write_manifest()
    if checkpoint:
        _save_checkpoint(out_dir / "checkpoint.npz", state)
    return RunResult(out_dir=out_dir, steps=state.step, final_time=state.t,
                     dt=dt, observables=obs_rows, manifest=manifest)
