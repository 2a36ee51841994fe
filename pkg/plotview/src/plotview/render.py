"""Figure rendering: heatmaps, section overlays, observable time series.

Rendering never mutates the loaded data.  Checks that matter live on the
arrays (see frames.py and the data helpers here); image bytes depend on the
matplotlib backend and are best-effort.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .frames import FrameBundle, FrameError, RunDirectory

FIELD_LABELS = {"rho": "cell density", "N": "nutrient", "S": "chemoattractant"}


def section_of(frame: FrameBundle, field: str, axis: str = "x", offset=None):
    """1D cut through the grid nearest the requested line."""
    vals = frame.field(field)
    if axis == "x":
        coords, lines = frame.xs, frame.ys
        if offset is None:
            offset = 0.5 * (lines[0] + lines[-1])
        j = int(np.argmin(np.abs(lines - offset)))
        return coords, vals[:, j]
    coords, lines = frame.ys, frame.xs
    if offset is None:
        offset = 0.5 * (lines[0] + lines[-1])
    i = int(np.argmin(np.abs(lines - offset)))
    return coords, vals[i, :]


def argmax_radius(frame: FrameBundle, field: str = "rho", center=(0.0, 0.0)):
    """Radius of the field maximum; the data check behind annulus plots."""
    vals = frame.field(field)
    i, j = np.unravel_index(np.argmax(vals), vals.shape)
    return float(np.hypot(frame.xs[i] - center[0], frame.ys[j] - center[1]))


def log_mask(values):
    """Mask nonpositive entries for log-scale plotting."""
    arr = np.asarray(values, dtype=float)
    return np.where(arr > 0.0, arr, np.nan)


def render_heatmap(run: RunDirectory, frame_index: int, field: str, out_path):
    """Write a PNG heatmap of one field with colourbar and wall overlay."""
    frame = run.load_frame(frame_index)
    vals = frame.field(field)
    fig, ax = plt.subplots(figsize=(6, 5))
    extent = (frame.xs[0], frame.xs[-1], frame.ys[0], frame.ys[-1])
    vmin, vmax = float(vals.min()), float(vals.max())
    if vmin == vmax:          # constant field: keep the colourbar sane
        vmin, vmax = vmin - 0.5, vmax + 0.5
    im = ax.imshow(vals.T, origin="lower", extent=extent, aspect="equal",
                   cmap="viridis", vmin=vmin, vmax=vmax)
    overlay = run.classification_overlay()
    if overlay is not None:
        ax.plot(overlay[0], overlay[1], ".", color="white", ms=1.0)
    fig.colorbar(im, ax=ax, label=FIELD_LABELS.get(field, field))
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(f"{FIELD_LABELS.get(field, field)} at t = {frame.time:.3g}")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def render_sections(run: RunDirectory, out_path, field: str = "rho",
                    axis: str = "x", log_scale: bool = False,
                    frame_indices=None, offset=None):
    """Overlay section profiles of several frames with a time legend."""
    entries = run.frame_entries
    if frame_indices is None:
        frame_indices = [e["index"] for e in entries]
    if not frame_indices:
        raise FrameError("no frames selected for the section plot")
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    for idx in frame_indices:
        frame = run.load_frame(idx)
        coords, vals = section_of(frame, field, axis, offset)
        if log_scale:
            vals = log_mask(vals)
        ax.plot(coords, vals, label=f"t = {frame.time:.3g}")
    if log_scale:
        ax.set_yscale("log")
    ax.set_xlabel(axis)
    ax.set_ylabel(FIELD_LABELS.get(field, field))
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def render_observables(run: RunDirectory, out_path,
                       channels=("mass", "front_radius", "mean_radius")):
    """Multi-panel time series; empty or absent channels are skipped."""
    obs = run.load_observables()
    t = obs.get("t")
    if t is None or t.size == 0:
        raise FrameError("observables.csv has no rows")
    panels = []
    skipped = []
    for name in channels:
        col = obs.get(name)
        if col is None or not np.isfinite(col).any():
            skipped.append(name)
            continue
        panels.append((name, col))
    if not panels:
        raise FrameError("no plottable observable channels")
    fig, axes = plt.subplots(len(panels), 1, figsize=(6.5, 2.2 * len(panels)),
                             sharex=True, squeeze=False)
    for ax, (name, col) in zip(axes[:, 0], panels):
        ax.plot(t, col)
        ax.set_ylabel(name)
        ax.grid(True, alpha=0.3)
    axes[-1, 0].set_xlabel("t")
    if skipped:
        axes[0, 0].set_title(f"skipped empty channels: {', '.join(skipped)}",
                             fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path, skipped
