"""Loading simulation output directories.

A run directory holds manifest.json, observables.csv and frames/*.csv as
written by the simulator; this module turns them into arrays and keeps the
data-side checks (finite values, shapes matching the manifest) separate from
any rendering.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

FIELDS = ("rho", "N", "S")


class FrameError(RuntimeError):
    pass


def load_grid_csv(path):
    """Read one frame CSV (columns i_x,i_y,x,y,value) into arrays.

    Returns (x_coords, y_coords, values) with values shaped (n_x+1, n_y+1).
    """
    data = np.genfromtxt(path, delimiter=",", names=True)
    if data.dtype.names != ("i_x", "i_y", "x", "y", "value"):
        raise FrameError(f"{path}: unexpected columns {data.dtype.names}")
    ix = data["i_x"].astype(int)
    iy = data["i_y"].astype(int)
    n_x, n_y = ix.max() + 1, iy.max() + 1
    values = np.full((n_x, n_y), np.nan)
    values[ix, iy] = data["value"]
    xs = np.full(n_x, np.nan)
    ys = np.full(n_y, np.nan)
    xs[ix] = data["x"]
    ys[iy] = data["y"]
    return xs, ys, values


@dataclass
class FrameBundle:
    """One output frame: grids plus the manifest entry it came from."""

    index: int
    time: float
    xs: np.ndarray
    ys: np.ndarray
    fields: dict

    def field(self, name: str) -> np.ndarray:
        if name not in self.fields:
            raise FrameError(f"frame {self.index} has no field {name!r}; "
                             f"available: {sorted(self.fields)}")
        return self.fields[name]


class RunDirectory:
    """Lazy access to everything the simulator wrote for one run."""

    def __init__(self, path):
        self.path = Path(path)
        manifest_path = self.path / "manifest.json"
        if not manifest_path.exists():
            raise FrameError(f"no manifest.json under {self.path}")
        with open(manifest_path) as fh:
            self.manifest = json.load(fh)

    @property
    def frame_entries(self):
        return self.manifest.get("frames", [])

    def load_frame(self, index: int) -> FrameBundle:
        try:
            entry = next(e for e in self.frame_entries if e["index"] == index)
        except StopIteration:
            raise FrameError(f"run has no frame {index}; "
                             f"{len(self.frame_entries)} frames present")
        fields = {}
        xs = ys = None
        for name in FIELDS:
            rel = entry["files"].get(name)
            if rel is None:
                continue
            xs, ys, vals = load_grid_csv(self.path / rel)
            fields[name] = vals
            expect = (self.manifest["mesh"]["n_x"] + 1,
                      self.manifest["mesh"]["n_y"] + 1)
            if vals.shape != expect:
                raise FrameError(
                    f"{rel}: grid shape {vals.shape} does not match the "
                    f"manifest mesh {expect}")
            if not np.isfinite(vals).all():
                raise FrameError(f"{rel}: non-finite values")
        return FrameBundle(index=entry["index"], time=entry["t"],
                           xs=xs, ys=ys, fields=fields)

    def load_all_frames(self):
        return [self.load_frame(e["index"]) for e in self.frame_entries]

    def load_observables(self):
        """Parse observables.csv into a dict of named columns."""
        path = self.path / "observables.csv"
        if not path.exists():
            raise FrameError(f"no observables.csv under {self.path}")
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            rows = []
            for lineno, line in enumerate(fh, start=2):
                parts = line.strip().split(",")
                if len(parts) != len(header):
                    raise FrameError(
                        f"{path}: line {lineno} has {len(parts)} fields, "
                        f"expected {len(header)}")
                try:
                    rows.append([float(p) for p in parts])
                except ValueError as exc:
                    raise FrameError(f"{path}: line {lineno}: {exc}") from exc
        arr = np.array(rows) if rows else np.empty((0, len(header)))
        return {name: arr[:, k] for k, name in enumerate(header)}

    def classification_overlay(self):
        """Boundary points from a classification dump, if present."""
        path = self.path / "classification.csv"
        if not path.exists():
            return None
        data = np.genfromtxt(path, delimiter=",", names=True)
        ghost = data["tag"] == 1
        bx = data["x_p_x"][ghost]
        by = data["x_p_y"][ghost]
        keep = np.isfinite(bx) & np.isfinite(by)
        return bx[keep], by[keep]
