"""Offline rendering of simulation output: heatmaps, sections, time series."""

__version__ = "0.1.0"

from .frames import FrameBundle, FrameError, RunDirectory
from .render import (argmax_radius, log_mask, render_heatmap,
                     render_observables, render_sections, section_of)

__all__ = [
    "FrameBundle",
    "FrameError",
    "RunDirectory",
    "argmax_radius",
    "log_mask",
    "render_heatmap",
    "render_observables",
    "render_sections",
    "section_of",
    "__version__",
]
