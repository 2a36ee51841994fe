"""Kinetic run-and-tumble chemotaxis simulator on Cartesian meshes.

Cells are described by a velocity-jump kinetic equation on a circle of
discrete velocities, coupled to nutrient and chemoattractant fields that
diffuse and react on the same grid.  Arbitrary domain walls are embedded in
the Cartesian mesh through ghost points filled by mirror specular reflection
with WENO-guarded extrapolation.
"""

__version__ = "0.1.0"

from .config import (ConfigError, Nondimensionalization, ScenarioConfig,
                     load_config, preset, preset_names, validate_config)
from .driver import RunResult, ScenarioRunner, SimulationError, run_scenario
from .meshing import SpaceMesh, VelocityGrid, build_space_mesh, build_velocity_grid

__all__ = [
    "ConfigError",
    "Nondimensionalization",
    "RunResult",
    "ScenarioConfig",
    "ScenarioRunner",
    "SimulationError",
    "SpaceMesh",
    "VelocityGrid",
    "build_space_mesh",
    "build_velocity_grid",
    "load_config",
    "preset",
    "preset_names",
    "run_scenario",
    "validate_config",
    "__version__",
]
