"""Figure rendering for qusmooth sweep outputs."""

__version__ = "0.1.0"

from .io import SchemaError
from .panels import alpha_grid, power_grid, trajectory_example

__all__ = ["SchemaError", "alpha_grid", "power_grid", "trajectory_example"]
