"""Pseudospectral NLS simulator and scattering diagnostics on R^d x T."""

__version__ = "0.1.0"

from .errors import AccuracyWarning, ConfigurationError, DomainError, SimulationError  # noqa: E402
from .grid import ComplexField, CylinderGrid, Space, make_grid, transform  # noqa: E402

__all__ = [
    "AccuracyWarning",
    "ComplexField",
    "ConfigurationError",
    "CylinderGrid",
    "DomainError",
    "SimulationError",
    "Space",
    "make_grid",
    "transform",
]
