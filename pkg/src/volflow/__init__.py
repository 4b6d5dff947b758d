"""Lagrangian material-volume tracking and attainment thresholds in smooth
compressible flows."""

from . import cli, config, criteria, flowfield, functionals, matvol, solver, verify

__version__ = "0.1.0"

__all__ = [
    "cli", "config", "criteria", "flowfield", "functionals", "matvol",
    "solver", "verify", "__version__",
]
