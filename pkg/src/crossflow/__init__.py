"""Verification lab for mean curvature flow of hypersurfaces in CP^n and HP^n."""

from .ambient import AmbientSpace, Field, curvature_tensor, make_space, parse_space
from .flow import StopPolicy, evolution_residuals, evolve, monitor_report
from .lab import TrialReport, run_suite
from .profiles import geodesic_sphere, tube
from .shape import PinchingParams, ShapeSpectrum

__all__ = [
    "AmbientSpace",
    "Field",
    "PinchingParams",
    "ShapeSpectrum",
    "StopPolicy",
    "TrialReport",
    "curvature_tensor",
    "evolution_residuals",
    "evolve",
    "geodesic_sphere",
    "make_space",
    "monitor_report",
    "parse_space",
    "run_suite",
    "tube",
]

__version__ = "0.1.0"
