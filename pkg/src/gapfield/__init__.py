"""Field of a point dipole between two perfectly conducting unit spheres.

Three routes compute the same solution: an image-charge series for the
singular part, iterated Kelvin images for the grounded part, and a
spherical-harmonic boundary-integral solve. ``verify`` turns the known
field-enhancement estimates into band checks and ``cli`` drives everything
from the command line.
"""
from .errors import (
    AccuracyError,
    ConsistencyError,
    ConvergenceError,
    DomainError,
    GapFieldError,
    NumericalError,
    RegimeError,
    ResolutionError,
    ScopeError,
)
from .geometry import DipoleSource, SphereConfig
from .image_series import ImageChargeSeries, build_series
from .grounded_images import GroundedSolution, solve_grounded
from .bem import DensityPair, HarmonicExpansion, solve_exterior
from .solver import FieldSolution, eval_grad_u, eval_u, solve_full

__version__ = "0.1.0"

__all__ = [
    "AccuracyError",
    "ConsistencyError",
    "ConvergenceError",
    "DensityPair",
    "DipoleSource",
    "DomainError",
    "FieldSolution",
    "GapFieldError",
    "GroundedSolution",
    "HarmonicExpansion",
    "ImageChargeSeries",
    "NumericalError",
    "RegimeError",
    "ResolutionError",
    "ScopeError",
    "SphereConfig",
    "build_series",
    "eval_grad_u",
    "eval_u",
    "solve_exterior",
    "solve_full",
    "solve_grounded",
]
