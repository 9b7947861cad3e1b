"""fourwave: design and simulation of SFWM photon-pair sources.

Modes, dispersion, and pair-generation estimates for rectangular
silicon-on-insulator waveguides and step-index fibers. Submodules:

- materials: refractive index, nonlinear index, absorption models
- modes: full-vector finite-difference and analytic mode solvers
- dispersion: beta(omega) curves, group index and velocity
- sfwm: phase mismatch, joint spectral density, pair rates
- design: phase-matching search, geometry optimization, tolerancing
- cli: command line entry points
"""

from .errors import (
    BoundaryLeak,
    ConfigError,
    EmptyResult,
    FilterOutsideGrid,
    FourwaveError,
    GridMismatch,
    NoData,
    NoGuidedMode,
    NoRoot,
    NonMonotoneBeta,
    NotConverged,
    NumericsError,
    OutOfRange,
    PhysicsError,
    QuadratureNotConverged,
)

__version__ = "0.1.0"

__all__ = [
    "BoundaryLeak",
    "ConfigError",
    "EmptyResult",
    "FilterOutsideGrid",
    "FourwaveError",
    "GridMismatch",
    "NoData",
    "NoGuidedMode",
    "NoRoot",
    "NonMonotoneBeta",
    "NotConverged",
    "NumericsError",
    "OutOfRange",
    "PhysicsError",
    "QuadratureNotConverged",
    "__version__",
]
