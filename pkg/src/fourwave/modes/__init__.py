"""Guided-mode solvers and field-derived quantities.

A full-vector finite-difference eigenmode solver handles rectangular
cross-sections; step-index fibers and symmetric slabs have exact analytic
solvers that double as validation oracles. All solvers return the same
ModeField representation so downstream overlap/area code is solver-agnostic.
"""

from .fields import (
    ModeField,
    ModeSolution,
    effective_area,
    overlap_integral,
    power_fractions,
)
from .fiber import solve_fiber_mode, solve_fiber_neff
from .geometry import FiberGeometry, WaveguideGeometry
from .rect import solve_rect_mode, solve_rect_neff
from .slab import solve_slab_mode

__all__ = [
    "FiberGeometry",
    "ModeField",
    "ModeSolution",
    "WaveguideGeometry",
    "effective_area",
    "overlap_integral",
    "power_fractions",
    "solve_fiber_mode",
    "solve_fiber_neff",
    "solve_rect_mode",
    "solve_rect_neff",
    "solve_slab_mode",
]
