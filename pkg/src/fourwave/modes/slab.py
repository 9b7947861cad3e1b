"""Analytic symmetric-slab solver.

Serves as the convergence oracle for the finite-difference solver: a
structure that varies along one axis only has an exact 1D solution, so
FD error can be measured against it directly.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq

from ..errors import PhysicsError

__all__ = ["solve_slab_mode"]


def solve_slab_mode(n_core: float, n_clad: float, thickness: float, lam: float) -> float:
    """Effective index of the fundamental TE mode of a symmetric slab.

    Solves tan(kappa t / 2) = gamma / kappa for the lowest even TE mode,
    with kappa and gamma the transverse wavenumbers in core and cladding.
    thickness and lam in um. The fundamental mode exists for any V > 0.
    """
    if n_core <= n_clad:
        raise PhysicsError(f"slab needs n_core > n_clad, got {n_core} <= {n_clad}")
    if thickness <= 0 or lam <= 0:
        raise PhysicsError("thickness and wavelength must be positive")

    k0 = 2 * np.pi / lam
    half = thickness / 2
    v = k0 * half * np.sqrt(n_core**2 - n_clad**2)

    # With u = kappa t/2 and w = gamma t/2 (u^2 + w^2 = V^2), the even-mode
    # condition w = u tan(u) becomes u sin(u) = sqrt(V^2 - u^2) cos(u),
    # which is pole-free on (0, pi/2] and brackets exactly one root.
    def f(u):
        return u * np.sin(u) - np.sqrt(max(v * v - u * u, 0.0)) * np.cos(u)

    hi = min(v, np.pi / 2)
    u = brentq(f, 1e-12, hi, xtol=1e-15, rtol=8.9e-16)
    kappa = u / half
    n_eff = np.sqrt(n_core**2 - (kappa / k0) ** 2)
    return float(n_eff)
