"""Tensor-product mesh and permittivity grids for the FD solver.

The mesh is graded: a uniform fine region covers the core plus a small
margin, then cell sizes grow geometrically toward the window edge. That
keeps the unknown count manageable even when long-wavelength modes need
several microns of padding to decay.

Staggering follows the usual Yee-like layout in the cross-section:
E_x sits at (x_i + dx_i/2, y_j), E_y at (x_i, y_j + dy_j/2), E_z at
(x_i, y_j). Permittivity is averaged per component cell: harmonic along
the component's own axis (field normal to the interface), arithmetic
along the other. For the axis-aligned core/box geometry the cell overlap
fractions are exact, computed from 1D interval overlaps.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..materials import refractive_index
from .geometry import WaveguideGeometry

__all__ = [
    "graded_axis",
    "axis_spacings",
    "deriv_forward",
    "deriv_back",
    "eps_grids",
]


def graded_axis(
    half_fine: float,
    pad: float,
    step: float,
    ratio: float = 1.3,
    max_step: float = 0.16,
) -> np.ndarray:
    """Symmetric 1D node axis: uniform `step` out to half_fine, then
    geometrically growing cells until the window reaches half_fine + pad.

    Node 0 is always included, so symmetric structures see a symmetric
    grid and parity of the solved fields is preserved.
    """
    n_fine = max(1, int(np.ceil(half_fine / step - 1e-9)))
    nodes = [i * step for i in range(n_fine + 1)]
    target = half_fine + pad
    d = step
    while nodes[-1] < target:
        d = min(d * ratio, max_step)
        nodes.append(nodes[-1] + d)
    half = np.array(nodes)
    return np.concatenate([-half[::-1][:-1], half])


def axis_spacings(nodes: np.ndarray):
    """Primal spacings d_e[i] = x[i+1]-x[i] (ghost-extended) and dual
    spacings d_h[i] = (d_e[i-1]+d_e[i])/2."""
    d = np.diff(nodes)
    d_e = np.concatenate([d, d[-1:]])
    d_h = np.empty_like(d_e)
    # d_h[0] pairs the first cell with a same-size zero-field ghost.
    d_h[0] = d_e[0]
    d_h[1:] = 0.5 * (d_e[:-1] + d_e[1:])
    return d_e, d_h


def deriv_forward(d_e: np.ndarray) -> sp.csr_matrix:
    """Forward difference with an implicit zero ghost past the last node."""
    n = len(d_e)
    inv = 1.0 / d_e
    return sp.diags([-inv, inv[:-1]], [0, 1], shape=(n, n), format="csr")


def deriv_back(d_h: np.ndarray) -> sp.csr_matrix:
    """Backward difference with an implicit zero ghost before the first node."""
    n = len(d_h)
    inv = 1.0 / d_h
    return sp.diags([inv, -inv[1:]], [0, -1], shape=(n, n), format="csr")


def _band_overlap(lo: np.ndarray, hi: np.ndarray, a: float, b: float) -> np.ndarray:
    """Fraction of each interval [lo_i, hi_i] covered by the band [a, b]."""
    width = hi - lo
    inter = np.clip(np.minimum(hi, b) - np.maximum(lo, a), 0.0, None)
    return inter / width


def _cells(nodes: np.ndarray, d_e: np.ndarray, d_h: np.ndarray):
    """(lo, hi) of primal cells [x_i, x_i + d_e_i] and dual cells centered
    on the nodes."""
    primal = (nodes, nodes + d_e)
    dual = (nodes - np.concatenate([d_e[:1], d_e[:-1]]) / 2, nodes + d_e / 2)
    return primal, dual


def eps_grids(geom: WaveguideGeometry, lam: float, x: np.ndarray, y: np.ndarray):
    """Component-wise averaged permittivity on the staggered grid.

    Returns (eps_xx, eps_yy, eps_zz) as (nx, ny) arrays. Core is the
    rectangle [-a/2, a/2] x [-b/2, b/2]; the box layer spans all x just
    below the core; cladding fills the rest of the window.
    """
    e_core = float(refractive_index(geom.core_material, lam)) ** 2
    e_clad = float(refractive_index(geom.cladding_material, lam)) ** 2
    e_box = float(refractive_index(geom.box_material, lam)) ** 2

    a, b = geom.core_width, geom.core_height
    y_bot, y_top = -b / 2, b / 2
    y_box = y_bot - geom.box_thickness

    dxe, dxh = axis_spacings(x)
    dye, dyh = axis_spacings(y)
    (xp_lo, xp_hi), (xd_lo, xd_hi) = _cells(x, dxe, dxh)
    (yp_lo, yp_hi), (yd_lo, yd_hi) = _cells(y, dye, dyh)

    fx_p = _band_overlap(xp_lo, xp_hi, -a / 2, a / 2)  # Ex x-cells
    fx_d = _band_overlap(xd_lo, xd_hi, -a / 2, a / 2)  # Ey/Ez x-cells
    fy_p_core = _band_overlap(yp_lo, yp_hi, y_bot, y_top)  # Ey y-cells
    fy_p_box = _band_overlap(yp_lo, yp_hi, y_box, y_bot)
    fy_d_core = _band_overlap(yd_lo, yd_hi, y_bot, y_top)  # Ex/Ez y-cells
    fy_d_box = _band_overlap(yd_lo, yd_hi, y_box, y_bot)

    # eps_xx: harmonic across x inside the core y-band, arithmetic across
    # the y-bands of the Ex cell.
    hmix_x = 1.0 / (fx_p / e_core + (1.0 - fx_p) / e_clad)
    rest = 1.0 - fy_d_core - fy_d_box
    eps_xx = (
        np.outer(hmix_x, fy_d_core)
        + np.outer(np.ones_like(x), fy_d_box * e_box + rest * e_clad)
    )

    # eps_yy: harmonic across the y stack of the Ey cell, arithmetic in x.
    rest_p = 1.0 - fy_p_core - fy_p_box
    hmix_in = 1.0 / (fy_p_core / e_core + fy_p_box / e_box + rest_p / e_clad)
    hmix_out = 1.0 / (fy_p_box / e_box + (1.0 - fy_p_box) / e_clad)
    eps_yy = np.outer(fx_d, hmix_in) + np.outer(1.0 - fx_d, hmix_out)

    # eps_zz: plain area average over the Ez cell.
    col_in = fy_d_core * e_core + fy_d_box * e_box + rest * e_clad
    col_out = fy_d_box * e_box + (fy_d_core + rest) * e_clad
    eps_zz = np.outer(fx_d, col_in) + np.outer(1.0 - fx_d, col_out)

    return eps_xx, eps_yy, eps_zz
