"""Mode field container and field-derived quantities.

All solvers deliver their result as a ModeField: six field components
sampled on one uniform rectangular grid, normalized so the E-field
intensity integrates to 1 over the cross-section. Lengths are in um,
so |E|^2 carries um^-2; conversions to SI happen at the public API
boundary (effective_area, overlap_integral).

H fields are stored scaled by the free-space impedance (Z0*H), which
keeps E and H numerically comparable and drops mu0/eps0 bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import GridMismatch, PhysicsError
from .geometry import WaveguideGeometry

__all__ = [
    "ModeField",
    "ModeSolution",
    "effective_area",
    "overlap_integral",
    "power_fractions",
]


@dataclass(frozen=True)
class ModeField:
    """Six complex field components on a uniform grid, indexed [ix, iy]."""

    x: np.ndarray  # (nx,) um
    y: np.ndarray  # (ny,) um
    ex: np.ndarray
    ey: np.ndarray
    ez: np.ndarray
    hx: np.ndarray
    hy: np.ndarray
    hz: np.ndarray

    def __post_init__(self):
        shape = (self.x.size, self.y.size)
        for name in ("ex", "ey", "ez", "hx", "hy", "hz"):
            if getattr(self, name).shape != shape:
                raise GridMismatch(f"{name} shape {getattr(self, name).shape} != {shape}")

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def dy(self) -> float:
        return float(self.y[1] - self.y[0])

    @property
    def nx(self) -> int:
        return self.x.size

    @property
    def ny(self) -> int:
        return self.y.size

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    def e_intensity(self) -> np.ndarray:
        return (
            np.abs(self.ex) ** 2 + np.abs(self.ey) ** 2 + np.abs(self.ez) ** 2
        )

    def et_intensity(self) -> np.ndarray:
        """Transverse-field intensity |E_t|^2."""
        return np.abs(self.ex) ** 2 + np.abs(self.ey) ** 2

    def norm_e(self) -> float:
        """Integral of |E|^2 over the window (cell sum on the uniform grid)."""
        return float(np.sum(self.e_intensity()) * self.cell_area)

    def normalized(self) -> "ModeField":
        """Scale all components so the E-field norm integral is 1."""
        s = 1.0 / np.sqrt(self.norm_e())
        return replace(
            self,
            ex=self.ex * s,
            ey=self.ey * s,
            ez=self.ez * s,
            hx=self.hx * s,
            hy=self.hy * s,
            hz=self.hz * s,
        )

    def boundary_ratio(self) -> float:
        """Max |E| on the window edge relative to the peak |E|."""
        mag = np.sqrt(self.e_intensity())
        edge = max(
            float(mag[0, :].max()),
            float(mag[-1, :].max()),
            float(mag[:, 0].max()),
            float(mag[:, -1].max()),
        )
        return edge / float(mag.max())

    def poynting_z(self) -> np.ndarray:
        """Time-averaged axial Poynting density (scaled units)."""
        return 0.5 * np.real(self.ex * np.conj(self.hy) - self.ey * np.conj(self.hx))


@dataclass(frozen=True)
class ModeSolution:
    """A solved guided mode at one wavelength."""

    lam: float  # um
    n_eff: float
    field: ModeField
    polarization_tag: str  # "TE-like" or "TM-like"
    te_fraction: float
    geometry_key: str = ""

    @property
    def beta(self) -> float:
        """Propagation constant in rad/m."""
        return 2 * np.pi * self.n_eff / (self.lam * 1e-6)


def _check_same_grid(*fields: ModeField):
    ref = fields[0]
    for f in fields[1:]:
        if f.x.shape != ref.x.shape or f.y.shape != ref.y.shape:
            raise GridMismatch("mode fields sampled on different grid sizes")
        if not (np.allclose(f.x, ref.x) and np.allclose(f.y, ref.y)):
            raise GridMismatch("mode fields sampled on different grid coordinates")


def effective_area(sol: ModeSolution) -> float:
    """Effective area (int |E_t|^2)^2 / int |E_t|^4, in m^2."""
    it = sol.field.et_intensity()
    da = sol.field.cell_area
    i2 = np.sum(it) * da
    i4 = np.sum(it * it) * da
    if i4 == 0:
        raise PhysicsError("effective_area of a zero field")
    return float(i2 * i2 / i4) * 1e-12


def _dominant_component(sol: ModeSolution) -> np.ndarray:
    return sol.field.ex if sol.te_fraction > 0.5 else sol.field.ey


def overlap_integral(pump: ModeSolution, signal: ModeSolution, idler: ModeSolution) -> float:
    """Four-field overlap of pump (twice), signal and idler modes, in m^-2.

    Uses the dominant transverse component of each mode. With normalized
    fields the denominator is the product of the four full-field norms,
    kept explicit so unnormalized fields are handled too.
    """
    _check_same_grid(pump.field, signal.field, idler.field)
    ep = _dominant_component(pump)
    es = _dominant_component(signal)
    ei = _dominant_component(idler)
    da = pump.field.cell_area
    num = np.sum(np.conj(ep) * np.conj(ep) * es * ei) * da
    den = np.sqrt(
        pump.field.norm_e() ** 2 * signal.field.norm_e() * idler.field.norm_e()
    )
    f = num / den
    if abs(f.imag) > 1e-9 * abs(f.real):
        raise PhysicsError("overlap integral should be real for real mode profiles")
    return float(f.real) * 1e12


def _band_fraction(centers: np.ndarray, width: float, lo: float, hi: float) -> np.ndarray:
    """Per-cell overlap fraction of [c-w/2, c+w/2] with [lo, hi]."""
    left = np.maximum(centers - width / 2, lo)
    right = np.minimum(centers + width / 2, hi)
    return np.clip(right - left, 0.0, None) / width


def power_fractions(sol: ModeSolution, geom: WaveguideGeometry):
    """Poynting-flux fractions (core, cladding, box), summing to 1.

    Region membership uses exact per-cell area fractions for the
    axis-aligned geometry, so the three fractions always close to 1.
    Air regions, if any, count toward the cladding.
    """
    if sol.geometry_key and sol.geometry_key != geom.cache_key():
        raise GridMismatch("mode was solved on a different geometry")
    f = sol.field
    a, b = geom.core_width, geom.core_height
    y_bot = -b / 2

    fx_core = _band_fraction(f.x, f.dx, -a / 2, a / 2)
    fy_core = _band_fraction(f.y, f.dy, y_bot, y_bot + b)
    fy_box = _band_fraction(f.y, f.dy, y_bot - geom.box_thickness, y_bot)

    w_core = np.outer(fx_core, fy_core)
    w_box = np.ones((f.nx, 1)) * fy_box[None, :]
    w_clad = 1.0 - w_core - w_box

    sz = f.poynting_z()
    total = float(np.sum(sz))
    if total <= 0:
        raise PhysicsError("mode carries no forward power")
    p_core = float(np.sum(sz * w_core)) / total
    p_box = float(np.sum(sz * w_box)) / total
    p_clad = float(np.sum(sz * w_clad)) / total
    return (p_core, p_clad, p_box)
