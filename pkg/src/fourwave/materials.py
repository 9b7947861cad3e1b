"""Optical material models.

Linear refractive index (Sellmeier, tabulated, fixed, and mixtures),
Kerr nonlinear index tables, and absorption tables. Wavelengths are in
micrometers throughout; n2 in m^2/W; absorption in dB/cm.

All model objects are immutable after construction and safe to share
between threads. Index models expose ``n(lam)`` and ``dn_dlam(lam)``,
both accepting scalars or arrays.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import ConfigError, NoData, OutOfRange

__all__ = [
    "SellmeierModel",
    "FixedIndex",
    "TabulatedIndex",
    "PiecewiseIndex",
    "MixtureIndex",
    "MaterialModel",
    "refractive_index",
    "nonlinear_index",
    "absorption",
    "get_material",
    "MATERIALS",
]


def _check_range(lam, validity_range, who: str) -> np.ndarray:
    arr = np.asarray(lam, dtype=float)
    lo, hi = validity_range
    if np.any(arr < lo) or np.any(arr > hi):
        raise OutOfRange(
            f"{who}: wavelength {float(np.min(arr)):.4g}..{float(np.max(arr)):.4g} um "
            f"outside validity range [{lo:g}, {hi:g}] um"
        )
    return arr


def _scalar_or_array(out: np.ndarray, like) -> Union[float, np.ndarray]:
    if np.ndim(like) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class SellmeierModel:
    """Sellmeier dispersion model, n^2 = offset + sum B_k lam^2 / (lam^2 - C_k).

    Parameters
    ----------
    terms : tuple of (B_k, C_k)
        B_k dimensionless, C_k in um^2.
    validity_range : (lam_min, lam_max) in um
        Evaluation outside this range raises OutOfRange, never extrapolates.
    constant_offset : float
        The additive constant; 1.0 for the common form, different for fits
        published as n^2 = A + sum(...).
    """

    terms: tuple
    validity_range: tuple
    constant_offset: float = 1.0

    def n(self, lam):
        arr = _check_range(lam, self.validity_range, "SellmeierModel")
        l2 = arr * arr
        n2 = np.full_like(arr, self.constant_offset, dtype=float)
        for b, c in self.terms:
            n2 = n2 + b * l2 / (l2 - c)
        return _scalar_or_array(np.sqrt(n2), lam)

    def dn_dlam(self, lam):
        """Closed-form dn/dlam in um^-1."""
        arr = _check_range(lam, self.validity_range, "SellmeierModel")
        n = np.asarray(self.n(arr), dtype=float)
        # d(n^2)/dlam = -2 lam sum B_k C_k / (lam^2 - C_k)^2
        s = np.zeros_like(arr, dtype=float)
        for b, c in self.terms:
            s = s + b * c / (arr * arr - c) ** 2
        return _scalar_or_array(-arr * s / n, lam)


@dataclass(frozen=True)
class FixedIndex:
    """Wavelength-independent index (air, test fixtures)."""

    value: float
    validity_range: tuple = (0.0, np.inf)

    def n(self, lam):
        arr = _check_range(lam, self.validity_range, "FixedIndex")
        return _scalar_or_array(np.full_like(arr, self.value, dtype=float), lam)

    def dn_dlam(self, lam):
        arr = _check_range(lam, self.validity_range, "FixedIndex")
        return _scalar_or_array(np.zeros_like(arr, dtype=float), lam)


@dataclass(frozen=True)
class TabulatedIndex:
    """Shape-preserving (pchip) interpolation of (lam, n) knots.

    Exact at knots and bounded by neighboring knot values in between,
    which a plain cubic spline would not guarantee.
    """

    knots: tuple
    _interp: PchipInterpolator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        xs = np.array([k[0] for k in self.knots], dtype=float)
        ys = np.array([k[1] for k in self.knots], dtype=float)
        if len(xs) < 2:
            raise ConfigError("TabulatedIndex needs at least two knots")
        if np.any(np.diff(xs) <= 0):
            raise ConfigError("TabulatedIndex knots must be strictly increasing in wavelength")
        object.__setattr__(self, "_interp", PchipInterpolator(xs, ys, extrapolate=False))

    @property
    def validity_range(self):
        return (self.knots[0][0], self.knots[-1][0])

    def n(self, lam):
        arr = _check_range(lam, self.validity_range, "TabulatedIndex")
        return _scalar_or_array(self._interp(arr), lam)

    def dn_dlam(self, lam):
        arr = _check_range(lam, self.validity_range, "TabulatedIndex")
        return _scalar_or_array(self._interp.derivative()(arr), lam)


@dataclass(frozen=True)
class PiecewiseIndex:
    """Dispatch between index models over adjacent wavelength bands.

    Segments must be ordered by wavelength and contiguous; a query goes to
    the first segment whose validity range contains it.
    """

    segments: tuple

    def __post_init__(self):
        for a, b in zip(self.segments, self.segments[1:]):
            if b.validity_range[0] > a.validity_range[1]:
                raise ConfigError("PiecewiseIndex segments leave a wavelength gap")

    @property
    def validity_range(self):
        return (self.segments[0].validity_range[0], self.segments[-1].validity_range[1])

    def _eval(self, lam, attr):
        arr = _check_range(lam, self.validity_range, "PiecewiseIndex")
        flat = np.atleast_1d(arr).astype(float)
        out = np.empty_like(flat)
        done = np.zeros(flat.shape, dtype=bool)
        for seg in self.segments:
            lo, hi = seg.validity_range
            m = ~done & (flat >= lo) & (flat <= hi)
            if np.any(m):
                out[m] = np.asarray(getattr(seg, attr)(flat[m]), dtype=float)
                done[m] = True
        return _scalar_or_array(out.reshape(arr.shape), lam)

    def n(self, lam):
        return self._eval(lam, "n")

    def dn_dlam(self, lam):
        return self._eval(lam, "dn_dlam")


@dataclass(frozen=True)
class MixtureIndex:
    """Fill-fraction-weighted mean index of two constituents.

    n(lam) = fill * first.n(lam) + (1 - fill) * second.n(lam). Used for
    homogenized claddings such as the air/silica mix of a microstructured
    fiber.
    """

    first: object
    second: object
    fill: float

    def __post_init__(self):
        if not 0.0 <= self.fill <= 1.0:
            raise ConfigError(f"mixture fill fraction {self.fill} outside [0, 1]")

    @property
    def validity_range(self):
        lo1, hi1 = self.first.validity_range
        lo2, hi2 = self.second.validity_range
        return (max(lo1, lo2), min(hi1, hi2))

    def n(self, lam):
        _check_range(lam, self.validity_range, "MixtureIndex")
        return self.fill * self.first.n(lam) + (1.0 - self.fill) * self.second.n(lam)

    def dn_dlam(self, lam):
        _check_range(lam, self.validity_range, "MixtureIndex")
        return self.fill * self.first.dn_dlam(lam) + (1.0 - self.fill) * self.second.dn_dlam(lam)


def _validate_table(table, what: str) -> tuple:
    rows = tuple((float(l), float(v)) for l, v in table)
    xs = [r[0] for r in rows]
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise ConfigError(f"{what} table must be strictly increasing in wavelength")
    return rows


@dataclass(frozen=True)
class MaterialModel:
    """A named material: linear index model plus optional n2/absorption tables.

    Tables are (lam_um, value) pairs, strictly increasing in wavelength,
    queried with linear interpolation and clamped (with a warning) outside
    the tabulated range.
    """

    name: str
    index: object
    n2_table: tuple = ()
    absorption_table: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "n2_table", _validate_table(self.n2_table, "n2"))
        object.__setattr__(
            self, "absorption_table", _validate_table(self.absorption_table, "absorption")
        )


def _interp_clamped(table: tuple, lam, what: str, name: str):
    if not table:
        raise NoData(f"material '{name}' has no {what} table")
    xs = np.array([r[0] for r in table], dtype=float)
    ys = np.array([r[1] for r in table], dtype=float)
    arr = np.asarray(lam, dtype=float)
    if np.any(arr < xs[0]) or np.any(arr > xs[-1]):
        warnings.warn(
            f"{what}({name}): wavelength outside table range "
            f"[{xs[0]:g}, {xs[-1]:g}] um, clamping to nearest knot",
            stacklevel=3,
        )
    return _scalar_or_array(np.interp(arr, xs, ys), lam)


def get_material(material) -> MaterialModel:
    """Resolve a MaterialModel or a registered material name."""
    if isinstance(material, MaterialModel):
        return material
    try:
        return MATERIALS[material]
    except (KeyError, TypeError):
        raise ConfigError(f"unknown material {material!r}") from None


def refractive_index(material, lam):
    """Real refractive index n(lam) of a material, lam in um.

    Raises OutOfRange outside the model's validity range; index models
    never extrapolate.
    """
    return get_material(material).index.n(lam)


def nonlinear_index(material, lam):
    """Kerr index n2(lam) in m^2/W, linearly interpolated from the table."""
    m = get_material(material)
    return _interp_clamped(m.n2_table, lam, "n2", m.name)


def absorption(material, lam):
    """Absorption coefficient in dB/cm, linearly interpolated from the table."""
    m = get_material(material)
    return _interp_clamped(m.absorption_table, lam, "absorption", m.name)


# -- shipped materials -------------------------------------------------------

# Crystalline silicon, Salzberg-Villa fit (n^2 form with separate constant).
SILICON_INDEX = SellmeierModel(
    terms=(
        (10.6684293, 0.301516485**2),
        (0.0030434748, 1.13475115**2),
        (1.54133408, 1104.0**2),
    ),
    validity_range=(1.36, 11.0),
)

# Fused silica, Malitson fit. Valid to 3.71 um; we hand over to the
# tabulated long-wave extension at 3.70 to cover the mid-IR signal band.
SILICA_VIS_NIR = SellmeierModel(
    terms=(
        (0.6961663, 0.0684043**2),
        (0.4079426, 0.1162414**2),
        (0.8974794, 9.896161**2),
    ),
    validity_range=(0.21, 3.70),
)

# Long-wave silica knots, 3.70..5.00 um. First knot coincides with the
# Malitson value at 3.70 so the composite index is continuous there.
_SILICA_IR_KNOTS = (
    (3.70, 1.399609),
    (3.80, 1.396245),
    (3.90, 1.392721),
    (4.00, 1.389028),
    (4.10, 1.385157),
    (4.20, 1.381100),
    (4.30, 1.376845),
    (4.40, 1.372381),
    (4.50, 1.367697),
    (4.60, 1.362779),
    (4.70, 1.357612),
    (4.80, 1.352181),
    (4.90, 1.346469),
    (5.00, 1.340457),
)

SILICA_INDEX = PiecewiseIndex((SILICA_VIS_NIR, TabulatedIndex(_SILICA_IR_KNOTS)))

AIR_INDEX = FixedIndex(1.0)

silicon = MaterialModel(
    name="silicon",
    index=SILICON_INDEX,
    # Kerr index of silicon in the 2.1-2.2 um pump band.
    n2_table=(
        (2.100, 6.6145e-18),
        (2.151, 6.5801e-18),
        (2.210, 6.0473e-18),
    ),
    # Bulk absorption in the mid-IR signal band, dB/cm.
    absorption_table=(
        (3.265, 0.001),
        (3.461, 0.001),
        (3.905, 0.002),
    ),
)

silica = MaterialModel(
    name="silica",
    index=SILICA_INDEX,
    # Kerr index of fused silica; flat over the bands we use.
    n2_table=(
        (0.5, 2.6e-20),
        (2.0, 2.6e-20),
    ),
    # Multiphonon absorption edge in the mid-IR, dB/cm.
    absorption_table=(
        (3.265, 0.7),
        (3.461, 1.0),
        (3.905, 7.3),
    ),
)

air = MaterialModel(name="air", index=AIR_INDEX)

# Homogenized cladding of a high-contrast microstructured fiber with 90%
# air-filling fraction.
pcf_cladding_90 = MaterialModel(
    name="pcf_cladding_90",
    index=MixtureIndex(AIR_INDEX, SILICA_INDEX, fill=0.9),
)

MATERIALS = {m.name: m for m in (silicon, silica, air, pcf_cladding_90)}
