"""Unit-suffixed scalar parsing for config files and CLI flags.

Every dimensioned quantity in a config or on the command line must
carry an explicit unit suffix ("2.210um", "5ps", "32.2mW", "1THz").
Bare numbers are rejected: unit mistakes are the dominant failure mode
in this domain, and a parser that guesses defaults hides them.

Internally a parsed Quantity holds the value in the SI base unit of its
dimension (m, s, W, Hz, dB/cm) and converts on request, so call sites
state the unit they expect instead of assuming one.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ConfigError

__all__ = ["Quantity", "parse_quantity", "format_quantity", "UNITS"]

# suffix -> (dimension, factor to the SI base unit)
UNITS = {
    "m": ("length", 1.0),
    "cm": ("length", 1e-2),
    "mm": ("length", 1e-3),
    "um": ("length", 1e-6),
    "nm": ("length", 1e-9),
    "pm": ("length", 1e-12),
    "s": ("time", 1.0),
    "ms": ("time", 1e-3),
    "us": ("time", 1e-6),
    "ns": ("time", 1e-9),
    "ps": ("time", 1e-12),
    "fs": ("time", 1e-15),
    "W": ("power", 1.0),
    "mW": ("power", 1e-3),
    "uW": ("power", 1e-6),
    "nW": ("power", 1e-9),
    "kW": ("power", 1e3),
    "Hz": ("frequency", 1.0),
    "kHz": ("frequency", 1e3),
    "MHz": ("frequency", 1e6),
    "GHz": ("frequency", 1e9),
    "THz": ("frequency", 1e12),
    "dBcm": ("attenuation", 1.0),  # dB per cm
}

_PATTERN = re.compile(r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*([A-Za-z]+)\s*$")


@dataclass(frozen=True)
class Quantity:
    value: float  # in the SI base unit of the dimension
    dimension: str
    raw: float | None = None  # value as written, in `unit`
    unit: str | None = None

    def to(self, unit: str) -> float:
        try:
            dim, scale = UNITS[unit]
        except KeyError:
            raise ConfigError(f"unknown unit {unit!r}")
        if dim != self.dimension:
            raise ConfigError(f"cannot express a {self.dimension} in {unit!r}")
        # requesting the unit the value was written in must be lossless,
        # or serialize/parse cycles would creep by an ulp per pass
        if unit == self.unit and self.raw is not None:
            return self.raw
        return self.value / scale


def parse_quantity(text, dimension: str | None = None) -> Quantity:
    """Parse "<number><suffix>" into a Quantity.

    With dimension given, a mismatched suffix is a ConfigError, so a
    config field declared as a length cannot silently take "5ps".
    """
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        raise ConfigError(
            f"bare number {text!r} is missing a unit suffix (e.g. um, ps, mW)"
        )
    if not isinstance(text, str):
        raise ConfigError(f"expected a unit-suffixed string, got {text!r}")
    m = _PATTERN.match(text)
    if not m:
        raise ConfigError(f"cannot parse quantity {text!r}; expected e.g. '2.21um'")
    number, suffix = m.groups()
    if suffix not in UNITS:
        known = ", ".join(sorted(UNITS))
        raise ConfigError(f"unknown unit {suffix!r} in {text!r}; known units: {known}")
    dim, scale = UNITS[suffix]
    if dimension is not None and dim != dimension:
        raise ConfigError(f"expected a {dimension} but {text!r} is a {dim}")
    raw = float(number)
    return Quantity(value=raw * scale, dimension=dim, raw=raw, unit=suffix)


def format_quantity(value: float, unit: str) -> str:
    """Render a value (given in `unit`) back to its suffixed form.

    repr-style float formatting keeps round-trips exact: the shortest
    decimal string that parses back to the identical double.
    """
    if unit not in UNITS:
        raise ConfigError(f"unknown unit {unit!r}")
    return f"{value!r}{unit}"
