"""Cross-section geometry descriptions for the mode solvers."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace

from ..errors import ConfigError
from ..materials import MaterialModel, get_material

__all__ = ["WaveguideGeometry", "FiberGeometry"]


def _material_key(material) -> str:
    m = get_material(material)
    return m.name


@dataclass(frozen=True)
class WaveguideGeometry:
    """Rectangular channel waveguide on a buried-oxide layer.

    The core (core_width x core_height, um) sits on a BOX layer of
    box_thickness and is covered on the sides and top by the cladding
    material. cladding_padding is the minimum simulation-window margin
    around the core; the solver may enlarge it to keep boundary fields
    negligible. length is the physical propagation length in meters.
    """

    core_width: float
    core_height: float
    core: object = "silicon"
    cladding: object = "silica"
    box: object = "silica"
    box_thickness: float = 2.0
    cladding_padding: float = 2.0
    length: float = 0.02

    def __post_init__(self):
        if self.core_width <= 0 or self.core_height <= 0:
            raise ConfigError("core dimensions must be positive")
        if self.length <= 0:
            raise ConfigError("waveguide length must be positive")
        if self.box_thickness < 0 or self.cladding_padding <= 0:
            raise ConfigError("box_thickness must be >= 0 and cladding_padding > 0")

    @property
    def core_material(self) -> MaterialModel:
        return get_material(self.core)

    @property
    def cladding_material(self) -> MaterialModel:
        return get_material(self.cladding)

    @property
    def box_material(self) -> MaterialModel:
        return get_material(self.box)

    def with_core(self, core_width=None, core_height=None) -> "WaveguideGeometry":
        """Copy with perturbed core dimensions (tolerance studies)."""
        return replace(
            self,
            core_width=self.core_width if core_width is None else core_width,
            core_height=self.core_height if core_height is None else core_height,
        )

    def cache_key(self) -> str:
        """Stable hash of everything the mode solver sees (not length)."""
        parts = (
            f"rect:{self.core_width:.6f}x{self.core_height:.6f}",
            _material_key(self.core),
            _material_key(self.cladding),
            _material_key(self.box),
            f"box={self.box_thickness:.4f}",
            f"pad={self.cladding_padding:.4f}",
        )
        return hashlib.sha256("|".join(parts).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class FiberGeometry:
    """Step-index fiber: core_radius in um, length in meters."""

    core_radius: float
    core: object = "silica"
    cladding: object = "pcf_cladding_90"
    length: float = 0.2

    def __post_init__(self):
        if self.core_radius <= 0:
            raise ConfigError("core radius must be positive")
        if self.length <= 0:
            raise ConfigError("fiber length must be positive")

    @property
    def core_material(self) -> MaterialModel:
        return get_material(self.core)

    @property
    def cladding_material(self) -> MaterialModel:
        return get_material(self.cladding)

    def cache_key(self) -> str:
        parts = (
            f"fiber:{self.core_radius:.6f}",
            _material_key(self.core),
            _material_key(self.cladding),
        )
        return hashlib.sha256("|".join(parts).encode()).hexdigest()[:16]
