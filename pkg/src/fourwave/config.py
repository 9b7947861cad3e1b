"""Run configuration: declarative scenario files and embedded presets.

A run is described by one YAML document with explicit unit suffixes on
every dimensioned value. Exactly one of `geometry` (rectangular
waveguide) or `fiber` (step-index fiber) must be present, and the pump
carries exactly one of `peak_power` / `mean_power`; a mean power is
converted to peak with the gaussian pulse-train formula, which needs
the repetition rate and duration.

Filter widths may be given as a wavelength span or a frequency span;
frequency widths are converted at the filter's center. With
`track_phase_match: true` the pipeline re-centers both filters on the
solved phase-matching point and config centers are nominal only.

The `pulse_shape` tag selects the mean-to-peak conversion convention.
The joint-spectrum integrals themselves always use the sech envelope
with T0 equal to the configured duration; for a gaussian-tagged pump
that is an approximation, adequate at the tolerance these scenarios
are validated to.
"""

from __future__ import annotations

from dataclasses import dataclass

import yaml

from .errors import ConfigError
from .modes.geometry import FiberGeometry, WaveguideGeometry
from .quantities import format_quantity, parse_quantity
from .sfwm import DetectionChain, FilterSpec, PumpPulse, peak_power_from_mean

__all__ = [
    "FilterSection",
    "PumpSection",
    "RunConfig",
    "config_from_dict",
    "config_to_dict",
    "load_config",
    "dump_config",
    "preset",
    "PRESETS",
]

C_UM = 299792458.0 * 1e6  # um/s


@dataclass(frozen=True)
class PumpSection:
    wavelength_um: float
    duration_s: float  # sech: natural width T0; gaussian: FWHM
    rep_rate_hz: float
    shape: str = "sech"
    peak_power_w: float | None = None
    mean_power_w: float | None = None

    def __post_init__(self):
        if (self.peak_power_w is None) == (self.mean_power_w is None):
            raise ConfigError("pump needs exactly one of peak_power / mean_power")
        if self.shape not in ("sech", "gaussian"):
            raise ConfigError(f"unknown pulse shape {self.shape!r}")
        if self.wavelength_um <= 0 or self.duration_s <= 0 or self.rep_rate_hz <= 0:
            raise ConfigError("pump wavelength, duration and rep rate must be positive")
        power = self.peak_power_w if self.peak_power_w is not None else self.mean_power_w
        if power < 0:
            raise ConfigError("pump power must be nonnegative")

    def resolve_peak_power(self) -> float:
        if self.peak_power_w is not None:
            return self.peak_power_w
        return peak_power_from_mean(self.mean_power_w, self.rep_rate_hz, self.duration_s)

    def pulse(self, peak_power_w: float | None = None) -> PumpPulse:
        """PumpPulse for the spectral integrals (sech envelope, see module doc)."""
        power = self.resolve_peak_power() if peak_power_w is None else peak_power_w
        return PumpPulse(
            lam_p=self.wavelength_um,
            t0=self.duration_s,
            peak_power=power,
            rep_rate=self.rep_rate_hz,
            shape="sech",
        )


@dataclass(frozen=True)
class FilterSection:
    signal_center_um: float
    signal_width_um: float
    idler_center_um: float
    idler_width_um: float
    track_phase_match: bool = False

    def __post_init__(self):
        for v in (
            self.signal_center_um,
            self.signal_width_um,
            self.idler_center_um,
            self.idler_width_um,
        ):
            if v <= 0:
                raise ConfigError("filter centers and widths must be positive")

    def signal(self, center_um: float | None = None) -> FilterSpec:
        return FilterSpec.from_wavelength(
            center_um if center_um is not None else self.signal_center_um,
            self.signal_width_um,
        )

    def idler(self, center_um: float | None = None) -> FilterSpec:
        return FilterSpec.from_wavelength(
            center_um if center_um is not None else self.idler_center_um,
            self.idler_width_um,
        )


@dataclass(frozen=True)
class RunConfig:
    name: str
    geometry: WaveguideGeometry | None = None
    fiber: FiberGeometry | None = None
    pump: PumpSection | None = None
    filters: FilterSection | None = None
    detection: DetectionChain = DetectionChain(1.0, 1.0, 1.0, 1.0)
    lambda_min_um: float = 1.40
    lambda_max_um: float = 4.20
    grid_step_um: float | None = None  # dispersion-grid base step override
    resolution: int = 512  # JSD grid resolution per axis
    cache: str | None = None

    def __post_init__(self):
        if (self.geometry is None) == (self.fiber is None):
            raise ConfigError("config needs exactly one of geometry / fiber")
        if self.lambda_min_um >= self.lambda_max_um:
            raise ConfigError("lambda_min must be below lambda_max")
        if self.resolution < 8:
            raise ConfigError("JSD resolution below 8 is meaningless")

    @property
    def structure(self):
        return self.geometry if self.geometry is not None else self.fiber

    def require_pump(self) -> PumpSection:
        if self.pump is None:
            raise ConfigError(f"config {self.name!r} has no pump section")
        return self.pump

    def require_filters(self) -> FilterSection:
        if self.filters is None:
            raise ConfigError(f"config {self.name!r} has no filters section")
        return self.filters


# -- YAML <-> RunConfig ------------------------------------------------------

def _get(section: dict, key: str, where: str):
    try:
        return section[key]
    except KeyError:
        raise ConfigError(f"missing {key!r} in {where} section")


def _length_um(section, key, where):
    return parse_quantity(_get(section, key, where), "length").to("um")


def _width_um(section, key, where, center_um):
    """Filter width: a length directly, or a frequency span at the center."""
    q = parse_quantity(_get(section, key, where))
    if q.dimension == "length":
        return q.to("um")
    if q.dimension == "frequency":
        # dlam = lam^2 * dnu / c, first order about the center
        return center_um**2 * q.to("Hz") / C_UM
    raise ConfigError(f"{key!r} must be a length or a frequency, got a {q.dimension}")


def _efficiency(section, key, where):
    v = _get(section, key, where)
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ConfigError(f"{key!r} must be a bare number in [0, 1] (dimensionless)")
    return float(v)


def _geometry_from(section: dict) -> WaveguideGeometry:
    kwargs = {
        "core_width": _length_um(section, "core_width", "geometry"),
        "core_height": _length_um(section, "core_height", "geometry"),
    }
    if "box_thickness" in section:
        kwargs["box_thickness"] = _length_um(section, "box_thickness", "geometry")
    if "cladding_padding" in section:
        kwargs["cladding_padding"] = _length_um(section, "cladding_padding", "geometry")
    if "length" in section:
        kwargs["length"] = parse_quantity(section["length"], "length").to("m")
    for key in ("core", "cladding", "box"):
        if key in section:
            kwargs[key] = str(section[key])
    return WaveguideGeometry(**kwargs)


def _fiber_from(section: dict) -> FiberGeometry:
    kwargs = {"core_radius": _length_um(section, "core_radius", "fiber")}
    if "length" in section:
        kwargs["length"] = parse_quantity(section["length"], "length").to("m")
    for key in ("core", "cladding"):
        if key in section:
            kwargs[key] = str(section[key])
    return FiberGeometry(**kwargs)


def _pump_from(section: dict) -> PumpSection:
    peak = mean = None
    if "peak_power" in section and "mean_power" in section:
        raise ConfigError("pump needs exactly one of peak_power / mean_power")
    if "peak_power" in section:
        peak = parse_quantity(section["peak_power"], "power").to("W")
    elif "mean_power" in section:
        mean = parse_quantity(section["mean_power"], "power").to("W")
    else:
        raise ConfigError("pump needs exactly one of peak_power / mean_power")
    return PumpSection(
        wavelength_um=_length_um(section, "wavelength", "pump"),
        duration_s=parse_quantity(_get(section, "duration", "pump"), "time").to("s"),
        rep_rate_hz=parse_quantity(_get(section, "rep_rate", "pump"), "frequency").to("Hz"),
        shape=str(section.get("shape", "sech")),
        peak_power_w=peak,
        mean_power_w=mean,
    )


def _filters_from(section: dict) -> FilterSection:
    sc = _length_um(section, "signal_center", "filters")
    ic = _length_um(section, "idler_center", "filters")
    return FilterSection(
        signal_center_um=sc,
        signal_width_um=_width_um(section, "signal_width", "filters", sc),
        idler_center_um=ic,
        idler_width_um=_width_um(section, "idler_width", "filters", ic),
        track_phase_match=bool(section.get("track_phase_match", False)),
    )


def _detection_from(section: dict) -> DetectionChain:
    return DetectionChain(
        mu_s=_efficiency(section, "mu_s", "detection"),
        mu_i=_efficiency(section, "mu_i", "detection"),
        eta_s=_efficiency(section, "eta_s", "detection"),
        eta_i=_efficiency(section, "eta_i", "detection"),
    )


def config_from_dict(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a mapping")
    unknown = set(doc) - {
        "name", "geometry", "fiber", "pump", "filters", "detection", "compute",
    }
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    compute = doc.get("compute", {}) or {}
    kwargs = {
        "name": str(doc.get("name", "custom")),
        "geometry": _geometry_from(doc["geometry"]) if "geometry" in doc else None,
        "fiber": _fiber_from(doc["fiber"]) if "fiber" in doc else None,
        "pump": _pump_from(doc["pump"]) if "pump" in doc else None,
        "filters": _filters_from(doc["filters"]) if "filters" in doc else None,
    }
    if "detection" in doc:
        kwargs["detection"] = _detection_from(doc["detection"])
    if "lambda_min" in compute:
        kwargs["lambda_min_um"] = parse_quantity(compute["lambda_min"], "length").to("um")
    if "lambda_max" in compute:
        kwargs["lambda_max_um"] = parse_quantity(compute["lambda_max"], "length").to("um")
    if compute.get("grid_step") is not None:
        kwargs["grid_step_um"] = parse_quantity(compute["grid_step"], "length").to("um")
    if "resolution" in compute:
        res = compute["resolution"]
        if not isinstance(res, int) or isinstance(res, bool):
            raise ConfigError("compute.resolution must be an integer")
        kwargs["resolution"] = res
    if compute.get("cache") is not None:
        kwargs["cache"] = str(compute["cache"])
    return RunConfig(**kwargs)


def config_to_dict(cfg: RunConfig) -> dict:
    doc: dict = {"name": cfg.name}
    if cfg.geometry is not None:
        g = cfg.geometry
        doc["geometry"] = {
            "core_width": format_quantity(g.core_width, "um"),
            "core_height": format_quantity(g.core_height, "um"),
            "box_thickness": format_quantity(g.box_thickness, "um"),
            "cladding_padding": format_quantity(g.cladding_padding, "um"),
            "length": format_quantity(g.length, "m"),
            "core": g.core_material.name,
            "cladding": g.cladding_material.name,
            "box": g.box_material.name,
        }
    if cfg.fiber is not None:
        f = cfg.fiber
        doc["fiber"] = {
            "core_radius": format_quantity(f.core_radius, "um"),
            "length": format_quantity(f.length, "m"),
            "core": f.core_material.name,
            "cladding": f.cladding_material.name,
        }
    if cfg.pump is not None:
        p = cfg.pump
        pump = {
            "wavelength": format_quantity(p.wavelength_um, "um"),
            "duration": format_quantity(p.duration_s, "s"),
            "rep_rate": format_quantity(p.rep_rate_hz, "Hz"),
            "shape": p.shape,
        }
        if p.peak_power_w is not None:
            pump["peak_power"] = format_quantity(p.peak_power_w, "W")
        else:
            pump["mean_power"] = format_quantity(p.mean_power_w, "W")
        doc["pump"] = pump
    if cfg.filters is not None:
        ft = cfg.filters
        doc["filters"] = {
            "signal_center": format_quantity(ft.signal_center_um, "um"),
            "signal_width": format_quantity(ft.signal_width_um, "um"),
            "idler_center": format_quantity(ft.idler_center_um, "um"),
            "idler_width": format_quantity(ft.idler_width_um, "um"),
            "track_phase_match": ft.track_phase_match,
        }
    d = cfg.detection
    doc["detection"] = {"mu_s": d.mu_s, "mu_i": d.mu_i, "eta_s": d.eta_s, "eta_i": d.eta_i}
    compute = {
        "lambda_min": format_quantity(cfg.lambda_min_um, "um"),
        "lambda_max": format_quantity(cfg.lambda_max_um, "um"),
        "resolution": cfg.resolution,
    }
    if cfg.grid_step_um is not None:
        compute["grid_step"] = format_quantity(cfg.grid_step_um, "um")
    if cfg.cache is not None:
        compute["cache"] = cfg.cache
    doc["compute"] = compute
    return doc


def load_config(path) -> RunConfig:
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    return config_from_dict(doc)


def dump_config(cfg: RunConfig, path=None) -> str:
    text = yaml.safe_dump(config_to_dict(cfg), sort_keys=True, default_flow_style=False)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


# -- embedded presets --------------------------------------------------------

# The three waveguide sources target methane sensing, NO2 sensing, and
# the widest achievable signal/idler separation; the fiber scenario
# reproduces a published pair-rate measurement for validating the rate
# formula end to end.

def _soi_preset(name, width, height, lam_p, peak_w, signal, idler) -> RunConfig:
    return RunConfig(
        name=name,
        geometry=WaveguideGeometry(core_width=width, core_height=height, length=0.02),
        pump=PumpSection(
            wavelength_um=lam_p,
            duration_s=5e-12,
            rep_rate_hz=80e6,
            shape="sech",
            peak_power_w=peak_w,
        ),
        filters=FilterSection(
            signal_center_um=signal,
            signal_width_um=signal**2 * 1e12 / C_UM,  # 1 THz at the signal
            idler_center_um=idler,
            idler_width_um=idler**2 * 1e12 / C_UM,  # 1 THz at the idler
            track_phase_match=True,
        ),
        lambda_min_um=1.40,
        lambda_max_um=4.20,
    )


def _fiber_preset() -> RunConfig:
    return RunConfig(
        name="alibart",
        fiber=FiberGeometry(core_radius=0.965, length=0.2),
        pump=PumpSection(
            wavelength_um=0.7084,
            duration_s=2e-12,
            rep_rate_hz=80e6,
            shape="gaussian",
            mean_power_w=960e-6,
        ),
        # red arm at 880 nm is the signal by the lam_s > lam_p convention
        filters=FilterSection(
            signal_center_um=0.880,
            signal_width_um=0.040,
            idler_center_um=0.570,
            idler_width_um=0.040,
        ),
        # Si APD efficiency is ~0.60 at 570 nm and falls to ~0.33 by 880 nm,
        # so the (0.44, 0.33) pair belongs to the signal arm here.
        detection=DetectionChain(mu_s=0.44, mu_i=0.58, eta_s=0.33, eta_i=0.60),
        lambda_min_um=0.52,
        lambda_max_um=0.96,
    )


PRESETS = {
    "wCH4": lambda: _soi_preset("wCH4", 2.05, 0.75, 2.100, 24.1e-3, 3.265, 1.547),
    "wNO2": lambda: _soi_preset("wNO2", 2.23, 0.75, 2.151, 9.2e-3, 3.461, 1.560),
    "wCOM": lambda: _soi_preset("wCOM", 2.35, 0.65, 2.210, 32.2e-3, 3.905, 1.541),
    "alibart": _fiber_preset,
}


def preset(name: str) -> RunConfig:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")
    return factory()
