"""Command line front end.

Every command reads a scenario from --config (YAML with explicit unit
suffixes) or --preset, runs the underlying library stages, and emits a
JSON report (schema field `schema: 1`) or a CSV table. Reports carry no
timestamps, dict keys are sorted, and the solvers are deterministic, so
identical inputs and cache state produce byte-identical output.

Exit codes: 0 success, 1 physics (no guided mode, no phase matching),
2 configuration, 3 numerics (non-convergence, leaky windows).
"""

from __future__ import annotations

import dataclasses
import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .config import PRESETS, RunConfig, load_config, preset
from .design import (
    DesignTarget,
    grid_search,
    phase_match_curve,
    phase_match_solve,
    tolerance_sweep,
)
from .dispersion import (
    C,
    beta,
    build_curve,
    default_lambda_grid,
    group_index,
    sweep_lambda_grid,
)
from .errors import ConfigError, FourwaveError, NoRoot, exit_code_for
from .materials import absorption, nonlinear_index
from .modes.fiber import solve_fiber_mode
from .modes.fields import effective_area, overlap_integral, power_fractions
from .modes.geometry import WaveguideGeometry
from .modes.rect import solve_rect_mode
from .quantities import parse_quantity
from .sfwm import (
    detected_rate,
    gamma,
    material_attenuation,
    peak_power_from_mean,
    pgp_converged,
    pgp_quad,
    pgr,
    raman_window,
)

TWO_PI_C_UM = 2.0 * np.pi * C * 1e6  # rad/s * um

# Published pair rates the fiber scenario is validated against:
# (mean pump power W, measured coincidence-corrected rate 1/s).
VALIDATION_RATES = (
    (960e-6, 8.70e6),
    (660e-6, 4.29e6),
    (490e-6, 2.42e6),
    (340e-6, 1.19e6),
    (200e-6, 4.20e5),
)

TELECOM_C_BAND = (1.530, 1.565)


# -- plumbing ----------------------------------------------------------------

def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except FourwaveError as err:
            click.echo(f"error: {err}", err=True)
            sys.exit(exit_code_for(err))

    return wrapper


def _source_options(fn):
    fn = click.option(
        "--preset", "preset_name", type=click.Choice(sorted(PRESETS)), default=None,
        help="Embedded scenario preset.",
    )(fn)
    fn = click.option(
        "--config", "config_path", type=click.Path(exists=True, dir_okay=False),
        default=None, help="Scenario YAML with unit-suffixed quantities.",
    )(fn)
    return fn


def _output_options(fn):
    fn = click.option("--csv", "fmt", flag_value="csv", help="Emit CSV instead of JSON.")(fn)
    fn = click.option("--json", "fmt", flag_value="json", default=True, help="Emit JSON (default).")(fn)
    fn = click.option(
        "--out", type=click.Path(file_okay=False), default=None,
        help="Directory for the report file; stdout when omitted.",
    )(fn)
    return fn


def _threads_option(fn):
    return click.option(
        "--threads", type=int, default=1,
        help="Accepted for interface stability; solvers run single-threaded "
        "so reruns stay byte-identical.",
    )(fn)


def _load_run_config(config_path, preset_name) -> RunConfig:
    if (config_path is None) == (preset_name is None):
        raise ConfigError("give exactly one of --config / --preset")
    return load_config(config_path) if config_path else preset(preset_name)


def _flag_quantity(text, flag, dimension, unit):
    try:
        return parse_quantity(text, dimension).to(unit)
    except ConfigError as err:
        raise ConfigError(f"{flag}: {err}")


def _parse_range(text, flag):
    parts = str(text).split(":")
    if len(parts) != 2:
        raise ConfigError(f"{flag}: expected LO:HI, got {text!r}")
    return (
        _flag_quantity(parts[0], flag, "length", "um"),
        _flag_quantity(parts[1], flag, "length", "um"),
    )


def _parse_band(text, flag):
    if str(text).lower() == "c":
        return TELECOM_C_BAND
    return _parse_range(text, flag)


def _json_text(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _write_text(text: str, out, filename: str):
    if out:
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / filename
        path.write_text(text)
        click.echo(str(path))
    else:
        click.echo(text, nl=False)


def _flat_csv(doc, prefix="") -> list:
    rows = []
    for key in sorted(doc):
        val = doc[key]
        name = f"{prefix}.{key}" if prefix else key
        if isinstance(val, dict):
            rows.extend(_flat_csv(val, name))
        elif isinstance(val, (list, tuple)):
            rows.append((name, ";".join(repr(v) for v in val)))
        else:
            rows.append((name, repr(val) if isinstance(val, float) else str(val)))
    return rows


def _emit_report(report: dict, fmt: str, out, stem: str):
    if fmt == "csv":
        lines = ["key,value"] + [f"{k},{v}" for k, v in _flat_csv(report)]
        _write_text("\n".join(lines) + "\n", out, f"{stem}.csv")
    else:
        _write_text(_json_text(report), out, f"{stem}.json")


# -- shared computation steps ------------------------------------------------

def _grid_for(cfg: RunConfig, candidates=()):
    if cfg.fiber is not None:
        base, fine, halfw = 0.005, 0.002, 0.02
    else:
        base, fine, halfw = 0.05, 0.01, 0.10
    if cfg.grid_step_um is not None:
        base = cfg.grid_step_um
    return default_lambda_grid(candidates, cfg.lambda_min_um, cfg.lambda_max_um, base, fine, halfw)


def _build_cfg_curve(cfg: RunConfig, candidates, cache_dir):
    return build_curve(cfg.structure, _grid_for(cfg, candidates), cache_dir=cache_dir)


def _curve_factory(lo, hi, base_step, cache_dir, candidates=()):
    """Factory handed to design/tolerance sweeps; one curve per geometry."""
    fine = min(0.01, base_step)
    halfw = 0.10 if len(tuple(candidates)) else 0.0

    def factory(geom):
        grid = default_lambda_grid(candidates, lo, hi, base_step, fine, halfw)
        return build_curve(geom, grid, cache_dir=cache_dir)

    return factory


def _sweep_curve_factory(lam_p, lam_s, cache_dir, step, signal_window, pump_window):
    """Factory for tolerance sweeps: island grids at a sweep mesh step.

    The signal drift under a height perturbation rides on a near-complete
    cancellation between the pump, signal and idler slope terms; the
    nominal 0.02 um mesh leaves enough discretization bias in each term
    to fake tens of nm of drift, while at 0.01 um the residual is a couple
    of nm.  Island grids keep that finer mesh affordable.
    """

    def factory(geom):
        grid = sweep_lambda_grid(
            lam_p, lam_s, pump_window=pump_window, signal_window=signal_window
        )
        return build_curve(geom, grid, cache_dir=cache_dir, step=step)

    return factory


def _n_eff_hint(curve, lam_um):
    w = TWO_PI_C_UM / lam_um
    return float(beta(curve, w) * C / w)


def _raster_of(sol):
    f = sol.field
    return (f.x.size, f.y.size, float(f.x[-1]), float(f.y[-1]))


def _rect_modes(geom, curve, lam_p, lam_s, lam_i):
    """Pump/signal/idler modes on one raster for the overlap integral.

    The signal (longest wavelength) decides the window size. Its first
    solve may stop on a slightly overshot window (the graded mesh covers
    at least the requested pad), in which case the pad recovered from its
    x axis is larger than what its own y axis was built with; re-solving
    the signal at the explicit pad puts all three fields on one raster.
    """
    sol_s = solve_rect_mode(geom, lam_s, n_eff_hint=_n_eff_hint(curve, lam_s))
    pad = float(sol_s.field.x[-1]) - geom.core_width / 2
    sol_p = solve_rect_mode(geom, lam_p, n_eff_hint=_n_eff_hint(curve, lam_p), pad_hint=pad)
    sol_i = solve_rect_mode(geom, lam_i, n_eff_hint=_n_eff_hint(curve, lam_i), pad_hint=pad)
    if _raster_of(sol_s) != _raster_of(sol_p):
        sol_s = solve_rect_mode(geom, lam_s, n_eff_hint=_n_eff_hint(curve, lam_s), pad_hint=pad)
    return sol_p, sol_s, sol_i


def _mode_entry(sol):
    return {
        "n_eff": float(sol.n_eff),
        "a_eff_um2": float(effective_area(sol) * 1e12),
        "te_fraction": float(sol.te_fraction),
        "polarization": sol.polarization_tag,
    }


def _structure_entry(cfg: RunConfig) -> dict:
    if cfg.geometry is not None:
        g = cfg.geometry
        return {
            "kind": "waveguide",
            "core_width_um": g.core_width,
            "core_height_um": g.core_height,
            "length_m": g.length,
            "core": g.core_material.name,
            "cladding": g.cladding_material.name,
            "box": g.box_material.name,
        }
    f = cfg.fiber
    return {
        "kind": "fiber",
        "core_radius_um": f.core_radius,
        "length_m": f.length,
        "core": f.core_material.name,
        "cladding": f.cladding_material.name,
    }


def _point_entry(point):
    return None if point is None else point.as_dict()


# -- commands ------------------------------------------------------------------

@click.group()
@click.version_option(__version__, prog_name="fourwave")
def main():
    """Design and simulate SFWM photon-pair sources."""


@main.command("solve-mode")
@_source_options
@click.option("--wavelength", "-w", required=True, help="Mode wavelength, e.g. 3.905um.")
@click.option(
    "--dump-field", type=click.Path(dir_okay=False), default=None,
    help="Also write the rasterized mode field as CSV (one row per grid cell).",
)
@_output_options
@_guarded
def cmd_solve_mode(config_path, preset_name, wavelength, dump_field, out, fmt):
    """Solve the fundamental mode at one wavelength."""
    cfg = _load_run_config(config_path, preset_name)
    lam = _flag_quantity(wavelength, "--wavelength", "length", "um")
    report = {
        "schema": 1,
        "command": "solve-mode",
        "name": cfg.name,
        "wavelength_um": lam,
        "structure": _structure_entry(cfg),
    }
    if cfg.geometry is not None:
        sol = solve_rect_mode(cfg.geometry, lam)
        core, clad, box = power_fractions(sol, cfg.geometry)
        report["power_fractions"] = {
            "core": float(core), "cladding": float(clad), "box": float(box),
        }
    else:
        sol = solve_fiber_mode(cfg.fiber, lam)
    report["mode"] = _mode_entry(sol)
    report["beta_rad_per_m"] = float(sol.beta)
    if dump_field:
        _write_field_csv(sol, dump_field)
        report["field_csv"] = str(dump_field)
    _emit_report(report, fmt, out, "solve-mode")


def _write_field_csv(sol, path):
    f = sol.field
    cols = ("ex", "ey", "ez", "hx", "hy", "hz")
    with open(path, "w") as fh:
        fh.write("x_um,y_um," + ",".join(f"{c}_re,{c}_im" for c in cols) + "\n")
        for i, xv in enumerate(f.x):
            for j, yv in enumerate(f.y):
                vals = []
                for c in cols:
                    z = getattr(f, c)[i, j]
                    vals.append(f"{z.real:.9e},{z.imag:.9e}")
                fh.write(f"{xv:.6f},{yv:.6f}," + ",".join(vals) + "\n")


@main.command("pipeline")
@_source_options
@click.option("--peak-power", default=None, help="Override pump peak power, e.g. 48.2mW.")
@click.option("--resolution", type=int, default=None, help="Override JSD grid resolution.")
@click.option("--cache", type=click.Path(file_okay=False), default=None,
              help="Dispersion cache directory.")
@_threads_option
@_output_options
@_guarded
def cmd_pipeline(config_path, preset_name, peak_power, resolution, cache, threads, out, fmt):
    """Full chain: dispersion, phase matching, overlap, JSD, pair rates."""
    cfg = _load_run_config(config_path, preset_name)
    if peak_power is not None:
        watts = _flag_quantity(peak_power, "--peak-power", "power", "W")
        cfg = dataclasses.replace(
            cfg, pump=dataclasses.replace(cfg.require_pump(), peak_power_w=watts, mean_power_w=None)
        )
    if resolution is not None:
        cfg = dataclasses.replace(cfg, resolution=resolution)
    report = run_pipeline(cfg, cache_dir=cache or cfg.cache)
    _emit_report(report, fmt, out, "pipeline")


def run_pipeline(cfg: RunConfig, cache_dir=None) -> dict:
    """Pipeline body, importable for tests and scripting."""
    pump = cfg.require_pump()
    filters = cfg.require_filters()
    lam_p = pump.wavelength_um
    structure = cfg.structure

    curve = _build_cfg_curve(
        cfg, (lam_p, filters.signal_center_um, filters.idler_center_um), cache_dir
    )

    # Phase matching: mandatory when the filters track the solved point,
    # informational otherwise (a pinned-filter scenario integrates the
    # spectrum the experiment actually collected).
    point = None
    try:
        points = phase_match_solve(curve, lam_p)
        point = min(points, key=lambda p: abs(p.lam_s - filters.signal_center_um))
    except NoRoot:
        if filters.track_phase_match:
            raise
    if filters.track_phase_match:
        lam_s, lam_i = point.lam_s, point.lam_i
    else:
        lam_s, lam_i = filters.signal_center_um, filters.idler_center_um

    w_p, w_s, w_i = (TWO_PI_C_UM / v for v in (lam_p, lam_s, lam_i))

    modes = {}
    attenuation_entry = None
    a_material = None
    if cfg.geometry is not None:
        sol_p, sol_s, sol_i = _rect_modes(cfg.geometry, curve, lam_p, lam_s, lam_i)
        f_ppsi = overlap_integral(sol_p, sol_s, sol_i)
        modes = {
            "pump": _mode_entry(sol_p),
            "signal": _mode_entry(sol_s),
            "idler": _mode_entry(sol_i),
        }
        core, clad, box = power_fractions(sol_s, cfg.geometry)
        alpha_core = float(absorption(cfg.geometry.core_material, lam_s))
        alpha_bg = float(absorption(cfg.geometry.cladding_material, lam_s))
        a_material = material_attenuation(
            (core, clad, box), alpha_core, alpha_bg, structure.length
        )
        attenuation_entry = {
            "fractions": {"core": float(core), "cladding": float(clad), "box": float(box)},
            "alpha_core_db_cm": alpha_core,
            "alpha_background_db_cm": alpha_bg,
            "a_material": float(a_material),
        }
    else:
        sol_p = solve_fiber_mode(cfg.fiber, lam_p)
        f_ppsi = 1.0 / effective_area(sol_p)
        modes = {"pump": _mode_entry(sol_p)}

    n2 = float(nonlinear_index(structure.core_material, lam_p))
    gamma_ = gamma(n2, f_ppsi, lam_p)
    pulse = pump.pulse()
    sf = filters.signal(lam_s if filters.track_phase_match else None)
    idf = filters.idler(lam_i if filters.track_phase_match else None)

    # Grid quadrature needs to resolve the pump ridge (width ~1/T0); when
    # the filters span hundreds of ridge widths, integrate adaptively
    # along the ridge instead.
    ridge_widths = max(sf.bandwidth, idf.bandwidth) * pulse.t0
    if ridge_widths > 50.0:
        value, quad_err = pgp_quad(curve, gamma_, structure.length, pulse, sf, idf)
        pgp_entry = {
            "method": "adaptive",
            "raw": float(value),
            "quad_error": float(quad_err),
        }
        raw = value
    else:
        result = pgp_converged(
            curve, gamma_, structure.length, pulse, sf, idf,
            resolution=cfg.resolution, attenuation=a_material,
        )
        pgp_entry = {
            "method": "grid",
            "resolution": int(result.resolution),
            "raw": float(result.pgp),
            "quad_error": float(result.quad_error),
        }
        raw = result.pgp

    floor = raw if a_material is None else raw * a_material
    pgp_entry["floor"] = float(floor)

    rate_raw = pgr(raw, pump.rep_rate_hz)
    rate_floor = pgr(floor, pump.rep_rate_hz)
    peak_um, dip_um = raman_window(lam_p)

    return {
        "schema": 1,
        "command": "pipeline",
        "name": cfg.name,
        "structure": _structure_entry(cfg),
        "pump": {
            "wavelength_um": lam_p,
            "duration_s": pump.duration_s,
            "shape": pump.shape,
            "rep_rate_hz": pump.rep_rate_hz,
            "peak_power_w": float(pump.resolve_peak_power()),
        },
        "dispersion": {
            "lambda_um": [float(v) for v in curve.lam],
            "n_eff": [float(v) for v in curve.n_eff],
            "spline_residual": float(curve.loo_residual),
        },
        "phase_match": _point_entry(point),
        "filters": {
            "signal_center_um": float(sf.center_lam),
            "signal_width_um": filters.signal_width_um,
            "idler_center_um": float(idf.center_lam),
            "idler_width_um": filters.idler_width_um,
            "tracked": filters.track_phase_match,
        },
        "modes": modes,
        "group_index": {
            "pump": float(group_index(curve, w_p)),
            "signal": float(group_index(curve, w_s)),
            "idler": float(group_index(curve, w_i)),
        },
        "nonlinear": {
            "n2_m2_per_w": n2,
            "f_ppsi_per_m2": float(f_ppsi),
            "gamma_per_w_m": float(gamma_),
        },
        "pgp": pgp_entry,
        "attenuation": attenuation_entry,
        "rates": {
            "pgr_hz": float(rate_raw),
            "pgr_floor_hz": float(rate_floor),
            "detected_hz": float(detected_rate(rate_floor, cfg.detection)),
        },
        "raman": {"peak_um": float(peak_um), "dip_um": float(dip_um)},
    }


@main.command("validate-alibart")
@click.option("--cache", type=click.Path(file_okay=False), default=None,
              help="Dispersion cache directory.")
@_output_options
@_guarded
def cmd_validate_alibart(cache, out, fmt):
    """Reproduce the published fiber pair rates from mean pump power."""
    report = run_alibart_validation(cache_dir=cache)
    if fmt == "csv":
        lines = ["mean_power_uW,peak_power_W,pgp,rate_per_s,reference_per_s,ratio"]
        for row in report["rows"]:
            lines.append(
                f"{row['mean_power_w'] * 1e6:.0f},{row['peak_power_w']!r},"
                f"{row['pgp']!r},{row['rate_hz']!r},{row['reference_hz']!r},"
                f"{row['ratio']!r}"
            )
        _write_text("\n".join(lines) + "\n", out, "validate-alibart.csv")
    else:
        _write_text(_json_text(report), out, "validate-alibart.json")


def run_alibart_validation(cache_dir=None) -> dict:
    cfg = preset("alibart")
    pump = cfg.require_pump()
    filters = cfg.require_filters()
    lam_p = pump.wavelength_um
    curve = _build_cfg_curve(
        cfg, (lam_p, filters.signal_center_um, filters.idler_center_um), cache_dir
    )
    sol_p = solve_fiber_mode(cfg.fiber, lam_p)
    f_ppsi = 1.0 / effective_area(sol_p)
    n2 = float(nonlinear_index(cfg.fiber.core_material, lam_p))
    gamma_ = gamma(n2, f_ppsi, lam_p)
    sf, idf = filters.signal(), filters.idler()

    # The published reference rates are pair rates surviving only the
    # signal-arm (880 nm) collection and detection; the 570 nm arm's
    # efficiencies do not attenuate them.
    arm = cfg.detection.mu_s * cfg.detection.eta_s
    rows = []
    for mean_w, reference in VALIDATION_RATES:
        peak = peak_power_from_mean(mean_w, pump.rep_rate_hz, pump.duration_s)
        pulse = pump.pulse(peak)
        value, _err = pgp_quad(curve, gamma_, cfg.fiber.length, pulse, sf, idf)
        raw = pgr(value, pump.rep_rate_hz)
        rate = raw * arm
        rows.append({
            "mean_power_w": float(mean_w),
            "peak_power_w": float(peak),
            "pgp": float(value),
            "pgr_hz": float(raw),
            "rate_hz": float(rate),
            "reference_hz": float(reference),
            "ratio": float(rate / reference),
        })
    return {
        "schema": 1,
        "command": "validate-alibart",
        "name": cfg.name,
        "structure": _structure_entry(cfg),
        "pump_mode": _mode_entry(sol_p),
        "nonlinear": {
            "n2_m2_per_w": n2,
            "f_ppsi_per_m2": float(f_ppsi),
            "gamma_per_w_m": float(gamma_),
        },
        "signal_arm_efficiency": float(arm),
        "rows": rows,
    }


@main.command("design")
@click.option("--target-signal", required=True, help="Signal wavelength to hit, e.g. 3.461um.")
@click.option("--idler-band", default="c", help="'c' (1.530:1.565um) or LO:HI.")
@click.option("--pump-range", default="2.0um:2.4um", help="Pump sweep LO:HI.")
@click.option("--width-range", default="1.8um:2.6um", help="Core width grid LO:HI.")
@click.option("--height-range", default="0.60um:0.80um", help="Core height grid LO:HI.")
@click.option("--grid-step", default="10nm", help="Core grid step.")
@click.option("--pump-step", default="5nm", help="Pump sweep step.")
@click.option("--coarse-step", default="50nm", help="Dispersion grid step for candidate curves.")
@click.option("--top", type=int, default=10, help="Keep the N best candidates.")
@click.option("--cache", type=click.Path(file_okay=False), default=None)
@_threads_option
@_output_options
@_guarded
def cmd_design(target_signal, idler_band, pump_range, width_range, height_range,
               grid_step, pump_step, coarse_step, top, cache, threads, out, fmt):
    """Grid-search core cross sections for a target signal wavelength."""
    target = DesignTarget(
        target_signal=_flag_quantity(target_signal, "--target-signal", "length", "um"),
        idler_band=_parse_band(idler_band, "--idler-band"),
        pump_range=_parse_range(pump_range, "--pump-range"),
        width_range=_parse_range(width_range, "--width-range"),
        height_range=_parse_range(height_range, "--height-range"),
        grid_step=_flag_quantity(grid_step, "--grid-step", "length", "um"),
        pump_step=_flag_quantity(pump_step, "--pump-step", "length", "um"),
    )
    template = WaveguideGeometry(
        core_width=target.width_range[0], core_height=target.height_range[0]
    )
    factory = _curve_factory(
        1.40, 4.20, _flag_quantity(coarse_step, "--coarse-step", "length", "um"), cache
    )
    ranked = grid_search(target, template, factory)[:top]

    rows = [
        {
            "rank": k + 1,
            "core_width_um": geom.core_width,
            "core_height_um": geom.core_height,
            **point.as_dict(),
            "score_um": abs(point.lam_s - target.target_signal),
        }
        for k, (geom, point) in enumerate(ranked)
    ]
    if fmt == "csv":
        lines = ["rank,core_width_um,core_height_um,lam_p_um,lam_s_um,lam_i_um,"
                 "residual_rad_m,score_um"]
        for r in rows:
            lines.append(
                f"{r['rank']},{r['core_width_um']!r},{r['core_height_um']!r},"
                f"{r['lam_p_um']!r},{r['lam_s_um']!r},{r['lam_i_um']!r},"
                f"{r['residual_rad_m']!r},{r['score_um']!r}"
            )
        _write_text("\n".join(lines) + "\n", out, "design.csv")
    else:
        report = {
            "schema": 1,
            "command": "design",
            "target_signal_um": target.target_signal,
            "idler_band_um": list(target.idler_band),
            "candidates": rows,
        }
        _write_text(_json_text(report), out, "design.json")


@main.command("tolerance")
@_source_options
@click.option("--delta", default="10nm", help="Core dimension perturbation.")
@click.option("--retune-window", default="25nm", help="Pump search window for the retune.")
@click.option("--mesh-step", default="10nm",
              help="Transverse mesh step for the sweep curves.")
@click.option("--cache", type=click.Path(file_okay=False), default=None)
@_threads_option
@_output_options
@_guarded
def cmd_tolerance(config_path, preset_name, delta, retune_window, mesh_step, cache,
                  threads, out, fmt):
    """Fabrication sensitivity of a waveguide design.

    The target signal is the solved phase-matching point of the nominal
    geometry nearest the configured signal filter, so drift is measured
    against what this model actually predicts, not a nominal table.  A
    full-span curve locates that point first; the sweep itself then runs
    on wavelength islands around it, solved at --mesh-step, which is
    finer than the nominal mesh because dimension sensitivities sit on a
    near cancellation the nominal mesh cannot resolve.
    """
    cfg = _load_run_config(config_path, preset_name)
    if cfg.geometry is None:
        raise ConfigError("tolerance sweep needs a waveguide geometry")
    pump = cfg.require_pump()
    filters = cfg.require_filters()
    lam_p = pump.wavelength_um
    delta_um = _flag_quantity(delta, "--delta", "length", "um")
    window_um = _flag_quantity(retune_window, "--retune-window", "length", "um")
    mesh_um = _flag_quantity(mesh_step, "--mesh-step", "length", "um")

    candidates = (lam_p, filters.signal_center_um, filters.idler_center_um)
    coarse = _curve_factory(
        cfg.lambda_min_um, cfg.lambda_max_um, cfg.grid_step_um or 0.05, cache, candidates
    )(cfg.geometry)
    rough = min(
        phase_match_solve(coarse, lam_p),
        key=lambda p: abs(p.lam_s - filters.signal_center_um),
    )
    factory = _sweep_curve_factory(
        lam_p, rough.lam_s, cache, step=mesh_um,
        signal_window=max(0.15, 12.0 * delta_um),
        pump_window=max(0.04, window_um + 0.015),
    )
    nominal = factory(cfg.geometry)
    points = phase_match_solve(nominal, lam_p)
    target = min(points, key=lambda p: abs(p.lam_s - rough.lam_s)).lam_s

    cases = tolerance_sweep(
        cfg.geometry, factory, target, lam_p,
        deltas=(delta_um, delta_um), retune_window=window_um,
    )
    if fmt == "csv":
        lines = ["d_width_um,d_height_um,kind,lam_p_um,lam_s_um,lam_i_um"]
        for c in cases:
            drift = c.drifted
            lines.append(
                f"{c.d_width!r},{c.d_height!r},drift,{lam_p!r},"
                f"{'' if drift is None else repr(drift.lam_s)},"
                f"{'' if drift is None else repr(drift.lam_i)}"
            )
            lines.append(
                f"{c.d_width!r},{c.d_height!r},retuned,"
                f"{'' if c.retuned_pump is None else repr(c.retuned_pump)},"
                f"{'' if c.retuned is None else repr(c.retuned.lam_s)},"
                f"{'' if c.retuned is None else repr(c.retuned.lam_i)}"
            )
        _write_text("\n".join(lines) + "\n", out, "tolerance.csv")
    else:
        report = {
            "schema": 1,
            "command": "tolerance",
            "name": cfg.name,
            "target_signal_um": float(target),
            "pump_um": lam_p,
            "delta_um": delta_um,
            "cases": [c.as_dict() for c in cases],
        }
        _write_text(_json_text(report), out, "tolerance.json")


@main.command("pm-curve")
@_source_options
@click.option("--pump-range", required=True, help="Pump sweep LO:HI, e.g. 2.10um:2.25um.")
@click.option("--step", default="5nm", help="Pump sweep step.")
@click.option("--idler-band", default=None, help="Keep only idlers in 'c' or LO:HI.")
@click.option("--cache", type=click.Path(file_okay=False), default=None)
@_output_options
@_guarded
def cmd_pm_curve(config_path, preset_name, pump_range, step, idler_band, cache, out, fmt):
    """Phase-matched signal/idler pairs over a pump range."""
    cfg = _load_run_config(config_path, preset_name)
    lo, hi = _parse_range(pump_range, "--pump-range")
    band = _parse_band(idler_band, "--idler-band") if idler_band else None
    candidates = [lo, hi]
    if cfg.filters is not None:
        candidates += [cfg.filters.signal_center_um, cfg.filters.idler_center_um]
    curve = _build_cfg_curve(cfg, tuple(candidates), cache or cfg.cache)
    points = phase_match_curve(
        curve, lo, hi, step=_flag_quantity(step, "--step", "length", "um"), idler_band=band
    )
    if fmt == "csv":
        lines = ["lam_p_um,lam_s_um,lam_i_um,residual_rad_m"]
        for p in points:
            lines.append(f"{p.lam_p!r},{p.lam_s!r},{p.lam_i!r},{p.residual:.6e}")
        _write_text("\n".join(lines) + "\n", out, "pm-curve.csv")
    else:
        report = {
            "schema": 1,
            "command": "pm-curve",
            "name": cfg.name,
            "points": [p.as_dict() for p in points],
        }
        _write_text(_json_text(report), out, "pm-curve.json")


if __name__ == "__main__":
    main()
