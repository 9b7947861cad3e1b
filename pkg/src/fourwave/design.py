"""Phase-matching solvers and design-space search.

Everything here works on a DispersionCurve, so the expensive part
(eigensolves) is paid once per geometry when the curve is built.  The
solvers themselves are cheap spline evaluations plus 1D root finding.

Conventions:
  - wavelengths in um, angular frequencies in rad/s, mismatch in rad/m
  - the idler is always constructed from energy conservation,
    omega_i = 2*omega_p - omega_s, never solved for independently
  - "signal" is the red side (lam_s > lam_p); the blue partner is the idler
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .dispersion import C, DispersionCurve, beta
from .errors import ConfigError, EmptyResult, NoRoot
from .modes.geometry import WaveguideGeometry

__all__ = [
    "PhaseMatchPoint",
    "DesignTarget",
    "ToleranceCase",
    "phase_match_solve",
    "phase_match_curve",
    "pump_retune",
    "tolerance_sweep",
    "grid_search",
    "export_curve_csv",
]

TWO_PI_C = 2.0 * np.pi * C * 1e6  # rad/s * um

# Scan resolution for bracketing sign changes of the mismatch.  0.2 THz
# steps resolve every phase-matching branch these waveguides produce
# while keeping a full curve sweep under a millisecond.
SCAN_STEP = 2.0 * np.pi * 0.2e12  # rad/s

# Roots closer to the pump than this are the trivial degenerate solution
# (signal == idler == pump) and are discarded.
DEGENERATE_EXCLUSION = 2.0 * np.pi * 0.1e12  # rad/s

MISMATCH_TOL = 0.1  # rad/m


def _omega(lam_um: float) -> float:
    return TWO_PI_C / lam_um


def _lam(omega: float) -> float:
    return TWO_PI_C / omega


@dataclass(frozen=True)
class PhaseMatchPoint:
    """One phase-matched (pump, signal, idler) triple.

    residual is the mismatch left by the root finder, guaranteed below
    MISMATCH_TOL.  lam_i always satisfies 1/lam_i = 2/lam_p - 1/lam_s
    because it is derived from the frequencies, not stored separately.
    """

    lam_p: float
    lam_s: float
    lam_i: float
    residual: float

    @classmethod
    def from_frequencies(cls, omega_p: float, omega_s: float, residual: float) -> "PhaseMatchPoint":
        omega_i = 2.0 * omega_p - omega_s
        return cls(
            lam_p=_lam(omega_p),
            lam_s=_lam(omega_s),
            lam_i=_lam(omega_i),
            residual=float(residual),
        )

    def as_dict(self) -> dict:
        return {
            "lam_p_um": self.lam_p,
            "lam_s_um": self.lam_s,
            "lam_i_um": self.lam_i,
            "residual_rad_m": self.residual,
        }


def _mismatch_profile(curve: DispersionCurve, omega_p: float):
    """Sampled mismatch over the admissible signal band.

    The scan covers omega_s < omega_p (red signals only); the upper half
    of the spectrum is reached through the idler partner.  Both signal
    and idler must stay inside the curve span.
    """
    lo, hi = curve.omega_span
    if not (lo < omega_p < hi):
        raise NoRoot(f"pump {_lam(omega_p):.4f} um outside curve span")
    # omega_i = 2wp - ws must stay below hi, so ws >= 2wp - hi
    ws_lo = max(lo, 2.0 * omega_p - hi)
    ws_hi = omega_p
    n = int(np.floor((ws_hi - ws_lo) / SCAN_STEP))
    if n < 2:
        raise NoRoot("curve span too narrow around the pump")
    ws = ws_hi - SCAN_STEP * np.arange(1, n + 1)[::-1]  # ascending, endpoint at wp - step
    wi = 2.0 * omega_p - ws
    d = 2.0 * beta(curve, omega_p) - beta(curve, ws) - beta(curve, wi)
    return ws, d


def phase_match_solve(curve: DispersionCurve, lam_p: float) -> list:
    """All nondegenerate phase-matched points for one pump wavelength.

    Scans the mismatch at SCAN_STEP resolution, brackets sign changes,
    and polishes each with brentq.  Roots within DEGENERATE_EXCLUSION of
    the pump are dropped.  Raises NoRoot when the mismatch never crosses
    zero (e.g. a flat curve, where it is identically zero but has no
    isolated root, or bulk normal dispersion, where it is one-signed).
    """
    omega_p = _omega(lam_p)
    ws, d = _mismatch_profile(curve, omega_p)

    def f(w):
        return 2.0 * beta(curve, omega_p) - beta(curve, w) - beta(curve, 2.0 * omega_p - w)

    # A flat curve is phase matched to rounding everywhere: the sampled
    # mismatch is pure float noise (~1e2..1e3 eps relative to beta) with
    # meaningless sign changes. A genuine isolated root swings by the
    # signal/idler walkoff per scan step, many orders larger, so demand
    # one bracket endpoint clear the noise floor.
    noise_floor = 1e4 * np.finfo(float).eps * beta(curve, omega_p)

    roots = []
    sign_change = np.nonzero(d[:-1] * d[1:] < 0.0)[0]
    for k in sign_change:
        if max(abs(d[k]), abs(d[k + 1])) <= noise_floor:
            continue
        roots.append(brentq(f, ws[k], ws[k + 1], xtol=1e3, rtol=1e-14))
    # exact zeros on grid nodes (measure zero in practice, cheap to honor)
    for k in np.nonzero(d == 0.0)[0]:
        w = float(ws[k])
        # a flat stretch is not an isolated root; require a sign change next door
        left = f(w - 0.5 * SCAN_STEP)
        right = f(w + 0.5 * SCAN_STEP) if w + 0.5 * SCAN_STEP < omega_p else left
        if left * right < 0.0 and max(abs(left), abs(right)) > noise_floor:
            roots.append(w)

    points = []
    for w in sorted(set(roots)):
        if omega_p - w <= DEGENERATE_EXCLUSION:
            continue
        res = f(w)
        if abs(res) > MISMATCH_TOL:
            continue
        points.append(PhaseMatchPoint.from_frequencies(omega_p, w, res))
    if not points:
        raise NoRoot(f"no phase-matched signal for pump {lam_p:.4f} um")
    # ascending signal wavelength = descending signal frequency
    points.sort(key=lambda p: p.lam_s)
    return points


def phase_match_curve(
    curve: DispersionCurve,
    lam_p_lo: float,
    lam_p_hi: float,
    step: float = 0.005,
    idler_band: tuple | None = None,
) -> list:
    """Phase-matched points swept over a pump range.

    Pumps with no root are skipped rather than failing the whole sweep.
    With idler_band=(lo, hi) in um, only points whose idler lands inside
    the band are kept.  Raises NoRoot if the entire sweep comes up empty.
    """
    if lam_p_hi < lam_p_lo:
        raise ConfigError("pump range is reversed")
    n = int(round((lam_p_hi - lam_p_lo) / step)) + 1 if lam_p_hi > lam_p_lo else 1
    pumps = lam_p_lo + step * np.arange(n)
    points = []
    for lam_p in pumps:
        try:
            found = phase_match_solve(curve, float(lam_p))
        except NoRoot:
            continue
        for p in found:
            if idler_band is not None and not (idler_band[0] <= p.lam_i <= idler_band[1]):
                continue
            points.append(p)
    if not points:
        raise NoRoot("no phase-matched point anywhere in the pump range")
    return points


def export_curve_csv(points: list, path) -> None:
    with open(path, "w") as fh:
        fh.write("lam_p_um,lam_s_um,lam_i_um,residual_rad_m\n")
        for p in points:
            fh.write(f"{p.lam_p:.9f},{p.lam_s:.9f},{p.lam_i:.9f},{p.residual:.6e}\n")


def _nearest_signal(curve: DispersionCurve, lam_p: float, target_s: float) -> PhaseMatchPoint:
    points = phase_match_solve(curve, lam_p)
    return min(points, key=lambda p: abs(p.lam_s - target_s))


def pump_retune(
    curve: DispersionCurve,
    target_signal: float,
    lam_p_guess: float,
    window: float = 0.025,
    tol: float = 5e-4,
) -> float:
    """Pump wavelength whose phase-matched signal hits target_signal.

    Searches within +/-window um of the guess and demands the residual
    signal offset be below tol um (0.5 nm).  The signal branch nearest
    the target is tracked, so the retune stays on the intended root when
    a geometry supports several.  Raises NoRoot when no pump in the
    window reaches the target.
    """

    def offset(lam_p: float) -> float:
        return _nearest_signal(curve, lam_p, target_signal).lam_s - target_signal

    try:
        g0 = offset(lam_p_guess)
    except NoRoot:
        raise NoRoot(f"no phase matching at the guess pump {lam_p_guess:.4f} um")
    if abs(g0) <= tol:
        return lam_p_guess

    # walk outward until the offset changes sign, then polish
    bracket = None
    probes = np.linspace(0.0, window, 11)[1:]
    g_lo_prev, g_hi_prev = g0, g0
    p_lo_prev = p_hi_prev = lam_p_guess
    for dp in probes:
        for sgn, g_prev, p_prev in ((+1, g_hi_prev, p_hi_prev), (-1, g_lo_prev, p_lo_prev)):
            lam_p = lam_p_guess + sgn * dp
            try:
                g = offset(lam_p)
            except NoRoot:
                continue
            if g_prev * g <= 0.0:
                bracket = (min(p_prev, lam_p), max(p_prev, lam_p))
                break
            if sgn > 0:
                g_hi_prev, p_hi_prev = g, lam_p
            else:
                g_lo_prev, p_lo_prev = g, lam_p
        if bracket:
            break
    if bracket is None:
        raise NoRoot(
            f"signal {target_signal:.4f} um unreachable within "
            f"{window * 1e3:.0f} nm of pump {lam_p_guess:.4f} um"
        )
    lam_p = brentq(offset, bracket[0], bracket[1], xtol=1e-7, rtol=1e-12)
    if abs(offset(lam_p)) > tol:
        raise NoRoot("retuned pump misses the target signal beyond tolerance")
    return float(lam_p)


@dataclass(frozen=True)
class ToleranceCase:
    """Outcome of one geometry perturbation in a tolerance sweep."""

    d_width: float
    d_height: float
    geometry: WaveguideGeometry
    drifted: PhaseMatchPoint | None = None
    retuned_pump: float | None = None
    retuned: PhaseMatchPoint | None = None
    note: str = ""

    def as_dict(self) -> dict:
        out = {
            "d_width_um": self.d_width,
            "d_height_um": self.d_height,
            "core_width_um": self.geometry.core_width,
            "core_height_um": self.geometry.core_height,
        }
        out["drifted"] = self.drifted.as_dict() if self.drifted else None
        out["retuned_pump_um"] = self.retuned_pump
        out["retuned"] = self.retuned.as_dict() if self.retuned else None
        if self.note:
            out["note"] = self.note
        return out


def tolerance_sweep(
    geometry: WaveguideGeometry,
    curve_factory,
    target_signal: float,
    lam_p: float,
    deltas: tuple = (0.01, 0.01),
    retune_window: float = 0.025,
) -> list:
    """Fabrication sensitivity around a nominal design.

    Perturbs core width and height by +/-deltas (um), one axis at a
    time, and for each perturbed geometry reports the signal/idler drift
    at the nominal pump plus the pump retune that restores the target
    signal.  curve_factory(geometry) must return a DispersionCurve; the
    caller decides how coarse to make it.  Failures on individual cases
    (lost phase matching, retune out of range) are recorded in the case
    note, not raised, so one bad corner does not kill the sweep.
    """
    da, db = deltas
    if da < 0 or db < 0:
        raise ConfigError("perturbation deltas must be nonnegative")
    perturbations = [(+da, 0.0), (-da, 0.0), (0.0, +db), (0.0, -db)]
    cases = []
    for dw, dh in perturbations:
        geom = geometry.with_core(
            core_width=geometry.core_width + dw,
            core_height=geometry.core_height + dh,
        )
        curve = curve_factory(geom)
        drifted = retuned_pump = retuned = None
        note = ""
        try:
            drifted = _nearest_signal(curve, lam_p, target_signal)
        except NoRoot as err:
            note = f"no root at nominal pump: {err}"
        if drifted is not None:
            try:
                retuned_pump = pump_retune(curve, target_signal, lam_p, window=retune_window)
                retuned = _nearest_signal(curve, retuned_pump, target_signal)
            except NoRoot as err:
                note = f"retune failed: {err}"
        cases.append(
            ToleranceCase(
                d_width=dw,
                d_height=dh,
                geometry=geom,
                drifted=drifted,
                retuned_pump=retuned_pump,
                retuned=retuned,
                note=note,
            )
        )
    return cases


@dataclass(frozen=True)
class DesignTarget:
    """What the grid search is asked to hit.

    target_signal is the wavelength to place the red photon at; the
    idler partner must land inside idler_band (hard constraint, not a
    score term).  Pumps are swept over pump_range.  All um.
    """

    target_signal: float
    idler_band: tuple = (1.530, 1.565)
    pump_range: tuple = (2.0, 2.4)
    width_range: tuple = (1.8, 2.6)
    height_range: tuple = (0.60, 0.80)
    grid_step: float = 0.010
    pump_step: float = 0.005

    def __post_init__(self):
        if self.idler_band[0] >= self.idler_band[1]:
            raise ConfigError("idler band is empty or reversed")
        if self.pump_range[0] >= self.pump_range[1]:
            raise ConfigError("pump range is empty or reversed")
        if self.pump_range[0] <= self.target_signal <= self.pump_range[1]:
            raise ConfigError("target signal sits inside the pump range")
        if self.idler_band[1] >= self.pump_range[0] and self.idler_band[0] <= self.pump_range[1]:
            raise ConfigError("idler band overlaps the pump range")
        if self.grid_step <= 0 or self.pump_step <= 0:
            raise ConfigError("grid and pump steps must be positive")

    def widths(self) -> np.ndarray:
        return _axis(self.width_range, self.grid_step)

    def heights(self) -> np.ndarray:
        return _axis(self.height_range, self.grid_step)


def _axis(rng: tuple, step: float) -> np.ndarray:
    lo, hi = rng
    n = int(round((hi - lo) / step)) + 1
    # round away accumulated float drift so grid values print cleanly
    return np.round(lo + step * np.arange(n), 6)


def _best_for_candidate(curve: DispersionCurve, target: DesignTarget) -> PhaseMatchPoint | None:
    """Best phase-matched point of one geometry, or None if infeasible."""
    try:
        points = phase_match_curve(
            curve,
            target.pump_range[0],
            target.pump_range[1],
            step=target.pump_step,
            idler_band=target.idler_band,
        )
    except NoRoot:
        return None
    best = min(points, key=lambda p: abs(p.lam_s - target.target_signal))
    # polish: retune the pump toward the exact target when possible,
    # but only accept a pump that stays inside the declared range
    try:
        lam_p = pump_retune(curve, target.target_signal, best.lam_p)
        refined = _nearest_signal(curve, lam_p, target.target_signal)
        if (
            target.pump_range[0] <= lam_p <= target.pump_range[1]
            and target.idler_band[0] <= refined.lam_i <= target.idler_band[1]
        ):
            return refined
    except NoRoot:
        pass
    return best


def grid_search(
    target: DesignTarget,
    geometry_template: WaveguideGeometry,
    curve_factory,
) -> list:
    """Rank core cross sections by how close they phase-match the target.

    Walks the (width, height) grid in ascending order, builds one curve
    per candidate through curve_factory, and keeps candidates with at
    least one root whose idler satisfies the band constraint.  Results
    are sorted by |lam_s - target|, ties broken by (width, height), so
    repeated runs are byte-identical.  Raises EmptyResult when nothing
    on the grid is feasible.
    """
    ranked = []
    for a in target.widths():
        for b in target.heights():
            geom = geometry_template.with_core(core_width=float(a), core_height=float(b))
            curve = curve_factory(geom)
            best = _best_for_candidate(curve, target)
            if best is None:
                continue
            score = abs(best.lam_s - target.target_signal)
            ranked.append((score, float(a), float(b), geom, best))
    if not ranked:
        raise EmptyResult("no grid candidate phase-matches the target with the idler in band")
    ranked.sort(key=lambda r: (r[0], r[1], r[2]))
    return [(geom, point) for _, _, _, geom, point in ranked]
