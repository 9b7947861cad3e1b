"""Sampled effective indices turned into smooth spectral functions.

The mode solver delivers n_eff at discrete wavelengths; everything
downstream (phase matching, group indices, JSD factors) wants beta(omega)
and its derivative. A cubic spline over omega gives both, with the
derivative taken analytically on the spline: beta enters the
phase-mismatch as a difference of large numbers, and differentiating a
fitted smooth function keeps cancellation noise out of that difference.

Curves are immutable once built and safe to share across threads. The
per-wavelength eigensolves dominate build cost, so build_curve keeps an
npz cache per geometry fingerprint and only solves wavelengths it has
not seen.
"""

from __future__ import annotations

import os

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError, NonMonotoneBeta, OutOfRange
from .modes import FiberGeometry, solve_fiber_neff, solve_rect_neff

__all__ = [
    "DispersionCurve",
    "beta",
    "build_curve",
    "default_lambda_grid",
    "export_csv",
    "group_index",
    "group_velocity",
    "sweep_lambda_grid",
]

C = 299792458.0  # m/s

_CACHE_VERSION = 1


def _omega(lam_um):
    return 2 * np.pi * C / (np.asarray(lam_um, dtype=float) * 1e-6)


class DispersionCurve:
    """Cubic-spline beta(omega) built from (lambda, n_eff) samples.

    Samples must cover the intended study band; evaluation outside the
    sampled span raises OutOfRange rather than extrapolating. The
    leave-one-out residual (in n_eff units) is recorded at construction
    so acceptance runs can assert the sampling was dense enough.
    """

    def __init__(self, geometry_key: str, lam: np.ndarray, n_eff: np.ndarray):
        lam = np.asarray(lam, dtype=float)
        n_eff = np.asarray(n_eff, dtype=float)
        if lam.ndim != 1 or lam.shape != n_eff.shape:
            raise ConfigError("lam and n_eff must be matching 1D arrays")
        if lam.size < 7:
            raise ConfigError(f"need at least 7 samples to fit a curve, got {lam.size}")
        if not np.all(np.diff(lam) > 0):
            raise ConfigError("wavelength samples must be strictly increasing")
        if np.any(n_eff <= 0):
            raise ConfigError("effective indices must be positive")

        omega = _omega(lam)[::-1]
        beta_s = n_eff[::-1] * omega / C
        if np.any(beta_s <= 0) or not np.all(np.diff(beta_s) > 0):
            raise NonMonotoneBeta(
                "beta(omega) is not strictly increasing over the sampled span"
            )

        self.geometry_key = geometry_key
        self.lam = lam
        self.n_eff = n_eff
        self._omega_s = omega
        self._beta_s = beta_s
        self._spline = CubicSpline(omega, beta_s)
        self._dspline = self._spline.derivative()
        self.loo_residual = self._leave_one_out()

    def _leave_one_out(self) -> float:
        """Max |n_eff - refit| over interior samples, each left out in turn."""
        worst = 0.0
        for i in range(1, self._omega_s.size - 1):
            om = np.delete(self._omega_s, i)
            bt = np.delete(self._beta_s, i)
            miss = CubicSpline(om, bt)(self._omega_s[i]) - self._beta_s[i]
            worst = max(worst, abs(miss) * C / self._omega_s[i])
        return worst

    @property
    def omega_span(self):
        return float(self._omega_s[0]), float(self._omega_s[-1])

    @property
    def lam_span(self):
        return float(self.lam[0]), float(self.lam[-1])

    def __repr__(self):
        lo, hi = self.lam_span
        return (
            f"DispersionCurve({self.geometry_key or 'unkeyed'}, "
            f"{self.lam.size} samples, {lo:.3f}-{hi:.3f} um, "
            f"loo={self.loo_residual:.2e})"
        )


def _check_span(curve: DispersionCurve, omega, strict: bool):
    lo, hi = curve.omega_span
    om = np.asarray(omega, dtype=float)
    bad = (om < lo) | (om > hi) if not strict else (om <= lo) | (om >= hi)
    if np.any(bad):
        kind = "strictly inside" if strict else "inside"
        raise OutOfRange(
            f"omega {np.min(om):.4e}..{np.max(om):.4e} rad/s not {kind} "
            f"the sampled span {lo:.4e}..{hi:.4e}"
        )


def beta(curve: DispersionCurve, omega):
    """Propagation constant beta(omega) in rad/m."""
    _check_span(curve, omega, strict=False)
    out = curve._spline(omega)
    return float(out) if np.isscalar(omega) else out


def group_index(curve: DispersionCurve, omega):
    """n_g = c * dbeta/domega from the analytic spline derivative."""
    _check_span(curve, omega, strict=True)
    out = C * curve._dspline(omega)
    return float(out) if np.isscalar(omega) else out


def group_velocity(curve: DispersionCurve, omega):
    """v_g = c / n_g in m/s."""
    ng = group_index(curve, omega)
    return C / ng


def default_lambda_grid(
    candidates=(),
    lo: float = 1.40,
    hi: float = 4.20,
    base_step: float = 0.05,
    fine_step: float = 0.01,
    fine_halfwidth: float = 0.10,
) -> np.ndarray:
    """Coarse sweep plus fine sampling around candidate wavelengths (um)."""
    if hi <= lo:
        raise ConfigError("need hi > lo for a wavelength grid")
    pts = [np.arange(lo, hi + base_step / 4, base_step)]
    for c in candidates:
        fine = np.arange(c - fine_halfwidth, c + fine_halfwidth + fine_step / 4, fine_step)
        pts.append(fine[(fine >= lo) & (fine <= hi)])
    return np.unique(np.round(np.concatenate(pts), 6))


def sweep_lambda_grid(
    lam_p: float,
    lam_s: float,
    pump_window: float = 0.04,
    signal_window: float = 0.15,
    step: float = 0.025,
) -> np.ndarray:
    """Wavelength islands around one known phase-matched operating point.

    Samples only where a sensitivity sweep evaluates the spline: near the
    pump, near the signal root, and near every idler that energy
    conservation can pair with those two windows.  A fraction of the cost
    of a full-span grid when each transverse solve is expensive, at the
    price of a curve that is only trustworthy near the operating point.
    The signal window must stay clear of the pump window; near-degenerate
    designs need a contiguous grid instead.
    """
    if pump_window <= 0 or signal_window <= 0 or step <= 0:
        raise ConfigError("windows and step must be positive")
    if lam_s - signal_window <= lam_p + pump_window:
        raise ConfigError(
            "signal window reaches the pump window; use a contiguous grid"
        )
    corners = [
        1.0 / (2.0 / p - 1.0 / s)
        for p in (lam_p - pump_window, lam_p + pump_window)
        for s in (lam_s - signal_window, lam_s + signal_window)
    ]
    windows = (
        (min(corners) - step, max(corners) + step),
        (lam_p - pump_window, lam_p + pump_window),
        (lam_s - signal_window, lam_s + signal_window),
    )
    pts = []
    for lo, hi in windows:
        n = int(np.ceil((hi - lo) / step)) + 1
        pts.append(np.linspace(lo, hi, n))
    return np.unique(np.round(np.concatenate(pts), 6))


def _default_solver(geom):
    if isinstance(geom, FiberGeometry):
        return lambda g, lam, hint: (solve_fiber_neff(g, lam), None)

    def rect(g, lam, hint):
        return solve_rect_neff(g, lam, n_eff_hint=hint)

    return rect


def _cache_path(cache_dir, key):
    return os.path.join(cache_dir, f"neff-{key}.npz")


def _load_cache(path):
    if not os.path.exists(path):
        return {}
    try:
        with np.load(path) as f:
            if int(f["version"]) != _CACHE_VERSION:
                return {}
            return dict(zip(np.round(f["lam"], 9), f["n_eff"]))
    except Exception:
        return {}


def _save_cache(path, table):
    lam = np.array(sorted(table))
    np.savez(path, version=_CACHE_VERSION, lam=lam, n_eff=np.array([table[l] for l in lam]))


def build_curve(
    geom, lam_grid, cache_dir: str | None = None, solver=None, step: float | None = None
) -> DispersionCurve:
    """Solve n_eff over lam_grid (um) and fit the dispersion spline.

    `solver(geom, lam, n_eff_hint) -> (n_eff, hint_state)` can be injected
    for tests or design sweeps; the default dispatches on geometry type.
    `step` overrides the finite-difference mesh step (um) of the built-in
    waveguide solver; sensitivity sweeps need a finer mesh than nominal
    runs (see tolerance paths).  Solved values are merged into the cache
    file keyed by the geometry fingerprint (and the step when overridden,
    so meshes never mix), and repeat builds reuse overlapping grids.
    """
    lam_req = np.unique(np.round(np.asarray(lam_grid, dtype=float), 9))
    if lam_req.size < 7:
        raise ConfigError(f"need at least 7 wavelengths, got {lam_req.size}")

    key = geom.cache_key()
    if step is not None:
        if solver is not None:
            raise ConfigError("step only applies to the built-in solver")
        if isinstance(geom, FiberGeometry):
            raise ConfigError("fiber solves are analytic and take no mesh step")
        key = f"{key}-h{step:g}"
    path = _cache_path(cache_dir, key) if cache_dir else None
    known = _load_cache(path) if path else {}

    if solver is not None:
        solve = solver
    elif step is not None:
        solve = lambda g, lam, hint: solve_rect_neff(g, lam, step=step, n_eff_hint=hint)
    else:
        solve = _default_solver(geom)
    hint = None
    solved_any = False
    for lam in lam_req:
        if lam in known:
            hint = float(known[lam])
            continue
        res = solve(geom, float(lam), hint)
        n_val = float(res[0]) if isinstance(res, tuple) else float(res)
        known[lam] = n_val
        hint = n_val
        solved_any = True

    if path and solved_any:
        os.makedirs(cache_dir, exist_ok=True)
        _save_cache(path, known)

    n_eff = np.array([known[lam] for lam in lam_req])
    return DispersionCurve(key, lam_req, n_eff)


def export_csv(curve: DispersionCurve, path: str):
    """Write the sampled curve as lambda/n_eff/n_group columns."""
    om = curve._omega_s[::-1]
    ng = C * curve._dspline(om)
    with open(path, "w") as f:
        f.write("lambda_um,n_eff,n_group\n")
        for lam, ne, g in zip(curve.lam, curve.n_eff, ng):
            f.write(f"{lam:.9g},{ne:.12g},{g:.12g}\n")
