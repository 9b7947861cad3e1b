"""SFWM pair-generation physics downstream of dispersion.

Conventions used throughout:

- Pump pulses are hyperbolic secant with natural width T0; the pulse
  energy is E_imp = 2*P_peak*T0. The gaussian mean-to-peak conversion
  (peak_power_from_mean) is a separate convention used only where a
  measured mean power is the input.
- The joint spectral density |zeta_2D(w_s, w_i)|^2 factorizes into
  A * G * F: an amplitude set by group indices, pulse energy and the
  nonlinear coefficient; an energy-conservation envelope from the pump
  spectrum; and a phase-matching sinc^2 over the waveguide length.
  Self-phase modulation is deliberately left out of the mismatch.
- Filters are ideal rectangles in omega.
- Propagation loss is not part of the JSD; it enters only as the
  material attenuation factor applied to a computed pair probability.
- The per-pulse pair probability is first-order perturbation theory.
  At strong pumping it can exceed 1, signalling that multi-pair terms
  matter; it is reported as computed, not clamped.

All omegas are angular frequencies in rad/s, lengths in m unless a
parameter is explicitly a wavelength in um.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dispersion import C, DispersionCurve, beta, group_index, group_velocity
from .errors import ConfigError, FilterOutsideGrid, QuadratureNotConverged

__all__ = [
    "DetectionChain",
    "FilterSpec",
    "JSDGrid",
    "PGPResult",
    "PumpPulse",
    "detected_rate",
    "filter_to_frequency",
    "gamma",
    "jsd",
    "jsd_factor_A",
    "jsd_factor_F",
    "jsd_factor_G",
    "material_attenuation",
    "peak_power_from_mean",
    "pgp",
    "pgp_converged",
    "pgp_quad",
    "pgr",
    "phase_mismatch",
    "raman_window",
]


def _omega_of_lam_um(lam_um: float) -> float:
    return 2 * np.pi * C / (lam_um * 1e-6)


@dataclass(frozen=True)
class PumpPulse:
    """Pulsed pump: wavelength (um), natural width T0 (s), peak power (W),
    repetition rate (Hz)."""

    lam_p: float
    t0: float
    peak_power: float
    rep_rate: float
    shape: str = "sech"

    def __post_init__(self):
        if self.lam_p <= 0 or self.t0 <= 0 or self.rep_rate <= 0:
            raise ConfigError("pump pulse parameters must be positive")
        if self.peak_power < 0:
            raise ConfigError("peak power must be nonnegative")
        if self.shape not in ("sech", "gaussian"):
            raise ConfigError(f"unknown pulse shape {self.shape!r}")

    @property
    def omega_p(self) -> float:
        return _omega_of_lam_um(self.lam_p)

    @property
    def energy(self) -> float:
        """Pulse energy in J (sech: integral of P_peak sech^2(t/T0))."""
        return 2.0 * self.peak_power * self.t0


@dataclass(frozen=True)
class FilterSpec:
    """Ideal rectangular passband: center and full bandwidth in rad/s."""

    center: float
    bandwidth: float

    def __post_init__(self):
        if self.center <= 0 or self.bandwidth <= 0:
            raise ConfigError("filter center and bandwidth must be positive")

    @classmethod
    def from_wavelength(cls, center_um: float, width_um: float) -> "FilterSpec":
        """Convert a (center, width) wavelength filter to omega terms."""
        w0 = _omega_of_lam_um(center_um)
        bw = 2 * np.pi * C * width_um / center_um**2 * 1e6
        return cls(center=w0, bandwidth=bw)

    @property
    def lo(self) -> float:
        return self.center - self.bandwidth / 2

    @property
    def hi(self) -> float:
        return self.center + self.bandwidth / 2

    @property
    def center_lam(self) -> float:
        """Center wavelength in um."""
        return 2 * np.pi * C / self.center * 1e6


@dataclass(frozen=True)
class DetectionChain:
    """Coupling and detector efficiencies for signal and idler arms."""

    mu_s: float
    mu_i: float
    eta_s: float
    eta_i: float

    def __post_init__(self):
        for name in ("mu_s", "mu_i", "eta_s", "eta_i"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name}={v} outside [0, 1]")

    @property
    def factor(self) -> float:
        return self.mu_s * self.mu_i * self.eta_s * self.eta_i


@dataclass(frozen=True, eq=False)
class JSDGrid:
    """|zeta_2D|^2 sampled on a uniform (omega_s, omega_i) grid, in s^2."""

    omega_s: np.ndarray
    omega_i: np.ndarray
    values: np.ndarray  # [i_s, i_i]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.values.shape != (self.omega_s.size, self.omega_i.size):
            raise ConfigError("JSD values shape does not match axes")
        if np.any(self.values < 0):
            raise ConfigError("JSD values must be nonnegative")

    def peak(self):
        """(omega_s, omega_i, value) at the grid maximum."""
        i, j = np.unravel_index(np.argmax(self.values), self.values.shape)
        return float(self.omega_s[i]), float(self.omega_i[j]), float(self.values[i, j])

    def to_csv(self, path: str):
        with open(path, "w") as f:
            f.write("omega_s_rad_per_s,omega_i_rad_per_s,jsd_s2\n")
            for i, ws in enumerate(self.omega_s):
                for j, wi in enumerate(self.omega_i):
                    f.write(f"{ws:.10g},{wi:.10g},{self.values[i, j]:.10g}\n")

    def summary(self) -> dict:
        ws, wi, v = self.peak()
        return {
            "peak_omega_s": ws,
            "peak_omega_i": wi,
            "peak_value": v,
            "resolution": list(self.values.shape),
            **self.meta,
        }


@dataclass(frozen=True)
class PGPResult:
    """Pair-generation probability per pulse and quadrature diagnostics.

    pgp_min is pgp scaled by the material attenuation when one was
    supplied: the minimum probability surviving propagation loss.
    """

    pgp: float
    peak_signal_lam: float
    peak_idler_lam: float
    resolution: int
    quad_error: float
    pgp_min: float | None = None


def gamma(n2: float, f_ppsi: float, lam_p: float) -> float:
    """Nonlinear coefficient 2*pi*n2*f_ppsi/lam_p in 1/(W m).

    n2 in m^2/W, f_ppsi in 1/m^2, lam_p in um.
    """
    if n2 < 0 or f_ppsi < 0 or lam_p <= 0:
        raise ConfigError("gamma needs nonnegative n2, f_ppsi and positive lam_p")
    return 2 * np.pi * n2 * f_ppsi / (lam_p * 1e-6)


def phase_mismatch(curve: DispersionCurve, omega_p, omega_s, omega_i):
    """Delta beta = 2 beta(w_p) - beta(w_s) - beta(w_i), rad/m."""
    return 2 * beta(curve, omega_p) - beta(curve, omega_s) - beta(curve, omega_i)


def jsd_factor_A(curve: DispersionCurve, gamma_: float, length: float, pulse: PumpPulse, omega_s, omega_i):
    """Amplitude factor of the JSD, in s^2."""
    if pulse.shape != "sech":
        raise ConfigError("JSD amplitude assumes a sech pulse (E = 2 P T0)")
    w_p = pulse.omega_p
    n_gp = group_index(curve, w_p)
    n_gs = group_index(curve, omega_s)
    n_gi = group_index(curve, omega_i)
    zeta = (
        n_gp
        * np.sqrt(n_gs * n_gi)
        / (2 * np.pi)
        * np.sqrt(omega_s * omega_i)
        / w_p
        * gamma_
        * length
        * pulse.energy
    )
    return zeta**2


def jsd_factor_G(pulse: PumpPulse, omega_s, omega_i, omega_p):
    """Pump spectral envelope (pi T0 x/2 / sinh(pi T0 x/2))^2, x = w_s+w_i-2w_p."""
    x = np.asarray(omega_s, dtype=float) + np.asarray(omega_i, dtype=float) - 2 * omega_p
    scalar = x.ndim == 0
    a = np.atleast_1d(np.abs(np.pi * pulse.t0 * x / 2))
    out = np.empty_like(a)
    small = a < 1e-6
    big = a > 350.0  # sinh overflow; the envelope is long dead there
    mid = ~(small | big)
    out[small] = 1.0 - a[small] ** 2 / 3.0
    out[big] = 0.0
    out[mid] = (a[mid] / np.sinh(a[mid])) ** 2
    return float(out[0]) if scalar else out.reshape(x.shape)


def jsd_factor_F(curve: DispersionCurve, length: float, omega_p, omega_s, omega_i):
    """Phase-matching envelope sinc^2((dbeta + x/v_gp) L/2), sinc = sin(u)/u."""
    x = np.asarray(omega_s, dtype=float) + np.asarray(omega_i, dtype=float) - 2 * omega_p
    dbeta = phase_mismatch(curve, omega_p, omega_s, omega_i)
    u = (dbeta + x / group_velocity(curve, omega_p)) * length / 2
    out = np.sinc(u / np.pi) ** 2
    if out.ndim == 0:
        return float(out)
    return out


def jsd(
    curve: DispersionCurve,
    gamma_: float,
    length: float,
    pulse: PumpPulse,
    signal_window: FilterSpec,
    idler_window: FilterSpec,
    resolution: int = 512,
) -> JSDGrid:
    """Joint spectral density A*G*F over both filter neighborhoods.

    Axes span [center - 1.5 bw, center + 1.5 bw] so the quadrature later
    sees the full passband plus margin for the envelope tails.
    """
    if resolution < 8:
        raise ConfigError("JSD grid resolution must be at least 8")
    w_s = np.linspace(
        signal_window.center - 1.5 * signal_window.bandwidth,
        signal_window.center + 1.5 * signal_window.bandwidth,
        resolution,
    )
    w_i = np.linspace(
        idler_window.center - 1.5 * idler_window.bandwidth,
        idler_window.center + 1.5 * idler_window.bandwidth,
        resolution,
    )
    ws2 = w_s[:, None]
    wi2 = w_i[None, :]
    if gamma_ == 0.0:
        values = np.zeros((resolution, resolution))
    else:
        values = (
            jsd_factor_A(curve, gamma_, length, pulse, ws2, wi2)
            * jsd_factor_G(pulse, ws2, wi2, pulse.omega_p)
            * jsd_factor_F(curve, length, pulse.omega_p, ws2, wi2)
        )
    meta = {
        "gamma_per_W_m": gamma_,
        "length_m": length,
        "lam_p_um": pulse.lam_p,
        "t0_s": pulse.t0,
        "peak_power_W": pulse.peak_power,
        "curve": curve.geometry_key,
    }
    return JSDGrid(omega_s=w_s, omega_i=w_i, values=values, meta=meta)


def _band_trapezoid(x: np.ndarray, vals: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Trapezoid integral of vals(..., x) over [lo, hi] along the last axis.

    The band edges rarely fall on grid nodes; the end segments use
    linearly interpolated values so the limits are honored exactly.
    """
    j_lo = int(np.searchsorted(x, lo, side="right"))
    j_hi = int(np.searchsorted(x, hi, side="left"))
    # fractional positions of the exact edges inside their host cells
    def interp_at(pos, j_right):
        x0, x1 = x[j_right - 1], x[j_right]
        t = (pos - x0) / (x1 - x0)
        return vals[..., j_right - 1] * (1 - t) + vals[..., j_right] * t

    inner_x = x[j_lo:j_hi]
    inner_v = vals[..., j_lo:j_hi]
    nodes = np.concatenate(([lo], inner_x, [hi]))
    stack = np.concatenate(
        [interp_at(lo, j_lo)[..., None], inner_v, interp_at(hi, j_hi)[..., None]],
        axis=-1,
    )
    return np.trapezoid(stack, nodes, axis=-1)


def _pgp_on(grid_ws, grid_wi, values, sf: FilterSpec, if_: FilterSpec) -> float:
    over_i = _band_trapezoid(grid_wi, values, if_.lo, if_.hi)
    return float(_band_trapezoid(grid_ws, over_i, sf.lo, sf.hi))


def pgp(
    grid: JSDGrid,
    signal_filter: FilterSpec,
    idler_filter: FilterSpec,
    attenuation: float | None = None,
) -> PGPResult:
    """Integrate the JSD over both filter passbands.

    The error estimate is Richardson-style: the same integral on the
    half-resolution subgrid, with the difference scaled for a
    second-order rule. Values are reported as computed; see the module
    notes on probabilities above 1.
    """
    ws, wi, v = grid.omega_s, grid.omega_i, grid.values
    if signal_filter.lo < ws[0] or signal_filter.hi > ws[-1]:
        raise FilterOutsideGrid("signal filter passband extends beyond the JSD grid")
    if idler_filter.lo < wi[0] or idler_filter.hi > wi[-1]:
        raise FilterOutsideGrid("idler filter passband extends beyond the JSD grid")

    fine = _pgp_on(ws, wi, v, signal_filter, idler_filter)
    coarse = _pgp_on(ws[::2], wi[::2], v[::2, ::2], signal_filter, idler_filter)
    err = abs(fine - coarse) / 3.0

    in_s = (ws >= signal_filter.lo) & (ws <= signal_filter.hi)
    in_i = (wi >= idler_filter.lo) & (wi <= idler_filter.hi)
    sub = v[np.ix_(in_s, in_i)]
    if sub.size and np.any(sub > 0):
        i, j = np.unravel_index(np.argmax(sub), sub.shape)
        pk_s = float(ws[in_s][i])
        pk_i = float(wi[in_i][j])
    else:
        pk_s, pk_i = signal_filter.center, idler_filter.center

    return PGPResult(
        pgp=fine,
        peak_signal_lam=2 * np.pi * C / pk_s * 1e6,
        peak_idler_lam=2 * np.pi * C / pk_i * 1e6,
        resolution=int(ws.size),
        quad_error=err,
        pgp_min=None if attenuation is None else fine * attenuation,
    )


def pgp_converged(
    curve: DispersionCurve,
    gamma_: float,
    length: float,
    pulse: PumpPulse,
    signal_filter: FilterSpec,
    idler_filter: FilterSpec,
    resolution: int = 512,
    attenuation: float | None = None,
    max_resolution: int = 4096,
    rel_tol: float = 0.01,
) -> PGPResult:
    """jsd + pgp, doubling the grid until the quadrature error passes rel_tol."""
    res = resolution
    while True:
        grid = jsd(curve, gamma_, length, pulse, signal_filter, idler_filter, res)
        result = pgp(grid, signal_filter, idler_filter, attenuation)
        if result.pgp == 0.0 or result.quad_error <= rel_tol * result.pgp:
            return result
        if res * 2 > max_resolution:
            raise QuadratureNotConverged(
                f"PGP quadrature error {result.quad_error:.3e} still above "
                f"{rel_tol:.0%} of {result.pgp:.3e} at resolution {res}"
            )
        res *= 2


def pgp_quad(
    curve: DispersionCurve,
    gamma_: float,
    length: float,
    pulse: PumpPulse,
    signal_filter: FilterSpec,
    idler_filter: FilterSpec,
    rel_tol: float = 1e-5,
) -> tuple:
    """Pair probability by adaptive quadrature over the filter bands.

    The gridded pgp() has to resolve the pump's energy-conservation
    ridge, which is hopeless when the filters are hundreds of pump
    bandwidths wide (tens-of-nm filters against a ps pulse). All of the
    weight lives within ~1/T0 of omega_s + omega_i = 2*omega_p, so the
    inner idler integral is clipped to that ridge and both levels are
    left to adaptive quadrature. Returns (pgp, abs_error_estimate).
    """
    from scipy.integrate import dblquad

    if gamma_ == 0.0 or pulse.peak_power == 0.0:
        return 0.0, 0.0
    wp = pulse.omega_p
    # G(x) = (pi T0 x/2 / sinh)^2 is below 1e-50 of its peak out here
    half = 60.0 / pulse.t0

    def psi(wi, ws):  # dblquad evaluates the inner variable first
        a = jsd_factor_A(curve, gamma_, length, pulse, ws, wi)
        g = jsd_factor_G(pulse, ws, wi, wp)
        f = jsd_factor_F(curve, length, wp, ws, wi)
        return a * g * f

    def ridge_lo(ws):
        return min(max(idler_filter.lo, 2.0 * wp - ws - half), idler_filter.hi)

    def ridge_hi(ws):
        return max(min(idler_filter.hi, 2.0 * wp - ws + half), idler_filter.lo)

    value, abserr = dblquad(
        psi,
        signal_filter.lo,
        signal_filter.hi,
        ridge_lo,
        ridge_hi,
        epsabs=1e-300,
        epsrel=rel_tol,
    )
    return float(value), float(abserr)


def pgr(pgp_value: float, rep_rate: float) -> float:
    """Pair generation rate: probability per pulse times pulses per second."""
    if rep_rate <= 0:
        raise ConfigError("repetition rate must be positive")
    return pgp_value * rep_rate


def detected_rate(pgr_value: float, chain: DetectionChain) -> float:
    """Rate surviving the coupling and detection chain."""
    return pgr_value * chain.factor


def peak_power_from_mean(p_mean: float, rep_rate: float, tau: float) -> float:
    """Gaussian-pulse peak power from mean power: (2/(R tau)) sqrt(ln2/pi) P_mean."""
    if p_mean < 0 or rep_rate <= 0 or tau <= 0:
        raise ConfigError("need nonnegative mean power and positive R, tau")
    return 2.0 / (rep_rate * tau) * np.sqrt(np.log(2.0) / np.pi) * p_mean


def material_attenuation(fractions, alpha_si: float, alpha_silica: float, length: float) -> float:
    """Signal attenuation from propagation loss, weighted by where the power is.

    fractions = (core, cladding, box) from power_fractions; alphas in
    dB/cm; length in m. Cladding and box are both oxide.
    """
    p_core, p_clad, p_box = fractions
    if abs(p_core + p_clad + p_box - 1.0) > 1e-3:
        raise ConfigError("power fractions must sum to 1")
    l_cm = length * 100.0
    t_core = 10.0 ** (-alpha_si * l_cm / 10.0)
    t_oxide = 10.0 ** (-alpha_silica * l_cm / 10.0)
    return p_core * t_core + (p_clad + p_box) * t_oxide


def raman_window(lam_p: float):
    """(peak, dip) wavelengths in um of the silicon Raman gain feature,
    offset 15.6 / 16.2 THz below the pump frequency."""
    if lam_p <= 0:
        raise ConfigError("pump wavelength must be positive")
    nu_p = C / (lam_p * 1e-6)
    lam_peak = C / (nu_p - 15.6e12) * 1e6
    lam_dip = C / (nu_p - 16.2e12) * 1e6
    return lam_peak, lam_dip


def filter_to_frequency(center_nm: float, width_nm: float):
    """(center, bandwidth) in THz of a wavelength filter given in nm."""
    if center_nm <= 0 or width_nm < 0:
        raise ConfigError("filter center must be positive, width nonnegative")
    lam = center_nm * 1e-9
    nu = C / lam / 1e12
    dnu = C * width_nm * 1e-9 / lam**2 / 1e12
    return nu, dnu
