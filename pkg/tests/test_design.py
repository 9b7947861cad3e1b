"""Phase-matching solver and design-search tests.

The workhorse fixture is a synthetic curve built from
beta(w) = b0 + b1*x - (c2*x^2 + c4*x^4)/2 with x = w - w0, for which the
mismatch at the center pump is exactly c2*D^2 + c4*D^4 (odd terms cancel
in 2*beta(wp) - beta(wp+D) - beta(wp-D)). With c2 < 0 < c4 that has one
isolated root pair at D0 = sqrt(-c2/c4), which gives an analytic oracle
for where the solver must land. The spline only interpolates the
quartic, so the analytic root is good to ~0.1 THz at this knot density;
the sharp checks compare against an independent dense scan of the same
curve instead.
"""

import numpy as np
import pytest
from scipy.optimize import brentq

from fourwave.design import (
    DesignTarget,
    PhaseMatchPoint,
    ToleranceCase,
    export_curve_csv,
    grid_search,
    phase_match_curve,
    phase_match_solve,
    pump_retune,
    tolerance_sweep,
)
from fourwave.dispersion import DispersionCurve, beta
from fourwave.errors import ConfigError, EmptyResult, NoRoot
from fourwave.modes.geometry import WaveguideGeometry

C = 299792458.0
TWO_PI_C = 2.0 * np.pi * C * 1e6  # rad/s * um


def om(lam_um):
    return TWO_PI_C / lam_um


C2_REF = -2.0e-26
C4_REF = 3.0e-54
LAM_LO, LAM_HI = 1.3, 2.1
W0 = 0.5 * (om(LAM_LO) + om(LAM_HI))
LAM_P0 = TWO_PI_C / W0
D0_REF = np.sqrt(-C2_REF / C4_REF)  # analytic root offset at the center pump


def quartic_curve(c2=C2_REF, c4=C4_REF, key="synthetic-quartic"):
    lam = np.linspace(LAM_LO, LAM_HI, 129)
    w = om(lam)
    x = w - W0
    b = 2.5 * W0 / C + (2.8 / C) * x - 0.5 * (c2 * x**2 + c4 * x**4)
    return DispersionCurve(key, lam, b * C / w)


def flat_curve():
    lam = np.linspace(1.3, 2.1, 33)
    return DispersionCurve("flat", lam, np.full_like(lam, 2.5))


def normal_curve():
    # positive beta2 everywhere, so the mismatch is strictly one-signed
    lam = np.arange(1.40, 1.801, 0.025)
    return DispersionCurve("normal", lam, 2.5 + 2.0 * (lam - 1.7) ** 2)


@pytest.fixture(scope="module")
def curve():
    return quartic_curve()


# --- phase_match_solve ----------------------------------------------------


def test_single_root_pair_near_analytic_location(curve):
    points = phase_match_solve(curve, LAM_P0)
    assert len(points) == 1
    p = points[0]
    ws = om(p.lam_s)
    # spline interpolation of the quartic shifts the root slightly
    assert abs(ws - (W0 - D0_REF)) < 1.0e12
    assert p.lam_s > p.lam_p > p.lam_i


def test_root_matches_independent_dense_scan(curve):
    wp = om(LAM_P0)

    def mismatch(w):
        return 2.0 * beta(curve, wp) - beta(curve, w) - beta(curve, 2.0 * wp - w)

    lo, hi = curve.omega_span
    grid = np.linspace(max(lo, 2.0 * wp - hi), wp - 2.0 * np.pi * 0.1e12, 200001)
    vals = mismatch(grid)
    crossings = np.nonzero(vals[:-1] * vals[1:] < 0.0)[0]
    assert len(crossings) == 1
    ref = brentq(mismatch, grid[crossings[0]], grid[crossings[0] + 1], xtol=1.0, rtol=1e-15)

    p = phase_match_solve(curve, LAM_P0)[0]
    assert om(p.lam_s) == pytest.approx(ref, rel=1e-10)


def test_residual_below_tolerance(curve):
    for p in phase_match_solve(curve, LAM_P0):
        assert abs(p.residual) < 0.1
        wp, ws, wi = om(p.lam_p), om(p.lam_s), om(p.lam_i)
        again = 2.0 * beta(curve, wp) - beta(curve, ws) - beta(curve, wi)
        assert again == pytest.approx(p.residual, abs=1e-6)


def test_energy_conservation_machine_precision(curve):
    for dlam in (-0.004, 0.0, 0.004):
        for p in phase_match_solve(curve, LAM_P0 + dlam):
            lhs = 1.0 / p.lam_i
            rhs = 2.0 / p.lam_p - 1.0 / p.lam_s
            assert lhs == pytest.approx(rhs, rel=1e-12)


def test_signal_is_red_of_pump_and_nondegenerate(curve):
    for p in phase_match_solve(curve, LAM_P0):
        assert p.lam_s > p.lam_p
        assert om(p.lam_p) - om(p.lam_s) > 2.0 * np.pi * 0.1e12


def test_flat_curve_has_no_isolated_root():
    with pytest.raises(NoRoot):
        phase_match_solve(flat_curve(), 1.7)


def test_normal_dispersion_has_no_root():
    crv = normal_curve()
    wp = om(1.60)
    lo, hi = crv.omega_span
    grid = np.linspace(max(lo, 2.0 * wp - hi) + 1e11, wp - 1e12, 5001)
    vals = 2.0 * beta(crv, wp) - beta(crv, grid) - beta(crv, 2.0 * wp - grid)
    assert np.max(vals) < 0.0  # the premise: strictly one-signed
    with pytest.raises(NoRoot):
        phase_match_solve(crv, 1.60)


def test_pump_outside_span_raises(curve):
    with pytest.raises(NoRoot):
        phase_match_solve(curve, 2.5)


def test_solve_is_deterministic(curve):
    a = phase_match_solve(curve, LAM_P0)
    b = phase_match_solve(curve, LAM_P0)
    assert a == b


# --- phase_match_curve ----------------------------------------------------


def test_single_sample_sweep_equals_solve(curve):
    sweep = phase_match_curve(curve, LAM_P0, LAM_P0)
    assert sweep == phase_match_solve(curve, LAM_P0)


def test_sweep_collects_each_pump(curve):
    sweep = phase_match_curve(curve, LAM_P0 - 0.005, LAM_P0 + 0.005, step=0.005)
    pumps = sorted(set(p.lam_p for p in sweep))
    assert len(pumps) == 3
    for p in sweep:
        assert abs(p.residual) < 0.1


def test_sweep_skips_rootless_pumps(curve):
    # the root pair collapses for pumps far off center; those samples
    # must be skipped without failing the sweep
    sweep = phase_match_curve(curve, LAM_P0 - 0.002, LAM_P0 + 0.080, step=0.002)
    assert all(p.lam_s > p.lam_p for p in sweep)
    assert len(set(p.lam_p for p in sweep)) < len(np.arange(0.0, 0.0821, 0.002))


def test_sweep_idler_band_filter(curve):
    p0 = phase_match_solve(curve, LAM_P0)[0]
    band = (p0.lam_i - 0.002, p0.lam_i + 0.002)
    kept = phase_match_curve(curve, LAM_P0, LAM_P0, idler_band=band)
    assert any(abs(p.lam_i - p0.lam_i) < 2e-3 for p in kept)
    with pytest.raises(NoRoot):
        phase_match_curve(curve, LAM_P0, LAM_P0, idler_band=(1.60, 1.601))


def test_sweep_rejects_reversed_range(curve):
    with pytest.raises(ConfigError):
        phase_match_curve(curve, LAM_P0 + 0.01, LAM_P0 - 0.01)


def test_export_csv(tmp_path, curve):
    points = phase_match_curve(curve, LAM_P0 - 0.005, LAM_P0 + 0.005, step=0.005)
    path = tmp_path / "pm.csv"
    export_curve_csv(points, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "lam_p_um,lam_s_um,lam_i_um,residual_rad_m"
    assert len(lines) == len(points) + 1
    first = [float(v) for v in lines[1].split(",")]
    assert first[1] == pytest.approx(points[0].lam_s, abs=1e-8)


# --- pump_retune ----------------------------------------------------------


def test_retune_recovers_known_pump(curve):
    lam_p1 = LAM_P0 + 0.004
    target = phase_match_solve(curve, lam_p1)[0].lam_s
    found = pump_retune(curve, target, lam_p1 + 0.008)
    assert abs(found - lam_p1) < 5e-4
    hit = phase_match_solve(curve, found)[0].lam_s
    assert abs(hit - target) <= 5e-4


def test_retune_fixed_point(curve):
    target = phase_match_solve(curve, LAM_P0)[0].lam_s
    assert pump_retune(curve, target, LAM_P0) == LAM_P0


def test_retune_unreachable_target(curve):
    with pytest.raises(NoRoot):
        pump_retune(curve, 2.05, LAM_P0)


def test_retune_rootless_guess(curve):
    with pytest.raises(NoRoot):
        pump_retune(curve, 1.72, LAM_P0 + 0.10)


# --- tolerance_sweep ------------------------------------------------------


def geometry_factory(c2_width_slope=2.0, c2_height_slope=1.5):
    """Curve family whose quartic coefficient tracks the core size."""

    def factory(geom):
        scale = 1.0 + c2_width_slope * (geom.core_width - 2.0) + c2_height_slope * (
            geom.core_height - 0.7
        )
        return factory.base(c2=C2_REF * scale)

    factory.base = quartic_curve
    return factory


NOMINAL = WaveguideGeometry(core_width=2.0, core_height=0.7)


def test_tolerance_sweep_reports_all_four_cases():
    factory = geometry_factory()
    nominal_curve = factory(NOMINAL)
    target = phase_match_solve(nominal_curve, LAM_P0)[0].lam_s
    cases = tolerance_sweep(NOMINAL, factory, target, LAM_P0)
    assert [(c.d_width, c.d_height) for c in cases] == [
        (0.01, 0.0),
        (-0.01, 0.0),
        (0.0, 0.01),
        (0.0, -0.01),
    ]
    for c in cases:
        assert c.geometry.core_width == pytest.approx(2.0 + c.d_width)
        assert c.geometry.core_height == pytest.approx(0.7 + c.d_height)
        assert c.drifted is not None
        assert c.retuned_pump is not None
        # the drift is real but small, and the retune cancels it
        assert 0.0 < abs(c.drifted.lam_s - target) < 0.01
        assert abs(c.retuned.lam_s - target) <= 5e-4
        assert abs(c.retuned_pump - LAM_P0) < 0.01
        assert c.note == ""


def test_tolerance_sweep_zero_delta_is_identity():
    factory = geometry_factory()
    target = phase_match_solve(factory(NOMINAL), LAM_P0)[0].lam_s
    cases = tolerance_sweep(NOMINAL, factory, target, LAM_P0, deltas=(0.0, 0.0))
    for c in cases:
        assert c.drifted.lam_s == target
        assert c.retuned_pump == LAM_P0


def test_tolerance_sweep_records_lost_root_instead_of_raising():
    # +width flips the dispersion normal: no root there, but the other
    # three corners must still be reported
    factory = geometry_factory(c2_width_slope=-300.0, c2_height_slope=0.0)
    target = phase_match_solve(factory(NOMINAL), LAM_P0)[0].lam_s
    cases = tolerance_sweep(NOMINAL, factory, target, LAM_P0)
    dead = [c for c in cases if c.drifted is None]
    assert len(dead) == 1
    assert dead[0].d_width == 0.01
    assert "no root" in dead[0].note
    alive = [c for c in cases if c.drifted is not None]
    assert len(alive) == 3


def test_tolerance_sweep_rejects_negative_deltas():
    with pytest.raises(ConfigError):
        tolerance_sweep(NOMINAL, geometry_factory(), 1.72, LAM_P0, deltas=(-0.01, 0.01))


def test_tolerance_case_as_dict_roundtrips():
    factory = geometry_factory()
    target = phase_match_solve(factory(NOMINAL), LAM_P0)[0].lam_s
    case = tolerance_sweep(NOMINAL, factory, target, LAM_P0)[0]
    d = case.as_dict()
    assert d["d_width_um"] == 0.01
    assert d["drifted"]["lam_s_um"] == case.drifted.lam_s
    assert d["retuned_pump_um"] == case.retuned_pump


# --- DesignTarget validation ---------------------------------------------


def test_target_validation():
    DesignTarget(target_signal=3.2)  # defaults are self-consistent
    with pytest.raises(ConfigError):
        DesignTarget(target_signal=3.2, idler_band=(1.6, 1.5))
    with pytest.raises(ConfigError):
        DesignTarget(target_signal=2.2, pump_range=(2.0, 2.4))
    with pytest.raises(ConfigError):
        DesignTarget(target_signal=3.2, idler_band=(1.9, 2.1), pump_range=(2.0, 2.4))
    with pytest.raises(ConfigError):
        DesignTarget(target_signal=3.2, grid_step=0.0)


def test_target_grid_axes():
    t = DesignTarget(target_signal=3.2)
    assert len(t.widths()) == 81
    assert t.widths()[0] == 1.8
    assert t.widths()[-1] == 2.6
    assert len(t.heights()) == 21
    assert np.all(np.diff(t.widths()) > 0)


# --- grid_search ----------------------------------------------------------


def search_target(target_signal):
    return DesignTarget(
        target_signal=target_signal,
        idler_band=(1.46, 1.52),
        pump_range=(LAM_P0 - 0.0002, LAM_P0 + 0.0002),
        width_range=(1.98, 2.06),
        height_range=(0.68, 0.72),
        grid_step=0.02,
        pump_step=0.0002,
    )


def test_grid_search_finds_planted_candidate():
    factory = geometry_factory()
    planted = NOMINAL.with_core(core_width=2.02, core_height=0.70)
    want = phase_match_solve(factory(planted), LAM_P0)[0].lam_s
    ranked = grid_search(search_target(want), NOMINAL, factory)
    geom, point = ranked[0]
    assert (geom.core_width, geom.core_height) == (2.02, 0.70)
    assert abs(point.lam_s - want) <= 5e-4
    assert 1.46 <= point.lam_i <= 1.52
    # scores are sorted; the runner-up (a near-cancelling diagonal
    # neighbor) is still clearly outside the winner's tolerance
    scores = [abs(p.lam_s - want) for _, p in ranked]
    assert scores == sorted(scores)
    assert scores[1] > 3e-4


def test_grid_search_is_deterministic():
    factory = geometry_factory()
    planted = NOMINAL.with_core(core_width=2.02, core_height=0.70)
    want = phase_match_solve(factory(planted), LAM_P0)[0].lam_s
    a = grid_search(search_target(want), NOMINAL, factory)
    b = grid_search(search_target(want), NOMINAL, factory)
    assert a == b


def test_grid_search_empty_when_no_root_in_pump_range():
    # far from the curve center the quartic term dominates and the root
    # pair vanishes for every candidate
    t = DesignTarget(
        target_signal=1.73,
        idler_band=(1.46, 1.52),
        pump_range=(1.70, 1.71),
        width_range=(1.98, 2.06),
        height_range=(0.68, 0.72),
        grid_step=0.02,
        pump_step=0.002,
    )
    with pytest.raises(EmptyResult):
        grid_search(t, NOMINAL, geometry_factory())


def test_grid_search_idler_band_is_hard():
    factory = geometry_factory()
    planted = NOMINAL.with_core(core_width=2.02, core_height=0.70)
    want = phase_match_solve(factory(planted), LAM_P0)[0].lam_s
    t = search_target(want)
    shifted = DesignTarget(
        target_signal=t.target_signal,
        idler_band=(1.40, 1.42),  # excludes every idler the family produces
        pump_range=t.pump_range,
        width_range=t.width_range,
        height_range=t.height_range,
        grid_step=t.grid_step,
        pump_step=t.pump_step,
    )
    with pytest.raises(EmptyResult):
        grid_search(shifted, NOMINAL, factory)


def test_point_as_dict():
    p = PhaseMatchPoint(lam_p=2.1, lam_s=3.2, lam_i=1.56, residual=0.01)
    d = p.as_dict()
    assert d == {
        "lam_p_um": 2.1,
        "lam_s_um": 3.2,
        "lam_i_um": 1.56,
        "residual_rad_m": 0.01,
    }
