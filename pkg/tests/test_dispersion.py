"""Dispersion curve behavior against closed-form oracles.

The bulk-silica case is the main check: forcing n_eff to Sellmeier
values gives a closed-form group index n - lambda*dn/dlambda to compare
against, independent of any mode solving.
"""

import numpy as np
import pytest

from fourwave import dispersion
from fourwave.dispersion import (
    C,
    DispersionCurve,
    beta,
    build_curve,
    default_lambda_grid,
    export_csv,
    group_index,
    group_velocity,
    sweep_lambda_grid,
)
from fourwave.errors import ConfigError, NonMonotoneBeta, OutOfRange
from fourwave.materials import SILICA_VIS_NIR
from fourwave.modes import FiberGeometry, WaveguideGeometry


def om(lam_um):
    return 2 * np.pi * C / (lam_um * 1e-6)


@pytest.fixture(scope="module")
def const_curve():
    lam = np.linspace(1.2, 2.4, 9)
    return DispersionCurve("const", lam, np.full(9, 2.5))


@pytest.fixture(scope="module")
def silica_curve():
    lam = np.arange(1.25, 1.96, 0.05)
    return DispersionCurve("silica-bulk", lam, SILICA_VIS_NIR.n(lam))


def test_constant_index_beta_linear(const_curve):
    for lam in (1.3, 1.77, 2.2):
        assert beta(const_curve, om(lam)) == pytest.approx(2.5 * om(lam) / C, rel=1e-12)


def test_constant_index_group_index(const_curve):
    assert group_index(const_curve, om(1.8)) == pytest.approx(2.5, rel=1e-9)


def test_group_velocity_definition(const_curve):
    w = om(1.6)
    assert group_velocity(const_curve, w) * group_index(const_curve, w) == pytest.approx(
        C, rel=1e-15
    )


def test_beta_exact_at_samples(silica_curve):
    for lam, ne in zip(silica_curve.lam, silica_curve.n_eff):
        assert beta(silica_curve, om(lam)) == pytest.approx(ne * om(lam) / C, rel=1e-12)


def test_beta_midpoint_bounded(silica_curve):
    w0, w1 = om(silica_curve.lam[4]), om(silica_curve.lam[3])
    mid = beta(silica_curve, 0.5 * (w0 + w1))
    b0, b1 = beta(silica_curve, w0), beta(silica_curve, w1)
    assert min(b0, b1) < mid < max(b0, b1)


def test_group_index_matches_sellmeier_derivative(silica_curve):
    # n_g = n - lambda dn/dlambda, with dn/dlambda in closed form.
    for lam in silica_curve.lam[2:-2]:
        ng_ref = float(SILICA_VIS_NIR.n(lam) - lam * SILICA_VIS_NIR.dn_dlam(lam))
        assert group_index(silica_curve, om(lam)) == pytest.approx(ng_ref, rel=1e-5)


def test_group_index_matches_sample_differences(silica_curve):
    lam = silica_curve.lam
    w = om(lam)
    b = lam * 0 + silica_curve.n_eff * w / C
    for i in range(2, lam.size - 2):
        fd = (b[i - 1] - b[i + 1]) / (w[i - 1] - w[i + 1])
        assert group_index(silica_curve, w[i]) == pytest.approx(C * fd, rel=1e-3)


def test_leave_one_out_residual_small(silica_curve):
    assert silica_curve.loo_residual < 1e-5


def test_out_of_range_rejected(silica_curve):
    lo, hi = silica_curve.lam_span
    with pytest.raises(OutOfRange):
        beta(silica_curve, om(lo * 0.9))
    with pytest.raises(OutOfRange):
        beta(silica_curve, om(hi * 1.1))


def test_group_index_needs_interior_point(silica_curve):
    lo, _ = silica_curve.omega_span
    with pytest.raises(OutOfRange):
        group_index(silica_curve, lo)


def test_non_monotone_beta_rejected():
    lam = np.linspace(1.0, 2.0, 8)
    jag = np.where(np.arange(8) % 2 == 0, 3.0, 2.0)
    with pytest.raises(NonMonotoneBeta):
        DispersionCurve("jagged", lam, jag)


def test_too_few_samples_rejected():
    with pytest.raises(ConfigError):
        DispersionCurve("short", np.linspace(1, 2, 5), np.full(5, 2.0))


def test_default_lambda_grid_refines_candidates():
    grid = default_lambda_grid(candidates=(2.21,), lo=1.4, hi=4.2)
    assert grid[0] == pytest.approx(1.4) and grid[-1] == pytest.approx(4.2)
    assert np.all(np.diff(grid) > 0)
    near = grid[(grid > 2.12) & (grid < 2.30)]
    assert np.max(np.diff(near)) < 0.0101
    far = grid[(grid > 3.0) & (grid < 3.5)]
    assert np.min(np.diff(far)) > 0.04


class _CountingSolver:
    def __init__(self):
        self.calls = 0

    def __call__(self, geom, lam, hint):
        self.calls += 1
        return float(SILICA_VIS_NIR.n(lam)) + 1.0


def test_build_curve_uses_cache(tmp_path):
    geom = WaveguideGeometry(core_width=2.35, core_height=0.65)
    grid = np.linspace(1.3, 2.0, 8)
    s1 = _CountingSolver()
    c1 = build_curve(geom, grid, cache_dir=str(tmp_path), solver=s1)
    assert s1.calls == 8

    s2 = _CountingSolver()
    c2 = build_curve(geom, grid, cache_dir=str(tmp_path), solver=s2)
    assert s2.calls == 0
    np.testing.assert_array_equal(c1.n_eff, c2.n_eff)

    s3 = _CountingSolver()
    wider = np.linspace(1.3, 2.0, 15)  # shares the 8 old points
    c3 = build_curve(geom, wider, cache_dir=str(tmp_path), solver=s3)
    assert s3.calls == 7
    assert c3.lam.size == 15


def test_build_curve_key_separates_geometries(tmp_path):
    grid = np.linspace(1.3, 2.0, 8)
    s = _CountingSolver()
    build_curve(WaveguideGeometry(2.35, 0.65), grid, cache_dir=str(tmp_path), solver=s)
    build_curve(WaveguideGeometry(2.05, 0.75), grid, cache_dir=str(tmp_path), solver=s)
    assert s.calls == 16


def test_build_curve_step_override(tmp_path, monkeypatch):
    steps = []

    def fake(geom, lam, step=0.02, n_eff_hint=None, pad_hint=None):
        steps.append(step)
        return 2.0 + 0.1 * lam, 1.5

    monkeypatch.setattr(dispersion, "solve_rect_neff", fake)
    geom = WaveguideGeometry(2.05, 0.75)
    grid = np.linspace(1.3, 2.0, 8)
    build_curve(geom, grid, cache_dir=str(tmp_path), step=0.01)
    assert steps == [0.01] * 8

    # a finer-mesh curve must not share cache entries with the default mesh
    build_curve(geom, grid, cache_dir=str(tmp_path))
    assert steps[8:] == [0.02] * 8
    assert len(list(tmp_path.iterdir())) == 2


def test_build_curve_step_guards():
    grid = np.linspace(1.3, 2.0, 8)
    with pytest.raises(ConfigError):
        build_curve(WaveguideGeometry(2.05, 0.75), grid, solver=_CountingSolver(), step=0.01)
    with pytest.raises(ConfigError):
        build_curve(FiberGeometry(core_radius=0.965), grid, step=0.01)


def test_sweep_lambda_grid_islands():
    grid = sweep_lambda_grid(2.1, 3.27)
    assert np.all(np.diff(grid) > 0)
    assert grid[(grid >= 2.06) & (grid <= 2.14)].size >= 4
    assert grid[(grid >= 3.12) & (grid <= 3.42)].size >= 10
    # every idler the pump/signal windows can produce has a sample within a step
    for p in (2.06, 2.14):
        for s in (3.12, 3.42):
            li = 1.0 / (2.0 / p - 1.0 / s)
            assert grid[0] < li < grid[-1]
            assert np.min(np.abs(grid - li)) <= 0.025 + 1e-9
    # dead zone between the idler and pump islands stays unsampled
    assert grid[(grid > 1.8) & (grid < 2.05)].size == 0


def test_sweep_lambda_grid_rejects_bad_windows():
    with pytest.raises(ConfigError):
        sweep_lambda_grid(2.1, 2.2)  # signal window overlaps the pump window
    with pytest.raises(ConfigError):
        sweep_lambda_grid(2.1, 3.3, step=0.0)


def test_export_csv(tmp_path, silica_curve):
    path = tmp_path / "curve.csv"
    export_csv(silica_curve, str(path))
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "lambda_um,n_eff,n_group"
    assert len(lines) == 1 + silica_curve.lam.size
    lam, ne, ng = map(float, lines[1].split(","))
    assert lam == pytest.approx(silica_curve.lam[0])
    assert ng > ne > 1.0
