"""FD solver correctness: exact separability on a layered structure,
convergence against the analytic slab oracle, symmetry, determinism,
and error paths."""

import numpy as np
import pytest
from scipy.sparse.linalg import eigs

from fourwave.errors import ConfigError, NoGuidedMode
from fourwave.materials import FixedIndex, MaterialModel
from fourwave.modes import WaveguideGeometry, solve_rect_mode, solve_slab_mode
from fourwave.modes.grid import axis_spacings, deriv_back, deriv_forward
from fourwave.modes.rect import assemble_operator, solve_rect_neff

LAM = 1.55
N_CO, N_CL, THICK = 3.5, 1.45, 0.22
K0 = 2 * np.pi / LAM


def _slab_eps_1d(y, h):
    """Arithmetic average of the step profile over each dual y-cell."""
    lo, hi = y - h / 2, y + h / 2
    frac = np.clip(np.minimum(hi, THICK / 2) - np.maximum(lo, -THICK / 2), 0, None) / h
    return frac * N_CO**2 + (1 - frac) * N_CL**2


def _fd_slab_setup(h):
    half = np.ceil((THICK / 2 + 1.6) / h) * h
    ny = int(round(2 * half / h)) + 1
    y = np.linspace(-half, half, ny)
    x = np.arange(21) * 0.05
    eps1d = _slab_eps_1d(y, h)
    tile = np.tile(eps1d, (len(x), 1))
    return x, y, eps1d, tile


def _fd_slab_beta2(h):
    """Top beta^2 of the 2D solver applied to a y-only structure."""
    x, y, eps1d, tile = _fd_slab_setup(h)
    op, _ = assemble_operator(K0, x, y, tile, tile, tile)
    n_oracle = solve_slab_mode(N_CO, N_CL, THICK, LAM)
    sigma = (K0 * n_oracle) ** 2 * (1 + 1e-6)
    vals = eigs(op, k=2, sigma=sigma, v0=np.ones(op.shape[0]), return_eigenvectors=False)
    return float(np.max(vals.real)), x, y, eps1d


def test_layered_structure_separates_exactly():
    # For eps varying only along y, the 2D operator is a Kronecker sum, so
    # its top eigenvalue must equal the sum of the 1D factor eigenvalues to
    # solver precision. This pins the assembly (kron order, staggering,
    # ghost handling) far tighter than any convergence study.
    beta2, x, y, eps1d = _fd_slab_beta2(0.02)
    dye, dyh = axis_spacings(y)
    a_y = K0**2 * np.diag(eps1d) + (deriv_back(dyh) @ deriv_forward(dye)).toarray()
    lam_y = float(np.max(np.linalg.eigvals(a_y).real))
    assert beta2 == pytest.approx(_lam_x1(x) + lam_y, abs=1e-5)


def _lam_x1(x):
    dxe, dxh = axis_spacings(x)
    lap_x = (deriv_forward(dxe) @ deriv_back(dxh)).toarray()
    return float(np.max(np.linalg.eigvals(lap_x).real))


def test_convergence_to_slab_oracle():
    # Halving keeps the interface at the same sub-cell offset so the
    # averaging error constant is fixed and the order is clean.
    n_oracle = solve_slab_mode(N_CO, N_CL, THICK, LAM)
    errs = []
    for h in (THICK / 6, THICK / 12, THICK / 24, THICK / 48, THICK / 96):
        beta2, x, _, _ = _fd_slab_beta2(h)
        # Remove the exact discrete transverse eigenvalue so only the
        # y-discretization error of the slab remains.
        n_fd = np.sqrt(beta2 - _lam_x1(x)) / K0
        errs.append(abs(n_fd - n_oracle))
    assert all(a > b for a, b in zip(errs, errs[1:]))
    orders = [np.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)]
    assert min(orders) >= 1.5
    assert errs[-1] < 1e-4


def _mirror_geometry():
    # Rectangular, same material above and below: both mirror symmetries
    # hold but TE00/TM00 stay split (an exact square with uniform cladding
    # is degenerate and any eigenvector mixture would break the test).
    return WaveguideGeometry(
        core_width=1.0,
        core_height=0.6,
        core="silicon",
        cladding="silica",
        box="silica",
        box_thickness=0.0,
    )


@pytest.fixture(scope="module")
def square_solution():
    return solve_rect_mode(_mirror_geometry(), 1.55)


def test_mirror_symmetric_intensity(square_solution):
    f = square_solution.field
    intensity = f.e_intensity()
    peak = intensity.max()
    assert np.allclose(intensity, intensity[::-1, :], atol=1e-6 * peak)
    assert np.allclose(intensity, intensity[:, ::-1], atol=1e-6 * peak)


def test_square_mode_is_guided_te(square_solution):
    sol = square_solution
    assert 1.45 < sol.n_eff < 3.48
    assert sol.polarization_tag == "TE-like"
    assert sol.te_fraction > 0.5
    assert sol.field.boundary_ratio() < 1e-6


def test_norm_convention(square_solution):
    assert square_solution.field.norm_e() == pytest.approx(1.0, rel=1e-12)


def test_wcom_idler_is_guided():
    geom = WaveguideGeometry(core_width=2.35, core_height=0.65)
    sol = solve_rect_mode(geom, 1.541)
    from fourwave.materials import refractive_index

    assert refractive_index("silica", 1.541) < sol.n_eff < refractive_index("silicon", 1.541)
    assert sol.te_fraction > 0.5


def test_deterministic_repeat():
    geom = WaveguideGeometry(core_width=2.05, core_height=0.75)
    a, _ = solve_rect_neff(geom, 2.1)
    b, _ = solve_rect_neff(geom, 2.1)
    assert a == b


def test_n_eff_hint_does_not_change_result():
    geom = WaveguideGeometry(core_width=2.05, core_height=0.75)
    a, pad = solve_rect_neff(geom, 2.1)
    b, _ = solve_rect_neff(geom, 2.1, n_eff_hint=a, pad_hint=pad)
    assert abs(a - b) < 5e-9


def test_small_padding_is_extended_automatically():
    geom = WaveguideGeometry(core_width=2.35, core_height=0.65, cladding_padding=0.75)
    sol = solve_rect_mode(geom, 3.265)
    assert sol.field.boundary_ratio() < 1e-6


def test_index_inversion_raises():
    geom = WaveguideGeometry(core_width=1.0, core_height=0.5, core="silica", cladding="silicon")
    with pytest.raises(NoGuidedMode):
        solve_rect_mode(geom, 1.55)


def test_unknown_mode_request_rejected():
    with pytest.raises(ConfigError):
        solve_rect_mode(_mirror_geometry(), 1.55, mode_request="TM00")


def test_material_model_objects_accepted():
    geom = WaveguideGeometry(
        core_width=1.0,
        core_height=0.6,
        core=MaterialModel(name="hi", index=FixedIndex(3.0)),
        cladding=MaterialModel(name="lo", index=FixedIndex(1.5)),
        box=MaterialModel(name="lo2", index=FixedIndex(1.5)),
    )
    sol = solve_rect_mode(geom, 1.55)
    assert 1.5 < sol.n_eff < 3.0
