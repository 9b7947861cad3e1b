"""Material model tests: frozen index values, derivative consistency,
interpolation invariants, and range handling."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fourwave.errors import ConfigError, NoData, OutOfRange
from fourwave.materials import (
    MATERIALS,
    FixedIndex,
    MaterialModel,
    MixtureIndex,
    SellmeierModel,
    TabulatedIndex,
    absorption,
    get_material,
    nonlinear_index,
    refractive_index,
    silica,
    silicon,
)

# Frozen from direct evaluation of the shipped Sellmeier coefficients.
SILICA_N_1550 = 1.4440236217032607
SILICA_N_7084 = 1.4551036560660509
SILICON_N_1550 = 3.477723756220899
SILICON_N_2100 = 3.449243596706908


def test_silica_index_at_1550():
    assert refractive_index("silica", 1.55) == pytest.approx(SILICA_N_1550, rel=1e-12)
    assert refractive_index("silica", 1.55) == pytest.approx(1.4440, abs=1e-4)


def test_silicon_index_values():
    assert refractive_index("silicon", 1.55) == pytest.approx(SILICON_N_1550, rel=1e-12)
    assert refractive_index("silicon", 2.100) == pytest.approx(SILICON_N_2100, rel=1e-12)


def test_air_index_is_one():
    assert refractive_index("air", 1.55) == 1.0
    assert refractive_index("air", 0.7084) == 1.0


def test_pcf_cladding_is_mixture_of_air_and_silica():
    got = refractive_index("pcf_cladding_90", 0.7084)
    assert got == pytest.approx(0.9 * 1.0 + 0.1 * SILICA_N_7084, rel=1e-12)


def test_index_models_accept_arrays():
    lams = np.array([1.5, 1.55, 2.1])
    arr = silicon.index.n(lams)
    assert arr.shape == lams.shape
    for lam, n in zip(lams, arr):
        assert n == pytest.approx(silicon.index.n(float(lam)), rel=1e-14)


@pytest.mark.parametrize("name,lam", [("silicon", 2.0), ("silica", 1.2), ("silica", 4.2)])
def test_dn_dlam_matches_central_difference(name, lam):
    model = MATERIALS[name].index
    h = 1e-6
    fd = (model.n(lam + h) - model.n(lam - h)) / (2 * h)
    assert model.dn_dlam(lam) == pytest.approx(fd, rel=1e-6)


def test_normal_dispersion_has_negative_slope():
    assert silicon.index.dn_dlam(2.1) < 0
    assert silica.index.dn_dlam(1.55) < 0


def test_out_of_range_raises():
    with pytest.raises(OutOfRange):
        refractive_index("silicon", 1.0)
    with pytest.raises(OutOfRange):
        refractive_index("silicon", 12.0)
    with pytest.raises(OutOfRange):
        refractive_index("silica", 0.1)
    with pytest.raises(OutOfRange):
        refractive_index("silica", 5.5)


def test_out_of_range_checks_whole_array():
    with pytest.raises(OutOfRange):
        silicon.index.n(np.array([2.0, 12.0]))


def test_silica_piecewise_is_continuous_at_handover():
    eps = 1e-6
    left = refractive_index("silica", 3.70 - eps)
    right = refractive_index("silica", 3.70 + eps)
    assert left == pytest.approx(right, abs=1e-5)


def test_silica_long_wave_values_are_plausible():
    # Long-wave knots must keep decreasing and stay above 1.3 out to 5 um.
    lams = np.linspace(3.7, 5.0, 40)
    ns = silica.index.n(lams)
    assert np.all(np.diff(ns) < 0)
    assert np.all(ns > 1.3)


def test_tabulated_index_exact_at_knots_and_bounded_between():
    knots = ((1.0, 1.50), (1.5, 1.48), (2.0, 1.47), (3.0, 1.41))
    model = TabulatedIndex(knots)
    for lam, n in knots:
        assert model.n(lam) == pytest.approx(n, rel=1e-14)
    for (l0, n0), (l1, n1) in zip(knots, knots[1:]):
        mid = model.n(np.linspace(l0, l1, 23))
        assert np.all(mid <= max(n0, n1) + 1e-12)
        assert np.all(mid >= min(n0, n1) - 1e-12)


def test_tabulated_index_rejects_bad_knots():
    with pytest.raises(ConfigError):
        TabulatedIndex(((1.0, 1.5),))
    with pytest.raises(ConfigError):
        TabulatedIndex(((1.0, 1.5), (1.0, 1.4)))


@given(
    f1=st.floats(0.0, 1.0),
    f2=st.floats(0.0, 1.0),
    lam=st.floats(0.5, 3.0),
)
@settings(max_examples=50, deadline=None)
def test_mixture_monotone_in_fill(f1, f2, lam):
    a = FixedIndex(1.0)
    b = MATERIALS["silica"].index
    n1 = MixtureIndex(a, b, fill=f1).n(lam)
    n2 = MixtureIndex(a, b, fill=f2).n(lam)
    # Higher air fill -> index closer to 1, i.e. lower.
    if f1 < f2:
        assert n1 >= n2
    elif f1 > f2:
        assert n1 <= n2


def test_mixture_rejects_bad_fill():
    with pytest.raises(ConfigError):
        MixtureIndex(FixedIndex(1.0), FixedIndex(1.5), fill=1.2)


def test_mixture_bounded_by_constituents():
    m = MixtureIndex(FixedIndex(1.0), silica.index, fill=0.9)
    n = m.n(0.7084)
    assert 1.0 <= n <= SILICA_N_7084


# Frozen n2 calibration knots for silicon (m^2/W).
SILICON_N2_KNOTS = [(2.100, 6.6145e-18), (2.151, 6.5801e-18), (2.210, 6.0473e-18)]


@pytest.mark.parametrize("lam,n2", SILICON_N2_KNOTS)
def test_silicon_n2_knot_values(lam, n2):
    assert nonlinear_index("silicon", lam) == pytest.approx(n2, rel=1e-12)


def test_n2_interpolates_between_knots():
    got = nonlinear_index("silicon", 2.125)
    lo, hi = 6.0473e-18, 6.6145e-18
    assert lo < got < hi


def test_n2_clamps_with_warning_outside_table():
    with pytest.warns(UserWarning):
        low = nonlinear_index("silicon", 1.9)
    assert low == pytest.approx(6.6145e-18, rel=1e-12)
    with pytest.warns(UserWarning):
        high = nonlinear_index("silicon", 2.5)
    assert high == pytest.approx(6.0473e-18, rel=1e-12)


def test_silica_n2_is_flat():
    assert nonlinear_index("silica", 0.7084) == pytest.approx(2.6e-20, rel=1e-12)
    assert nonlinear_index("silica", 1.55) == pytest.approx(2.6e-20, rel=1e-12)


@pytest.mark.parametrize(
    "name,lam,alpha",
    [
        ("silica", 3.905, 7.3),
        ("silica", 3.461, 1.0),
        ("silica", 3.265, 0.7),
        ("silicon", 3.265, 0.001),
        ("silicon", 3.905, 0.002),
    ],
)
def test_absorption_knot_values(name, lam, alpha):
    assert absorption(name, lam) == pytest.approx(alpha, rel=1e-12)


def test_absorption_nonnegative_between_knots():
    lams = np.linspace(3.265, 3.905, 50)
    assert np.all(absorption("silica", lams) >= 0)


def test_missing_tables_raise_nodata():
    with pytest.raises(NoData):
        nonlinear_index("air", 1.55)
    with pytest.raises(NoData):
        absorption("air", 1.55)


def test_material_model_rejects_unsorted_table():
    with pytest.raises(ConfigError):
        MaterialModel(name="x", index=FixedIndex(1.0), n2_table=((2.0, 1e-18), (1.5, 1e-18)))


def test_registry_and_lookup():
    assert set(MATERIALS) == {"silicon", "silica", "air", "pcf_cladding_90"}
    assert get_material("silicon") is silicon
    assert get_material(silica) is silica
    with pytest.raises(ConfigError):
        get_material("unobtainium")


def test_sellmeier_constant_offset_form():
    # n^2 = 4 exactly when the offset carries everything.
    m = SellmeierModel(terms=(), validity_range=(1.0, 2.0), constant_offset=4.0)
    assert m.n(1.5) == pytest.approx(2.0, rel=1e-15)
    assert m.dn_dlam(1.5) == 0.0
