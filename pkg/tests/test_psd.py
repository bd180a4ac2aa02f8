import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lidarfog.errors import DomainError, PresetLookupError
from lidarfog.psd import (
    PRESETS,
    GammaPsd,
    JungePsd,
    density,
    gamma_density,
    get_preset,
    junge_density,
    mode_radius,
    total_number_density,
)

STRONG = PRESETS["strong_advection"].psd
MODERATE = PRESETS["moderate_advection"].psd


def test_strong_rate_parameter():
    assert STRONG.b == 0.3
    assert MODERATE.b == 3 / 8


def test_preset_parameters():
    for psd, r_c in ((STRONG, 10.0), (MODERATE, 8.0)):
        assert (psd.rho, psd.a, psd.gamma_exp, psd.r_c) == (20.0, 3, 1.0, r_c)
    assert PRESETS["strong_advection"].mor == 40.0
    assert PRESETS["moderate_advection"].mor == 80.0
    assert PRESETS["moderate_junge"].mor is None


def test_gamma_density_zero_at_origin():
    assert gamma_density(STRONG, 0.0) == 0.0


def test_gamma_density_closed_form():
    d = 13.0
    r = d / 2
    expected = 20.0 * 0.3**4 / math.gamma(4) * r**3 * math.exp(-0.3 * r)
    assert gamma_density(STRONG, d) == pytest.approx(expected, rel=1e-14)


def test_gamma_density_negative_rejected():
    with pytest.raises(DomainError):
        gamma_density(STRONG, -1.0)
    with pytest.raises(DomainError):
        gamma_density(STRONG, np.array([1.0, -0.1]))


@pytest.mark.parametrize("psd", [STRONG, MODERATE])
def test_normalisation(psd):
    assert total_number_density(psd) == pytest.approx(20.0, rel=1e-3)


@pytest.mark.parametrize("psd", [STRONG, MODERATE])
def test_mode_radius(psd):
    step = 1e-3
    assert abs(mode_radius(psd, step) - psd.r_c) <= step


def test_junge_values():
    j = JungePsd()
    assert junge_density(j, 1.0) == 131.5
    assert junge_density(j, 10.0) == pytest.approx(131.5 * 10**-1.76, rel=1e-14)
    assert junge_density(j, 10.0) == pytest.approx(2.286, abs=1e-3)  # quoted to 3 decimals


def test_junge_truncated_outside_support():
    j = JungePsd()
    assert junge_density(j, 0.005) == 0.0
    assert junge_density(j, 100.1) == 0.0
    assert junge_density(j, 0.0) == 0.0


def test_junge_strictly_decreasing():
    j = JungePsd()
    d = np.geomspace(j.d_min, j.d_max, 2000)
    n = junge_density(j, d)
    assert np.all(n > 0)
    assert np.all(np.diff(n) < 0)


def test_junge_empty_support():
    assert total_number_density(JungePsd(d_min=5.0, d_max=5.0)) == 0.0


def test_junge_total_is_finite():
    j = JungePsd()
    exact = j.scale / (1 - j.exponent) * (j.d_max ** (1 - j.exponent) - j.d_min ** (1 - j.exponent))
    assert total_number_density(j, intervals=2_000_000) == pytest.approx(exact, rel=1e-3)


def test_invalid_parameters():
    with pytest.raises(DomainError):
        GammaPsd(rho=20.0, a=2.5, gamma_exp=1.0, r_c=10.0)
    with pytest.raises(DomainError):
        GammaPsd(rho=-1.0, a=3, gamma_exp=1.0, r_c=10.0)
    with pytest.raises(DomainError):
        GammaPsd(rho=20.0, a=3, gamma_exp=0.0, r_c=10.0)
    with pytest.raises(DomainError):
        JungePsd(d_min=10.0, d_max=1.0)
    with pytest.raises(DomainError):
        JungePsd(scale=0.0)


def test_preset_lookup():
    assert get_preset("strong_advection").psd is STRONG
    with pytest.raises(PresetLookupError) as info:
        get_preset("nofog")
    assert "strong_advection" in str(info.value)


def test_density_dispatch():
    assert density(STRONG, 4.0) == gamma_density(STRONG, 4.0)
    assert density(JungePsd(), 4.0) == junge_density(JungePsd(), 4.0)
    with pytest.raises(TypeError):
        density(object(), 1.0)


gamma_params = st.tuples(
    st.floats(min_value=0.1, max_value=500.0),
    st.integers(min_value=1, max_value=8),
    st.floats(min_value=0.5, max_value=3.0),
    st.floats(min_value=1.0, max_value=20.0),
)


@settings(max_examples=40, deadline=None)
@given(gamma_params)
def test_b_definition(params):
    rho, a, g, r_c = params
    psd = GammaPsd(rho, a, g, r_c)
    assert psd.b == a / (g * r_c**g)


@settings(max_examples=30, deadline=None)
@given(gamma_params)
def test_normalisation_property(params):
    psd = GammaPsd(*params)
    assert total_number_density(psd) == pytest.approx(psd.rho, rel=1e-3)


@settings(max_examples=30, deadline=None)
@given(gamma_params)
def test_mode_property(params):
    psd = GammaPsd(*params)
    step = 1e-3
    assert abs(mode_radius(psd, step) - psd.r_c) <= step * (1 + 1e-9)


@settings(max_examples=40, deadline=None)
@given(gamma_params, st.floats(min_value=0.01, max_value=100.0), st.floats(min_value=0.0, max_value=200.0))
def test_rescaling_rho(params, k, d):
    psd = GammaPsd(*params)
    assert gamma_density(psd.scaled(k), d) == pytest.approx(k * gamma_density(psd, d), rel=1e-12, abs=0)
