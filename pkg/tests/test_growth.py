import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from robust_harvest import (
    GrowthSpec,
    InputError,
    ParameterError,
    PRESETS,
    QuadratureGrid,
    density_weights,
    mean_weight,
    weight,
)
from robust_harvest.growth import expectation, logistic

from conftest import logistic_oracle


def test_weight_at_time_zero_is_initial_weight(growth2021):
    assert weight(growth2021, 0.0, 0.37) == 6.8


def test_weight_2022_midpoint_oracle(growth2022):
    expected = logistic_oracle(12.8, 0.027, 101.0, 120.0)
    assert weight(growth2022, 120.0, 0.5) == pytest.approx(expected, rel=1e-14)
    assert weight(growth2022, 120.0, 0.5) == pytest.approx(79.5, abs=0.05)


@pytest.mark.parametrize("year", ["2021", "2022"])
def test_weight_saturates_at_upper_asymptote(year):
    spec = PRESETS[year]
    assert weight(spec, 1e6, 1.0) == pytest.approx(spec.K_hi, rel=1e-9)


def test_weight_rejects_bad_inputs(growth2021):
    with pytest.raises(InputError):
        weight(growth2021, -1.0, 0.5)
    with pytest.raises(InputError):
        weight(growth2021, 1.0, 1.5)
    with pytest.raises(InputError):
        weight(growth2021, float("nan"), 0.5)


def test_growth_spec_validation():
    with pytest.raises(ParameterError):
        GrowthSpec.constant_rate(x=10, r=0.03, K_lo=5, K_hi=50)
    with pytest.raises(ParameterError):
        GrowthSpec(x=1, r_lo=0.05, r_hi=0.01, K_lo=5, K_hi=50)
    with pytest.raises(ParameterError):
        GrowthSpec.constant_rate(x=1, r=-0.01, K_lo=5, K_hi=50)
    with pytest.raises(ParameterError):
        GrowthSpec.from_preset("1999")


def test_affine_rate_and_capacity():
    spec = GrowthSpec(x=2.0, r_lo=0.01, r_hi=0.03, K_lo=10.0, K_hi=30.0)
    assert spec.r(0.5) == pytest.approx(0.02)
    assert spec.K(0.25) == pytest.approx(15.0)
    assert weight(spec, 50.0, 0.5) == pytest.approx(logistic_oracle(2.0, 0.02, 20.0, 50.0))


def test_uniform_density_is_all_ones():
    d = density_weights("uniform", QuadratureGrid(150))
    assert np.all(d.p == 1.0)
    assert d.weights.sum() == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("n", [7, 150, 301])
def test_beta22_symmetric(n):
    d = density_weights("beta", QuadratureGrid(n), a=2, b=2)
    np.testing.assert_allclose(d.p, d.p[::-1], rtol=1e-12)
    assert d.weights.sum() == pytest.approx(1.0, abs=1e-12)


def test_beta25_mode():
    d = density_weights("beta", QuadratureGrid(300), a=2, b=5)
    mode = d.nodes[np.argmax(d.p)]
    assert mode == pytest.approx(0.2, abs=1.0 / 300)


def test_density_rejects_bad_parameters():
    with pytest.raises(ParameterError):
        density_weights("beta", a=1.0, b=2.0)
    with pytest.raises(ParameterError):
        density_weights("beta", a=2.0)
    with pytest.raises(ParameterError):
        density_weights("gamma")


def test_midpoint_nodes():
    q = QuadratureGrid(4)
    np.testing.assert_allclose(q.nodes, [0.125, 0.375, 0.625, 0.875])
    with pytest.raises(ParameterError):
        QuadratureGrid(0)


def test_mean_weight_degenerate(uniform150):
    spec = GrowthSpec.constant_rate(x=5.0, r=0.05, K_lo=100.0, K_hi=100.0)
    assert mean_weight(spec, uniform150, 1e4) == pytest.approx(100.0, rel=1e-12)


def test_mean_weight_limit_is_mean_capacity(growth2021, uniform150):
    assert mean_weight(growth2021, uniform150, 1e6) == pytest.approx(106.5, rel=1e-12)


def test_mean_weight_2022_fine_quadrature_oracle(growth2022, uniform150):
    n = 10_000
    K = [53.0 + (m + 0.5) / n * 96.0 for m in range(n)]
    oracle = math.fsum(logistic_oracle(12.8, 0.027, k, 120.0) for k in K) / n
    assert mean_weight(growth2022, uniform150, 120.0) == pytest.approx(oracle, rel=1e-6)


def test_mean_weight_vectorised(growth2021, uniform150):
    ts = np.array([0.0, 61.0, 181.0])
    out = mean_weight(growth2021, uniform150, ts)
    assert out.shape == (3,)
    assert out[1] == pytest.approx(mean_weight(growth2021, uniform150, 61.0))


def test_expectation_exact_for_constants():
    w = density_weights("beta", QuadratureGrid(37), a=3, b=4).weights
    assert expectation(np.full(37, 123.456), w) == 123.456


@given(
    x=st.floats(0.5, 20),
    r=st.floats(0.001, 0.1),
    gap=st.floats(0, 200),
    t=st.floats(0, 400),
)
def test_logistic_bounded_and_monotone(x, r, gap, t):
    K = x + gap
    X = logistic(x, r, K, t)
    assert x - 1e-9 <= X <= K + 1e-9
    assert logistic(x, r, K, t + 1.0) >= X - 1e-12


@given(t=st.floats(0, 300))
def test_weight_increasing_in_index(t):
    spec = PRESETS["2021"]
    u = np.linspace(0, 1, 11)
    assert np.all(np.diff(weight(spec, t, u)) >= -1e-12)
