import math

import numpy as np
import pytest

from isoflow.utils.gtrig import c_delta, c_delta_prime, cosine_quotient, s_delta, s_delta_prime

@pytest.mark.parametrize("t", [0.0, 0.3, 1.7, -2.2])
def test_flat_kernels(t):
    assert s_delta(0.0, t) == pytest.approx(t, abs=1e-15)
    assert c_delta(0.0, t) == pytest.approx(1.0, abs=1e-15)

def test_trigonometric_and_hyperbolic_branches():
    assert s_delta(-1.0, 0.8) == pytest.approx(math.sin(0.8), rel=1e-14)
    assert c_delta(-1.0, 0.8) == pytest.approx(math.cos(0.8), rel=1e-14)
    assert s_delta(4.0, 0.5) == pytest.approx(math.sinh(1.0) / 2.0, rel=1e-14)
    assert c_delta(4.0, 0.5) == pytest.approx(math.cosh(1.0), rel=1e-14)
    assert s_delta(-4.0, math.pi / 4) == pytest.approx(0.5, rel=1e-14)

def test_continuous_across_zero_curvature():
    for delta in (1e-12, -1e-12, 1e-7, -1e-7):
        assert s_delta(delta, 0.7) == pytest.approx(0.7 + delta * 0.7 ** 3 / 6.0, rel=1e-14)
        assert c_delta(delta, 0.7) == pytest.approx(1.0 + delta * 0.49 / 2.0, rel=1e-14)


@pytest.mark.parametrize("t", [0.05, 0.7, 2.5])
def test_continuous_at_delta_one_over_ten_to_eight(t):
    for f in (s_delta, c_delta, s_delta_prime, c_delta_prime, cosine_quotient):
        at_zero = f(0.0, t)
        above, below = f(1e-8, t), f(-1e-8, t)
        # first order in delta with coefficients below t^4
        assert abs(above - at_zero) <= 1e-8 * max(1.0, t ** 4)
        assert abs(below - at_zero) <= 1e-8 * max(1.0, t ** 4)
        assert above - at_zero == pytest.approx(at_zero - below, rel=1e-6, abs=1e-15)


def test_pythagorean_identity(rng):
    delta = rng.uniform(-3.0, 3.0, 200)
    t = rng.uniform(-1.5, 1.5, 200)
    c = c_delta(delta, t)
    s = s_delta(delta, t)
    np.testing.assert_allclose(c * c - delta * s * s, 1.0, atol=1e-12)

def test_derivatives_match_finite_differences(rng):
    h = 1e-6
    for delta in rng.uniform(-2.0, 2.0, 10):
        t = 0.9
        ds = (s_delta(delta, t + h) - s_delta(delta, t - h)) / (2 * h)
        dc = (c_delta(delta, t + h) - c_delta(delta, t - h)) / (2 * h)
        assert s_delta_prime(delta, t) == pytest.approx(ds, abs=1e-8)
        assert c_delta_prime(delta, t) == pytest.approx(dc, abs=1e-8)

def test_cosine_quotient():
    assert cosine_quotient(0.0, 1.2) == pytest.approx(0.72, rel=1e-14)
    assert cosine_quotient(0.5, 1.2) == pytest.approx((c_delta(0.5, 1.2) - 1.0) / 0.5, rel=1e-12)
    assert cosine_quotient(-1.0, 1.0) == pytest.approx(1.0 - math.cos(1.0), rel=1e-12)

def test_broadcasting():
    t = np.linspace(0.0, 1.0, 5)
    out = s_delta(np.array([[-1.0], [1.0]]), t)
    assert out.shape == (2, 5)
    assert isinstance(s_delta(-1.0, 0.5), float)
