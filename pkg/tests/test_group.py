import math

import numpy as np
import pytest

from heisenberg_mfa import group
from heisenberg_mfa.group import GPoint


def test_mul_examples():
    assert group.mul((1, 0, 0), (0, 1, 0)) == (1, 1, -2)
    assert group.mul((0, 1, 0), (1, 0, 0)) == (1, 1, 2)
    assert group.mul(group.IDENTITY, (3, -2, 5)) == (3, -2, 5)


def test_inverse_and_identity(rng):
    for x in rng.uniform(-5, 5, size=(100, 3)):
        assert np.allclose(group.mul(x, group.inv(x)), 0, atol=1e-12)
        assert np.allclose(group.mul(group.inv(x), x), 0, atol=1e-12)


def test_associativity(rng):
    a, b, c = (rng.uniform(-10, 10, size=(10_000, 3)) for _ in range(3))
    lhs = group.mul_array(group.mul_array(a, b), c)
    rhs = group.mul_array(a, group.mul_array(b, c))
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * 1e3  # magnitudes up to ~1e3 in r


def test_dilate():
    assert group.dilate(2, (1, 1, 1)) == (2, 2, 4)
    x = GPoint(0.3, -0.7, 1.1)
    assert group.dilate(1, x) == x
    with pytest.raises(ValueError):
        group.dilate(0, x)
    with pytest.raises(ValueError):
        group.dilate(-1, x)


def test_dilation_is_automorphism(rng):
    for _ in range(100):
        x, y = rng.uniform(-3, 3, size=(2, 3))
        lam = rng.uniform(0.1, 5)
        lhs = group.dilate(lam, group.mul(x, y))
        rhs = group.mul(group.dilate(lam, x), group.dilate(lam, y))
        assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


def test_gauge_norm_examples():
    assert group.gauge_norm((1, 0, 0)) == 1
    assert group.gauge_norm((0, 0, 1)) == 1
    assert group.gauge_norm((1, 1, 2)) == pytest.approx(8 ** 0.25, rel=1e-15)


def test_homogeneity(rng):
    x = rng.uniform(-2, 2, size=(1000, 3))
    n = group.gauge_norm_array(x)
    for e in range(-10, 11):
        lam = 2.0 ** e
        m = group.gauge_norm_array(group.dilate_array(lam, x))
        assert np.max(np.abs(m - lam * n) / (lam * n)) <= 1e-12


def test_dist(rng):
    x = GPoint(0.4, -0.2, 0.9)
    assert group.dist(x, x) == 0
    assert group.dist((0, 0, 0), (0, 0, 1)) == 1
    x, y, z = (rng.uniform(-2, 2, size=(10_000, 3)) for _ in range(3))
    d0 = group.dist_array(x, y)
    d1 = group.dist_array(group.mul_array(z, x), group.mul_array(z, y))
    assert np.max(np.abs(d1 - d0) / d0) <= 1e-12


def test_ball_volume():
    assert group.ball_volume(1) == pytest.approx(math.pi ** 2 / 2)
    assert group.ball_volume(2) == pytest.approx(8 * math.pi ** 2)
    with pytest.raises(ValueError):
        group.ball_volume(0)


def test_monte_carlo_volume_short():
    v = group.monte_carlo_ball_volume(1_000_000, rng=3)
    assert abs(v / group.BALL_VOLUME_UNIT - 1) < 0.01


def test_haar_translation_proxy(rng):
    # left translation is a shear with unit Jacobian: volume of z*B equals volume of B
    box = rng.uniform(0, 1, size=(200_000, 3))
    z = np.array([0.7, -1.3, 0.4])
    moved = group.mul_array(z, box)
    back = group.mul_array(group.inv_array(z), moved)
    assert np.allclose(back, box, atol=1e-12)
    J = np.array([[1, 0, 0], [0, 1, 0], [-2 * z[1], 2 * z[0], 1]])
    assert np.linalg.det(J) == pytest.approx(1.0)


def test_quasi_triangle():
    x, y = GPoint(1, 0, 0), GPoint(0, 1, 0)
    ratio = group.gauge_norm(group.mul(x, y)) / 2
    assert ratio == pytest.approx(8 ** 0.25 / 2)
    g = group.quasi_triangle_constant(100_000, rng=1)
    assert g >= 1 - 1e-12
    assert group.quasi_triangle_constant(100_000, rng=1, scale=7) == pytest.approx(g, rel=1e-12)


def test_quasi_triangle_collinear():
    # pairs on the p-axis: ratio is exactly 1
    x, y = GPoint(0.3, 0, 0), GPoint(1.2, 0, 0)
    assert group.gauge_norm(group.mul(x, y)) / (group.gauge_norm(x) + group.gauge_norm(y)) == pytest.approx(1)


def test_flows_and_derivatives():
    f = lambda x: x[2]  # noqa: E731
    x = GPoint(0.3, -0.8, 0.1)
    assert group.horizontal_derivative(f, x, "Z") == pytest.approx(1, abs=1e-9)
    assert group.horizontal_derivative(f, x, "X") == pytest.approx(2 * x.q, abs=1e-9)
    assert group.horizontal_derivative(f, x, "Y") == pytest.approx(-2 * x.p, abs=1e-9)
    comm = group.horizontal_derivative(f, x, "XY") - group.horizontal_derivative(f, x, "YX")
    assert comm == pytest.approx(-4, abs=1e-6)
    assert group.horizontal_derivative(f, x, "") == f(x)


def test_commutator_order():
    f = lambda x: math.sin(x[0]) * math.cos(x[1] + x[2])  # noqa: E731
    x = GPoint(0.2, 0.1, -0.3)

    def resid(h):
        xy = group.horizontal_derivative(f, x, "XY", h)
        yx = group.horizontal_derivative(f, x, "YX", h)
        z = group.horizontal_derivative(f, x, "Z", h)
        return abs(xy - yx + 4 * z)

    r1, r2 = resid(2e-2), resid(1e-2)
    assert math.log2(r1 / r2) >= 1.8


def test_derivative_errors():
    f = lambda x: x[0]  # noqa: E731
    with pytest.raises(ValueError):
        group.horizontal_derivative(f, (0, 0, 0), "X", step=0)
    with pytest.raises(ValueError):
        group.horizontal_derivative(f, (0, 0, 0), "XYXYX")
    with pytest.raises(ValueError):
        group.flow((0, 0, 0), "W", 1.0)


def test_as_point_rejects_nonfinite():
    with pytest.raises(ValueError):
        group.as_point((math.nan, 0, 0))
