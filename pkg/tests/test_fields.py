import math

import numpy as np
import pytest

from nonlocal_rate import (FieldError, ScalarField, antiderivative,
                           bruteforce_quadrature, coordinate_field, grid_field,
                           hat, load_grid_csv, moving_average, radial_bump,
                           save_grid_csv, sin_bump, slice_field, smooth_bump)
from nonlocal_rate.fields import FieldError  # noqa: F811


def indicator_field(a=0.0, b=1.0):
    return ScalarField(1, lambda x: np.ones_like(x), ((a,), (b,)), name="ind")


def test_zero_outside_support():
    u = sin_bump()
    xs = np.array([-0.5, -1e-9, 1.0 + 1e-9, 2.0, 17.0])
    assert np.all(u(xs) == 0.0)
    v = radial_bump(2, (0.5, 0.5), 0.3)
    pts = np.array([[0.95, 0.5], [0.5, -0.2], [2.0, 2.0]])
    assert np.all(v(pts) == 0.0)


def test_antiderivative_zero_field():
    z = ScalarField(1, lambda x: np.zeros_like(x), ((0.0,), (1.0,)))
    U = antiderivative(z)
    assert np.all(U(np.linspace(-1, 2, 7)) == 0.0)


def test_antiderivative_indicator():
    U = antiderivative(indicator_field())
    assert abs(U(np.array([0.5]))[0] - 0.5) < 1e-14
    assert abs(U(np.array([2.0]))[0] - 1.0) < 1e-14
    assert U(np.array([0.0]))[0] == 0.0


def test_antiderivative_sin_closed_form():
    # int_0^1 sin(pi x) dx = 2/pi, cross-checked by a dense trapezoid sum
    u = sin_bump()
    U = antiderivative(u)
    assert abs(U(np.array([1.0]))[0] - 2 / math.pi) < 1e-12
    xs = np.linspace(0, 1, 100001)
    ref = np.sum(0.5 * (np.sin(np.pi * xs[1:]) + np.sin(np.pi * xs[:-1]))
                 * np.diff(xs))
    assert abs(U(np.array([1.0]))[0] - ref) < 1e-9


def test_antiderivative_monotone_for_nonnegative():
    u = sin_bump()
    vals = u.antider(np.linspace(-0.5, 1.5, 400))
    assert np.all(np.diff(vals) >= -1e-15)


def test_antiderivative_requires_1d():
    with pytest.raises(FieldError):
        antiderivative(radial_bump(2))


def test_moving_average_constant():
    u = indicator_field()
    assert abs(moving_average(u, 0.5, 0.25) - 1.0) < 1e-14
    assert abs(moving_average(u, 0.5, 0.9) - 0.2) < 1e-13


def test_moving_average_sin_against_oracle():
    u = sin_bump()
    # frozen: dense-trapezoid oracle at 1e5 nodes and the closed form
    # (cos(0.45 pi) - cos(0.55 pi)) / (0.1 pi) agree on this value
    expected = 0.9958927352435621
    oracle = bruteforce_quadrature("moving_average", 100_000, u=u, h=0.1, x=0.45)
    assert abs(oracle - expected) < 1e-9
    assert abs(moving_average(u, 0.1, 0.45) - expected) < 1e-12


def test_moving_average_rejects_bad_window():
    with pytest.raises(ValueError):
        moving_average(sin_bump(), 0.0, 0.3)


def test_moving_average_mean_value_property():
    rng = np.random.default_rng(3)
    axes = [np.linspace(0.0, 1.0, 21)]
    data = rng.uniform(0.0, 1.0, 21)
    data[0] = data[-1] = 0.0
    g = grid_field(axes, data)
    lo, hi = data.min(), data.max()
    for h in (0.05, 0.17, 0.6):
        for x in np.linspace(-0.2, 1.1, 23):
            m = moving_average(g, h, float(x))
            assert lo - 1e-12 <= m <= hi + 1e-12


def test_bump_gradient_matches_fd():
    # synthesized centered differences vs closed forms, bulk points
    for u, xs in ((smooth_bump(0.5, 0.5), [0.35, 0.45, 0.6]),
                  (sin_bump(), [0.2, 0.45, 0.7])):
        fd = ScalarField(1, u._values, (u.lo, u.hi), breakpoints=u.breakpoints)
        for x in xs:
            g_true = u.grad(np.array([x]))[0, 0]
            g_fd = fd.grad(np.array([x]))[0, 0]
            assert abs(g_fd - g_true) <= 10 * fd.fd_step ** 2 * max(1.0, abs(g_true))


def test_radial_bump_derivatives_consistent():
    u = radial_bump(2, (0.4, 0.6), 0.35, 1.3)
    pts = np.array([[0.45, 0.62], [0.3, 0.55], [0.5, 0.7]])
    bare = ScalarField(2, u._values, (u.lo, u.hi))
    g_fd = bare.grad(pts)
    assert np.allclose(g_fd, u.grad(pts), rtol=1e-6, atol=1e-9)
    semi = ScalarField(2, u._values, (u.lo, u.hi), gradient=u._gradient)
    h_fd = semi.hess(pts)
    assert np.allclose(h_fd, u.hess(pts), rtol=1e-5, atol=1e-7)


def test_slice_coordinate_field():
    u = coordinate_field(2, (-1.0, -1.0), (1.0, 1.0))
    sl = slice_field(u, (1.0, 0.0), (0.0, 0.3))
    ts = np.linspace(-0.9, 0.9, 11)
    assert np.allclose(sl(ts), ts, atol=1e-14)


def test_slice_radial_symmetry():
    u = radial_bump(2, (0.0, 0.0), 0.5)
    e = np.array([math.cos(0.7), math.sin(0.7)])
    sl = slice_field(u, e, (0.0, 0.0))
    ts = np.linspace(-0.45, 0.45, 21)
    assert np.allclose(sl(ts), sl(-ts), atol=1e-14)


def test_slice_product_field_pointwise():
    # u(x, y) = x * y * bump(x, y) restricted to the line x = 0.5
    bump = radial_bump(2, (0.5, 0.5), 0.45)
    u = ScalarField(2, lambda p: p[:, 0] * p[:, 1] * bump._values(p),
                    (bump.lo, bump.hi))
    sl = slice_field(u, (0.0, 1.0), (0.5, 0.0))
    ts = np.linspace(0.1, 0.9, 100)
    expected = 0.5 * ts * bump(np.stack([np.full_like(ts, 0.5), ts], axis=-1))
    assert np.allclose(sl(ts), expected, atol=1e-14)


def test_slice_derivative_uses_gradient():
    u = radial_bump(2, (0.5, 0.5), 0.4)
    e = np.array([0.0, 1.0])
    sl = slice_field(u, e, (0.45, 0.0))
    ts = np.linspace(0.2, 0.8, 17)
    pts = sl.points(ts)
    assert np.allclose(sl.derivative(ts), u.grad(pts) @ e, atol=1e-14)
    wp = sl.derivative_field()
    # the slice itself is the antiderivative of the slice derivative
    assert np.allclose(wp.antider(ts), sl(ts) - sl(np.zeros(1))[0], atol=1e-12)


def test_slice_validation():
    u = radial_bump(2)
    with pytest.raises(FieldError):
        slice_field(u, (1.0, 1.0), (0.0, 0.0))
    with pytest.raises(FieldError):
        slice_field(u, (1.0, 0.0), (0.5, 0.5))


def test_grid_roundtrip(tmp_path):
    axes = [np.linspace(0, 1, 9), np.linspace(0, 2, 5)]
    data = np.zeros((9, 5))
    data[3:6, 2:3] = 0.7
    g = grid_field(axes, data)
    path = tmp_path / "field.csv"
    save_grid_csv(path, g)
    with open(path) as f:
        assert f.readline().strip() == "x0,x1,value"
    g2 = load_grid_csv(path)
    pts = np.array([[0.4, 1.0], [0.1, 0.3], [0.62, 1.1]])
    assert np.allclose(g(pts), g2(pts), atol=1e-15)


def test_grid_validation():
    with pytest.raises(FieldError):
        grid_field([np.array([0.0, 0.1, 0.3])], np.zeros(3))  # non-uniform
    with pytest.raises(FieldError):
        grid_field([np.linspace(0, 1, 5)], np.ones(5))  # boundary not 0


def test_grid_antiderivative_is_trapezoid():
    axes = [np.linspace(0.0, 1.0, 5)]
    data = np.array([0.0, 1.0, 0.5, 1.0, 0.0])
    g = grid_field(axes, data)
    U = antiderivative(g)
    assert U(np.array([0.0]))[0] == 0.0
    # node values equal cumulative trapezoid sums
    assert abs(U(np.array([0.5]))[0] - (0.125 + 0.1875)) < 1e-14


def test_hat_antiderivative():
    u = hat(0.0, 1.0, 1.0)
    U = antiderivative(u)
    assert abs(U(np.array([1.0]))[0] - 0.5) < 1e-14
    assert abs(U(np.array([0.5]))[0] - 0.25) < 1e-14
