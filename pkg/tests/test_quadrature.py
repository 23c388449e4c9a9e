import math

import numpy as np
import pytest

from nonlocal_rate.quadrature import (QuadratureError, QuadratureScheme,
                                      build_edges, fit_order, integrate_box,
                                      integrate_panels, ball_rule,
                                      sphere_area, sphere_directions)


def test_panels_exact_for_polynomials():
    val, rep = integrate_panels(lambda x: 3 * x ** 2, 0.0, 2.0)
    assert abs(val - 8.0) < 1e-13
    assert rep.est_error < 1e-12


def test_panels_align_to_breakpoints():
    # |x - 0.5| kinks at 0.5; aligned panels integrate it exactly
    val, _ = integrate_panels(np.abs, -1.0, 1.0, breakpoints=[0.0])
    assert abs(val - 1.0) < 1e-14


def test_edges_contain_breakpoints():
    edges = build_edges(0.0, 1.0, [0.3, 0.7], 8)
    assert {0.3, 0.7} <= set(np.round(edges, 12))


def test_nonconvergence_raises():
    rng = np.random.default_rng(0)

    def noisy(x):
        return rng.standard_normal(len(x))

    with pytest.raises(QuadratureError):
        integrate_panels(noisy, 0.0, 1.0, q=QuadratureScheme(tol=1e-12,
                                                             max_refine=3))


def test_box_integration_2d():
    val, _ = integrate_box(lambda p: p[:, 0] * p[:, 1] ** 2,
                           [0.0, 0.0], [1.0, 2.0])
    assert abs(val - 0.5 * 8 / 3) < 1e-12


def test_sphere_average_of_projected_square():
    # mean of |p.e|^2 over the sphere is |p|^2/d
    p = np.array([0.3, -1.1])
    dirs, w = sphere_directions(2, QuadratureScheme())
    avg = np.sum(np.abs(dirs @ p) ** 2 * w) / sphere_area(2)
    assert abs(avg - (p @ p) / 2) < 1e-12
    p3 = np.array([0.3, -1.1, 0.7])
    dirs, w = sphere_directions(3, QuadratureScheme())
    avg = np.sum(np.abs(dirs @ p3) ** 2 * w) / sphere_area(3)
    assert abs(avg - (p3 @ p3) / 3) < 1e-12


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_ball_rule_volume(dim):
    pts, wts = ball_rule(dim, 1.0, QuadratureScheme())
    vol = {1: 2.0, 2: math.pi, 3: 4 * math.pi / 3}[dim]
    assert abs(np.sum(wts) - vol) < 1e-10
    assert np.all(np.linalg.norm(pts, axis=1) > 0)


def test_fit_order_recovers_slope():
    hs = [0.2, 0.1, 0.05, 0.025]
    errs = [7.0 * h ** 2 for h in hs]
    assert abs(fit_order(hs, errs) - 2.0) < 1e-12
    assert math.isnan(fit_order(hs, [0.0] * 4))
