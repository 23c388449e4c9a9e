"""Strongly convex integrands and their averaged curvature weight.

Every integrand is an even C^2 function with f(0) = f'(0) = 0 and a
uniform curvature floor gamma > 0; the floor powers all lower-bound
inequalities, and the optional curvature ceiling powers the upper ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .quadrature import gauss_rule

THETA_NODES = 32  # exact for polynomial curvature up to degree 63


@dataclass(frozen=True)
class ConvexIntegrand:
    """Even convex function with first/second derivative and convexity range.

    gamma is a certified lower bound on f''; f2_upper, when present, is an
    upper bound on f''.
    """

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    f1: Callable[[np.ndarray], np.ndarray]
    f2: Callable[[np.ndarray], np.ndarray]
    gamma: float
    f2_upper: float | None = None

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError(f"curvature floor must be positive, got {self.gamma}")


def builtin_integrand(name: str) -> ConvexIntegrand:
    """Built-in integrands: quadratic, cosh, quartic."""
    if name == "quadratic":
        return ConvexIntegrand(
            "quadratic",
            f=lambda t: np.square(t),
            f1=lambda t: 2.0 * np.asarray(t, dtype=float),
            f2=lambda t: np.full_like(np.asarray(t, dtype=float), 2.0),
            gamma=2.0, f2_upper=2.0)
    if name == "cosh":
        return ConvexIntegrand(
            "cosh",
            f=lambda t: np.cosh(t) - 1.0,
            f1=np.sinh,
            f2=np.cosh,
            gamma=1.0)
    if name == "quartic":
        return ConvexIntegrand(
            "quartic",
            f=lambda t: np.square(t) + np.power(t, 4) / 12.0,
            f1=lambda t: 2.0 * np.asarray(t, dtype=float) + np.power(t, 3) / 3.0,
            f2=lambda t: 2.0 + np.square(t),
            gamma=2.0)
    raise ValueError(f"unknown integrand '{name}'; choices: quadratic, cosh, quartic")


def averaged_curvature(fi: ConvexIntegrand, a, b) -> np.ndarray | float:
    """Weight lam(a, b) = int_0^1 (1 - th) f''((1 - th) a + th b) dth.

    Evaluated by Gauss-Legendre in th; always >= gamma / 2.  Together with
    f(b) - f(a) = f'(a)(b - a) + lam (b - a)^2 this is the exact
    second-order Taylor identity behind every energy lower bound.
    """
    aa = np.atleast_1d(np.asarray(a, dtype=float))
    bb = np.atleast_1d(np.asarray(b, dtype=float))
    aa, bb = np.broadcast_arrays(aa, bb)
    x, w = gauss_rule(THETA_NODES)
    theta = 0.5 * (x + 1.0)
    wt = 0.5 * w * (1.0 - theta)
    args = (1.0 - theta)[..., :] * aa[..., None] + theta[..., :] * bb[..., None]
    vals = fi.f2(args)
    out = vals @ wt
    if np.ndim(a) == 0 and np.ndim(b) == 0:
        return float(out.reshape(-1)[0])
    return out
