"""One-dimensional rate energy, its local limit, and the bounds around it.

The rate energy compares a function with its forward moving averages at
window h and rescales by 1/h^2; as h shrinks it approaches a curvature-
weighted Dirichlet energy with the universal prefactor 1/24.  Strong
convexity yields computable lower bounds (a triangle-kernel quadratic
form and a duality form for explicit test functions), bounded curvature
an upper bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .fields import ScalarField, _bump_val
from .integrands import ConvexIntegrand, averaged_curvature
from .kernels import triangle_kernel
from .quadrature import (QuadratureReport, QuadratureScheme, fit_order,
                         integrate_iterated, integrate_panels)


@dataclass
class Energy1DResult:
    """Value of a 1-D energy with its quadrature report; h = 0 is the limit."""

    value: float
    h: float
    report: QuadratureReport
    interval: tuple[float, float]

    def csv_row(self) -> tuple[float, float, float]:
        return (self.h, self.value, self.report.est_error)


@dataclass
class DualTestFunction:
    """Smooth compactly supported test function on the (x, y) plane."""

    fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    box: tuple[tuple[float, float], tuple[float, float]]
    name: str = "phi"

    def __call__(self, x, y) -> np.ndarray:
        xa = np.asarray(x, dtype=float)
        ya = np.asarray(y, dtype=float)
        (x0, x1), (y0, y1) = self.box
        inside = (xa >= x0) & (xa <= x1) & (ya >= y0) & (ya <= y1)
        return np.where(inside, self.fn(xa, ya), 0.0)


def _window_breakpoints(u: ScalarField, h: float, lo: float, hi: float) -> list[float]:
    """Kinks of x -> (u(x), moving average of u at x): field kinks and their
    left-shifts by the window length."""
    base = set(u.breakpoints[0])
    pts = set()
    for k in base:
        pts.add(k)
        pts.add(k - h)
    return sorted(p for p in pts if lo < p < hi)


def rate_energy(u: ScalarField, fi: ConvexIntegrand, h: float,
                q: QuadratureScheme | None = None,
                on_fail: str = "raise") -> Energy1DResult:
    """Second-order discrepancy between u and its window-h moving averages.

    Integrates [f(u) - f(avg)] / h^2 over the support extended one window
    to the left, where the average is still fed by the support.
    """
    if h <= 0:
        raise ValueError(f"window length must be positive, got {h}")
    q = q or QuadratureScheme()
    a, b = u.interval()

    def integrand(x):
        return fi.f(u(x)) - fi.f(u.moving_avg(x, h))

    val, rep = integrate_panels(integrand, a - h, b,
                                breakpoints=_window_breakpoints(u, h, a - h, b),
                                q=q, on_fail=on_fail)
    rep.est_error /= h ** 2
    return Energy1DResult(val / h ** 2, h, rep, (a, b))


def limit_energy(u: ScalarField, fi: ConvexIntegrand,
                 q: QuadratureScheme | None = None) -> Energy1DResult:
    """Local limit: curvature-weighted Dirichlet energy with prefactor 1/24."""
    q = q or QuadratureScheme()
    a, b = u.interval()

    def integrand(x):
        du = u.grad(x)[:, 0]
        return fi.f2(u(x)) * du * du

    val, rep = integrate_panels(integrand, a, b,
                                breakpoints=u.breakpoints[0], q=q)
    rep.est_error /= 24.0
    return Energy1DResult(val / 24.0, 0.0, rep, (a, b))


def _alignment_breakpoints(kinks: Sequence[float], h: float,
                           lo: float, hi: float) -> list[float]:
    """Outer-variable positions where two field kinks line up across the
    window: the only places the inner integral loses smoothness."""
    out = set()
    for ki in kinks:
        for kj in kinks:
            s = (ki - kj) / h
            if lo < s < hi:
                out.add(s)
    return sorted(out)


def triangle_kernel_bound(u: ScalarField, gamma: float, h: float,
                          q: QuadratureScheme | None = None) -> float:
    """Triangle-kernel quadratic form: a lower bound for the rate energy.

    (gamma/4) * double integral of J_h(r) ((u(y+r) - u(y)) / h)^2.  After
    r = h * rho the inner y-integrand kinks at positions that move with
    rho, so the two integrals are iterated rather than tensorized.
    """
    if h <= 0:
        raise ValueError(f"window length must be positive, got {h}")
    q = q or QuadratureScheme()
    a, b = u.interval()
    kinks = sorted(set(u.breakpoints[0]))
    inner_q = q.with_tol(q.tol * 0.1)

    def inner(rho: float) -> float:
        j = triangle_kernel(rho)
        if j == 0.0:
            return 0.0
        ybrk = sorted({k - s for k in kinks for s in (0.0, h * rho)
                       if a - h < k - s < b + h})

        def integrand(y):
            diff = (u(y + h * rho) - u(y)) / h
            return diff * diff

        val, _ = integrate_panels(integrand, a - h, b + h, breakpoints=ybrk,
                                  q=inner_q)
        return j * val

    val, _ = integrate_iterated(
        inner, -1.0, 1.0,
        breakpoints=sorted({0.0, *_alignment_breakpoints(kinks, h, -1.0, 1.0)}),
        q=q)
    return gamma / 4.0 * val


def dual_bound(u: ScalarField, fi: ConvexIntegrand, h: float,
               phi: DualTestFunction,
               q: QuadratureScheme | None = None) -> float:
    """Duality lower bound for the supplied test function.

    Integrates (u(y) - avg) / h * phi - phi^2 / (4 * lam) over x and the
    window average in y, with lam the averaged curvature between the
    moving average and u(y).  Any smooth compactly supported phi gives a
    valid lower bound for the rate energy.
    """
    if h <= 0:
        raise ValueError(f"window length must be positive, got {h}")
    q = q or QuadratureScheme()
    a, b = u.interval()
    (px0, px1), _ = phi.box
    lo = min(a - h, px0)
    hi = max(b, px1)
    kinks = sorted(set(u.breakpoints[0]))
    inner_q = q.with_tol(q.tol * 0.1)

    def inner(s: float) -> float:
        xbrk = sorted({p for p in (px0, px1,
                                   *(k - off for k in kinks for off in (0.0, h, h * s)))
                       if lo < p < hi})

        def integrand(x):
            y = x + h * s
            avg = u.moving_avg(x, h)
            uy = u(y)
            pv = phi(x, y)
            lam = averaged_curvature(fi, avg, uy)
            return (uy - avg) / h * pv - pv * pv / (4.0 * lam)

        val, _ = integrate_panels(integrand, lo, hi, breakpoints=xbrk, q=inner_q)
        return val

    val, _ = integrate_iterated(
        inner, 0.0, 1.0,
        breakpoints=_alignment_breakpoints(kinks, h, 0.0, 1.0), q=q)
    return val


def curvature_upper_bound(u: ScalarField, fi: ConvexIntegrand,
                          q: QuadratureScheme | None = None) -> float:
    """Upper bound (c/2) * ||u'||^2 available when f'' is bounded by c."""
    if fi.f2_upper is None:
        raise ValueError(f"integrand '{fi.name}' declares no curvature ceiling")
    q = q or QuadratureScheme()
    a, b = u.interval()

    def integrand(x):
        du = u.grad(x)[:, 0]
        return du * du

    val, _ = integrate_panels(integrand, a, b, breakpoints=u.breakpoints[0], q=q)
    return fi.f2_upper / 2.0 * val


@dataclass
class ConvergenceTable:
    """Window sweep of |rate energy - limit| with a fitted decay order."""

    rows: list[tuple[float, float]]
    limit_value: float
    values: list[float]
    fitted_order: float = field(init=False)

    def __post_init__(self):
        self.fitted_order = fit_order([r[0] for r in self.rows],
                                      [r[1] for r in self.rows])


def convergence_table(u: ScalarField, fi: ConvexIntegrand,
                      h_list: Sequence[float],
                      q: QuadratureScheme | None = None) -> ConvergenceTable:
    """Tabulate |E_h - E_0| over a window sweep and fit the decay order."""
    if len(h_list) == 0:
        raise ValueError("empty window sweep")
    q = q or QuadratureScheme()
    e0 = limit_energy(u, fi, q).value
    rows, values = [], []
    for h in h_list:
        eh = rate_energy(u, fi, h, q).value
        rows.append((h, abs(eh - e0)))
        values.append(eh)
    return ConvergenceTable(rows, e0, values)


def bundled_test_functions(interval: tuple[float, float], h: float,
                           amplitude: float = 1.0) -> list[DualTestFunction]:
    """Five smooth test functions adapted to a support interval and window.

    Shapes follow the leading behavior of u(y) - avg across the window
    (linear in the window coordinate), plus oscillatory and shifted
    variants; all are smooth with compact support, so each one yields a
    valid duality lower bound.
    """
    a, b = interval
    mid, rad = 0.5 * (a + b), 0.5 * (b - a)

    def eta(x):
        return _bump_val((x - mid) / rad)

    def eta_narrow(x):
        return _bump_val((x - (a + 0.35 * (b - a))) / (0.25 * (b - a)))

    def window(s):
        return _bump_val(2.0 * s - 1.0)

    def make(fn, name):
        return DualTestFunction(fn, ((a, b), (a, b + h)), name=name)

    def s_of(x, y):
        return (y - x) / h

    return [
        make(lambda x, y: amplitude * 4.0 * eta(x) * window(s_of(x, y))
             * (s_of(x, y) - 0.5), "linear-window"),
        make(lambda x, y: amplitude * 0.5 * eta(x) * window(s_of(x, y))
             * (s_of(x, y) - 0.5), "linear-window-soft"),
        make(lambda x, y: amplitude * eta(x) * window(s_of(x, y))
             * np.sin(2.0 * np.pi * s_of(x, y)), "oscillatory"),
        make(lambda x, y: amplitude * 4.0 * eta_narrow(x) * window(s_of(x, y))
             * (s_of(x, y) - 0.5), "narrow-window"),
        make(lambda x, y: amplitude * 6.0 * eta(x) * window(s_of(x, y)) ** 2
             * (s_of(x, y) ** 2 - s_of(x, y) + 1.0 / 6.0), "legendre2"),
    ]
