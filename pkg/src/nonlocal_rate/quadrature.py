"""Quadrature engine shared by every integral in the package.

Composite Gauss-Legendre panels with optional uniform refinement are the
main path; panel edges are always aligned to the integrand's known kinks,
so refinement is only needed to certify the error estimate.  Reductions
are performed with math.fsum in a fixed order, which makes every result
independent of the worker count used to evaluate the integrand.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

# Fixed evaluation block size.  Chunking never depends on the thread count,
# so multi-threaded runs reproduce single-threaded results bit for bit.
_EVAL_BLOCK = 1 << 14


class QuadratureError(RuntimeError):
    """Raised when an integral fails to converge within its budget."""


@dataclass
class QuadratureScheme:
    """Discretization contract for every integral in the package.

    tol / max_refine drive the panel-halving loop; the node counts fix the
    tensor rules used for sphere and ball integrals; slice_* control the
    slicing decomposition; mc_* seed the Monte Carlo cross-check backend.
    """

    tol: float = 1e-8
    max_refine: int = 20
    nodes_per_panel: int = 16
    panels_hint: int = 8
    inner_avg_nodes: int = 16
    radial_nodes: int = 24
    angular_nodes: int = 32
    polar_nodes: int = 12
    slice_dx: float = 0.05
    slice_tol: float = 1e-6
    slice_max_refine: int = 6
    mc_samples: int = 100_000
    mc_strata: int = 16
    seed: int | None = None
    threads: int = 1
    node_budget: int = 4_000_000

    def with_tol(self, tol: float, max_refine: int | None = None) -> "QuadratureScheme":
        return replace(self, tol=tol,
                       max_refine=self.max_refine if max_refine is None else max_refine)


@dataclass
class QuadratureReport:
    """Resolution and error bookkeeping attached to every energy result."""

    nodes: int = 0
    panels: int = 0
    refinements: int = 0
    est_error: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"nodes": self.nodes, "panels": self.panels,
               "refinements": self.refinements, "est_error": self.est_error}
        out.update(self.extra)
        return out


_GAUSS_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1]."""
    if n not in _GAUSS_CACHE:
        _GAUSS_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GAUSS_CACHE[n]


def eval_blocked(fn: Callable[[np.ndarray], np.ndarray], pts: np.ndarray,
                 threads: int = 1) -> np.ndarray:
    """Evaluate a pure vectorized integrand, optionally across a thread pool.

    The block partition is fixed, so the returned array is identical for
    every thread count.
    """
    n = pts.shape[0]
    if n == 0:
        return np.zeros(0)
    if threads <= 1 or n <= _EVAL_BLOCK:
        return np.asarray(fn(pts), dtype=float)
    blocks = [pts[i:i + _EVAL_BLOCK] for i in range(0, n, _EVAL_BLOCK)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(fn, blocks))
    return np.concatenate([np.asarray(p, dtype=float) for p in parts])


def ordered_parallel_map(fn: Callable, items: Sequence, threads: int = 1) -> list:
    """Map fn over items, preserving item order in the result list."""
    if threads <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def build_edges(lo: float, hi: float, breakpoints: Sequence[float] = (),
                panels_hint: int = 8) -> np.ndarray:
    """Panel edges on [lo, hi] aligned to the given breakpoints.

    Each breakpoint segment is subdivided so the total panel count is at
    least panels_hint and no panel is much longer than (hi-lo)/panels_hint.
    """
    if not hi > lo:
        raise ValueError(f"empty integration interval [{lo}, {hi}]")
    cuts = sorted({lo, hi, *(b for b in breakpoints if lo < b < hi)})
    target = (hi - lo) / max(panels_hint, 1)
    edges = [lo]
    for left, right in zip(cuts[:-1], cuts[1:]):
        m = max(1, int(math.ceil((right - left) / target - 1e-12)))
        step = (right - left) / m
        edges.extend(left + step * k for k in range(1, m + 1))
    edges[-1] = hi
    return np.asarray(edges)


def _halve(edges: np.ndarray) -> np.ndarray:
    mids = 0.5 * (edges[:-1] + edges[1:])
    out = np.empty(2 * len(edges) - 1)
    out[0::2] = edges
    out[1::2] = mids
    return out


def panel_points(edges: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """All Gauss points and weights for the composite rule over the panels."""
    x, w = gauss_rule(n)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    pts = mid[:, None] + half[:, None] * x[None, :]
    wts = half[:, None] * w[None, :]
    return pts.ravel(), wts.ravel()


def _panel_sum(vals: np.ndarray, wts: np.ndarray, n: int) -> float:
    per_panel = (vals * wts).reshape(-1, n).sum(axis=1)
    return math.fsum(per_panel.tolist())


def integrate_panels(fn, lo: float, hi: float, *, breakpoints: Sequence[float] = (),
                     q: QuadratureScheme | None = None,
                     on_fail: str = "raise") -> tuple[float, QuadratureReport]:
    """Adaptively integrate fn over [lo, hi] with kink-aligned GL panels.

    Panels are halved uniformly until the relative change drops below q.tol
    or the refinement/node budget is exhausted.  `on_fail="report"` returns
    the last value with its error estimate instead of raising.
    """
    q = q or QuadratureScheme()
    n = q.nodes_per_panel
    edges = build_edges(lo, hi, breakpoints, q.panels_hint)
    prev = None
    refinements = 0
    for _ in range(q.max_refine + 1):
        pts, wts = panel_points(edges, n)
        if pts.size > q.node_budget:
            if on_fail == "report" and prev is not None:
                break
            raise QuadratureError(
                f"node budget exceeded on [{lo}, {hi}] "
                f"({pts.size} nodes, est change {abs((prev or 0.0)):.3e})")
        vals = eval_blocked(fn, pts, q.threads)
        val = _panel_sum(vals, wts, n)
        if prev is not None:
            err = abs(val - prev)
            if err <= q.tol * max(1.0, abs(val)):
                rep = QuadratureReport(nodes=pts.size, panels=len(edges) - 1,
                                       refinements=refinements, est_error=err)
                return val, rep
        prev = val
        edges = _halve(edges)
        refinements += 1
    err = abs(val - prev) if prev is not None and refinements else math.inf
    if on_fail == "report" or refinements == 0:
        rep = QuadratureReport(nodes=pts.size, panels=len(edges) - 1,
                               refinements=refinements, est_error=err)
        return val, rep
    raise QuadratureError(
        f"no convergence on [{lo}, {hi}] after {refinements} refinements "
        f"(last change {err:.3e}, tol {q.tol:.1e})")


def box_points(axis_edges: list[np.ndarray], n: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss points/weights for a d-dimensional panelized box."""
    per_axis = [panel_points(e, n) for e in axis_edges]
    grids = np.meshgrid(*[p for p, _ in per_axis], indexing="ij")
    wgrids = np.meshgrid(*[w for _, w in per_axis], indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    wts = np.ones(pts.shape[0])
    for wg in wgrids:
        wts *= wg.ravel()
    return pts, wts


def integrate_box(fn, lows: Sequence[float], highs: Sequence[float], *,
                  axis_breakpoints: Sequence[Sequence[float]] | None = None,
                  q: QuadratureScheme | None = None, nodes_per_axis: int | None = None,
                  panels_hint: int | None = None,
                  on_fail: str = "raise") -> tuple[float, QuadratureReport]:
    """Adaptive tensor-product integration over an axis-aligned box."""
    q = q or QuadratureScheme()
    d = len(lows)
    n = nodes_per_axis or (q.nodes_per_panel if d == 1 else max(4, q.nodes_per_panel // 2))
    hint = panels_hint or max(2, q.panels_hint // (2 ** (d - 1)))
    brk = axis_breakpoints or [()] * d
    axis_edges = [build_edges(lows[i], highs[i], brk[i], hint) for i in range(d)]
    prev = None
    refinements = 0
    for _ in range(q.max_refine + 1):
        pts, wts = box_points(axis_edges, n)
        if pts.size > q.node_budget:
            if on_fail == "report" and prev is not None:
                break
            raise QuadratureError(f"node budget exceeded on box ({pts.shape[0]} points)")
        vals = eval_blocked(fn, pts, q.threads)
        val = math.fsum((vals * wts).tolist())
        if prev is not None:
            err = abs(val - prev)
            if err <= q.tol * max(1.0, abs(val)):
                rep = QuadratureReport(nodes=pts.shape[0],
                                       panels=int(np.prod([len(e) - 1 for e in axis_edges])),
                                       refinements=refinements, est_error=err)
                return val, rep
        prev = val
        axis_edges = [_halve(e) for e in axis_edges]
        refinements += 1
    err = abs(val - prev) if prev is not None and refinements else math.inf
    if on_fail == "report" or refinements == 0:
        rep = QuadratureReport(nodes=pts.shape[0],
                               panels=int(np.prod([len(e) - 1 for e in axis_edges])),
                               refinements=refinements, est_error=err)
        return val, rep
    raise QuadratureError(f"no convergence on box after {refinements} refinements "
                          f"(last change {err:.3e})")


def integrate_iterated(inner_value, lo: float, hi: float, *,
                       breakpoints: Sequence[float] = (),
                       q: QuadratureScheme | None = None,
                       on_fail: str = "raise") -> tuple[float, QuadratureReport]:
    """Adaptive outer integral whose integrand is itself an inner integral.

    `inner_value(t)` returns the inner integral at outer node t.  Use when
    the inner integrand has kinks at positions that depend on the outer
    variable: the inner rule re-aligns its panels per node, which a tensor
    product cannot do.
    """
    q = q or QuadratureScheme()

    def outer(ts: np.ndarray) -> np.ndarray:
        return np.array([inner_value(float(t)) for t in ts])

    return integrate_panels(outer, lo, hi, breakpoints=breakpoints, q=q,
                            on_fail=on_fail)


def sphere_directions(dim: int, q: QuadratureScheme) -> tuple[np.ndarray, np.ndarray]:
    """Directions e and weights for the surface integral over the unit sphere.

    d=1 uses the two endpoints, d=2 a uniform midpoint rule in the angle,
    d=3 Gauss-Legendre in the cosine of the polar angle times a uniform
    azimuthal rule.  Weights sum to the sphere surface measure.
    """
    if dim == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if dim == 2:
        m = q.angular_nodes
        theta = 2.0 * np.pi * (np.arange(m) + 0.5) / m
        dirs = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        return dirs, np.full(m, 2.0 * np.pi / m)
    if dim == 3:
        mu, wmu = gauss_rule(q.polar_nodes)
        m = q.angular_nodes
        phi = 2.0 * np.pi * (np.arange(m) + 0.5) / m
        sin_t = np.sqrt(1.0 - mu ** 2)
        dirs = np.stack([
            np.outer(sin_t, np.cos(phi)).ravel(),
            np.outer(sin_t, np.sin(phi)).ravel(),
            np.outer(mu, np.ones(m)).ravel(),
        ], axis=-1)
        wts = np.outer(wmu, np.full(m, 2.0 * np.pi / m)).ravel()
        return dirs, wts
    raise ValueError(f"unsupported dimension {dim}")


def sphere_area(dim: int) -> float:
    """Surface measure of the unit sphere (2, 2*pi, 4*pi for d = 1, 2, 3)."""
    return {1: 2.0, 2: 2.0 * np.pi, 3: 4.0 * np.pi}[dim]


def radial_segments(R: float, breakpoints: Sequence[float] = ()) -> list[tuple[float, float]]:
    cuts = sorted({0.0, R, *(b for b in breakpoints if 0.0 < b < R)})
    return list(zip(cuts[:-1], cuts[1:]))


def ball_rule(dim: int, R: float, q: QuadratureScheme,
              breakpoints: Sequence[float] = ()) -> tuple[np.ndarray, np.ndarray]:
    """Tensor rule (points, weights) for integration over the ball B(0, R).

    Radial Gauss panels on (0, R] split at the given radii (kernel kinks)
    times a sphere rule; the weight carries the r^(d-1) Jacobian.  No node
    sits at r = 0.
    """
    segs = radial_segments(R, breakpoints)
    edges = np.asarray(sorted({e for s in segs for e in s}))
    r, wr = panel_points(edges, max(4, q.radial_nodes // max(1, len(segs))))
    dirs, wd = sphere_directions(dim, q)
    pts = r[:, None, None] * dirs[None, :, :]
    wts = (wr * r ** (dim - 1))[:, None] * wd[None, :]
    return pts.reshape(-1, dim), wts.ravel()


def geometric_radial_edges(R: float, levels: int = 36,
                           breakpoints: Sequence[float] = ()) -> np.ndarray:
    """Panel edges on (0, R] graded geometrically toward the origin.

    Resolves the integrable singularity that effective kernels carry at
    z = 0 (logarithmic in 1-D, |z|^{1-d} in higher dimension).
    """
    edges = {R * 0.5 ** k for k in range(levels + 1)}
    edges.add(R * 0.5 ** levels * 1e-3)
    edges.update(b for b in breakpoints if 0.0 < b < R)
    return np.asarray(sorted(edges))


def fit_order(hs: Sequence[float], errors: Sequence[float],
              last: int = 4) -> float:
    """Least-squares slope of log(error) against log(h) over the final points.

    Zero or non-finite errors are dropped; returns nan when fewer than two
    usable points remain.
    """
    h = np.asarray(hs, dtype=float)
    e = np.asarray(errors, dtype=float)
    keep = np.isfinite(e) & (e > 0.0)
    h, e = h[keep], e[keep]
    if len(h) > last:
        h, e = h[-last:], e[-last:]
    if len(h) < 2:
        return float("nan")
    slope = np.polyfit(np.log(h), np.log(e), 1)[0]
    return float(slope)
