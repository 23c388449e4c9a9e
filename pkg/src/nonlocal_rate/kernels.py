"""Convolution kernels, their rescalings, and the effective kernel.

A kernel is an even nonnegative weight with compact support, finite mass
and second moment, and a declared annulus on which it is bounded away
from zero.  Averaging its rescalings against the triangle weight yields
the effective kernel, which keeps the mass, shrinks the second moment by
the factor 1/6, and inherits positivity on a dimension-dependent ball.
"""

from __future__ import annotations

import math
from dataclasses import replace
from typing import Callable, Sequence

import numpy as np

from .quadrature import (QuadratureError, QuadratureScheme, build_edges,
                         gauss_rule, integrate_panels, sphere_area,
                         sphere_directions)


class KernelError(ValueError):
    """Kernel fails a structural requirement (evenness, positivity, moments)."""


def shrink_factor(dim: int) -> float:
    """Positivity shrink factor: 1 in dimension 2, (d-2)/(d-1) above."""
    if dim < 2:
        raise ValueError("the shrink factor is defined for dimension >= 2")
    return 1.0 if dim == 2 else (dim - 2) / (dim - 1)


def triangle_kernel(r) -> np.ndarray | float:
    """Triangle weight (1 - |r|)^+, a probability density on [-1, 1]."""
    out = np.maximum(0.0, 1.0 - np.abs(np.asarray(r, dtype=float)))
    return float(out) if np.ndim(r) == 0 else out


def triangle_kernel_scaled(r, h: float) -> np.ndarray | float:
    """Rescaled triangle weight J(r/h)/h; unit mass for every h > 0."""
    if h <= 0:
        raise ValueError(f"scale must be positive, got {h}")
    return triangle_kernel(np.asarray(r, dtype=float) / h) / h


def ball_volume(dim: int) -> float:
    return {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}[dim]


class Kernel:
    """Even nonnegative weight on R^d with compact support.

    Parameters
    ----------
    dim : spatial dimension.
    evaluator : vectorized map from points (n, d) to weights (n,).
    support_radius : radius outside which the kernel vanishes.
    annulus : pair (r0, r1) on which the kernel is bounded below.
    floor : declared lower bound of the kernel on the annulus.
    radial_profile : optional closed-form profile r -> weight; enables the
        fast radial paths.
    radial_breakpoints : radii where the profile kinks or jumps (panel
        alignment for every radial quadrature).
    """

    def __init__(self, dim: int, evaluator: Callable, support_radius: float,
                 annulus: tuple[float, float], floor: float,
                 radial_profile: Callable | None = None,
                 radial_breakpoints: Sequence[float] = (),
                 name: str = "kernel", params: dict | None = None):
        if dim not in (1, 2, 3):
            raise KernelError(f"unsupported dimension {dim}")
        if not (support_radius > 0 and math.isfinite(support_radius)):
            raise KernelError("support radius must be finite and positive")
        r0, r1 = annulus
        if not (0.0 <= r0 < r1 <= support_radius):
            raise KernelError(f"bad positivity annulus ({r0}, {r1})")
        if dim >= 2 and not r0 < shrink_factor(dim) * r1:
            raise KernelError(
                f"annulus too thin: need r0 < {shrink_factor(dim)} * r1, "
                f"got r0={r0}, r1={r1}")
        self.dim = dim
        self._eval = evaluator
        self.support_radius = float(support_radius)
        self.annulus = (float(r0), float(r1))
        self.floor = float(floor)
        self._profile = radial_profile
        self.radial_breakpoints = sorted(
            {float(b) for b in radial_breakpoints if 0.0 < b <= support_radius})
        self.name = name
        self.params = dict(params or {})
        self.mass, self.second_moment = self._moments()

    @property
    def is_radial(self) -> bool:
        return self._profile is not None

    def __call__(self, z) -> np.ndarray:
        pts = np.asarray(z, dtype=float)
        if pts.ndim == 0:
            pts = pts.reshape(1, 1)
        elif pts.ndim == 1:
            pts = pts[None, :] if self.dim > 1 else pts[:, None]
        r = np.linalg.norm(pts, axis=-1)
        out = np.zeros(pts.shape[0])
        ok = r <= self.support_radius
        if np.any(ok):
            out[ok] = np.asarray(self._eval(pts[ok]), dtype=float)
        return out

    def profile(self, r) -> np.ndarray:
        if self._profile is None:
            raise KernelError(f"kernel '{self.name}' has no radial profile")
        rr = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.zeros_like(rr)
        ok = rr <= self.support_radius
        out[ok] = np.asarray(self._profile(rr[ok]), dtype=float)
        return out

    def _moments(self) -> tuple[float, float]:
        q = QuadratureScheme(tol=1e-12, panels_hint=16)
        R = self.support_radius
        if self.is_radial:
            area = sphere_area(self.dim)
            m, _ = integrate_panels(
                lambda r: self.profile(r) * r ** (self.dim - 1), 0.0, R,
                breakpoints=self.radial_breakpoints, q=q)
            s, _ = integrate_panels(
                lambda r: self.profile(r) * r ** (self.dim + 1), 0.0, R,
                breakpoints=self.radial_breakpoints, q=q)
            return area * m, area * s
        dirs, wd = sphere_directions(self.dim, QuadratureScheme(angular_nodes=64,
                                                                polar_nodes=24))
        m_parts, s_parts = [], []
        for e, w in zip(dirs, wd):
            mi, _ = integrate_panels(
                lambda r: self(r[:, None] * e[None, :]) * r ** (self.dim - 1),
                0.0, R, breakpoints=self.radial_breakpoints, q=q)
            si, _ = integrate_panels(
                lambda r: self(r[:, None] * e[None, :]) * r ** (self.dim + 1),
                0.0, R, breakpoints=self.radial_breakpoints, q=q)
            m_parts.append(w * mi)
            s_parts.append(w * si)
        return math.fsum(m_parts), math.fsum(s_parts)


def rescale(K: Kernel, h: float) -> Kernel:
    """Rescaled kernel z -> h^{-d} K(z/h); mass is preserved, support scales."""
    if h <= 0:
        raise ValueError(f"scale must be positive, got {h}")
    d = K.dim
    prof = None
    if K.is_radial:
        prof = lambda r: K.profile(r / h) / h ** d
    return Kernel(
        d, lambda z: K(np.asarray(z) / h) / h ** d, h * K.support_radius,
        (h * K.annulus[0], h * K.annulus[1]), K.floor / h ** d,
        radial_profile=prof,
        radial_breakpoints=[h * b for b in K.radial_breakpoints],
        name=f"{K.name}@{h}", params=dict(K.params, rescale=h))


def builtin_kernel(name: str, dim: int, r0: float = 0.25, r1: float = 1.0,
                   cutoff: float = 4.0) -> Kernel:
    """Built-in kernels: box, gaussian (truncated), annulus.

    The box and gaussian kernels have positivity radius reaching their
    bulk; the annulus kernel exercises the r0 > 0 branch of the
    effective-kernel floor.
    """
    if name == "box":
        c = 1.0 / ball_volume(dim)
        return Kernel(dim, lambda z: np.full(len(z), c), 1.0, (0.0, 1.0), c,
                      radial_profile=lambda r: np.full_like(r, c),
                      radial_breakpoints=[1.0], name="box", params={})
    if name == "gaussian":
        # truncated at |z| = cutoff; floor declared on B(0, cutoff/2)
        half = cutoff / 2.0
        return Kernel(dim, lambda z: np.exp(-np.sum(np.square(z), axis=-1)),
                      cutoff, (0.0, half), math.exp(-half * half),
                      radial_profile=lambda r: np.exp(-np.square(r)),
                      radial_breakpoints=[cutoff], name="gaussian",
                      params={"cutoff": cutoff})
    if name == "annulus":
        c = 1.0 / (ball_volume(dim) * (r1 ** dim - r0 ** dim))
        def prof(r):
            return np.where((r >= r0) & (r <= r1), c, 0.0)
        return Kernel(dim, lambda z: prof(np.linalg.norm(z, axis=-1)), r1,
                      (r0, r1), c, radial_profile=prof,
                      radial_breakpoints=[r0, r1], name="annulus",
                      params={"r0": r0, "r1": r1})
    raise KernelError(f"unknown kernel '{name}'; choices: box, gaussian, annulus")


def positivity_radius(K: Kernel) -> float:
    """Radius of the ball where the effective kernel stays positive.

    r1 itself in dimensions 1 and 2, shrunk by (d-2)/(d-1) above.
    """
    if K.dim <= 2:
        return K.annulus[1]
    return shrink_factor(K.dim) * K.annulus[1]


# -- effective kernel ---------------------------------------------------------


class _TailIntegral:
    """T(t) = int_t^R g(s) ds on geometrically graded, kink-aligned panels."""

    NODES = 16
    LEVELS = 60

    def __init__(self, g: Callable, R: float, breakpoints: Sequence[float]):
        edges = {R * 0.5 ** k for k in range(self.LEVELS + 1)}
        edges.update(b for b in breakpoints if 0.0 < b < R)
        self.edges = np.asarray(sorted(edges))
        self.g = g
        x, w = gauss_rule(self.NODES)
        half = 0.5 * np.diff(self.edges)
        mid = 0.5 * (self.edges[:-1] + self.edges[1:])
        pts = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        vals = np.asarray(g(pts), dtype=float).reshape(-1, self.NODES)
        panel = (vals * w[None, :]).sum(axis=1) * half
        # cumulative from the right: tail[i] = integral from edges[i] to R
        self.tail = np.concatenate([np.cumsum(panel[::-1])[::-1], [0.0]])

    def __call__(self, t: np.ndarray) -> np.ndarray:
        ta = np.clip(np.atleast_1d(np.asarray(t, dtype=float)),
                     self.edges[0], self.edges[-1])
        k = np.clip(np.searchsorted(self.edges, ta, side="right") - 1,
                    0, len(self.edges) - 2)
        right = self.edges[k + 1]
        gx, gw = gauss_rule(self.NODES)
        half = 0.5 * (right - ta)
        mid = 0.5 * (right + ta)
        pts = mid[:, None] + half[:, None] * gx[None, :]
        vals = np.asarray(self.g(pts.ravel()), dtype=float).reshape(-1, self.NODES)
        partial = (vals * gw[None, :]).sum(axis=1) * half
        return partial + self.tail[k + 1]


class EffectiveKernel:
    """Triangle-averaged rescalings of a base kernel.

    Built eagerly at construction: the radial path caches the two tail
    integrals of the profile that the scaling average reduces to, and the
    mass and second moment are integrated from the resulting profile.
    """

    def __init__(self, base: Kernel, q: QuadratureScheme | None = None):
        self.base = base
        self.dim = base.dim
        self.support_radius = base.support_radius
        q = q or QuadratureScheme()
        if base.is_radial:
            d = base.dim
            self._A = _TailIntegral(lambda s: s ** (d - 2) * base.profile(s),
                                    base.support_radius, base.radial_breakpoints)
            self._B = _TailIntegral(lambda s: s ** (d - 3) * base.profile(s),
                                    base.support_radius, base.radial_breakpoints)
        else:
            self._A = self._B = None
        self.mass, self.second_moment = self._moments(q)

    def profile(self, r) -> np.ndarray:
        """Radial values of the effective kernel (radial base only)."""
        if self._A is None:
            raise KernelError("effective kernel of a non-radial base has no profile")
        rr = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.zeros_like(rr)
        ok = (rr > 0) & (rr < self.support_radius)
        if np.any(ok):
            ro = rr[ok]
            out[ok] = 2.0 * (self._A(ro) - ro * self._B(ro)) / ro ** (self.dim - 1)
        return out

    def __call__(self, z) -> np.ndarray:
        pts = np.asarray(z, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :] if self.dim > 1 else pts[:, None]
        r = np.linalg.norm(pts, axis=-1)
        if self._A is not None:
            return self.profile(r)
        return np.array([self._direct_eval(p) for p in pts])

    def _direct_eval(self, z: np.ndarray) -> float:
        """Scaling average by direct adaptive quadrature in the scale variable."""
        rho = float(np.linalg.norm(z))
        R = self.support_radius
        if rho >= R:
            return 0.0
        if rho == 0.0:
            return 0.0
        lo = rho / R
        brk = {lo * 2.0 ** k for k in range(1, 40) if lo * 2.0 ** k < 1.0}
        brk.update(rho / b for b in self.base.radial_breakpoints if lo < rho / b < 1.0)
        d = self.dim

        def g(r):
            pts = (z[None, :] / r[:, None]) if d > 1 else (z[None] / r[:, None])
            return 2.0 * (1.0 - r) * r ** (-d) * self.base(pts)

        try:
            val, _ = integrate_panels(g, lo, 1.0, breakpoints=sorted(brk),
                                      q=QuadratureScheme(tol=1e-10, panels_hint=1))
        except QuadratureError as exc:
            raise QuadratureError(f"effective kernel failed at z={z!r}: {exc}") from exc
        return val

    def _moments(self, q: QuadratureScheme) -> tuple[float, float]:
        R = self.support_radius
        if self._A is not None:
            area = sphere_area(self.dim)
            brk = set(self.base.radial_breakpoints)
            brk.update(R * 0.5 ** k for k in range(1, 40))
            qq = replace(q, tol=1e-11, panels_hint=1, max_refine=6)
            m, _ = integrate_panels(
                lambda r: self.profile(r) * r ** (self.dim - 1), 0.0, R,
                breakpoints=sorted(brk), q=qq)
            s, _ = integrate_panels(
                lambda r: self.profile(r) * r ** (self.dim + 1), 0.0, R,
                breakpoints=sorted(brk), q=qq)
            return area * m, area * s
        dirs, wd = sphere_directions(self.dim, q)
        m_parts, s_parts = [], []
        for e, w in zip(dirs, wd):
            def along(r, e=e):
                return np.array([self._direct_eval(ri * e) for ri in r])
            mi, _ = integrate_panels(lambda r: along(r) * r ** (self.dim - 1),
                                     0.0, R, q=replace(q, tol=1e-9))
            si, _ = integrate_panels(lambda r: along(r) * r ** (self.dim + 1),
                                     0.0, R, q=replace(q, tol=1e-9))
            m_parts.append(w * mi)
            s_parts.append(w * si)
        return math.fsum(m_parts), math.fsum(s_parts)


def effective_kernel(K: Kernel, q: QuadratureScheme | None = None) -> EffectiveKernel:
    """Average the rescalings of K against the triangle weight."""
    return EffectiveKernel(K, q)


def effective_kernel_lower_bound(K: Kernel, z) -> np.ndarray | float:
    """Closed-form floor of the effective kernel inside the positivity ball.

    Uses the declared annulus (r0, r1) and floor k of the base kernel;
    logarithmic form in dimensions 1-2, power form above.  Zero exactly at
    |z| = r1 (empty range); radii beyond r1 are rejected.
    """
    za = np.asarray(z, dtype=float)
    scalar_in = (K.dim == 1 and za.ndim == 0) or (K.dim > 1 and za.ndim == 1)
    if K.dim == 1:
        rho = np.abs(za).reshape(-1)
    else:
        rho = np.linalg.norm(np.atleast_2d(za), axis=-1)
    r0, r1 = K.annulus
    if np.any(rho > r1 * (1 + 1e-12)):
        raise ValueError(f"lower bound only valid for |z| <= r1 = {r1}")
    k = K.floor
    M = np.maximum(r0, rho)
    d = K.dim
    # the origin is a measure-zero limit point: the formulas below give the
    # correct (possibly infinite) limit there through errstate
    with np.errstate(divide="ignore", invalid="ignore"):
        if d == 1:
            val = 2.0 * k * (np.log(r1 / M) - rho * (1.0 / M - 1.0 / r1))
        elif d == 2:
            val = 2.0 * k * ((r1 - M) / rho - np.log(r1 / M))
        else:
            integ = ((r1 ** (d - 1) - M ** (d - 1)) / (d - 1)
                     - rho * (r1 ** (d - 2) - M ** (d - 2)) / (d - 2))
            val = 2.0 * k * integ / rho ** (d - 1)
    val = np.where(rho >= r1, 0.0, val)
    return float(val[0]) if scalar_in else val


def positivity_grid(K: Kernel, n: int = 200) -> np.ndarray:
    """Deterministic sample points filling the positivity ball, origin excluded.

    Returns at least n points covering all radii up to just inside the
    positivity radius.
    """
    R = positivity_radius(K)
    d = K.dim
    if d == 1:
        radii = R * (np.arange(1, n + 1) - 0.5) / n
        signs = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
        return (radii * signs)[:, None]
    n_dir = max(8, int(math.isqrt(n)))
    n_rad = int(math.ceil(n / n_dir))
    radii = R * (np.arange(1, n_rad + 1) - 0.5) / n_rad
    if d == 2:
        th = 2.0 * np.pi * (np.arange(n_dir) + 0.3) / n_dir
        dirs = np.stack([np.cos(th), np.sin(th)], axis=-1)
    else:
        golden = math.pi * (3.0 - math.sqrt(5.0))
        i = np.arange(n_dir)
        zc = 1.0 - 2.0 * (i + 0.5) / n_dir
        rr = np.sqrt(1.0 - zc ** 2)
        dirs = np.stack([rr * np.cos(golden * i), rr * np.sin(golden * i), zc], axis=-1)
    return (radii[:, None, None] * dirs[None, :, :]).reshape(-1, d)


def validate_kernel(K: Kernel, n_grid: int = 64, even_tol: float = 1e-9) -> dict:
    """Check kernel assumptions by sampling; raise KernelError on violation.

    Returns a report with the computed moments, the estimated positivity
    floor (grid minimum standing in for the essential infimum, spacing
    declared), and the evenness check.
    """
    R = K.support_radius
    rng_pts = _even_check_points(K.dim, R, n_grid)
    diff = np.abs(K(rng_pts) - K(-rng_pts))
    scale = max(1.0, float(np.max(np.abs(K(rng_pts)))))
    even_ok = bool(np.max(diff) <= even_tol * scale)
    r0, r1 = K.annulus
    ann_pts, spacing = _annulus_grid(K.dim, r0, r1, n_grid)
    floor_est = float(np.min(K(ann_pts)))
    report = {
        "name": K.name,
        "dim": K.dim,
        "mass": K.mass,
        "second_moment": K.second_moment,
        "support_radius": R,
        "annulus": [r0, r1],
        "floor_declared": K.floor,
        "floor_estimated": floor_est,
        "floor_grid_spacing": spacing,
        "sigma_d": shrink_factor(K.dim) if K.dim >= 2 else None,
        "positivity_radius": positivity_radius(K),
        "even_ok": even_ok,
        "even_max_gap": float(np.max(diff)),
    }
    if not even_ok:
        raise KernelError(f"kernel '{K.name}' is not even: max gap {np.max(diff):.3e}")
    if not math.isfinite(K.mass) or not math.isfinite(K.second_moment):
        raise KernelError(f"kernel '{K.name}' has non-finite moments")
    if floor_est <= 0:
        raise KernelError(f"kernel '{K.name}' vanishes on its positivity annulus")
    if K.dim >= 2 and not r0 < shrink_factor(K.dim) * r1:
        raise KernelError("annulus violates the shrink-factor constraint")
    return report


def _even_check_points(dim: int, R: float, n: int) -> np.ndarray:
    # deterministic low-discrepancy-ish points inside the support ball
    i = np.arange(1, n + 1, dtype=float)
    radii = R * (i - 0.5) / n
    if dim == 1:
        return radii[:, None] * np.where(i[:, None] % 2 == 0, 1.0, -1.0)
    if dim == 2:
        th = 2.399963229728653 * i
        return radii[:, None] * np.stack([np.cos(th), np.sin(th)], axis=-1)
    zc = np.cos(2.0 * i)
    rr = np.sqrt(1.0 - zc ** 2)
    th = 2.399963229728653 * i
    return radii[:, None] * np.stack([rr * np.cos(th), rr * np.sin(th), zc], axis=-1)


def _annulus_grid(dim: int, r0: float, r1: float, n: int) -> tuple[np.ndarray, float]:
    inner = r0 if r0 > 0 else r1 / n
    radii = np.linspace(inner + (r1 - inner) / (2 * n), r1 - (r1 - inner) / (2 * n), n)
    spacing = float(radii[1] - radii[0]) if n > 1 else r1 - inner
    if dim == 1:
        pts = np.concatenate([radii, -radii])[:, None]
        return pts, spacing
    dirs, _ = sphere_directions(dim, QuadratureScheme(angular_nodes=16, polar_nodes=8))
    pts = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, dim)
    return pts, spacing
