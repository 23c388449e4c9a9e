"""Scalar fields on R^d: analytic and gridded representations.

A field knows its support box, evaluates to exactly zero outside it, and
carries optional closed-form derivatives; missing derivatives are
synthesized by centered differences.  One-dimensional fields additionally
expose an antiderivative so that moving averages are always computed as
exact differences of the cumulative integral, never by re-sampling.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .quadrature import build_edges, gauss_rule

FD_STEP_MIN = 1e-5
ORTHO_TOL = 1e-12


class FieldError(ValueError):
    """Invalid field construction or use (dimension, support, smoothness)."""


def _as_points(x, dim: int) -> np.ndarray:
    """Normalize input to coordinates: shape (n,) for d=1, (n, d) otherwise."""
    a = np.asarray(x, dtype=float)
    if dim == 1:
        if a.ndim == 2 and a.shape[1] == 1:
            return a[:, 0]
        return np.atleast_1d(a)
    if a.ndim == 1:
        if a.shape[0] != dim:
            raise FieldError(f"expected point in R^{dim}, got shape {a.shape}")
        return a[None, :]
    if a.ndim != 2 or a.shape[1] != dim:
        raise FieldError(f"expected points of shape (n, {dim}), got {a.shape}")
    return a


class ScalarField:
    """Real-valued function on R^d vanishing outside an axis-aligned box.

    Parameters
    ----------
    dim : spatial dimension (1, 2, or 3).
    values : vectorized evaluator; gets (n,) coordinates for d=1 or (n, d)
        points otherwise, returns (n,) values.  It is masked to zero
        outside the support box regardless of what it returns there.
    support : pair (lo, hi) of per-axis bounds.
    gradient, hessian : optional vectorized closed forms.
    breakpoints : per-axis kink locations used to align quadrature panels.
    antiderivative : optional closed-form cumulative integral (d=1 only).
    c2_smooth : declared twice-differentiability; gates the operations
        that need a trustworthy Hessian.
    """

    def __init__(self, dim, values, support, gradient=None, hessian=None,
                 breakpoints=None, antiderivative=None, kind="analytic",
                 c2_smooth=True, name="field", params=None, fd_step=None):
        if dim not in (1, 2, 3):
            raise FieldError(f"unsupported dimension {dim}")
        self.dim = dim
        self._values = values
        lo, hi = support
        self.lo = np.atleast_1d(np.asarray(lo, dtype=float))
        self.hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if self.lo.shape != (dim,) or self.hi.shape != (dim,) or np.any(self.lo >= self.hi):
            raise FieldError(f"bad support box lo={lo}, hi={hi}")
        self._gradient = gradient
        self._hessian = hessian
        self.kind = kind
        self.c2_smooth = c2_smooth
        self.name = name
        self.params = dict(params or {})
        self.fd_step = float(fd_step) if fd_step is not None else FD_STEP_MIN
        if breakpoints is None:
            breakpoints = [(self.lo[i], self.hi[i]) for i in range(dim)]
        self.breakpoints = [sorted(set(map(float, b))) for b in breakpoints]
        self._antiderivative = antiderivative
        self._antider_cache = None

    # -- evaluation ---------------------------------------------------------

    def _inside(self, pts: np.ndarray) -> np.ndarray:
        if self.dim == 1:
            return (pts >= self.lo[0]) & (pts <= self.hi[0])
        return np.all((pts >= self.lo) & (pts <= self.hi), axis=-1)

    def __call__(self, x) -> np.ndarray:
        pts = _as_points(x, self.dim)
        mask = self._inside(pts)
        out = np.zeros(pts.shape[0] if self.dim > 1 else pts.shape[0])
        if np.any(mask):
            sub = pts[mask]
            out[mask] = np.asarray(self._values(sub), dtype=float)
        return out

    def grad(self, x) -> np.ndarray:
        pts = _as_points(x, self.dim)
        if self._gradient is not None:
            mask = self._inside(pts)
            out = np.zeros(pts.shape if self.dim > 1 else (pts.shape[0], 1))
            if np.any(mask):
                g = np.asarray(self._gradient(pts[mask]), dtype=float)
                out[mask] = g.reshape(-1, self.dim)
            return out
        return self._fd_grad(pts)

    def _fd_grad(self, pts: np.ndarray) -> np.ndarray:
        d, h = self.dim, self.fd_step
        out = np.empty((pts.shape[0], d))
        for i in range(d):
            if d == 1:
                out[:, 0] = (self(pts + h) - self(pts - h)) / (2 * h)
            else:
                e = np.zeros(d)
                e[i] = h
                out[:, i] = (self(pts + e) - self(pts - e)) / (2 * h)
        return out

    def hess(self, x) -> np.ndarray:
        pts = _as_points(x, self.dim)
        d, h = self.dim, self.fd_step
        if self._hessian is not None:
            mask = self._inside(pts)
            out = np.zeros((pts.shape[0], d, d))
            if np.any(mask):
                out[mask] = np.asarray(self._hessian(pts[mask]), dtype=float).reshape(-1, d, d)
            return out
        if self._gradient is not None:
            # centered differences of the analytic gradient, then symmetrize
            out = np.empty((pts.shape[0], d, d))
            for j in range(d):
                if d == 1:
                    col = (self.grad(pts + h) - self.grad(pts - h)) / (2 * h)
                else:
                    e = np.zeros(d)
                    e[j] = h
                    col = (self.grad(pts + e) - self.grad(pts - e)) / (2 * h)
                out[:, :, j] = col
            return 0.5 * (out + np.swapaxes(out, 1, 2))
        return self._fd_hess_values(pts)

    def _fd_hess_values(self, pts: np.ndarray) -> np.ndarray:
        d, h = self.dim, self.fd_step
        out = np.empty((pts.shape[0], d, d))
        u0 = self(pts)
        for i in range(d):
            ei = np.zeros(d) if d > 1 else h
            if d > 1:
                ei[i] = h
            out[:, i, i] = (self(pts + ei) - 2 * u0 + self(pts - ei)) / h ** 2
            for j in range(i + 1, d):
                ej = np.zeros(d)
                ej[j] = h
                mixed = (self(pts + ei + ej) - self(pts + ei - ej)
                         - self(pts - ei + ej) + self(pts - ei - ej)) / (4 * h ** 2)
                out[:, i, j] = mixed
                out[:, j, i] = mixed
        return out

    @property
    def has_gradient(self) -> bool:
        return self._gradient is not None

    @property
    def has_hessian(self) -> bool:
        return self._hessian is not None

    def interval(self) -> tuple[float, float]:
        if self.dim != 1:
            raise FieldError("interval() requires a 1-D field")
        return float(self.lo[0]), float(self.hi[0])

    # -- antiderivative (1-D) -----------------------------------------------

    def antider(self, x) -> np.ndarray:
        """Cumulative integral U(x) of a 1-D field, with U(0) = 0 exactly."""
        if self.dim != 1:
            raise FieldError("antiderivative requires a 1-D field")
        if self._antiderivative is not None:
            return np.asarray(self._antiderivative(np.atleast_1d(np.asarray(x, float))),
                              dtype=float)
        if self._antider_cache is None:
            self._antider_cache = _PanelAntiderivative(self)
        return self._antider_cache(x)

    def moving_avg(self, x, h: float) -> np.ndarray:
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        return (self.antider(xa + h) - self.antider(xa)) / h


class _PanelAntiderivative:
    """Cumulative Gauss-Legendre integral of a 1-D field, cached per panel.

    Panels are aligned to the field's kinks and subdivided finely enough
    that the 16-node rule is exact to machine precision on smooth pieces.
    """

    NODES = 16
    MIN_PANELS = 256

    def __init__(self, u: ScalarField):
        a, b = u.interval()
        self.a, self.b = a, b
        self.u = u
        edges = build_edges(a, b, u.breakpoints[0], self.MIN_PANELS)
        x, w = gauss_rule(self.NODES)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        pts = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        vals = u(pts).reshape(-1, self.NODES)
        panel_ints = (vals * w[None, :]).sum(axis=1) * half
        self.edges = edges
        self.cum = np.concatenate([[0.0], np.cumsum(panel_ints)])
        self._t0 = self._raw(np.array([0.0]))[0]

    def _raw(self, x: np.ndarray) -> np.ndarray:
        xe = np.clip(x, self.a, self.b)
        k = np.clip(np.searchsorted(self.edges, xe, side="right") - 1,
                    0, len(self.edges) - 2)
        left = self.edges[k]
        gx, gw = gauss_rule(self.NODES)
        half = 0.5 * (xe - left)
        mid = 0.5 * (xe + left)
        pts = mid[:, None] + half[:, None] * gx[None, :]
        vals = self.u(pts.ravel()).reshape(-1, self.NODES)
        partial = (vals * gw[None, :]).sum(axis=1) * half
        return self.cum[k] + partial

    def __call__(self, x) -> np.ndarray:
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        return self._raw(xa) - self._t0


# -- grid fields -------------------------------------------------------------


def _multilinear(axes: list[np.ndarray], data: np.ndarray, pts: np.ndarray) -> np.ndarray:
    d = len(axes)
    idx, frac = [], []
    for i in range(d):
        ax = axes[i]
        coord = pts[:, i] if d > 1 else pts
        j = np.clip(np.searchsorted(ax, coord, side="right") - 1, 0, len(ax) - 2)
        idx.append(j)
        frac.append((coord - ax[j]) / (ax[j + 1] - ax[j]))
    out = np.zeros(pts.shape[0] if d > 1 else pts.shape[0])
    for corner in range(1 << d):
        weight = np.ones_like(out)
        loc = []
        for i in range(d):
            if corner >> i & 1:
                weight = weight * frac[i]
                loc.append(idx[i] + 1)
            else:
                weight = weight * (1.0 - frac[i])
                loc.append(idx[i])
        out += weight * data[tuple(loc)]
    return out


def grid_field(axes: Sequence[np.ndarray], data: np.ndarray, name: str = "grid") -> ScalarField:
    """Build a grid field from per-axis uniform coordinates and samples.

    Boundary samples must vanish (the field is zero outside its box); the
    interpolant is multilinear, so every grid node is a quadrature
    breakpoint.
    """
    axes = [np.asarray(a, dtype=float) for a in axes]
    dim = len(axes)
    data = np.asarray(data, dtype=float)
    if data.shape != tuple(len(a) for a in axes):
        raise FieldError(f"data shape {data.shape} does not match axes")
    if not np.all(np.isfinite(data)):
        raise FieldError("grid samples must be finite")
    dx = []
    for a in axes:
        if len(a) < 2:
            raise FieldError("each axis needs at least two nodes")
        steps = np.diff(a)
        if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
            raise FieldError("grid spacing must be uniform and positive")
        dx.append(float(steps[0]))
    for i in range(dim):
        first = np.take(data, 0, axis=i)
        last = np.take(data, -1, axis=i)
        if np.any(first != 0.0) or np.any(last != 0.0):
            raise FieldError("boundary samples must be zero")
    lo = [a[0] for a in axes]
    hi = [a[-1] for a in axes]
    fld = ScalarField(
        dim, lambda pts: _multilinear(axes, data, pts), (lo, hi),
        breakpoints=[list(a) for a in axes], kind="grid", c2_smooth=False,
        name=name, fd_step=max(FD_STEP_MIN, max(dx)))
    if dim == 1:
        cum = np.concatenate([[0.0],
                              np.cumsum(0.5 * (data[:-1] + data[1:]) * np.diff(axes[0]))])
        t0 = np.interp(0.0, axes[0], cum)
        fld._antiderivative = lambda x: np.interp(x, axes[0], cum) - t0
    fld._grid_axes = axes
    fld._grid_data = data
    return fld


def save_grid_csv(path, fld: ScalarField) -> None:
    """Write a grid field as CSV with header x0,...,x{d-1},value."""
    axes = getattr(fld, "_grid_axes", None)
    if axes is None:
        raise FieldError("only grid fields can be saved as CSV")
    data = fld._grid_data
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow([f"x{i}" for i in range(fld.dim)] + ["value"])
        for index in np.ndindex(*data.shape):
            row = [repr(float(axes[i][index[i]])) for i in range(fld.dim)]
            w.writerow(row + [repr(float(data[index]))])


def load_grid_csv(path) -> ScalarField:
    """Load a grid field saved by save_grid_csv, validating uniformity."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header[-1] != "value" or not all(h == f"x{i}" for i, h in enumerate(header[:-1])):
            raise FieldError(f"bad grid CSV header: {header}")
        dim = len(header) - 1
        rows = [[float(v) for v in row] for row in reader if row]
    arr = np.asarray(rows)
    axes = [np.unique(arr[:, i]) for i in range(dim)]
    shape = tuple(len(a) for a in axes)
    if len(rows) != int(np.prod(shape)):
        raise FieldError("grid CSV does not cover a full tensor grid")
    data = np.zeros(shape)
    pos = [dict((v, k) for k, v in enumerate(a)) for a in axes]
    for row in arr:
        loc = tuple(pos[i][row[i]] for i in range(dim))
        data[loc] = row[-1]
    return grid_field(axes, data, name="grid-csv")


# -- operations ---------------------------------------------------------------


def antiderivative(u: ScalarField) -> Callable[[np.ndarray], np.ndarray]:
    """Return the cumulative integral U(x) of a 1-D field (U(0) = 0)."""
    if u.dim != 1:
        raise FieldError("antiderivative requires a 1-D field")
    return u.antider


def moving_average(u: ScalarField, h: float, x) -> np.ndarray | float:
    """Average of u over the window [x, x+h], via the antiderivative."""
    if h <= 0:
        raise ValueError(f"window length must be positive, got {h}")
    out = u.moving_avg(x, h)
    return float(out[0]) if np.isscalar(x) else out


@dataclass
class LineSlice:
    """Restriction of a field to the line xi + t*z_hat.

    The direction is unit and the offset orthogonal to it; the slice
    vanishes outside the chord the line cuts through the support box.
    """

    base: ScalarField
    z_hat: np.ndarray
    xi: np.ndarray
    t_range: tuple[float, float] | None = field(default=None)

    def points(self, t) -> np.ndarray:
        ta = np.atleast_1d(np.asarray(t, dtype=float))
        return self.xi[None, :] + ta[:, None] * self.z_hat[None, :]

    def __call__(self, t) -> np.ndarray:
        return self.base(self.points(t))

    def derivative(self, t) -> np.ndarray:
        return self.base.grad(self.points(t)) @ self.z_hat

    def hits_support(self) -> bool:
        return self.t_range is not None

    def derivative_field(self) -> ScalarField:
        """The slice derivative as a 1-D field.

        Its antiderivative is the slice itself (up to the value at 0), so
        finite differences of the cumulative integral are exact.
        """
        if self.t_range is None:
            raise FieldError("line misses the support box")
        t0, t1 = self.t_range
        w0 = float(self(np.array([0.0]))[0])
        brk = _line_breakpoints(self.base, self.z_hat, self.xi, t0, t1)
        return ScalarField(
            1, lambda t: self.derivative(t), ((t0,), (t1,)),
            antiderivative=lambda t: self(t) - w0,
            breakpoints=[brk], c2_smooth=self.base.c2_smooth,
            name=f"slice:{self.base.name}")


def _line_box_range(lo, hi, p, z) -> tuple[float, float] | None:
    tmin, tmax = -math.inf, math.inf
    for i in range(len(lo)):
        if abs(z[i]) > 1e-15:
            t_a = (lo[i] - p[i]) / z[i]
            t_b = (hi[i] - p[i]) / z[i]
            if t_a > t_b:
                t_a, t_b = t_b, t_a
            tmin = max(tmin, t_a)
            tmax = min(tmax, t_b)
        elif not (lo[i] <= p[i] <= hi[i]):
            return None
    if tmin >= tmax:
        return None
    return tmin, tmax


def _line_breakpoints(u: ScalarField, z, p, t0, t1) -> list[float]:
    brk = {t0, t1}
    for i in range(u.dim):
        if abs(z[i]) > 1e-15:
            for b in u.breakpoints[i]:
                t = (b - p[i]) / z[i]
                if t0 < t < t1:
                    brk.add(float(t))
    return sorted(brk)


def slice_field(u: ScalarField, z_hat, xi) -> LineSlice:
    """Slice a field along the line xi + t*z_hat (unit z_hat, xi in z_hat^perp)."""
    z = np.asarray(z_hat, dtype=float)
    p = np.asarray(xi, dtype=float)
    if z.shape != (u.dim,) or p.shape != (u.dim,):
        raise FieldError("direction and offset must live in the field's space")
    if abs(np.linalg.norm(z) - 1.0) > ORTHO_TOL:
        raise FieldError(f"direction must be unit, |z| = {np.linalg.norm(z)!r}")
    if abs(float(z @ p)) > ORTHO_TOL:
        raise FieldError(f"offset must be orthogonal to the direction, xi.z = {float(z @ p)!r}")
    rng = _line_box_range(u.lo, u.hi, p, z)
    return LineSlice(u, z, p, rng)


# -- built-in fields ----------------------------------------------------------


def _bump_val(t):
    w = 1.0 - t * t
    out = np.zeros_like(t)
    ok = w > 0
    out[ok] = np.exp(1.0 - 1.0 / w[ok])
    return out


def _bump_d1(t):
    w = 1.0 - t * t
    out = np.zeros_like(t)
    ok = w > 0
    out[ok] = _bump_val(t[ok]) * (-2.0 * t[ok] / w[ok] ** 2)
    return out


def _bump_d2(t):
    w = 1.0 - t * t
    out = np.zeros_like(t)
    ok = w > 0
    tw, ww = t[ok], w[ok]
    a = -2.0 * tw / ww ** 2
    da = -2.0 / ww ** 2 - 8.0 * tw ** 2 / ww ** 3
    out[ok] = _bump_val(tw) * (a * a + da)
    return out


def sin_bump(a: float = 0.0, b: float = 1.0, amplitude: float = 1.0) -> ScalarField:
    """One sine arch supported on [a, b], with closed-form antiderivative."""
    L = b - a
    k = math.pi / L

    def val(x):
        return amplitude * np.sin(k * (x - a))

    def grad(x):
        return amplitude * k * np.cos(k * (x - a))

    def hess(x):
        return -amplitude * k * k * np.sin(k * (x - a))

    def cum(x):
        xc = np.clip(x, a, b)
        return amplitude * (1.0 - np.cos(k * (xc - a))) / k

    def antider(x):
        # U(0) = 0 exactly, whatever the interval position
        return cum(x) - cum(np.zeros(1))[0]

    return ScalarField(1, val, ((a,), (b,)), gradient=grad, hessian=hess,
                       antiderivative=antider, breakpoints=[(a, b)],
                       c2_smooth=False, name="sin",
                       params={"a": a, "b": b, "amplitude": amplitude})


def smooth_bump(center: float = 0.5, halfwidth: float = 0.5,
                amplitude: float = 1.0) -> ScalarField:
    """Standard mollifier-style bump, infinitely smooth on all of R."""
    c, s, A = center, halfwidth, amplitude

    def t_of(x):
        return (x - c) / s

    return ScalarField(
        1, lambda x: A * _bump_val(t_of(x)), ((c - s,), (c + s,)),
        gradient=lambda x: A / s * _bump_d1(t_of(x)),
        hessian=lambda x: A / s ** 2 * _bump_d2(t_of(x)),
        breakpoints=[(c - s, c + s)], c2_smooth=True, name="bump",
        params={"center": c, "halfwidth": s, "amplitude": A})


def bump_sum(centers, halfwidths, amplitudes) -> ScalarField:
    """Superposition of 1-D smooth bumps (still infinitely smooth)."""
    cs = np.asarray(centers, float)
    ss = np.asarray(halfwidths, float)
    As = np.asarray(amplitudes, float)

    def val(x):
        return sum(A * _bump_val((x - c) / s) for c, s, A in zip(cs, ss, As))

    def grad(x):
        return sum(A / s * _bump_d1((x - c) / s) for c, s, A in zip(cs, ss, As))

    def hess(x):
        return sum(A / s ** 2 * _bump_d2((x - c) / s) for c, s, A in zip(cs, ss, As))

    lo, hi = float(np.min(cs - ss)), float(np.max(cs + ss))
    return ScalarField(1, val, ((lo,), (hi,)), gradient=grad, hessian=hess,
                       breakpoints=[(lo, hi)], c2_smooth=True, name="bump-sum",
                       params={"n": len(cs)})


def hat(a: float = 0.0, b: float = 1.0, amplitude: float = 1.0) -> ScalarField:
    """Piecewise-linear tent on [a, b]: in H^1 but not in H^2."""
    m = 0.5 * (a + b)
    slope = amplitude / (m - a)

    def val(x):
        return np.where(x <= m, slope * (x - a), slope * (b - x))

    def grad(x):
        return np.where(x <= m, slope, -slope)

    def cum(x):
        xc = np.clip(x, a, b)
        left = 0.5 * slope * (np.minimum(xc, m) - a) ** 2
        right = np.where(xc > m, 0.5 * slope * ((b - m) ** 2 - (b - xc) ** 2), 0.0)
        return left + right

    def antider(x):
        return cum(x) - cum(np.zeros(1))[0]

    return ScalarField(1, val, ((a,), (b,)), gradient=grad,
                       antiderivative=antider, breakpoints=[(a, m, b)],
                       c2_smooth=False, name="hat",
                       params={"a": a, "b": b, "amplitude": amplitude})


def radial_bump(dim: int, center=None, radius: float = 0.4,
                amplitude: float = 1.0) -> ScalarField:
    """Radially symmetric smooth bump supported in the ball of given radius."""
    c = np.full(dim, 0.5) if center is None else np.asarray(center, dtype=float)
    R, A = radius, amplitude

    def s_of(pts):
        diff = pts - c
        return diff, np.sum(diff * diff, axis=-1) / R ** 2

    def g_parts(s):
        w = 1.0 - s
        ok = w > 0
        g = np.zeros_like(s)
        g1 = np.zeros_like(s)
        g2 = np.zeros_like(s)
        g[ok] = np.exp(1.0 - 1.0 / w[ok])
        g1[ok] = -g[ok] / w[ok] ** 2
        g2[ok] = g[ok] / w[ok] ** 4 - 2.0 * g[ok] / w[ok] ** 3
        return g, g1, g2

    def val(pts):
        _, s = s_of(pts)
        return A * g_parts(s)[0]

    def grad(pts):
        diff, s = s_of(pts)
        _, g1, _ = g_parts(s)
        return A * g1[:, None] * (2.0 * diff / R ** 2)

    def hess(pts):
        diff, s = s_of(pts)
        _, g1, g2 = g_parts(s)
        eye = np.eye(dim)[None, :, :]
        outer = diff[:, :, None] * diff[:, None, :]
        return A * (g2[:, None, None] * 4.0 * outer / R ** 4
                    + g1[:, None, None] * 2.0 * eye / R ** 2)

    lo, hi = c - R, c + R
    return ScalarField(dim, val, (lo, hi), gradient=grad, hessian=hess,
                       breakpoints=[(lo[i], hi[i]) for i in range(dim)],
                       c2_smooth=True, name="radial_bump",
                       params={"center": list(c), "radius": R, "amplitude": A})


def coordinate_bump(dim: int, center=None, radius: float = 0.4,
                    amplitude: float = 1.0, axis: int = 0) -> ScalarField:
    """x_axis times a radial bump: a smooth field with anisotropic gradient."""
    base = radial_bump(dim, center, radius, amplitude)
    e = np.zeros(dim)
    e[axis] = 1.0

    def val(pts):
        return pts[:, axis] * base._values(pts)

    def grad(pts):
        g = base._values(pts)[:, None] * e[None, :] + pts[:, axis, None] * base._gradient(pts)
        return g

    def hess(pts):
        gb = base._gradient(pts)
        hb = base._hessian(pts)
        cross = e[None, :, None] * gb[:, None, :] + gb[:, :, None] * e[None, None, :]
        return cross + pts[:, axis, None, None] * hb

    return ScalarField(dim, val, (base.lo, base.hi), gradient=grad, hessian=hess,
                       breakpoints=base.breakpoints, c2_smooth=True,
                       name="coordinate_bump",
                       params=dict(base.params, axis=axis))


def ridge(dim: int = 2, a: float = 0.1, b: float = 0.9,
          amplitude: float = 1.0) -> ScalarField:
    """Tent profile along axis 0 times smooth bumps in the other axes.

    Lies in H^1 but not in H^2: the gradient jumps across the ridge crest,
    which makes the rate functional blow up as the window shrinks.
    """
    if dim < 2:
        raise FieldError("ridge needs dimension >= 2")
    m = 0.5 * (a + b)
    slope = amplitude / (m - a)
    c, s = 0.5 * (a + b), 0.5 * (b - a)

    def val(pts):
        x0 = pts[:, 0]
        out = np.where(x0 <= m, slope * (x0 - a), slope * (b - x0))
        for i in range(1, dim):
            out = out * _bump_val((pts[:, i] - c) / s)
        return out

    def grad(pts):
        x0 = pts[:, 0]
        tent = np.where(x0 <= m, slope * (x0 - a), slope * (b - x0))
        dtent = np.where(x0 <= m, slope, -slope)
        bumps = [_bump_val((pts[:, i] - c) / s) for i in range(1, dim)]
        dbumps = [_bump_d1((pts[:, i] - c) / s) / s for i in range(1, dim)]
        prod_all = np.prod(bumps, axis=0) if bumps else np.ones_like(x0)
        g = np.empty((pts.shape[0], dim))
        g[:, 0] = dtent * prod_all
        for i in range(1, dim):
            others = prod_all / np.where(bumps[i - 1] != 0.0, bumps[i - 1], 1.0)
            others = np.where(bumps[i - 1] != 0.0, others, 0.0)
            g[:, i] = tent * dbumps[i - 1] * others
        return g

    lo = np.full(dim, a)
    hi = np.full(dim, b)
    brk = [(a, m, b)] + [(a, b)] * (dim - 1)
    return ScalarField(dim, val, (lo, hi), gradient=grad, breakpoints=brk,
                       c2_smooth=False, name="ridge",
                       params={"a": a, "b": b, "amplitude": amplitude})


def coordinate_field(dim: int, lo, hi, axis: int = 0) -> ScalarField:
    """u(x) = x_axis inside the box (not continuous across the boundary)."""
    e = np.zeros(dim)
    e[axis] = 1.0
    return ScalarField(dim, lambda pts: pts[:, axis] if dim > 1 else pts,
                       (lo, hi),
                       gradient=lambda pts: np.broadcast_to(e, (pts.shape[0], dim)).copy(),
                       c2_smooth=False, name="coordinate", params={"axis": axis})


def random_bump_field(dim: int, rng: np.random.Generator,
                      max_bumps: int = 3) -> ScalarField:
    """Seeded random superposition of smooth bumps inside the unit box."""
    n = int(rng.integers(1, max_bumps + 1))
    if dim == 1:
        widths = rng.uniform(0.12, 0.3, size=n)
        centers = rng.uniform(0.0 + widths, 1.0 - widths)
        amps = rng.uniform(0.3, 1.5, size=n) * rng.choice([-1.0, 1.0], size=n)
        return bump_sum(centers, widths, amps)
    radii = rng.uniform(0.15, 0.35, size=n)
    centers = rng.uniform(radii[:, None], 1.0 - radii[:, None], size=(n, dim))
    amps = rng.uniform(0.3, 1.2, size=n) * rng.choice([-1.0, 1.0], size=n)
    parts = [radial_bump(dim, centers[k], radii[k], amps[k]) for k in range(n)]

    def val(pts):
        return sum(p._values(pts) for p in parts)

    def grad(pts):
        return sum(p._gradient(pts) for p in parts)

    def hess(pts):
        return sum(p._hessian(pts) for p in parts)

    lo = np.min([p.lo for p in parts], axis=0)
    hi = np.max([p.hi for p in parts], axis=0)
    return ScalarField(dim, val, (lo, hi), gradient=grad, hessian=hess,
                       breakpoints=[(lo[i], hi[i]) for i in range(dim)],
                       c2_smooth=True, name="random-bumps", params={"n": n})


_BUILTINS = {
    "sin": sin_bump,
    "bump": smooth_bump,
    "hat": hat,
    "radial_bump": radial_bump,
    "coordinate_bump": coordinate_bump,
    "ridge": ridge,
}


def builtin_field(name: str, **params) -> ScalarField:
    """Construct a built-in field by name (CLI entry point)."""
    if name not in _BUILTINS:
        raise FieldError(f"unknown field '{name}'; choices: {sorted(_BUILTINS)}")
    return _BUILTINS[name](**params)
