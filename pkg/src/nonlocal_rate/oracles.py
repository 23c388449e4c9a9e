"""Independent reference computations for validating the main evaluators.

Everything here deliberately avoids the Gauss panel machinery: reference
values come from dense trapezoid sums, an FFT identity (quadratic
integrand only), or stratified Monte Carlo with counter-based seeding, so
a bug shared with the main path cannot validate itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fields import ScalarField
from .integrands import ConvexIntegrand
from .kernels import EffectiveKernel, Kernel, triangle_kernel_scaled


@dataclass
class OracleReport:
    """Reference vs main value with recomputed discrepancies."""

    name: str
    reference: float
    main: float
    resolution: dict = field(default_factory=dict)
    abs_discrepancy: float = field(init=False)
    rel_discrepancy: float = field(init=False)

    def __post_init__(self):
        self.abs_discrepancy = abs(self.reference - self.main)
        scale = max(abs(self.reference), abs(self.main))
        self.rel_discrepancy = self.abs_discrepancy / scale if scale > 0 else 0.0

    def to_dict(self) -> dict:
        return {"name": self.name, "reference": self.reference, "main": self.main,
                "abs_discrepancy": self.abs_discrepancy,
                "rel_discrepancy": self.rel_discrepancy,
                "resolution": self.resolution}


def fourier_rate_energy(u: ScalarField, fi: ConvexIntegrand, h: float,
                        n: int = 1 << 18, pad: float = 8.0) -> float:
    """Spectral value of the 1-D rate energy for the quadratic integrand.

    For f(t) = t^2 the energy is (1/h^2) (1/2pi) int |u^(k)|^2
    (1 - sinc^2(kh/2)) dk, because the moving average is a convolution
    whose transfer function has modulus sinc(kh/2).  Verified against
    brute-force quadrature before use as an oracle (see the test suite).
    """
    if fi.name != "quadratic":
        raise ValueError("the spectral identity holds for the quadratic integrand only")
    if h <= 0:
        raise ValueError(f"window length must be positive, got {h}")
    a, b = u.interval()
    length = pad * (b - a)
    lo = 0.5 * (a + b) - 0.5 * length
    dx = length / n
    xs = lo + dx * np.arange(n)
    uh = np.fft.rfft(u(xs)) * dx
    k = 2.0 * np.pi * np.fft.rfftfreq(n, dx)
    s = k * h / 2.0
    damp = 1.0 - np.sinc(s / np.pi) ** 2
    spec = np.abs(uh) ** 2 * damp
    # real-input spectrum: double every bin except DC (and Nyquist for even n)
    w = np.full_like(spec, 2.0)
    w[0] = 1.0
    if n % 2 == 0:
        w[-1] = 1.0
    dk = 2.0 * np.pi / length
    return float(np.sum(spec * w) * dk / (2.0 * np.pi) / h ** 2)


def _trapz(vals: np.ndarray, xs: np.ndarray) -> float:
    return float(np.trapz(vals, xs))


def _dense_moving_average(u: ScalarField, h: float, lo: float, hi: float,
                          n: int) -> tuple[np.ndarray, np.ndarray]:
    """Trapezoid cumulative integral on a dense grid; window means off it."""
    gs = np.linspace(lo - h, hi + h, n)
    ug = u(gs)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (ug[1:] + ug[:-1]) * np.diff(gs))])
    xs = np.linspace(lo, hi, n)
    U = lambda t: np.interp(t, gs, cum)
    return xs, (U(xs + h) - U(xs)) / h


def bruteforce_quadrature(name: str, resolution: int = 100_000, **kw) -> float:
    """Recompute a named integral by dense trapezoid sums.

    Supported names: rate_energy, limit_energy, averaged_curvature,
    moving_average, triangle_mass, triangle_bound, kernel_mass,
    kernel_second_moment, effective_mass, effective_second_moment.
    """
    n = resolution
    if name == "rate_energy":
        u, fi, h = kw["u"], kw["fi"], kw["h"]
        a, b = u.interval()
        xs, avg = _dense_moving_average(u, h, a - h, b, n)
        return _trapz(fi.f(u(xs)) - fi.f(avg), xs) / h ** 2
    if name == "limit_energy":
        u, fi = kw["u"], kw["fi"]
        a, b = u.interval()
        xs = np.linspace(a, b, n)
        du = u.grad(xs)[:, 0]
        return _trapz(fi.f2(u(xs)) * du * du, xs) / 24.0
    if name == "averaged_curvature":
        fi, a, b = kw["fi"], kw["a"], kw["b"]
        th = np.linspace(0.0, 1.0, n)
        return _trapz((1.0 - th) * fi.f2((1.0 - th) * a + th * b), th)
    if name == "moving_average":
        u, h, x = kw["u"], kw["h"], kw["x"]
        ys = np.linspace(x, x + h, n)
        return _trapz(u(ys), ys) / h
    if name == "triangle_mass":
        h = kw["h"]
        rs = np.linspace(-h, h, n)
        return _trapz(triangle_kernel_scaled(rs, h), rs)
    if name == "triangle_bound":
        u, gamma, h = kw["u"], kw["gamma"], kw["h"]
        a, b = u.interval()
        ys = np.linspace(a - h, b + h, int(math.isqrt(n) * 4))
        rs = np.linspace(-h, h, int(math.isqrt(n)))
        Y, R = np.meshgrid(ys, rs, indexing="ij")
        vals = triangle_kernel_scaled(R, h) * ((u((Y + R).ravel()) - u(Y.ravel()))
                                               .reshape(Y.shape) / h) ** 2
        inner = np.trapz(vals, rs, axis=1)
        return gamma / 4.0 * _trapz(inner, ys)
    if name == "kernel_mass" or name == "kernel_second_moment":
        K: Kernel = kw["kernel"]
        power = K.dim - 1 if name == "kernel_mass" else K.dim + 1
        rs = np.linspace(0.0, K.support_radius, n)
        from .quadrature import sphere_area
        return sphere_area(K.dim) * _trapz(K.profile(rs) * rs ** power, rs)
    if name == "effective_mass" or name == "effective_second_moment":
        Ke: EffectiveKernel = kw["kernel"]
        power = Ke.dim - 1 if name == "effective_mass" else Ke.dim + 1
        # graded abscissas resolve the integrable singularity at the origin
        R = Ke.support_radius
        ts = np.linspace(math.log(R * 1e-9), math.log(R), n)
        rs = np.exp(ts)
        from .quadrature import sphere_area
        vals = Ke.profile(rs) * rs ** power * rs  # extra r from d(log r)
        return sphere_area(Ke.dim) * _trapz(vals, ts)
    raise ValueError(f"unknown oracle integral '{name}'")


def _philox(seed: int, stratum: int) -> np.random.Generator:
    key = np.array([np.uint64(seed), np.uint64(stratum)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _stratified_xz(u: ScalarField, R: float, h: float, seed: int,
                   n_samples: int, strata: int):
    """Yield per-stratum samples: x uniform in the padded box, z uniform in
    a radial shell of the kernel support ball.  Counter-based seeding keyed
    by (seed, stratum) makes every stratum reproducible in isolation."""
    d = u.dim
    lo = u.lo - h * R
    hi = u.hi + h * R
    box_vol = float(np.prod(hi - lo))
    per = max(1, n_samples // strata)
    from .kernels import ball_volume
    for s_idx in range(strata):
        rng = _philox(seed, s_idx)
        r_lo = R * s_idx / strata
        r_hi = R * (s_idx + 1) / strata
        shell_vol = ball_volume(d) * (r_hi ** d - r_lo ** d)
        radii = (r_lo ** d + rng.random(per) * (r_hi ** d - r_lo ** d)) ** (1.0 / d)
        dirs = rng.normal(size=(per, d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        z = radii[:, None] * dirs
        x = lo + rng.random((per, d)) * (hi - lo)
        yield x, z, box_vol * shell_vol, per


def mc_nonlocal_energy(u: ScalarField, fi: ConvexIntegrand, K: Kernel, h: float,
                       n_samples: int = 1_000_000, seed: int = 0,
                       strata: int = 16) -> tuple[float, float]:
    """Monte Carlo value and standard error of the nonlocal energy."""
    total, var = [], []
    for x, z, vol, per in _stratified_xz(u, K.support_radius, h, seed,
                                         n_samples, strata):
        quot = np.abs(u(x + h * z) - u(x)) / (h * np.linalg.norm(z, axis=1))
        vals = K(z) * fi.f(quot)
        total.append(vol * float(np.mean(vals)))
        var.append(vol ** 2 * float(np.var(vals)) / per)
    return math.fsum(total), math.sqrt(math.fsum(var))


def mc_rate_functional(u: ScalarField, fi: ConvexIntegrand, K: Kernel, h: float,
                       n_samples: int = 1_000_000, seed: int = 0,
                       strata: int = 16) -> tuple[float, float]:
    """Monte Carlo value and standard error of the fused rate functional."""
    total, var = [], []
    for x, z, vol, per in _stratified_xz(u, K.support_radius, h, seed,
                                         n_samples, strata):
        znorm = np.linalg.norm(z, axis=1)
        zhat = z / znorm[:, None]
        quot = np.abs(u(x + h * z) - u(x)) / (h * znorm)
        gdot = np.abs(np.sum(u.grad(x) * zhat, axis=1))
        vals = K(z) * (fi.f(gdot) - fi.f(quot)) / h ** 2
        total.append(vol * float(np.mean(vals)))
        var.append(vol ** 2 * float(np.var(vals)) / per)
    return math.fsum(total), math.sqrt(math.fsum(var))


def mc_limit_functional(u: ScalarField, fi: ConvexIntegrand, K: Kernel,
                        n_samples: int = 1_000_000, seed: int = 0,
                        strata: int = 16) -> tuple[float, float]:
    """Monte Carlo value and standard error of the second-order limit."""
    total, var = [], []
    for x, z, vol, per in _stratified_xz(u, K.support_radius, 0.0, seed,
                                         n_samples, strata):
        znorm = np.linalg.norm(z, axis=1)
        zhat = z / znorm[:, None]
        gdot = np.abs(np.sum(u.grad(x) * zhat, axis=1))
        hz = np.einsum("nij,ni,nj->n", u.hess(x), zhat, zhat)
        vals = K(z) * znorm ** 2 * fi.f2(gdot) * hz ** 2 / 24.0
        total.append(vol * float(np.mean(vals)))
        var.append(vol ** 2 * float(np.var(vals)) / per)
    return math.fsum(total), math.sqrt(math.fsum(var))
