"""Batch experiment runner.

Experiments are configured by a plain key = value file with [section]
headers and emit a delimited table, a JSON echo, and an SVG figure into
the output directory.  Exit status: 0 on success, 1 when an audited
inequality fails (the violated bound is named), 2 on configuration or
validation errors.
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys
from dataclasses import dataclass, field as dc_field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .energy1d import (bundled_test_functions, curvature_upper_bound, dual_bound,
                       limit_energy, rate_energy, triangle_kernel_bound)
from .energynd import (boundedness_probe, gradient_quotient_bound,
                       hessian_sq_norm, limit_functional, rate_functional,
                       rate_functional_sliced)
from .fields import FieldError, ScalarField, builtin_field, load_grid_csv
from .integrands import builtin_integrand
from .kernels import (KernelError, Kernel, builtin_kernel, effective_kernel,
                      effective_kernel_lower_bound, positivity_grid,
                      validate_kernel)
from .oracles import OracleReport, fourier_rate_energy, bruteforce_quadrature, \
    mc_rate_functional
from .quadrature import QuadratureScheme
from .report import (RateStudyReport, plot_comparison, plot_kernel_profiles,
                     plot_margins, plot_rate_study, plot_sweep, write_csv,
                     write_json)

EXPERIMENTS = ("rate1d", "ratend", "slice-check", "kernel-report", "h2-probe",
               "bounds-audit")


class ConfigError(ValueError):
    """Configuration file or CLI arguments are invalid."""


@dataclass
class ExperimentConfig:
    experiment: str
    field_spec: dict = dc_field(default_factory=dict)
    integrand: str = "quadratic"
    kernel_spec: dict = dc_field(default_factory=dict)
    h_list: list[float] = dc_field(default_factory=lambda: [0.2, 0.1, 0.05, 0.025])
    quadrature: QuadratureScheme = dc_field(default_factory=QuadratureScheme)
    backend: str = "tensor"
    out_dir: str = "out"
    seed: int | None = None
    threads: int = 1
    slice_rel_tol: float = 1e-3
    audit_tol_1d: float = 1e-8
    audit_tol_nd: float = 1e-6

    def to_dict(self) -> dict:
        return {"experiment": self.experiment, "field": self.field_spec,
                "integrand": self.integrand, "kernel": self.kernel_spec,
                "h_list": self.h_list, "backend": self.backend,
                "seed": self.seed, "threads": self.threads,
                "quadrature": vars(self.quadrature)}


def _coerce(text: str):
    s = text.strip()
    if "," in s:
        return [_coerce(p) for p in s.split(",") if p.strip()]
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def load_config(path) -> ExperimentConfig:
    """Parse the key = value config file with [section] headers."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    sections = {name: {k: _coerce(v) for k, v in parser.items(name)}
                for name in parser.sections()}
    exp = sections.get("experiment", {})
    name = exp.get("name")
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment '{name}'; choices: {EXPERIMENTS}")
    sweep = sections.get("sweep", {})
    h_list = sweep.get("h_list", [0.2, 0.1, 0.05, 0.025])
    if isinstance(h_list, (int, float)):
        h_list = [float(h_list)]
    h_list = [float(h) for h in h_list]
    quad_kwargs = {k: v for k, v in sections.get("quadrature", {}).items()
                   if k in QuadratureScheme.__dataclass_fields__}
    backend = sections.get("quadrature", {}).get("backend", "tensor")
    audit = sections.get("audit", {})
    cfg = ExperimentConfig(
        experiment=name,
        field_spec=dict(sections.get("field", {})),
        integrand=sections.get("integrand", {}).get("name", "quadratic"),
        kernel_spec=dict(sections.get("kernel", {})),
        h_list=h_list,
        quadrature=QuadratureScheme(**quad_kwargs),
        backend=backend,
        out_dir=str(sections.get("output", {}).get("dir", "out")),
        seed=exp.get("seed"),
        threads=int(exp.get("threads", 1)),
        slice_rel_tol=float(audit.get("slice_rel_tol", 1e-3)),
        audit_tol_1d=float(audit.get("tol_1d", 1e-8)),
        audit_tol_nd=float(audit.get("tol_nd", 1e-6)),
    )
    validate_config(cfg)
    return cfg


def validate_config(cfg: ExperimentConfig) -> None:
    if any(h <= 0 for h in cfg.h_list):
        raise ConfigError(f"window sweep must be positive: {cfg.h_list}")
    if any(a <= b for a, b in zip(cfg.h_list, cfg.h_list[1:])):
        raise ConfigError(f"window sweep must be strictly decreasing: {cfg.h_list}")
    if cfg.backend not in ("tensor", "mc"):
        raise ConfigError(f"unknown quadrature backend '{cfg.backend}'")
    if cfg.backend == "mc" and cfg.seed is None:
        raise ConfigError("the Monte Carlo backend requires a seed")
    if cfg.threads < 1:
        raise ConfigError(f"thread count must be >= 1, got {cfg.threads}")


def make_field(spec: dict) -> ScalarField:
    spec = dict(spec)
    name = spec.pop("name", None)
    if name is None:
        raise ConfigError("field section needs a name")
    if name == "grid":
        path = spec.get("csv")
        if not path:
            raise ConfigError("grid field needs a csv path")
        return load_grid_csv(path)
    if "center" in spec and isinstance(spec["center"], list):
        spec["center"] = [float(c) for c in spec["center"]]
    try:
        return builtin_field(name, **spec)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for field '{name}': {exc}") from exc


def make_kernel(spec: dict) -> Kernel:
    spec = dict(spec)
    name = spec.pop("name", None)
    if name is None:
        raise ConfigError("kernel section needs a name")
    dim = int(spec.pop("dim", 1))
    try:
        return builtin_kernel(name, dim, **spec)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for kernel '{name}': {exc}") from exc


@dataclass
class AuditResult:
    """One audited inequality lhs <= rhs with its margin."""

    name: str
    h: float
    lhs: float
    rhs: float
    ok: bool

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    def row(self) -> tuple:
        return (self.name, self.h, self.lhs, self.rhs, self.margin,
                "pass" if self.ok else "FAIL")


@dataclass
class Outcome:
    exit_code: int
    files: dict
    payload: dict
    audits: list[AuditResult] = dc_field(default_factory=list)


def _metadata(cfg: ExperimentConfig, oracle: dict | None = None) -> dict:
    return {"config": cfg.to_dict(),
            "versions": {"nonlocal_rate": __version__, "numpy": np.__version__},
            "oracle": oracle}


def _run_rate1d(cfg: ExperimentConfig, out: Path) -> Outcome:
    u = make_field(cfg.field_spec)
    if u.dim != 1:
        raise ConfigError("rate1d needs a 1-D field")
    fi = builtin_integrand(cfg.integrand)
    q = replace(cfg.quadrature, threads=cfg.threads)
    e0 = limit_energy(u, fi, q).value
    values = [rate_energy(u, fi, h, q).value for h in cfg.h_list]
    if fi.name == "quadratic":
        ref = fourier_rate_energy(u, fi, cfg.h_list[0])
    else:
        ref = bruteforce_quadrature("rate_energy", 200_001, u=u, fi=fi,
                                    h=cfg.h_list[0])
    oracle = OracleReport("rate-energy-vs-oracle", ref, values[0],
                          {"h": cfg.h_list[0]}).to_dict()
    rep = RateStudyReport(cfg.h_list, values, e0, metadata=_metadata(cfg, oracle))
    files = rep.write(out)
    plot_rate_study(rep, out / "plot.svg", title="1-D rate study")
    files["svg"] = str(out / "plot.svg")
    return Outcome(0, files, {"fitted_order": rep.fitted_order, "limit": e0})


def _run_ratend(cfg: ExperimentConfig, out: Path) -> Outcome:
    u = make_field(cfg.field_spec)
    fi = builtin_integrand(cfg.integrand)
    K = make_kernel(cfg.kernel_spec)
    if K.dim != u.dim:
        raise ConfigError(f"kernel dimension {K.dim} != field dimension {u.dim}")
    q = replace(cfg.quadrature, threads=cfg.threads)
    e0 = limit_functional(u, fi, K, q).value
    if cfg.backend == "mc":
        pairs = [mc_rate_functional(u, fi, K, h, n_samples=cfg.quadrature.mc_samples,
                                    seed=cfg.seed, strata=cfg.quadrature.mc_strata)
                 for h in cfg.h_list]
        values = [p[0] for p in pairs]
        oracle = {"backend": "mc", "stderr": [p[1] for p in pairs]}
    else:
        values = [rate_functional(u, fi, K, h, q).value for h in cfg.h_list]
        mc_val, mc_err = mc_rate_functional(u, fi, K, cfg.h_list[0],
                                            n_samples=200_000,
                                            seed=cfg.seed or 0)
        oracle = OracleReport("rate-functional-vs-mc", mc_val, values[0],
                              {"h": cfg.h_list[0], "mc_stderr": mc_err}).to_dict()
    rep = RateStudyReport(cfg.h_list, values, e0, metadata=_metadata(cfg, oracle))
    files = rep.write(out)
    plot_rate_study(rep, out / "plot.svg", title=f"{u.dim}-D rate study")
    files["svg"] = str(out / "plot.svg")
    return Outcome(0, files, {"fitted_order": rep.fitted_order, "limit": e0})


def _run_slice_check(cfg: ExperimentConfig, out: Path) -> Outcome:
    u = make_field(cfg.field_spec)
    fi = builtin_integrand(cfg.integrand)
    K = make_kernel(cfg.kernel_spec)
    if K.dim != u.dim:
        raise ConfigError(f"kernel dimension {K.dim} != field dimension {u.dim}")
    q = replace(cfg.quadrature, threads=cfg.threads)
    rows, audits = [], []
    for h in cfg.h_list:
        direct = rate_functional(u, fi, K, h, q).value
        sliced = rate_functional_sliced(u, fi, K, h, q).value
        gap = abs(direct - sliced) / max(1.0, abs(direct))
        rows.append((h, direct, sliced, gap))
        audits.append(AuditResult("slicing-identity", h, gap, cfg.slice_rel_tol,
                                  gap <= cfg.slice_rel_tol))
    write_csv(out / "report.csv", ("h", "direct", "sliced", "rel_gap"), rows)
    write_json(out / "report.json",
               {"rows": [list(r) for r in rows], "metadata": _metadata(cfg),
                "audits": [a.row() for a in audits]})
    plot_comparison(rows, ("direct", "sliced"), out / "plot.svg",
                    title="slicing identity")
    code = 0 if all(a.ok for a in audits) else 1
    return Outcome(code, {"csv": str(out / "report.csv")},
                   {"rows": rows}, audits)


def _run_kernel_report(cfg: ExperimentConfig, out: Path) -> Outcome:
    K = make_kernel(cfg.kernel_spec)
    report = validate_kernel(K)
    Ke = effective_kernel(K)
    report["effective_mass"] = Ke.mass
    report["effective_second_moment"] = Ke.second_moment
    report["mass_gap"] = abs(Ke.mass - K.mass) / K.mass
    report["second_moment_ratio"] = Ke.second_moment / K.second_moment
    grid = positivity_grid(K, 200)
    keff = Ke(grid)
    floor = effective_kernel_lower_bound(K, grid)
    report["effective_min_on_positivity_ball"] = float(np.min(keff))
    report["floor_violation"] = float(np.max(floor - keff))
    write_json(out / "report.json", report)
    radii = np.linspace(K.support_radius / 400, K.support_radius, 200)
    base_vals = K.profile(radii) if K.is_radial else K(radii[:, None] *
                                                       np.eye(K.dim)[0][None, :])
    eff_vals = Ke(radii[:, None] * np.eye(K.dim)[0][None, :])
    r1 = K.annulus[1]
    floor_vals = np.where(radii <= r1,
                          effective_kernel_lower_bound(K, np.minimum(radii, r1)
                                                       [:, None] * np.eye(K.dim)[0][None, :]),
                          0.0)
    rows = list(zip(radii.tolist(), np.asarray(base_vals).tolist(),
                    np.asarray(eff_vals).tolist(), np.asarray(floor_vals).tolist()))
    write_csv(out / "report.csv", ("radius", "kernel", "effective", "floor"), rows)
    plot_kernel_profiles(radii, base_vals, eff_vals, floor_vals, out / "plot.svg",
                         title=f"{K.name} kernel, d={K.dim}")
    return Outcome(0, {"json": str(out / "report.json")}, report)


def _run_h2_probe(cfg: ExperimentConfig, out: Path) -> Outcome:
    u = make_field(cfg.field_spec)
    fi = builtin_integrand(cfg.integrand)
    K = make_kernel(cfg.kernel_spec)
    if K.dim != u.dim:
        raise ConfigError(f"kernel dimension {K.dim} != field dimension {u.dim}")
    q = replace(cfg.quadrature, threads=cfg.threads)
    table = boundedness_probe(u, fi, K, cfg.h_list, q)
    rows = [(h, v, table.bound if table.bound is not None else math.nan)
            for h, v in table.rows]
    write_csv(out / "report.csv", ("h", "value", "bound"), rows)
    write_json(out / "report.json",
               {"rows": [list(r) for r in rows], "bound": table.bound,
                "metadata": _metadata(cfg)})
    plot_sweep(table.rows, out / "plot.svg", bound=table.bound,
               title="boundedness probe", ylabel="rate functional")
    return Outcome(0, {"csv": str(out / "report.csv")},
                   {"rows": table.rows, "bound": table.bound})


def audit_bounds(cfg: ExperimentConfig) -> list[AuditResult]:
    """Evaluate every implemented inequality for the configured triple."""
    u = make_field(cfg.field_spec)
    fi = builtin_integrand(cfg.integrand)
    K = make_kernel(cfg.kernel_spec)
    if K.dim != u.dim:
        raise ConfigError(f"kernel dimension {K.dim} != field dimension {u.dim}")
    q = replace(cfg.quadrature, threads=cfg.threads)
    audits: list[AuditResult] = []
    Ke = effective_kernel(K)
    grid = positivity_grid(K, 200)
    keff = Ke(grid)
    floor = effective_kernel_lower_bound(K, grid)
    worst = int(np.argmax(floor - keff))
    audits.append(AuditResult("effective-kernel-floor", math.nan,
                              float(floor[worst]),
                              float(keff[worst]) + 1e-9,
                              bool(np.all(floor <= keff + 1e-9))))
    tol1, toln = cfg.audit_tol_1d, cfg.audit_tol_nd
    if u.dim == 1:
        for h in cfg.h_list:
            eh = rate_energy(u, fi, h, q).value
            audits.append(AuditResult("rate-energy-nonnegative", h, 0.0,
                                      eh + tol1, eh >= -tol1))
            tb = triangle_kernel_bound(u, fi.gamma, h, q)
            audits.append(AuditResult("triangle-form<=rate-energy", h, tb,
                                      eh + tol1, tb <= eh + tol1))
            for phi in bundled_test_functions(u.interval(), h):
                db = dual_bound(u, fi, h, phi, q)
                audits.append(AuditResult(f"dual-form[{phi.name}]<=rate-energy",
                                          h, db, eh + tol1, db <= eh + tol1))
            if fi.f2_upper is not None:
                ub = curvature_upper_bound(u, fi, q)
                audits.append(AuditResult("rate-energy<=curvature-bound", h,
                                          eh, ub + tol1, eh <= ub + tol1))
    else:
        for h in cfg.h_list:
            ev = rate_functional(u, fi, K, h, q).value
            audits.append(AuditResult("rate-functional-nonnegative", h, 0.0,
                                      ev + toln, ev >= -toln))
            gb = gradient_quotient_bound(u, fi.gamma, Ke, h, q)
            audits.append(AuditResult("effective-form<=rate-functional", h, gb,
                                      ev + toln, gb <= ev + toln))
            if fi.f2_upper is not None and (u.has_hessian or u.c2_smooth):
                bound = fi.f2_upper / 2.0 * K.second_moment * hessian_sq_norm(u, q)
                audits.append(AuditResult("rate-functional<=curvature-bound", h,
                                          ev, bound + toln, ev <= bound + toln))
    return audits


def _run_bounds_audit(cfg: ExperimentConfig, out: Path) -> Outcome:
    audits = audit_bounds(cfg)
    rows = [a.row() for a in audits]
    write_csv(out / "report.csv", ("bound", "h", "lhs", "rhs", "margin", "status"),
              rows)
    write_json(out / "report.json", {"audits": rows, "metadata": _metadata(cfg)})
    plot_margins([f"{a.name}@h={a.h:g}" for a in audits],
                 [a.margin for a in audits], out / "plot.svg",
                 title="bound audit margins")
    code = 0 if all(a.ok for a in audits) else 1
    return Outcome(code, {"csv": str(out / "report.csv")}, {"rows": rows}, audits)


_RUNNERS = {
    "rate1d": _run_rate1d,
    "ratend": _run_ratend,
    "slice-check": _run_slice_check,
    "kernel-report": _run_kernel_report,
    "h2-probe": _run_h2_probe,
    "bounds-audit": _run_bounds_audit,
}


def run(cfg: ExperimentConfig) -> Outcome:
    """Run one experiment, writing report.csv / report.json / plot.svg."""
    out = Path(cfg.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from exc
    return _RUNNERS[cfg.experiment](cfg, out)


def main(argv: Sequence[str] | None = None) -> int:
    ap = argparse.ArgumentParser(
        prog="nonlocal-rate",
        description="Nonlocal-energy rate experiments: sweeps, audits, reports.")
    ap.add_argument("experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", required=True, help="key = value config file")
    ap.add_argument("--out", help="output directory (overrides config)")
    ap.add_argument("--seed", type=int, help="RNG seed (overrides config)")
    ap.add_argument("--threads", type=int, help="worker threads "
                    "(falls back to NONLOCAL_RATE_THREADS)")
    args = ap.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if cfg.experiment != args.experiment:
            cfg = replace(cfg, experiment=args.experiment)
            validate_config(cfg)
        if args.out:
            cfg = replace(cfg, out_dir=args.out)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        threads = args.threads
        if threads is None:
            threads = int(os.environ.get("NONLOCAL_RATE_THREADS", cfg.threads))
        cfg = replace(cfg, threads=threads)
        validate_config(cfg)
        outcome = run(cfg)
    except (ConfigError, KernelError, FieldError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for audit in outcome.audits:
        status = "pass" if audit.ok else "FAIL"
        print(f"[{status}] {audit.name} (h={audit.h:g}, margin={audit.margin:.3e})")
    if outcome.exit_code == 1:
        failed = ", ".join(a.name for a in outcome.audits if not a.ok)
        print(f"audit failure: {failed}", file=sys.stderr)
    return outcome.exit_code
