"""Report emission: delimited tables, JSON metadata, and figures.

CSV output is the determinism contract: float cells are written with
shortest round-trip repr and reductions upstream are order-fixed, so
identical configs give byte-identical files whatever the thread count.
Figures are rendered with matplotlib to SVG next to the tables.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .quadrature import fit_order  # noqa: E402

# stable ids inside SVG output; the date stamp is dropped at savefig time
matplotlib.rcParams["svg.hashsalt"] = "nonlocal-rate"


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_json(path, payload: dict) -> None:
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True, default=_json_default)
        f.write("\n")


def _json_default(obj):
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    if hasattr(obj, "tolist"):
        return obj.tolist()
    return str(obj)


@dataclass
class RateStudyReport:
    """Tabulated window sweep: values, errors, and running fitted orders.

    Rows are sorted by descending window; the running order at each row is
    the least-squares slope of log-error against log-window over the last
    up-to-four rows, so the final row carries the headline fitted order.
    """

    h_values: list[float]
    values: list[float]
    limit_value: float
    metadata: dict = field(default_factory=dict)
    rows: list[tuple] = field(init=False)
    fitted_order: float = field(init=False)

    def __post_init__(self):
        order = sorted(range(len(self.h_values)),
                       key=lambda i: -self.h_values[i])
        hs = [self.h_values[i] for i in order]
        vals = [self.values[i] for i in order]
        errs = [abs(v - self.limit_value) for v in vals]
        self.rows = []
        for i in range(len(hs)):
            running = fit_order(hs[:i + 1], errs[:i + 1])
            self.rows.append((hs[i], vals[i], self.limit_value, errs[i], running))
        self.fitted_order = self.rows[-1][-1] if self.rows else float("nan")

    HEADER = ("h", "value_h", "value_0", "abs_error", "fitted_order")

    def write(self, out_dir, stem: str = "report") -> dict:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{stem}.csv"
        write_csv(csv_path, self.HEADER, self.rows)
        payload = {"rows": [list(r) for r in self.rows],
                   "limit_value": self.limit_value,
                   "fitted_order": self.fitted_order,
                   "metadata": self.metadata}
        write_json(out / f"{stem}.json", payload)
        return {"csv": str(csv_path), "json": str(out / f'{stem}.json')}


def save_figure(fig, path) -> None:
    fig.savefig(path, metadata={"Date": None} if str(path).endswith(".svg") else None)
    plt.close(fig)


def plot_rate_study(report: RateStudyReport, path, title: str = "") -> None:
    """Log-log error against window length with first/second-order guides."""
    hs = [r[0] for r in report.rows]
    errs = [max(r[3], 1e-300) for r in report.rows]
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.loglog(hs, errs, "o-", label="|value(h) - limit|")
    if len(hs) >= 2 and errs[0] > 0:
        for p, style in ((1, ":"), (2, "--")):
            guide = [errs[0] * (h / hs[0]) ** p for h in hs]
            ax.loglog(hs, guide, style, color="gray", label=f"order {p}")
    ax.set_xlabel("h")
    ax.set_ylabel("error")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    save_figure(fig, path)


def plot_sweep(rows: Sequence[tuple], path, title: str = "",
               bound: float | None = None, ylabel: str = "value") -> None:
    """Window sweep on log-log axes, with an optional horizontal bound."""
    hs = [r[0] for r in rows]
    vals = [max(abs(r[1]), 1e-300) for r in rows]
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.loglog(hs, vals, "o-", label=ylabel)
    if bound is not None:
        ax.axhline(bound, color="crimson", linestyle="--", label="bound")
    ax.set_xlabel("h")
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    save_figure(fig, path)


def plot_kernel_profiles(radii, base_vals, eff_vals, floor_vals, path,
                         title: str = "") -> None:
    """Radial profiles of a kernel, its effective kernel, and the floor."""
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.plot(radii, base_vals, label="kernel")
    ax.plot(radii, eff_vals, label="effective kernel")
    ax.plot(radii, floor_vals, "--", label="closed-form floor")
    ax.set_xlabel("|z|")
    ax.set_ylabel("weight")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    save_figure(fig, path)


def plot_margins(names: Sequence[str], margins: Sequence[float], path,
                 title: str = "") -> None:
    """Horizontal bar chart of audit margins (negative bars are failures)."""
    fig, ax = plt.subplots(figsize=(6.0, 0.35 * max(len(names), 4) + 1.2))
    colors = ["crimson" if m < 0 else "seagreen" for m in margins]
    ax.barh(range(len(names)), margins, color=colors)
    ax.set_yticks(range(len(names)))
    ax.set_yticklabels(names, fontsize=7)
    ax.axvline(0.0, color="black", linewidth=0.8)
    ax.set_xlabel("margin")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    save_figure(fig, path)


def plot_comparison(rows: Sequence[tuple], labels: Sequence[str], path,
                    title: str = "") -> None:
    """Paired values per window (direct vs sliced and the like)."""
    hs = [r[0] for r in rows]
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    for j, lab in enumerate(labels):
        ax.plot(hs, [r[1 + j] for r in rows], "o-", label=lab)
    ax.set_xlabel("h")
    ax.set_ylabel("value")
    ax.set_xscale("log")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    save_figure(fig, path)
