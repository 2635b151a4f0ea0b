"""Matplotlib figure rendering for the report paths.

Figures are written to files next to the delimited outputs; the Agg backend
keeps everything headless.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .profiles import DAYS_PER_YEAR, HOURS_PER_YEAR, MONTH_STARTS

_STYLE = {
    "figure.figsize": (8.0, 5.0),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.labelsize": 10,
    "font.size": 10,
    "legend.fontsize": 9,
    "xtick.labelsize": 9,
    "ytick.labelsize": 9,
}

_MONTH_LABELS = ["J", "F", "M", "A", "M", "J", "J", "A", "S", "O", "N", "D"]


def _monthly_sums(values: np.ndarray) -> np.ndarray:
    daily = values[:HOURS_PER_YEAR].reshape(DAYS_PER_YEAR, 24).sum(axis=1)
    return np.array([daily[MONTH_STARTS[m]:MONTH_STARTS[m + 1]].sum() for m in range(12)])


def save_front_figure(path, fronts: dict, title: str = "Pareto fronts") -> Path:
    """Scatter one or more named fronts of (NPV, SSR) points."""
    path = Path(path)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        markers = ["o", "s", "^", "v", "D", "P", "X", "*"]
        for k, (label, pts) in enumerate(sorted(fronts.items())):
            pts = np.asarray(pts, dtype=np.float64).reshape(-1, 2)
            if pts.size == 0:
                continue
            order = np.argsort(pts[:, 1])
            ax.plot(
                pts[order, 1] * 100.0,
                pts[order, 0] / 1e6,
                markers[k % len(markers)],
                ms=4,
                ls="--",
                lw=0.8,
                alpha=0.8,
                label=label,
            )
        ax.set_xlabel("self-sufficiency ratio [%]")
        ax.set_ylabel("net present value [M$]")
        ax.set_title(title)
        if fronts:
            ax.legend()
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path


def save_dispatch_figure(path, trace, storage_kind: str, year: int = 1) -> Path:
    """Monthly charge/discharge energy and the storage level of one year."""
    path = Path(path)
    lo = (year - 1) * HOURS_PER_YEAR
    hi = lo + HOURS_PER_YEAR
    charge = trace.column("charge")[lo:hi]
    delivered = trace.column("delivered")[lo:hi]
    level = trace.column("level")[lo:hi]
    level_unit = "kg" if storage_kind == "hydrogen" else "kWh"
    with plt.rc_context(_STYLE):
        fig, axes = plt.subplots(3, 1, figsize=(8.0, 7.5), sharex=False)
        x = np.arange(12)
        axes[0].bar(x, _monthly_sums(charge) / 1e3, color="tab:blue")
        axes[0].set_ylabel("charge [MWh]")
        axes[0].set_xticks(x, _MONTH_LABELS)
        axes[1].bar(x, _monthly_sums(delivered) / 1e3, color="tab:orange")
        axes[1].set_ylabel("discharge [MWh]")
        axes[1].set_xticks(x, _MONTH_LABELS)
        axes[2].plot(np.arange(level.size) / 24.0, level, lw=0.7, color="tab:green")
        axes[2].set_ylabel(f"storage level [{level_unit}]")
        axes[2].set_xlabel(f"day of year {year}")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path


def save_cashflow_figure(path, schedule, discount_rate: float) -> Path:
    """Discounted yearly cashflows: O&M, replacements and revenue."""
    path = Path(path)
    years = np.arange(1, schedule.years + 1)
    disc = (1.0 + discount_rate) ** years
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.bar(years, schedule.revenue / disc / 1e3, label="revenue", color="tab:green")
        ax.bar(years, -schedule.om / disc / 1e3, label="O&M", color="tab:blue")
        ax.bar(
            years,
            -schedule.replacement / disc / 1e3,
            bottom=-schedule.om / disc / 1e3,
            label="replacement",
            color="tab:red",
        )
        ax.axhline(0.0, color="black", lw=0.8)
        ax.set_xlabel("year")
        ax.set_ylabel("discounted cashflow [k$]")
        ax.set_title(f"capex {schedule.capex / 1e6:.2f} M$")
        ax.legend()
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path


def save_hypervolume_figure(path, traces: dict) -> Path:
    """Per-iteration archive hypervolume for one or more runs."""
    path = Path(path)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for label, series in sorted(traces.items()):
            series = np.asarray(series, dtype=np.float64)
            ax.plot(np.arange(series.size), series, lw=1.2, label=label)
        ax.set_xlabel("iteration")
        ax.set_ylabel("archive hypervolume")
        ax.legend()
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path
