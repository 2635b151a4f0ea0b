"""Delimited and JSON report writers.

All CSV output uses fixed formatting so identical runs produce
byte-identical files.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .dispatch import HourlyTrace
from .economics import CashflowSchedule
from .optimizer import OptimizerRun, ParetoArchive
from .profiles import BAND_ORDER, HOURS_PER_YEAR, HourlySeries, monthly_totals


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".10g")


def write_series_csv(path, series: HourlySeries, start_year: int = 2018) -> Path:
    """Write a profile in the ingestion format (``timestamp,power_kw``).

    Timestamps start at midnight on the first day of ``start_year`` and
    advance hourly; the default start lands on a Monday.
    """
    from datetime import datetime, timedelta

    path = Path(path)
    t0 = datetime(start_year, 1, 1)
    step = timedelta(hours=1)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "power_kw"])
        ts = t0
        for value in series.values:
            writer.writerow([ts.isoformat(), _fmt(value)])
            ts += step
    return path


def write_ledger_csv(path, trace: HourlyTrace) -> Path:
    """Hourly ledger: ``year,hour,band,pv,charge,discharge,import,level``."""
    path = Path(path)
    charge = trace.column("charge")
    delivered = trace.column("delivered")
    imports = trace.column("grid_import")
    level = trace.column("level")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["year", "hour", "band", "pv", "charge", "discharge", "import", "level"])
        for t in range(trace.n_hours):
            writer.writerow(
                [
                    t // HOURS_PER_YEAR + 1,
                    t % HOURS_PER_YEAR,
                    BAND_ORDER[trace.bands[t]].value,
                    _fmt(trace.pv[t]),
                    _fmt(charge[t]),
                    _fmt(delivered[t]),
                    _fmt(imports[t]),
                    _fmt(level[t]),
                ]
            )
    return path


def write_cashflow_csv(path, schedule: CashflowSchedule, discount_rate: float) -> Path:
    """Yearly cashflows: ``year,capex,om,replacement,revenue,discounted_net``."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["year", "capex", "om", "replacement", "revenue", "discounted_net"])
        writer.writerow([0, _fmt(schedule.capex), 0, 0, 0, _fmt(-schedule.capex)])
        for y in range(1, schedule.years + 1):
            net = (
                schedule.revenue[y - 1] - schedule.om[y - 1] - schedule.replacement[y - 1]
            ) / (1.0 + discount_rate) ** y
            writer.writerow(
                [
                    y,
                    0,
                    _fmt(schedule.om[y - 1]),
                    _fmt(schedule.replacement[y - 1]),
                    _fmt(schedule.revenue[y - 1]),
                    _fmt(net),
                ]
            )
    return path


def write_archive_csv(path, archive: ParetoArchive, variable_names) -> Path:
    """Archive solutions sorted by SSR: decision variables, NPV, SSR, rank."""
    path = Path(path)
    entries = sorted(
        archive.entries,
        key=lambda e: (e.objectives[1], e.objectives[0], tuple(e.position)),
    )
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(variable_names) + ["npv", "ssr", "rank"])
        for entry in entries:
            writer.writerow(
                [_fmt(v) for v in entry.position]
                + [_fmt(entry.objectives[0]), _fmt(entry.objectives[1]), 1]
            )
    return path


def write_telemetry_csv(path, run: OptimizerRun) -> Path:
    """Per-iteration archive hypervolume of one optimiser run."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "evaluations", "hypervolume"])
        if run.hv_trace is not None:
            pop = run.evaluations // max(1, len(run.hv_trace))
            for i, hv in enumerate(run.hv_trace):
                writer.writerow([i, (i + 1) * pop, _fmt(hv)])
    return path


def write_json_report(path, payload: dict) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def monthly_table(label: str, series: HourlySeries) -> str:
    """Printable per-month energy table of the first covered year."""
    totals = monthly_totals(series)
    lines = [f"{label} monthly energy [kWh]:"]
    names = ["Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"]
    for name, value in zip(names, totals):
        lines.append(f"  {name}: {value:>14,.1f}")
    lines.append(f"  total: {totals.sum():>12,.1f}")
    return "\n".join(lines)


def bills_table(baseline, system) -> str:
    """Printable per-year baseline vs system bill table."""
    lines = ["year   baseline_bill   system_bill   saving"]
    for y, (b, s) in enumerate(zip(baseline, system), start=1):
        lines.append(f"{y:>4}   {b:>13,.2f}   {s:>11,.2f}   {b - s:>9,.2f}")
    return "\n".join(lines)
