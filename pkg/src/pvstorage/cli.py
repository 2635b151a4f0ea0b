"""Command-line interface.

Commands
--------
synth     generate synthetic PV/load CSV profiles
simulate  run one sized system over the horizon and price it
optimize  search sizings (and operating parameters) for NPV and SSR
compare   repeated-seed comparison of the two optimisation engines

Exit codes: 0 success, 2 configuration/validation error, 3 runtime failure.
Environment overrides: PVSTORAGE_OUT_DIR prefixes relative output paths,
PVSTORAGE_THREADS sets the default worker count.
"""
from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np
import yaml

from . import figures, reporting
from .dispatch import (
    DispatchError,
    StrategyConfig,
    StrategyMode,
    SystemSizing,
    simulate_horizon,
)
from .economics import CostScenario, EconomicsError, summarize
from .evaluate import CASE_VARIABLES, SizingProblem, min_ssr_violation
from .optimizer import (
    EvaluationError,
    MomfaParams,
    NsgaParams,
    OptimizerError,
    _hypervolume_filtered,
    momfa_run,
    nsga2_run,
)
from .profiles import ProfileError, synth_load_profile, synth_pv_profile
from .scenario import ScenarioError, config_digest, load_scenario
from .storage import StorageError

_CONFIG_ERRORS = (
    ScenarioError,
    DispatchError,
    EconomicsError,
    OptimizerError,
    ProfileError,
    StorageError,
    FileNotFoundError,
)

PRESETS = {
    "tropical": {"pv_amplitude": 0.1},
    "subtropical": {"pv_amplitude": 0.8},
}


def _default_threads() -> int:
    raw = os.environ.get("PVSTORAGE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _out_path(raw) -> Path:
    path = Path(raw)
    base = os.environ.get("PVSTORAGE_OUT_DIR")
    if base and not path.is_absolute():
        path = Path(base) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _parse_sizing_flag(raw: str) -> dict:
    """Inline ``key=value,...`` or a path to a YAML mapping."""
    if "=" in raw:
        out = {}
        for item in raw.split(","):
            item = item.strip()
            if not item:
                continue
            key, _, value = item.partition("=")
            if not _:
                raise ScenarioError(f"--sizing: expected key=value, got {item!r}")
            out[key.strip()] = float(value)
        return out
    path = Path(raw)
    if not path.exists():
        raise ScenarioError(f"--sizing: file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ScenarioError(f"--sizing: {path} must hold a mapping")
    return {k: float(v) for k, v in data.items()}


def _sizing_from_mapping(raw: dict, eta: float) -> SystemSizing:
    allowed = {"pv_kwp", "battery_kwh", "el_kw", "tank_kg", "fc_kw"}
    unknown = set(raw) - allowed
    if unknown:
        raise ScenarioError(f"--sizing: unknown keys {sorted(unknown)}")
    pv = raw.get("pv_kwp", 0.0)
    if any(k in raw for k in ("el_kw", "tank_kg", "fc_kw")):
        if "battery_kwh" in raw:
            raise ScenarioError("--sizing: battery_kwh cannot be combined with hydrogen components")
        return SystemSizing.hydrogen(
            pv, raw.get("el_kw", 0.0), raw.get("tank_kg", 0.0), raw.get("fc_kw", 0.0),
            inverter_efficiency=eta,
        )
    return SystemSizing.battery(pv, raw.get("battery_kwh", 0.0), inverter_efficiency=eta)


# ----------------------------------------------------------------------
# synth
# ----------------------------------------------------------------------

def _cmd_synth(args) -> int:
    preset = PRESETS[args.preset] if args.preset else {}
    pv_amplitude = args.pv_amplitude if args.pv_amplitude is not None else preset.get("pv_amplitude", 0.1)
    out_dir = _out_path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    pv_parts, load_parts = [], []
    for year in range(args.years):
        pv_parts.append(
            synth_pv_profile(args.pv_annual_kwh_per_kwp, pv_amplitude, args.pv_noise, args.seed + year)
        )
        load_parts.append(
            synth_load_profile(
                args.load_annual_kwh, args.day_night_ratio, args.weekend_factor,
                args.seed + 1000 + year, args.load_noise,
            )
        )
    from .profiles import HourlySeries

    pv = HourlySeries(np.concatenate([p.values for p in pv_parts]))
    load = HourlySeries(np.concatenate([p.values for p in load_parts]))
    pv_path = reporting.write_series_csv(out_dir / "pv.csv", pv)
    load_path = reporting.write_series_csv(out_dir / "load.csv", load)
    print(reporting.monthly_table("PV (per kWp)", pv))
    print(reporting.monthly_table("Load", load))
    digest = config_digest(
        {
            "command": "synth",
            "pv_annual_kwh_per_kwp": args.pv_annual_kwh_per_kwp,
            "pv_amplitude": pv_amplitude,
            "pv_noise": args.pv_noise,
            "load_annual_kwh": args.load_annual_kwh,
            "day_night_ratio": args.day_night_ratio,
            "weekend_factor": args.weekend_factor,
            "load_noise": args.load_noise,
            "years": args.years,
        }
    )
    print(f"wrote {pv_path} and {load_path}")
    print(f"digest {digest} seed {args.seed}")
    return 0


# ----------------------------------------------------------------------
# simulate
# ----------------------------------------------------------------------

def _cmd_simulate(args) -> int:
    started = time.perf_counter()
    resolved = load_scenario(args.config)
    scenario = resolved.scenario
    eta = resolved.inverter_efficiency

    sizing = resolved.sizing
    if args.sizing:
        sizing = _sizing_from_mapping(_parse_sizing_flag(args.sizing), eta)
    strategy = resolved.strategy
    if args.strategy:
        if args.strategy == "cs":
            strategy = StrategyConfig.conventional()
        else:
            strategy = StrategyConfig(
                mode=StrategyMode.OLDS,
                window_start=resolved.strategy.window_start,
                window_end=resolved.strategy.window_end,
                limit_sunny=resolved.strategy.limit_sunny,
                limit_cloudy=resolved.strategy.limit_cloudy,
            )
    if strategy.mode is StrategyMode.OLDS and not sizing.is_hess:
        raise DispatchError("the long-duration strategy requires hydrogen storage sizing")

    book = resolved.cost_books[CostScenario(args.cost)]
    collect = bool(args.ledger_out)
    baseline = simulate_horizon(scenario, SystemSizing.battery(0.0, 0.0, inverter_efficiency=eta))
    result = simulate_horizon(scenario, sizing, strategy, collect_trace=collect)
    summary, schedule = summarize(baseline, result, scenario.tariff, book, sizing)

    print(f"strategy {strategy.mode.value} storage {sizing.storage_kind}")
    print(f"NPV  {summary.npv:>14,.2f}")
    print(f"NPC  {summary.npc:>14,.2f}")
    print(f"SSR  {summary.ssr:>14.4f}")
    print(reporting.bills_table(summary.baseline_bills, summary.system_bills))

    outputs = {}
    if args.ledger_out:
        ledger_path = _out_path(args.ledger_out)
        reporting.write_ledger_csv(ledger_path, result.trace)
        outputs["ledger_csv"] = str(ledger_path)
        if not args.no_plots:
            fig = figures.save_dispatch_figure(
                ledger_path.with_suffix(".png"), result.trace, sizing.storage_kind
            )
            outputs["dispatch_figure"] = str(fig)
    if args.cashflow_out:
        cash_path = _out_path(args.cashflow_out)
        reporting.write_cashflow_csv(cash_path, schedule, book.discount_rate)
        outputs["cashflow_csv"] = str(cash_path)
        if not args.no_plots:
            fig = figures.save_cashflow_figure(
                cash_path.with_suffix(".png"), schedule, book.discount_rate
            )
            outputs["cashflow_figure"] = str(fig)

    digest = config_digest(
        {
            "scenario": resolved.resolved,
            "command": "simulate",
            "cost": args.cost,
            "strategy": strategy.mode.value,
            "sizing": args.sizing or "scenario",
        }
    )
    print(f"digest {digest}")
    if args.report_out:
        report_path = _out_path(args.report_out)
        reporting.write_json_report(
            report_path,
            {
                "command": "simulate",
                "scenario_digest": resolved.digest,
                "digest": digest,
                "cost": args.cost,
                "strategy": strategy.mode.value,
                "economics": summary.to_report_dict(),
                "simulation": result.to_report_dict(),
                "outputs": outputs,
                "seconds": time.perf_counter() - started,
            },
        )
        print(f"report {report_path}")
    return 0


# ----------------------------------------------------------------------
# optimize
# ----------------------------------------------------------------------

def _momfa_params(opt: dict, seed: int) -> MomfaParams:
    return MomfaParams(
        population=int(opt["population"]),
        beta0=float(opt["beta0"]),
        gamma=float(opt["gamma"]),
        alpha0=float(opt["alpha0"]),
        theta=float(opt["theta"]),
        eta=float(opt["eta"]),
        tau=float(opt["tau"]),
        seed=seed,
    )


def _nsga_params(opt: dict, seed: int) -> NsgaParams:
    return NsgaParams(
        population=int(opt["population"]),
        crossover_prob=float(opt["crossover_prob"]),
        sbx_eta=float(opt["sbx_eta"]),
        mutation_eta=float(opt["mutation_eta"]),
        seed=seed,
    )


def _run_algorithm(algo, problem, space, opt, budget, seed, violation_fn, capacity, threads, telemetry):
    if algo == "momfa":
        return momfa_run(
            problem, space, _momfa_params(opt, seed), budget,
            violation_fn=violation_fn, archive_capacity=capacity,
            threads=threads, telemetry=telemetry,
        )
    return nsga2_run(
        problem, space, _nsga_params(opt, seed), budget,
        violation_fn=violation_fn, archive_capacity=capacity,
        threads=threads, telemetry=telemetry,
    )


def _extreme_lines(archive, names) -> list[str]:
    lines = []
    if not archive.entries:
        return ["archive is empty (no feasible solutions found)"]
    by_npv = max(archive.entries, key=lambda e: e.objectives[0])
    by_ssr = max(archive.entries, key=lambda e: e.objectives[1])
    for label, entry in (("max-NPV", by_npv), ("max-SSR", by_ssr)):
        vars_text = ", ".join(f"{n}={v:,.6g}" for n, v in zip(names, entry.position))
        lines.append(
            f"{label}: NPV {entry.objectives[0]:,.2f}  SSR {entry.objectives[1]:.4f}  ({vars_text})"
        )
    return lines


def _cmd_optimize(args) -> int:
    started = time.perf_counter()
    resolved = load_scenario(args.config)
    book = resolved.cost_books[CostScenario(args.cost)]
    problem = SizingProblem(
        resolved.scenario, book, args.case, inverter_efficiency=resolved.inverter_efficiency
    )
    space = problem.space(resolved.bounds)
    violation_fn = min_ssr_violation(args.min_ssr) if args.min_ssr is not None else None
    run = _run_algorithm(
        args.algo, problem, space, resolved.optimizer, args.budget, args.seed,
        violation_fn, int(resolved.optimizer["archive_capacity"]), args.threads,
        telemetry=bool(args.telemetry_out),
    )
    out_path = _out_path(args.out)
    reporting.write_archive_csv(out_path, run.archive, space.names)
    outputs = {"archive_csv": str(out_path)}
    if args.telemetry_out:
        tel_path = _out_path(args.telemetry_out)
        reporting.write_telemetry_csv(tel_path, run)
        outputs["telemetry_csv"] = str(tel_path)
    if not args.no_plots:
        fig = figures.save_front_figure(
            out_path.with_suffix(".png"),
            {f"{args.algo} case {args.case}{args.cost[0].upper()}": run.archive.points()},
        )
        outputs["front_figure"] = str(fig)

    print(f"algorithm {args.algo}  case {args.case}{args.cost[0].upper()}  evaluations {run.evaluations}")
    print(f"archive size {len(run.archive)}")
    for line in _extreme_lines(run.archive, space.names):
        print(line)
    digest = config_digest(
        {
            "scenario": resolved.resolved,
            "command": "optimize",
            "case": args.case,
            "cost": args.cost,
            "algo": args.algo,
            "budget": args.budget,
            "min_ssr": args.min_ssr,
        }
    )
    print(f"digest {digest} seed {args.seed}")
    if args.report_out:
        report_path = _out_path(args.report_out)
        reporting.write_json_report(
            report_path,
            {
                "command": "optimize",
                "scenario_digest": resolved.digest,
                "digest": digest,
                "seed": args.seed,
                "case": args.case,
                "cost": args.cost,
                "algorithm": args.algo,
                "budget": args.budget,
                "evaluations": run.evaluations,
                "min_ssr": args.min_ssr,
                "archive_size": len(run.archive),
                "outputs": outputs,
                "seconds": time.perf_counter() - started,
            },
        )
        print(f"report {report_path}")
    return 0


# ----------------------------------------------------------------------
# compare
# ----------------------------------------------------------------------

def _cmd_compare(args) -> int:
    started = time.perf_counter()
    resolved = load_scenario(args.config)
    book = resolved.cost_books[CostScenario(args.cost)]
    problem = SizingProblem(
        resolved.scenario, book, args.case, inverter_efficiency=resolved.inverter_efficiency
    )
    space = problem.space(resolved.bounds)
    violation_fn = min_ssr_violation(args.min_ssr) if args.min_ssr is not None else None
    capacity = int(resolved.optimizer["archive_capacity"])
    out_dir = _out_path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    runs = {}
    for algo in ("momfa", "nsga2"):
        for r in range(args.runs):
            seed = int(
                np.random.SeedSequence([args.seed, 1 if algo == "momfa" else 2, r]).generate_state(1)[0]
            )
            run = _run_algorithm(
                algo, problem, space, resolved.optimizer, args.budget, seed,
                violation_fn, capacity, args.threads, telemetry=False,
            )
            runs[(algo, r)] = run
            path = out_dir / f"{algo}_run{r + 1}.csv"
            reporting.write_archive_csv(path, run.archive, space.names)
            print(f"{algo} run {r + 1}: seed {seed} evaluations {run.evaluations} "
                  f"archive {len(run.archive)} wall {run.seconds:.1f}s")

    # shared reference point over every archived point of every run
    all_points = np.vstack(
        [run.archive.points() for run in runs.values() if len(run.archive)]
        or [np.zeros((1, 2))]
    )
    lo = all_points.min(axis=0)
    span = all_points.max(axis=0) - lo
    ref = (
        float(lo[0] - max(0.05 * span[0], 1e-9)),
        float(lo[1] - max(0.05 * span[1], 1e-9)),
    )

    summary_rows = []
    timings = {}
    hv_by_algo = {"momfa": [], "nsga2": []}
    for (algo, r), run in sorted(runs.items()):
        hv = _hypervolume_filtered(run.archive.points(), np.asarray(ref))
        hv_by_algo[algo].append(hv)
        summary_rows.append(
            {
                "algorithm": algo,
                "run": r + 1,
                "seed": run.seed,
                "evaluations": run.evaluations,
                "hypervolume": hv,
            }
        )
        timings[f"{algo}_run{r + 1}"] = run.seconds
    medians = {algo: float(np.median(vals)) for algo, vals in hv_by_algo.items()}

    import csv as _csv

    summary_path = out_dir / "summary.csv"
    with open(summary_path, "w", newline="", encoding="utf-8") as fh:
        writer = _csv.DictWriter(
            fh, fieldnames=["algorithm", "run", "seed", "evaluations", "hypervolume"]
        )
        writer.writeheader()
        for row in summary_rows:
            writer.writerow(row)
        fh.write(f"# reference,{ref[0]},{ref[1]}\n")
        for algo, med in sorted(medians.items()):
            fh.write(f"# median_hypervolume,{algo},{med}\n")

    if not args.no_plots:
        fronts = {
            f"{algo} run {r + 1}": run.archive.points() for (algo, r), run in sorted(runs.items())
        }
        figures.save_front_figure(out_dir / "fronts.png", fronts, title="Superimposed fronts")

    eval_counts = {run.evaluations for run in runs.values()}
    print(f"evaluation budget per run: {sorted(eval_counts)} (equal budgets enforced)")
    print(f"median hypervolume: momfa {medians['momfa']:.6g}  nsga2 {medians['nsga2']:.6g}")
    if medians["momfa"] >= medians["nsga2"]:
        print("trend: momfa median >= nsga2 median (expected)")
    else:
        print("trend WARNING: nsga2 median exceeded momfa median on this scenario")

    reporting.write_json_report(
        out_dir / "report.json",
        {
            "command": "compare",
            "scenario_digest": resolved.digest,
            "seed": args.seed,
            "case": args.case,
            "cost": args.cost,
            "budget": args.budget,
            "runs": args.runs,
            "reference": list(ref),
            "medians": medians,
            "rows": summary_rows,
            "timings": timings,
            "seconds": time.perf_counter() - started,
        },
    )
    print(f"wrote {summary_path}")
    return 0


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pvstorage",
        description="Techno-economic simulation and sizing of PV with battery or hydrogen storage",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate synthetic PV/load profiles")
    p_synth.add_argument("--out", required=True, help="output directory for pv.csv and load.csv")
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--preset", choices=sorted(PRESETS))
    p_synth.add_argument("--years", type=int, default=1)
    p_synth.add_argument("--pv-annual-kwh-per-kwp", type=float, default=1460.0)
    p_synth.add_argument("--pv-amplitude", type=float, default=None)
    p_synth.add_argument("--pv-noise", type=float, default=0.05)
    p_synth.add_argument("--load-annual-kwh", type=float, default=3_000_000.0)
    p_synth.add_argument("--day-night-ratio", type=float, default=3.0)
    p_synth.add_argument("--weekend-factor", type=float, default=0.6)
    p_synth.add_argument("--load-noise", type=float, default=0.05)
    p_synth.set_defaults(func=_cmd_synth)

    p_sim = sub.add_parser("simulate", help="simulate one sized system")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--strategy", choices=["cs", "olds"])
    p_sim.add_argument("--sizing", help="inline key=value list or a YAML file")
    p_sim.add_argument("--cost", choices=["current", "ultimate"], default="current")
    p_sim.add_argument("--ledger-out", help="hourly ledger CSV path")
    p_sim.add_argument("--cashflow-out", help="cashflow CSV path")
    p_sim.add_argument("--report-out", help="JSON report path")
    p_sim.add_argument("--no-plots", action="store_true")
    p_sim.set_defaults(func=_cmd_simulate)

    p_opt = sub.add_parser("optimize", help="multi-objective sizing search")
    p_opt.add_argument("--config", required=True)
    p_opt.add_argument("--case", type=int, choices=sorted(CASE_VARIABLES), required=True)
    p_opt.add_argument("--cost", choices=["current", "ultimate"], default="current")
    p_opt.add_argument("--algo", choices=["momfa", "nsga2"], default="momfa")
    p_opt.add_argument("--budget", type=int, default=2000)
    p_opt.add_argument("--seed", type=int, default=1)
    p_opt.add_argument("--min-ssr", type=float, default=None)
    p_opt.add_argument("--out", required=True, help="archive CSV path")
    p_opt.add_argument("--telemetry-out", help="per-iteration hypervolume CSV path")
    p_opt.add_argument("--report-out", help="JSON report path")
    p_opt.add_argument("--threads", type=int, default=_default_threads())
    p_opt.add_argument("--no-plots", action="store_true")
    p_opt.set_defaults(func=_cmd_optimize)

    p_cmp = sub.add_parser("compare", help="repeated-seed engine comparison")
    p_cmp.add_argument("--config", required=True)
    p_cmp.add_argument("--case", type=int, choices=sorted(CASE_VARIABLES), required=True)
    p_cmp.add_argument("--cost", choices=["current", "ultimate"], default="current")
    p_cmp.add_argument("--budget", type=int, default=2000)
    p_cmp.add_argument("--runs", type=int, default=5)
    p_cmp.add_argument("--seed", type=int, default=1)
    p_cmp.add_argument("--min-ssr", type=float, default=None)
    p_cmp.add_argument("--out", required=True, help="output directory")
    p_cmp.add_argument("--threads", type=int, default=_default_threads())
    p_cmp.add_argument("--no-plots", action="store_true")
    p_cmp.set_defaults(func=_cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "runs", None) is not None and args.runs < 1:
        print("error: --runs must be at least 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except EvaluationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
