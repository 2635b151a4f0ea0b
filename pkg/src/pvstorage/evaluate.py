"""Objective evaluation: decode a decision vector, simulate the horizon and
score it as (net present value, self-sufficiency ratio).

Case 1 sizes PV plus a battery, case 2 PV plus the hydrogen chain, case 3
adds the four long-duration operating variables (window start/end as
hour-of-year integers plus the two tank-level limits).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dispatch import (
    Scenario,
    SimulationResult,
    StrategyConfig,
    StrategyMode,
    SystemSizing,
    simulate_horizon,
)
from .economics import CostBook, EconomicSummary, summarize
from .optimizer import DecisionSpace, Variable, VariableKind

CASE_VARIABLES = {
    1: ("pv_kwp", "battery_kwh"),
    2: ("pv_kwp", "el_kw", "tank_kg", "fc_kw"),
    3: (
        "pv_kwp",
        "el_kw",
        "tank_kg",
        "fc_kw",
        "t_start",
        "t_end",
        "limit_sunny",
        "limit_cloudy",
    ),
}

DEFAULT_BOUNDS = {
    "pv_kwp": (0.0, 10000.0),
    "battery_kwh": (0.0, 30000.0),
    "el_kw": (0.0, 5000.0),
    "tank_kg": (0.0, 10000.0),
    "fc_kw": (0.0, 5000.0),
}

_HOUR_BOUNDS = (0.0, 8759.0)
_LIMIT_BOUNDS = (0.0, 1.0)


def case_space(case: int, bounds: dict | None = None) -> DecisionSpace:
    """Decision space of one study case, with optional bound overrides."""
    if case not in CASE_VARIABLES:
        raise ValueError(f"case must be 1, 2 or 3, got {case}")
    merged = dict(DEFAULT_BOUNDS)
    if bounds:
        merged.update(bounds)
    variables = []
    for name in CASE_VARIABLES[case]:
        if name in ("t_start", "t_end"):
            variables.append(Variable(name, *_HOUR_BOUNDS, VariableKind.INTEGER_HOUR))
        elif name in ("limit_sunny", "limit_cloudy"):
            variables.append(Variable(name, *_LIMIT_BOUNDS))
        else:
            lo, hi = merged[name]
            variables.append(Variable(name, float(lo), float(hi)))
    return DecisionSpace(tuple(variables))


def _hour_to_day_hour(hour_idx: int) -> tuple[int, int]:
    return hour_idx // 24 + 1, hour_idx % 24


def decode_vector(case: int, vector, inverter_efficiency: float = 0.97):
    """Decision vector -> (SystemSizing, StrategyConfig)."""
    x = np.asarray(vector, dtype=np.float64)
    names = CASE_VARIABLES[case]
    if x.shape != (len(names),):
        raise ValueError(f"case {case} expects {len(names)} variables, got {x.shape}")
    values = dict(zip(names, x))
    if case == 1:
        sizing = SystemSizing.battery(
            values["pv_kwp"], values["battery_kwh"],
            inverter_efficiency=inverter_efficiency,
        )
        return sizing, StrategyConfig.conventional()
    sizing = SystemSizing.hydrogen(
        values["pv_kwp"], values["el_kw"], values["tank_kg"], values["fc_kw"],
        inverter_efficiency=inverter_efficiency,
    )
    if case == 2:
        return sizing, StrategyConfig.conventional()
    strategy = StrategyConfig(
        mode=StrategyMode.OLDS,
        window_start=_hour_to_day_hour(int(round(values["t_start"]))),
        window_end=_hour_to_day_hour(int(round(values["t_end"]))),
        limit_sunny=float(values["limit_sunny"]),
        limit_cloudy=float(values["limit_cloudy"]),
    )
    return sizing, strategy


@dataclass
class SizingProblem:
    """Callable objective over one scenario, case and cost book.

    The zero-system baseline is simulated once and reused; evaluation is a
    pure function of the decision vector.
    """

    scenario: Scenario
    cost_book: CostBook
    case: int
    inverter_efficiency: float = 0.97

    def __post_init__(self):
        if self.case not in CASE_VARIABLES:
            raise ValueError(f"case must be 1, 2 or 3, got {self.case}")
        self._baseline = simulate_horizon(
            self.scenario,
            SystemSizing.battery(0.0, 0.0, inverter_efficiency=self.inverter_efficiency),
        )

    @property
    def baseline(self) -> SimulationResult:
        return self._baseline

    def space(self, bounds: dict | None = None) -> DecisionSpace:
        return case_space(self.case, bounds)

    def simulate(self, vector, collect_trace: bool = False) -> SimulationResult:
        sizing, strategy = decode_vector(self.case, vector, self.inverter_efficiency)
        return simulate_horizon(self.scenario, sizing, strategy, collect_trace)

    def summarize(self, vector) -> tuple[EconomicSummary, SimulationResult]:
        sizing, strategy = decode_vector(self.case, vector, self.inverter_efficiency)
        result = simulate_horizon(self.scenario, sizing, strategy)
        summary, _ = summarize(
            self._baseline, result, self.scenario.tariff, self.cost_book, sizing
        )
        return summary, result

    def __call__(self, vector) -> tuple[float, float]:
        summary, _ = self.summarize(vector)
        return summary.npv, summary.ssr


def min_ssr_violation(min_ssr: float):
    """Constraint hook: violation of an SSR floor, for constrained domination."""
    if not 0 <= min_ssr <= 1:
        raise ValueError(f"min_ssr must be in [0, 1], got {min_ssr}")

    def violation(objectives) -> float:
        return max(0.0, min_ssr - objectives[1])

    return violation
