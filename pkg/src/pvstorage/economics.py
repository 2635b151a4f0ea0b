"""Tariff billing, component cost schedules, discounting to net present
cost/value, and the self-sufficiency ratio."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping

import numpy as np

from .dispatch import SimulationResult, SystemSizing
from .profiles import BAND_ORDER, TariffSchedule


class EconomicsError(ValueError):
    """Raised for inconsistent economic inputs."""


class CostScenario(Enum):
    CURRENT = "current"
    ULTIMATE = "ultimate"


@dataclass(frozen=True)
class ComponentCost:
    """Unit capital cost, O&M factor and replacement schedule of one component."""

    unit_cost: float  # $ per kWp | kWh | kW | kg
    om_factor: float  # fraction of component capex per year
    replacements: tuple = ()  # ((year, replacement cost factor), ...)

    def __post_init__(self):
        if self.unit_cost < 0 or self.om_factor < 0:
            raise EconomicsError("unit costs and O&M factors must be non-negative")
        reps = tuple((int(y), float(f)) for y, f in self.replacements)
        for year, factor in reps:
            if year < 1 or factor < 0:
                raise EconomicsError(f"invalid replacement entry ({year}, {factor})")
        object.__setattr__(self, "replacements", reps)


_CURRENT_COSTS = {
    "pv": ComponentCost(881.0, 0.01),
    "battery": ComponentCost(490.0, 0.005, ((12, 0.50),)),
    "electrolyser": ComponentCost(1500.0, 0.01, ((15, 0.60),)),
    "tank": ComponentCost(600.0, 0.01),
    "fuel_cell": ComponentCost(4000.0, 0.01, ((5, 0.775), (10, 0.55), (15, 0.325), (20, 0.10))),
}

_ULTIMATE_COSTS = {
    "pv": ComponentCost(881.0, 0.01),
    "battery": ComponentCost(270.0, 0.005, ((12, 1.0),)),
    "electrolyser": ComponentCost(200.0, 0.01, ((15, 1.0),)),
    "tank": ComponentCost(266.0, 0.01),
    "fuel_cell": ComponentCost(400.0, 0.01, ((5, 1.0), (10, 1.0), (15, 1.0), (20, 1.0))),
}

COMPONENT_NAMES = ("pv", "battery", "electrolyser", "tank", "fuel_cell")


@dataclass(frozen=True)
class CostBook:
    """Per-component costs plus the discount rate for one cost scenario.

    Battery unit cost is read per kWh by default; ``battery_cost_per_kw``
    switches to a per-kW reading of the rated power (capacity / E-P ratio).
    """

    components: Mapping[str, ComponentCost]
    discount_rate: float = 0.05
    scenario: CostScenario = CostScenario.CURRENT
    battery_cost_per_kw: bool = False
    battery_ep_ratio: float = 2.5

    def __post_init__(self):
        if not 0 < self.discount_rate < 1:
            raise EconomicsError("discount_rate must be in (0, 1)")
        comps = dict(self.components)
        unknown = set(comps) - set(COMPONENT_NAMES)
        if unknown:
            raise EconomicsError(f"unknown cost components: {sorted(unknown)}")
        object.__setattr__(self, "components", comps)

    @classmethod
    def default(
        cls, scenario: CostScenario = CostScenario.CURRENT, discount_rate: float = 0.05
    ) -> "CostBook":
        base = _CURRENT_COSTS if scenario is CostScenario.CURRENT else _ULTIMATE_COSTS
        return cls(dict(base), discount_rate=discount_rate, scenario=scenario)

    def component(self, name: str) -> ComponentCost:
        try:
            return self.components[name]
        except KeyError:
            raise EconomicsError(f"cost book has no entry for component {name!r}") from None


@dataclass(frozen=True)
class CashflowSchedule:
    """Unsigned yearly money flows; revenues and costs are netted in the NPV."""

    capex: float  # at year 0
    om: np.ndarray  # per year 1..N
    replacement: np.ndarray
    revenue: np.ndarray

    def __post_init__(self):
        om = np.array(self.om, dtype=np.float64, copy=True)
        rep = np.array(self.replacement, dtype=np.float64, copy=True)
        rev = np.array(self.revenue, dtype=np.float64, copy=True)
        if not (om.shape == rep.shape == rev.shape) or om.ndim != 1:
            raise EconomicsError("om, replacement and revenue must be same-length vectors")
        if self.capex < 0 or np.any(om < 0) or np.any(rep < 0):
            raise EconomicsError("costs must be non-negative")
        for name, arr in (("om", om), ("replacement", rep), ("revenue", rev)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def years(self) -> int:
        return self.om.size

    def with_revenue(self, revenue: np.ndarray) -> "CashflowSchedule":
        return CashflowSchedule(self.capex, self.om, self.replacement, revenue)


@dataclass(frozen=True)
class EconomicSummary:
    """Discounted outcome of one sized system against the no-system baseline."""

    npc: float
    npv: float
    ssr: float
    baseline_bills: np.ndarray
    system_bills: np.ndarray

    def to_report_dict(self) -> dict:
        return {
            "npc": self.npc,
            "npv": self.npv,
            "ssr": self.ssr,
            "baseline_bills": np.asarray(self.baseline_bills).tolist(),
            "system_bills": np.asarray(self.system_bills).tolist(),
        }


def annual_bill(import_by_band, tariff: TariffSchedule, year: int) -> float:
    """Electricity bill of one year: per-band energy times the escalated rate."""
    if isinstance(import_by_band, Mapping):
        energies = np.array([import_by_band.get(band, 0.0) for band in BAND_ORDER])
    else:
        energies = np.asarray(import_by_band, dtype=np.float64)
        if energies.shape != (len(BAND_ORDER),):
            raise EconomicsError("import_by_band must have one entry per band")
    if np.any(energies < 0):
        raise EconomicsError("band energies must be non-negative")
    return float(energies @ tariff.rates_array(year))


def bills_by_year(result: SimulationResult, tariff: TariffSchedule) -> np.ndarray:
    """Per-year bills implied by a simulation's grid imports."""
    return np.array(
        [
            annual_bill(result.import_kwh_by_band[y], tariff, y + 1)
            for y in range(result.years)
        ]
    )


def revenue_series(
    baseline: SimulationResult, with_system: SimulationResult, tariff: TariffSchedule
) -> np.ndarray:
    """Yearly bill savings of the sized system against the no-system baseline."""
    if baseline.years != with_system.years:
        raise EconomicsError(
            f"horizon mismatch: baseline {baseline.years} years, system {with_system.years}"
        )
    if not np.allclose(baseline.load_kwh, with_system.load_kwh, rtol=1e-9, atol=1e-6):
        raise EconomicsError("baseline and system runs must share the same load")
    return bills_by_year(baseline, tariff) - bills_by_year(with_system, tariff)


def cost_schedule(
    book: CostBook, sizing: SystemSizing, years: int = 25
) -> CashflowSchedule:
    """Capex, yearly O&M and scheduled replacement costs for a sizing
    (revenue left zero)."""
    sizes: dict[str, float] = {"pv": sizing.pv_kwp}
    if sizing.is_hess:
        sizes["electrolyser"] = sizing.el_kw or 0.0
        sizes["tank"] = sizing.tank_kg or 0.0
        sizes["fuel_cell"] = sizing.fc_kw or 0.0
    else:
        battery_size = sizing.battery_kwh or 0.0
        if book.battery_cost_per_kw:
            battery_size = battery_size / book.battery_ep_ratio
        sizes["battery"] = battery_size

    capex = 0.0
    om = np.zeros(years)
    rep = np.zeros(years)
    for name, size in sizes.items():
        if size == 0.0:
            continue
        comp = book.component(name)
        comp_capex = comp.unit_cost * size
        capex += comp_capex
        om += comp_capex * comp.om_factor
        for year, factor in comp.replacements:
            if 1 <= year <= years:
                rep[year - 1] += comp_capex * factor
    return CashflowSchedule(capex, om, rep, np.zeros(years))


def npv_npc(cashflows: CashflowSchedule, discount_rate: float) -> tuple[float, float]:
    """(net present cost, net present value) of a cashflow schedule."""
    if not 0 < discount_rate < 1:
        raise EconomicsError("discount_rate must be in (0, 1)")
    years = np.arange(1, cashflows.years + 1)
    discount = (1.0 + discount_rate) ** years
    costs = (cashflows.om + cashflows.replacement) / discount
    npc = float(costs.sum() + cashflows.capex)
    npv = float(((cashflows.revenue - cashflows.om - cashflows.replacement) / discount).sum() - cashflows.capex)
    return npc, npv


def self_sufficiency_ratio(result: SimulationResult) -> float:
    """Share of the total load not imported from the grid over the horizon."""
    total_load = result.total_load_kwh
    if total_load <= 0:
        raise EconomicsError("total load must be positive")
    return 1.0 - result.total_import_kwh / total_load


def summarize(
    baseline: SimulationResult,
    with_system: SimulationResult,
    tariff: TariffSchedule,
    book: CostBook,
    sizing: SystemSizing,
) -> tuple[EconomicSummary, CashflowSchedule]:
    """Full economic outcome of a sized system: bills, revenue, NPC/NPV, SSR."""
    revenue = revenue_series(baseline, with_system, tariff)
    schedule = cost_schedule(book, sizing, with_system.years).with_revenue(revenue)
    npc, npv = npv_npc(schedule, book.discount_rate)
    summary = EconomicSummary(
        npc=npc,
        npv=npv,
        ssr=self_sufficiency_ratio(with_system),
        baseline_bills=bills_by_year(baseline, tariff),
        system_bills=bills_by_year(with_system, tariff),
    )
    return summary, schedule
