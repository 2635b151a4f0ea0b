"""Techno-economic simulation and multi-objective sizing of grid-connected
PV systems with battery or hydrogen storage."""

__version__ = "0.1.0"

from .dispatch import (
    Scenario,
    SimulationResult,
    StrategyConfig,
    StrategyMode,
    SystemSizing,
    simulate_horizon,
    step_conventional,
    step_olds,
)
from .economics import CostBook, CostScenario, EconomicSummary, summarize
from .evaluate import SizingProblem, case_space
from .optimizer import (
    DecisionSpace,
    MomfaParams,
    NsgaParams,
    ParetoArchive,
    hypervolume,
    momfa_run,
    non_dominated_sort,
    nsga2_run,
)
from .profiles import (
    HourlySeries,
    PvPlantConfig,
    RateBand,
    TariffSchedule,
    default_tariff,
    ingest_hourly_csv,
    synth_load_profile,
    synth_pv_profile,
    tariff_band_at,
)
from .scenario import ResolvedScenario, build_scenario, load_scenario
from .storage import (
    BatteryState,
    PolarizationCurve,
    StackKind,
    StackState,
    TankState,
    battery_charge,
    battery_discharge,
    battery_year_rollover,
    cell_voltage,
    component_soh,
    electrolyser_step,
    fuel_cell_step,
    solve_operating_current,
)

__all__ = [name for name in dir() if not name.startswith("_")]
