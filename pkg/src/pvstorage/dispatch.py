"""Hour-by-hour energy management under the conventional or long-duration
strategy, and the multi-year horizon simulation with ageing and
replacements.

The grid connects on the AC side: photovoltaic power and storage discharge
pass through the inverter, imported power does not. Surplus PV beyond what
storage accepts is curtailed; there is no export.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from . import _kernels
from .profiles import (
    BAND_ORDER,
    HOURS_PER_YEAR,
    HourlySeries,
    PvPlantConfig,
    RateBand,
    TariffSchedule,
    band_horizon,
    pv_unit_horizon,
    tile_series,
)
from .storage import (
    BatterySpec,
    BatteryState,
    ELECTROLYSER_DRIFT_V_PER_HOUR,
    FUEL_CELL_DRIFT_V_PER_HOUR,
    DEFAULT_EL_CELL_RATED_W,
    DEFAULT_FC_CELL_RATED_W,
    PolarizationCurve,
    StackKind,
    StackState,
    TankState,
)

_DUMMY_I = np.array([0.0, 1.0])
_DUMMY_V = np.array([1.0, 1.0])
_DUMMY_S = np.array([0.0])


class DispatchError(ValueError):
    """Raised for inconsistent sizing, strategy or scenario inputs."""


class StrategyMode(Enum):
    CS = "cs"
    OLDS = "olds"


def hour_of_year(day_of_year: int, hour: int) -> int:
    """0-based hour index of a (day-of-year, hour-of-day) pair."""
    if not 1 <= day_of_year <= 365:
        raise DispatchError(f"day_of_year must be 1..365, got {day_of_year}")
    if not 0 <= hour <= 23:
        raise DispatchError(f"hour must be 0..23, got {hour}")
    return (day_of_year - 1) * 24 + hour


@dataclass(frozen=True)
class StrategyConfig:
    """Dispatch strategy: conventional, or long-duration with a seasonal
    window and two tank-level limits.

    Inside the window the sunny limit applies, outside it the cloudy limit;
    the window wraps across the year boundary when start is after end. When
    the tank sits below the active limit, discharge is suppressed during
    off-peak hours.
    """

    mode: StrategyMode = StrategyMode.CS
    window_start: tuple[int, int] = (1, 0)  # (day-of-year, hour)
    window_end: tuple[int, int] = (365, 23)
    limit_sunny: float = 0.0
    limit_cloudy: float = 0.0

    def __post_init__(self):
        if not 0 <= self.limit_sunny <= 1 or not 0 <= self.limit_cloudy <= 1:
            raise DispatchError("tank-level limits must be in [0, 1]")
        hour_of_year(*self.window_start)
        hour_of_year(*self.window_end)

    @classmethod
    def conventional(cls) -> "StrategyConfig":
        return cls(mode=StrategyMode.CS)

    @property
    def start_hour(self) -> int:
        return hour_of_year(*self.window_start)

    @property
    def end_hour(self) -> int:
        return hour_of_year(*self.window_end)

    def in_window(self, hour_idx: int) -> bool:
        """Whether an hour-of-year falls inside the sunny window."""
        h = hour_idx % HOURS_PER_YEAR
        s, e = self.start_hour, self.end_hour
        if s <= e:
            return s <= h <= e
        return h >= s or h <= e

    def active_limit(self, hour_idx: int) -> float:
        return self.limit_sunny if self.in_window(hour_idx) else self.limit_cloudy


def active_limit_profile(strategy: StrategyConfig) -> np.ndarray:
    """Active tank-level limit for each hour of the year (zeros under CS)."""
    if strategy.mode is StrategyMode.CS:
        return np.zeros(HOURS_PER_YEAR)
    hours = np.arange(HOURS_PER_YEAR)
    s, e = strategy.start_hour, strategy.end_hour
    if s <= e:
        inside = (hours >= s) & (hours <= e)
    else:
        inside = (hours >= s) | (hours <= e)
    return np.where(inside, strategy.limit_sunny, strategy.limit_cloudy)


@dataclass(frozen=True)
class SystemSizing:
    """Plant sizing: PV plus either a battery or a hydrogen chain."""

    pv_kwp: float = 0.0
    battery_kwh: float | None = None
    el_kw: float | None = None
    tank_kg: float | None = None
    fc_kw: float | None = None
    inverter_efficiency: float = 0.97

    def __post_init__(self):
        if self.pv_kwp < 0:
            raise DispatchError("pv_kwp must be non-negative")
        if not 0 < self.inverter_efficiency <= 1:
            raise DispatchError("inverter_efficiency must be in (0, 1]")
        hess_fields = (self.el_kw, self.tank_kg, self.fc_kw)
        has_hess = any(f is not None for f in hess_fields)
        if self.battery_kwh is not None and has_hess:
            raise DispatchError("sizing cannot mix battery and hydrogen storage")
        if self.battery_kwh is not None and self.battery_kwh < 0:
            raise DispatchError("battery_kwh must be non-negative")
        if has_hess:
            for name, val in zip(("el_kw", "tank_kg", "fc_kw"), hess_fields):
                if val is not None and val < 0:
                    raise DispatchError(f"{name} must be non-negative")
                if val is None:
                    object.__setattr__(self, name, 0.0)

    @classmethod
    def battery(cls, pv_kwp: float, battery_kwh: float, **kw) -> "SystemSizing":
        return cls(pv_kwp=pv_kwp, battery_kwh=battery_kwh, **kw)

    @classmethod
    def hydrogen(
        cls, pv_kwp: float, el_kw: float, tank_kg: float, fc_kw: float, **kw
    ) -> "SystemSizing":
        return cls(pv_kwp=pv_kwp, el_kw=el_kw, tank_kg=tank_kg, fc_kw=fc_kw, **kw)

    @property
    def is_hess(self) -> bool:
        return self.battery_kwh is None and any(
            f is not None for f in (self.el_kw, self.tank_kg, self.fc_kw)
        )

    @property
    def storage_kind(self) -> str:
        if self.is_hess:
            return "hydrogen"
        if self.battery_kwh:
            return "battery"
        return "none"


@dataclass(frozen=True)
class StorageStates:
    """Mutable-by-replacement bundle of the storage component states."""

    battery: BatteryState | None = None
    electrolyser: StackState | None = None
    fuel_cell: StackState | None = None
    tank: TankState | None = None


@dataclass(frozen=True)
class HourLedger:
    """Energy flows of a single dispatched hour (all kW, level in kWh or kg)."""

    pv_generated: float
    pv_to_load: float
    pv_to_storage: float
    pv_curtailed: float
    storage_charge_power: float
    storage_discharge_removal: float
    storage_delivered_dc: float
    grid_import: float
    rate_band: RateBand
    storage_level: float
    h2_produced: float = 0.0
    h2_consumed: float = 0.0

    def __post_init__(self):
        flows = (
            self.pv_generated,
            self.pv_to_load,
            self.pv_to_storage,
            self.pv_curtailed,
            self.storage_charge_power,
            self.storage_discharge_removal,
            self.storage_delivered_dc,
            self.grid_import,
        )
        if any(f < 0 for f in flows):
            raise DispatchError("ledger flows must be non-negative")


def _ac_balance_load(ledger: HourLedger, eta_inv: float) -> float:
    """Reconstruct the AC load implied by a ledger (for audits)."""
    return eta_inv * (ledger.pv_to_load + ledger.storage_delivered_dc) + ledger.grid_import


def _stack_arrays(stack: StackState | None):
    if stack is None:
        return _DUMMY_I, _DUMMY_V, _DUMMY_S, 0.0, 0
    return (
        stack.curve.currents,
        stack.curve.voltages,
        stack.curve.slopes,
        stack.voltage_offset,
        stack.n_cells,
    )


def _step(
    sizing: SystemSizing,
    states: StorageStates,
    pv: float,
    load: float,
    band: RateBand,
    allow_discharge: bool,
    dt: float,
):
    if pv < 0 or load < 0:
        raise DispatchError("pv and load must be non-negative")
    eta = sizing.inverter_efficiency
    if sizing.is_hess:
        tank = states.tank or TankState(0.0, sizing.tank_kg or 0.0)
        el_i, el_v, el_s, el_off, el_n = _stack_arrays(states.electrolyser)
        fc_i, fc_v, fc_s, fc_off, fc_n = _stack_arrays(states.fuel_cell)
        mass, ptl, consumed, delivered, imp, curt, h2i, h2o = _kernels.hess_hour(
            pv, load, eta, el_i, el_v, el_s, el_off, el_n,
            fc_i, fc_v, fc_s, fc_off, fc_n,
            tank.mass, tank.capacity, allow_discharge, dt,
        )
        new_states = StorageStates(
            battery=None,
            electrolyser=(
                replace(states.electrolyser, op_hours=states.electrolyser.op_hours + dt)
                if states.electrolyser is not None and consumed > 0
                else states.electrolyser
            ),
            fuel_cell=(
                replace(states.fuel_cell, op_hours=states.fuel_cell.op_hours + dt)
                if states.fuel_cell is not None and delivered > 0
                else states.fuel_cell
            ),
            tank=replace(tank, mass=mass),
        )
        ledger = HourLedger(
            pv_generated=pv,
            pv_to_load=ptl,
            pv_to_storage=consumed,
            pv_curtailed=curt,
            storage_charge_power=consumed,
            storage_discharge_removal=delivered,
            storage_delivered_dc=delivered,
            grid_import=imp,
            rate_band=band,
            storage_level=mass,
            h2_produced=h2i,
            h2_consumed=h2o,
        )
        return new_states, ledger

    battery = states.battery or BatteryState.fresh(sizing.battery_kwh or 0.0)
    energy, ptl, charge, removal, delivered, imp, curt = _kernels.battery_hour(
        pv, load, eta, battery.energy, battery.capacity, battery.power_limit,
        battery.efficiency, dt,
    )
    new_states = StorageStates(battery=replace(battery, energy=energy))
    ledger = HourLedger(
        pv_generated=pv,
        pv_to_load=ptl,
        pv_to_storage=charge,
        pv_curtailed=curt,
        storage_charge_power=charge,
        storage_discharge_removal=removal,
        storage_delivered_dc=delivered,
        grid_import=imp,
        rate_band=band,
        storage_level=energy,
    )
    return new_states, ledger


def step_conventional(
    sizing: SystemSizing,
    states: StorageStates,
    pv: float,
    load: float,
    band: RateBand,
    dt: float = 1.0,
):
    """One hour under the conventional strategy: charge any DC surplus,
    discharge against any DC deficit, import the residual from the grid."""
    return _step(sizing, states, pv, load, band, True, dt)


def step_olds(
    sizing: SystemSizing,
    states: StorageStates,
    pv: float,
    load: float,
    band: RateBand,
    hour_idx: int,
    strategy: StrategyConfig,
    dt: float = 1.0,
):
    """One hour under the long-duration strategy (hydrogen storage only).

    Charging always follows the standard rule. If the pre-hour tank level is
    at or above the active limit the standard discharge rule applies;
    otherwise discharge is suppressed during off-peak hours.
    """
    if strategy.mode is not StrategyMode.OLDS:
        raise DispatchError("step_olds requires an OLDS strategy")
    if not sizing.is_hess:
        raise DispatchError("the long-duration strategy requires hydrogen storage sizing")
    tank = states.tank or TankState(0.0, sizing.tank_kg or 0.0)
    limit = strategy.active_limit(hour_idx)
    allow = (tank.mass >= limit * tank.capacity) or (band is not RateBand.OFF_PEAK)
    return _step(sizing, states, pv, load, band, allow, dt)


# ----------------------------------------------------------------------
# Scenario and horizon simulation
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Scenario:
    """Resolved simulation inputs shared by every candidate evaluation."""

    pv_plant: PvPlantConfig
    load: HourlySeries
    tariff: TariffSchedule
    horizon_years: int = 25
    battery: BatterySpec = BatterySpec()
    el_cell_curve: PolarizationCurve | None = None
    fc_cell_curve: PolarizationCurve | None = None
    el_cell_rated_w: float = DEFAULT_EL_CELL_RATED_W
    fc_cell_rated_w: float = DEFAULT_FC_CELL_RATED_W
    el_drift: float = ELECTROLYSER_DRIFT_V_PER_HOUR
    fc_drift: float = FUEL_CELL_DRIFT_V_PER_HOUR
    el_replacement_years: tuple = (15,)
    fc_replacement_years: tuple = (5, 10, 15, 20)

    def __post_init__(self):
        if not 1 <= self.horizon_years <= 25:
            raise DispatchError("horizon_years must be in 1..25")
        if self.tariff.horizon_years < self.horizon_years:
            raise DispatchError(
                f"tariff covers {self.tariff.horizon_years} years, "
                f"horizon needs {self.horizon_years}"
            )
        el_curve = self.el_cell_curve or PolarizationCurve.default_electrolyser_cell()
        fc_curve = self.fc_cell_curve or PolarizationCurve.default_fuel_cell_cell()
        if el_curve.kind is not StackKind.ELECTROLYSER:
            raise DispatchError("el_cell_curve must be an electrolyser curve")
        if fc_curve.kind is not StackKind.FUEL_CELL:
            raise DispatchError("fc_cell_curve must be a fuel-cell curve")
        object.__setattr__(self, "el_cell_curve", el_curve)
        object.__setattr__(self, "fc_cell_curve", fc_curve)
        # Precomputed horizon arrays shared across candidate evaluations.
        object.__setattr__(
            self, "_pv_unit_full", pv_unit_horizon(self.pv_plant, self.horizon_years)
        )
        object.__setattr__(self, "_load_full", tile_series(self.load, self.horizon_years))
        object.__setattr__(
            self,
            "_bands_full",
            band_horizon(self.tariff, self.load.start_weekday, self.horizon_years),
        )

    @property
    def pv_unit_full(self) -> np.ndarray:
        return self._pv_unit_full

    @property
    def load_full(self) -> np.ndarray:
        return self._load_full

    @property
    def bands_full(self) -> np.ndarray:
        return self._bands_full

    def electrolyser_stack(self, rated_kw: float) -> StackState | None:
        if rated_kw <= 0:
            return None
        return StackState.electrolyser(
            rated_kw, self.el_cell_curve, self.el_cell_rated_w, self.el_drift
        )

    def fuel_cell_stack(self, rated_kw: float) -> StackState | None:
        if rated_kw <= 0:
            return None
        return StackState.fuel_cell(
            rated_kw, self.fc_cell_curve, self.fc_cell_rated_w, self.fc_drift
        )

    def initial_states(self, sizing: SystemSizing) -> StorageStates:
        """Fresh storage states (battery and tank start empty)."""
        if sizing.is_hess:
            return StorageStates(
                electrolyser=self.electrolyser_stack(sizing.el_kw or 0.0),
                fuel_cell=self.fuel_cell_stack(sizing.fc_kw or 0.0),
                tank=TankState(0.0, sizing.tank_kg or 0.0),
            )
        return StorageStates(
            battery=BatteryState.fresh(sizing.battery_kwh or 0.0, self.battery)
        )


@dataclass(frozen=True)
class HourlyTrace:
    """Per-hour flow record of a horizon run, column layout per
    ``_kernels.TRACE_COLUMNS``."""

    data: np.ndarray  # (n_hours, 9)
    pv: np.ndarray
    load: np.ndarray
    bands: np.ndarray

    def column(self, name: str) -> np.ndarray:
        return self.data[:, _kernels.TRACE_COLUMNS.index(name)]

    @property
    def n_hours(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class SimulationResult:
    """Aggregated outcome of a horizon simulation."""

    import_kwh_by_band: np.ndarray  # (years, 3) in BAND_ORDER
    load_kwh: np.ndarray  # (years,)
    replacements: tuple  # ((component, year), ...)
    soh_samples: dict  # component -> per-year-boundary health/efficiency
    curtailed_kwh: float
    final_storage_level: float
    storage_kind: str
    trace: HourlyTrace | None = None

    def __post_init__(self):
        imports = np.asarray(self.import_kwh_by_band, dtype=np.float64)
        loads = np.asarray(self.load_kwh, dtype=np.float64)
        per_year = imports.sum(axis=1)
        if np.any(per_year > loads * (1 + 1e-9) + 1e-9):
            raise DispatchError("per-year import exceeds per-year load")
        object.__setattr__(self, "import_kwh_by_band", imports)
        object.__setattr__(self, "load_kwh", loads)

    @property
    def years(self) -> int:
        return self.load_kwh.size

    @property
    def total_import_kwh(self) -> float:
        return float(self.import_kwh_by_band.sum())

    @property
    def total_load_kwh(self) -> float:
        return float(self.load_kwh.sum())

    def to_report_dict(self) -> dict:
        return {
            "years": self.years,
            "storage_kind": self.storage_kind,
            "import_kwh_by_band": {
                band.value: self.import_kwh_by_band[:, i].tolist()
                for i, band in enumerate(BAND_ORDER)
            },
            "load_kwh": self.load_kwh.tolist(),
            "total_import_kwh": self.total_import_kwh,
            "total_load_kwh": self.total_load_kwh,
            "curtailed_kwh": self.curtailed_kwh,
            "final_storage_level": self.final_storage_level,
            "replacements": [list(r) for r in self.replacements],
            "soh_samples": {k: np.asarray(v).tolist() for k, v in self.soh_samples.items()},
        }


def _reset_flags(years: int, schedule) -> np.ndarray:
    flags = np.zeros(years + 1, dtype=np.bool_)
    for y in schedule:
        if 1 <= y < years:
            flags[y] = True
    return flags


def simulate_horizon(
    scenario: Scenario,
    sizing: SystemSizing,
    strategy: StrategyConfig | None = None,
    collect_trace: bool = False,
) -> SimulationResult:
    """Simulate the full horizon hour by hour.

    PV is scaled and depreciated per year, the battery fades and is replaced
    on its lifetime schedule, stacks age with operating hours and reset at
    the scheduled replacement years. Storage levels carry across all year
    boundaries. Deterministic for fixed inputs.
    """
    strategy = strategy or StrategyConfig.conventional()
    if strategy.mode is StrategyMode.OLDS and not sizing.is_hess:
        raise DispatchError("the long-duration strategy requires hydrogen storage sizing")
    years = scenario.horizon_years
    pv_full = scenario.pv_unit_full * sizing.pv_kwp
    load_full = scenario.load_full
    bands = scenario.bands_full
    eta = sizing.inverter_efficiency
    load_kwh = load_full.reshape(years, HOURS_PER_YEAR).sum(axis=1)

    if sizing.is_hess:
        el = scenario.electrolyser_stack(sizing.el_kw or 0.0)
        fc = scenario.fuel_cell_stack(sizing.fc_kw or 0.0)
        el_i, el_v, el_s, _, el_n = _stack_arrays(el)
        fc_i, fc_v, fc_s, _, fc_n = _stack_arrays(fc)
        limit = active_limit_profile(strategy)
        el_reset = _reset_flags(years, scenario.el_replacement_years)
        fc_reset = _reset_flags(years, scenario.fc_replacement_years)
        (
            imp_band,
            curtailed,
            soh_el,
            soh_fc,
            _el_oph,
            _fc_oph,
            final_mass,
            trace_data,
        ) = _kernels.hess_horizon(
            pv_full, load_full, bands, eta, years,
            el_i, el_v, el_s, scenario.el_drift, el_n,
            fc_i, fc_v, fc_s, scenario.fc_drift, fc_n,
            float(sizing.tank_kg or 0.0), 0.0,
            limit, el_reset, fc_reset, collect_trace,
        )
        replacements = []
        if el_n > 0:
            replacements += [("electrolyser", y) for y in scenario.el_replacement_years if y < years]
        if fc_n > 0:
            replacements += [("fuel_cell", y) for y in scenario.fc_replacement_years if y < years]
        replacements.sort(key=lambda r: (r[1], r[0]))
        soh = {"electrolyser": soh_el, "fuel_cell": soh_fc}
        final_level = float(final_mass)
    else:
        spec = scenario.battery
        cap = float(sizing.battery_kwh or 0.0)
        imp_band, curtailed, eff_by_year, final_energy, trace_data = _kernels.battery_horizon(
            pv_full, load_full, bands, eta, years,
            cap, cap / spec.ep_ratio, spec.initial_efficiency,
            spec.annual_fade, spec.lifetime, 0.0, collect_trace,
        )
        replacements = (
            [("battery", y) for y in range(spec.lifetime, years, spec.lifetime)]
            if cap > 0
            else []
        )
        soh = {"battery_efficiency": eff_by_year}
        final_level = float(final_energy)

    trace = None
    if collect_trace:
        trace = HourlyTrace(data=trace_data, pv=pv_full, load=load_full, bands=bands)
    return SimulationResult(
        import_kwh_by_band=imp_band,
        load_kwh=load_kwh,
        replacements=tuple(replacements),
        soh_samples=soh,
        curtailed_kwh=float(curtailed),
        final_storage_level=final_level,
        storage_kind=sizing.storage_kind,
        trace=trace,
    )
