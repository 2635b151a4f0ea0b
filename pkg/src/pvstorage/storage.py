"""Physical storage models: battery with annual efficiency fade, PEM
electrolyser and fuel-cell stacks with voltage-drift ageing, and the
hydrogen tank.

All states are immutable; operations return updated copies.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from . import _kernels
from ._kernels import H2_KG_PER_AMP_SECOND, SECONDS_PER_HOUR

# Cell voltage drift per operating hour (V/h): an ageing electrolyser draws
# a higher voltage, an ageing fuel cell delivers a lower one.
ELECTROLYSER_DRIFT_V_PER_HOUR = 1.0e-5
FUEL_CELL_DRIFT_V_PER_HOUR = -5.0e-6

# Fresh rated power of one default cell (W); cell counts are derived from
# the stack rating with these.
DEFAULT_EL_CELL_RATED_W = 500.0
DEFAULT_FC_CELL_RATED_W = 250.0


class StorageError(ValueError):
    """Raised for invalid storage states or operations."""


class StackKind(Enum):
    ELECTROLYSER = "electrolyser"
    FUEL_CELL = "fuel_cell"


@dataclass(frozen=True)
class BatterySpec:
    """Battery parameters independent of the installed capacity."""

    ep_ratio: float = 2.5  # energy/power ratio, hours
    initial_efficiency: float = 0.95
    annual_fade: float = 0.029  # relative efficiency loss per year
    lifetime: int = 12  # years between replacements

    def __post_init__(self):
        if self.ep_ratio <= 0:
            raise StorageError(f"ep_ratio must be positive, got {self.ep_ratio}")
        if not 0 < self.initial_efficiency <= 1:
            raise StorageError("initial_efficiency must be in (0, 1]")
        if not 0 <= self.annual_fade < 1:
            raise StorageError("annual_fade must be in [0, 1)")
        if self.lifetime < 1:
            raise StorageError("lifetime must be at least 1 year")


@dataclass(frozen=True)
class BatteryState:
    """Battery with stored energy and the efficiency in effect this year."""

    energy: float  # kWh currently stored
    capacity: float  # kWh
    ep_ratio: float = 2.5
    efficiency: float = 0.95
    initial_efficiency: float = 0.95
    annual_fade: float = 0.029
    lifetime: int = 12

    def __post_init__(self):
        if self.capacity < 0:
            raise StorageError(f"capacity must be non-negative, got {self.capacity}")
        if not -1e-9 <= self.energy <= self.capacity + 1e-9:
            raise StorageError(
                f"energy {self.energy} outside [0, capacity={self.capacity}]"
            )
        if not 0 < self.efficiency <= self.initial_efficiency <= 1:
            raise StorageError(
                "efficiency must satisfy 0 < efficiency <= initial_efficiency <= 1"
            )
        if self.ep_ratio <= 0:
            raise StorageError("ep_ratio must be positive")

    @classmethod
    def fresh(cls, capacity: float, spec: BatterySpec | None = None) -> "BatteryState":
        spec = spec or BatterySpec()
        return cls(
            energy=0.0,
            capacity=capacity,
            ep_ratio=spec.ep_ratio,
            efficiency=spec.initial_efficiency,
            initial_efficiency=spec.initial_efficiency,
            annual_fade=spec.annual_fade,
            lifetime=spec.lifetime,
        )

    @property
    def power_limit(self) -> float:
        """Maximum charge/discharge rate, kW."""
        return self.capacity / self.ep_ratio


@dataclass(frozen=True)
class PolarizationCurve:
    """Cell voltage vs current, piecewise linear.

    Electrolyser curves are non-decreasing in current, fuel-cell curves
    non-increasing.
    """

    currents: np.ndarray  # A, strictly increasing
    voltages: np.ndarray  # V
    kind: StackKind

    def __post_init__(self):
        cur = np.array(self.currents, dtype=np.float64, copy=True)
        vol = np.array(self.voltages, dtype=np.float64, copy=True)
        if cur.ndim != 1 or cur.size < 2 or vol.shape != cur.shape:
            raise StorageError("curve needs at least 2 (current, voltage) points")
        if np.any(np.diff(cur) <= 0):
            raise StorageError("curve currents must be strictly increasing")
        if cur[0] < 0:
            raise StorageError("curve currents must be non-negative")
        if np.any(vol < 0):
            raise StorageError("curve voltages must be non-negative")
        dv = np.diff(vol)
        if self.kind is StackKind.ELECTROLYSER and np.any(dv < 0):
            raise StorageError("electrolyser voltage must be non-decreasing in current")
        if self.kind is StackKind.FUEL_CELL and np.any(dv > 0):
            raise StorageError("fuel-cell voltage must be non-increasing in current")
        cur.setflags(write=False)
        vol.setflags(write=False)
        slopes = np.diff(vol) / np.diff(cur)
        slopes.setflags(write=False)
        object.__setattr__(self, "currents", cur)
        object.__setattr__(self, "voltages", vol)
        object.__setattr__(self, "slopes", slopes)

    @classmethod
    def default_electrolyser_cell(cls) -> "PolarizationCurve":
        """Linear placeholder cell rising 1.48 V to 1.83 V, rated 500 W fresh."""
        i_max = DEFAULT_EL_CELL_RATED_W / 1.83
        return cls(np.array([0.0, i_max]), np.array([1.48, 1.83]), StackKind.ELECTROLYSER)

    @classmethod
    def default_fuel_cell_cell(cls) -> "PolarizationCurve":
        """Linear placeholder cell falling 1.0 V to 0.5 V, rated 250 W fresh.

        Power I*V peaks at the end of the range with value 0.5 * i_max.
        """
        i_max = DEFAULT_FC_CELL_RATED_W / 0.5
        return cls(np.array([0.0, i_max]), np.array([1.0, 0.5]), StackKind.FUEL_CELL)

    def with_origin(self) -> "PolarizationCurve":
        """Extend the curve to current 0 if needed (first segment extrapolated)."""
        if self.currents[0] == 0.0:
            return self
        slope = (self.voltages[1] - self.voltages[0]) / (self.currents[1] - self.currents[0])
        v0 = max(self.voltages[0] - slope * self.currents[0], 0.0)
        return PolarizationCurve(
            np.concatenate(([0.0], self.currents)),
            np.concatenate(([v0], self.voltages)),
            self.kind,
        )


@dataclass(frozen=True)
class StackState:
    """An electrolyser or fuel-cell stack with accumulated operating hours."""

    kind: StackKind
    n_cells: int
    curve: PolarizationCurve  # fresh-cell curve
    op_hours: float = 0.0
    drift: float = 0.0  # V per operating hour, signed
    rated_power: float = 0.0  # kW nameplate

    def __post_init__(self):
        if self.n_cells < 1:
            raise StorageError("n_cells must be at least 1")
        if self.op_hours < 0:
            raise StorageError("op_hours must be non-negative")
        if self.curve.kind is not self.kind:
            raise StorageError("curve kind does not match stack kind")

    @classmethod
    def electrolyser(
        cls,
        rated_kw: float,
        curve: PolarizationCurve | None = None,
        cell_rated_w: float = DEFAULT_EL_CELL_RATED_W,
        drift: float = ELECTROLYSER_DRIFT_V_PER_HOUR,
    ) -> "StackState":
        if rated_kw <= 0:
            raise StorageError("rated_kw must be positive")
        curve = curve or PolarizationCurve.default_electrolyser_cell()
        n_cells = max(1, round(rated_kw * 1000.0 / cell_rated_w))
        return cls(StackKind.ELECTROLYSER, n_cells, curve, 0.0, drift, rated_kw)

    @classmethod
    def fuel_cell(
        cls,
        rated_kw: float,
        curve: PolarizationCurve | None = None,
        cell_rated_w: float = DEFAULT_FC_CELL_RATED_W,
        drift: float = FUEL_CELL_DRIFT_V_PER_HOUR,
    ) -> "StackState":
        if rated_kw <= 0:
            raise StorageError("rated_kw must be positive")
        curve = curve or PolarizationCurve.default_fuel_cell_cell()
        n_cells = max(1, round(rated_kw * 1000.0 / cell_rated_w))
        return cls(StackKind.FUEL_CELL, n_cells, curve, 0.0, drift, rated_kw)

    @property
    def voltage_offset(self) -> float:
        return self.drift * self.op_hours

    @property
    def floors_at_zero(self) -> bool:
        return self.kind is StackKind.FUEL_CELL


@dataclass(frozen=True)
class TankState:
    """Hydrogen tank inventory."""

    mass: float  # kg stored
    capacity: float  # kg

    def __post_init__(self):
        if self.capacity < 0:
            raise StorageError("capacity must be non-negative")
        if not -1e-12 <= self.mass <= self.capacity + 1e-9:
            raise StorageError(f"mass {self.mass} outside [0, capacity={self.capacity}]")


# ----------------------------------------------------------------------
# Battery operations
# ----------------------------------------------------------------------

def battery_charge(state: BatteryState, surplus_dc: float, dt: float = 1.0):
    """Charge from DC surplus; returns (new state, accepted power kW).

    Acceptance is bounded by the surplus, the E/P power limit and the
    remaining headroom; the rest of the surplus is curtailed by the caller.
    """
    if surplus_dc < 0:
        raise StorageError("surplus_dc must be non-negative")
    if dt <= 0:
        raise StorageError("dt must be positive")
    energy, accepted = _kernels.bat_charge(
        state.energy, state.capacity, state.power_limit, surplus_dc, dt
    )
    return replace(state, energy=energy), accepted


def battery_discharge(state: BatteryState, deficit_dc: float, dt: float = 1.0):
    """Discharge toward a DC deficit; returns (new state, delivered DC kW).

    The rate removed from storage is deficit/efficiency (bounded by the
    power limit and the stored energy); delivery is removal * efficiency.
    """
    if deficit_dc < 0:
        raise StorageError("deficit_dc must be non-negative")
    if dt <= 0:
        raise StorageError("dt must be positive")
    energy, _removal, delivered = _kernels.bat_discharge(
        state.energy, state.capacity, state.power_limit, state.efficiency, deficit_dc, dt
    )
    return replace(state, energy=energy), delivered


def battery_year_rollover(
    state: BatteryState, year_just_ended: int, horizon_years: int = 25
):
    """Apply the annual efficiency fade and any scheduled replacement.

    Returns (new state, replaced flag). A replacement resets the efficiency
    to its initial value and is reported so economics can cost it.
    """
    if year_just_ended < 1:
        raise StorageError("year_just_ended must be at least 1")
    eff = state.efficiency * (1.0 - state.annual_fade)
    replaced = (
        state.lifetime > 0
        and year_just_ended % state.lifetime == 0
        and year_just_ended < horizon_years
    )
    if replaced:
        eff = state.initial_efficiency
    return replace(state, efficiency=eff), replaced


# ----------------------------------------------------------------------
# Stack operations
# ----------------------------------------------------------------------

def cell_voltage(stack: StackState, current: float) -> float:
    """Aged cell voltage at a current within the curve range."""
    cur = stack.curve.currents
    if not cur[0] <= current <= cur[-1]:
        raise StorageError(
            f"current {current} outside curve range [{cur[0]}, {cur[-1]}]"
        )
    return float(
        _kernels.cell_voltage_at(
            cur,
            stack.curve.voltages,
            stack.curve.slopes,
            stack.voltage_offset,
            stack.floors_at_zero,
            current,
        )
    )


def stack_max_power(stack: StackState) -> tuple[float, float]:
    """(maximum stack power kW, per-cell current achieving it) at current age."""
    p_cell, i_at = _kernels.max_cell_power(
        stack.curve.currents,
        stack.curve.voltages,
        stack.curve.slopes,
        stack.voltage_offset,
        stack.floors_at_zero,
        stack.curve.currents[-1],
    )
    return stack.n_cells * p_cell / 1000.0, float(i_at)


def solve_operating_current(stack: StackState, power_dc: float) -> float:
    """Smallest per-cell current at which the stack converts ``power_dc`` kW.

    Requests above the aged maximum power saturate at the max-power current.
    """
    if power_dc < 0:
        raise StorageError("power_dc must be non-negative")
    return float(
        _kernels.solve_stack_current(
            stack.curve.currents,
            stack.curve.voltages,
            stack.curve.slopes,
            stack.voltage_offset,
            stack.floors_at_zero,
            stack.n_cells,
            power_dc,
        )
    )


def component_soh(stack: StackState) -> float:
    """State of health: ratio of fresh to aged maximum cell power for an
    electrolyser, aged to fresh for a fuel cell. Equals 1 when new."""
    return float(
        _kernels.stack_soh(
            stack.curve.currents,
            stack.curve.voltages,
            stack.curve.slopes,
            stack.drift,
            stack.floors_at_zero,
            stack.op_hours,
            stack.kind is StackKind.ELECTROLYSER,
        )
    )


def electrolyser_step(
    stack: StackState, tank: TankState, surplus_dc: float, dt: float = 1.0
):
    """Run the electrolyser for one interval on the available DC surplus.

    Power is limited by the aged stack maximum and re-limited by tank
    headroom. Operating hours accrue only when power is consumed.
    Returns (new stack, new tank, consumed kW, produced kg).
    """
    if stack.kind is not StackKind.ELECTROLYSER:
        raise StorageError("electrolyser_step requires an ELECTROLYSER stack")
    if surplus_dc < 0:
        raise StorageError("surplus_dc must be non-negative")
    if dt <= 0:
        raise StorageError("dt must be positive")
    mass, consumed, produced = _kernels.el_step(
        stack.curve.currents,
        stack.curve.voltages,
        stack.curve.slopes,
        stack.voltage_offset,
        stack.n_cells,
        tank.mass,
        tank.capacity,
        surplus_dc,
        dt,
    )
    new_stack = replace(stack, op_hours=stack.op_hours + dt) if consumed > 0 else stack
    return new_stack, replace(tank, mass=mass), consumed, produced


def fuel_cell_step(
    stack: StackState, tank: TankState, deficit_dc: float, dt: float = 1.0
):
    """Run the fuel cell for one interval against a DC deficit.

    Delivery is limited by the aged stack maximum and by the power
    producible from the stored mass over the interval.
    Returns (new stack, new tank, delivered DC kW, consumed kg).
    """
    if stack.kind is not StackKind.FUEL_CELL:
        raise StorageError("fuel_cell_step requires a FUEL_CELL stack")
    if deficit_dc < 0:
        raise StorageError("deficit_dc must be non-negative")
    if dt <= 0:
        raise StorageError("dt must be positive")
    mass, delivered, consumed = _kernels.fc_step(
        stack.curve.currents,
        stack.curve.voltages,
        stack.curve.slopes,
        stack.voltage_offset,
        stack.n_cells,
        tank.mass,
        deficit_dc,
        dt,
    )
    new_stack = replace(stack, op_hours=stack.op_hours + dt) if delivered > 0 else stack
    return new_stack, replace(tank, mass=mass), delivered, consumed


def load_polarization_csv(path, kind: StackKind) -> PolarizationCurve:
    """Load a ``current_a,voltage_v`` CSV into a curve, extended to current 0."""
    import csv as _csv
    from pathlib import Path as _Path

    path = _Path(path)
    if not path.exists():
        raise FileNotFoundError(f"polarization curve file not found: {path}")
    currents, voltages = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = _csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip().lower() for c in header[:2]] != ["current_a", "voltage_v"]:
            raise StorageError(f"{path}: expected header 'current_a,voltage_v'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                currents.append(float(row[0]))
                voltages.append(float(row[1]))
            except (ValueError, IndexError) as exc:
                raise StorageError(f"{path}:{lineno}: malformed row") from exc
    curve = PolarizationCurve(np.asarray(currents), np.asarray(voltages), kind)
    return curve.with_origin()
