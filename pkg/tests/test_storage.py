import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pvstorage import storage as sto
from pvstorage.storage import StackKind


def linear_fc_curve(i_max=1000.0, v0=1.0, v_end=0.0):
    return sto.PolarizationCurve(
        np.array([0.0, i_max]), np.array([v0, v_end]), StackKind.FUEL_CELL
    )


def linear_fc_stack(op_hours=0.0, n_cells=1):
    """Fuel cell with V(I) = 1 - 0.001*I over [0, 1000]: peak power 250 W at 500 A."""
    return sto.StackState(
        StackKind.FUEL_CELL, n_cells, linear_fc_curve(), op_hours,
        sto.FUEL_CELL_DRIFT_V_PER_HOUR, 0.25 * n_cells,
    )


# ----------------------------------------------------------------------
# Battery
# ----------------------------------------------------------------------

class TestBatteryCharge:
    def test_zero_surplus_unchanged(self):
        state = sto.BatteryState(energy=200.0, capacity=1000.0)
        out, accepted = sto.battery_charge(state, 0.0)
        assert accepted == 0.0
        assert out == state

    def test_unconstrained_charge(self):
        state = sto.BatteryState.fresh(1000.0)
        out, accepted = sto.battery_charge(state, 300.0)
        assert accepted == pytest.approx(300.0)
        assert out.energy == pytest.approx(300.0)

    def test_headroom_limited(self):
        state = sto.BatteryState(energy=900.0, capacity=1000.0)
        out, accepted = sto.battery_charge(state, 300.0)
        assert accepted == pytest.approx(100.0)
        assert out.energy == pytest.approx(1000.0)

    def test_power_limited(self):
        # capacity 1000 kWh at E/P 2.5 caps the rate at 400 kW
        state = sto.BatteryState.fresh(1000.0)
        out, accepted = sto.battery_charge(state, 500.0)
        assert accepted == pytest.approx(400.0)

    def test_zero_capacity_accepts_nothing(self):
        state = sto.BatteryState.fresh(0.0)
        out, accepted = sto.battery_charge(state, 100.0)
        assert accepted == 0.0
        assert out.energy == 0.0


class TestBatteryDischarge:
    def test_zero_deficit_unchanged(self):
        state = sto.BatteryState(energy=500.0, capacity=1000.0)
        out, delivered = sto.battery_discharge(state, 0.0)
        assert delivered == 0.0
        assert out == state

    def test_efficiency_removal(self):
        state = sto.BatteryState(energy=1000.0, capacity=1000.0)
        out, delivered = sto.battery_discharge(state, 100.0)
        assert delivered == pytest.approx(100.0)
        assert out.energy == pytest.approx(1000.0 - 100.0 / 0.95)  # 894.737

    def test_energy_bound(self):
        state = sto.BatteryState(energy=50.0, capacity=1000.0)
        out, delivered = sto.battery_discharge(state, 100.0)
        assert delivered == pytest.approx(50.0 * 0.95)  # 47.5
        assert out.energy == pytest.approx(0.0, abs=1e-12)

    def test_empty_battery_delivers_nothing(self):
        state = sto.BatteryState(energy=0.0, capacity=1000.0)
        out, delivered = sto.battery_discharge(state, 100.0)
        assert delivered == 0.0

    @given(
        energy=st.floats(0.0, 1000.0),
        surplus=st.floats(0.0, 2000.0),
        deficit=st.floats(0.0, 2000.0),
    )
    @settings(max_examples=100, deadline=None)
    def test_round_trip_never_creates_energy(self, energy, surplus, deficit):
        state = sto.BatteryState(energy=energy, capacity=1000.0)
        charged, accepted = sto.battery_charge(state, surplus)
        discharged, delivered = sto.battery_discharge(charged, deficit)
        stored = accepted * 1.0
        assert delivered <= (energy + stored) * state.efficiency + 1e-9

    @given(
        energy=st.floats(0.0, 1000.0),
        flow=st.floats(0.0, 5000.0),
    )
    @settings(max_examples=100, deadline=None)
    def test_power_limit_never_exceeded(self, energy, flow):
        state = sto.BatteryState(energy=energy, capacity=1000.0)
        _, accepted = sto.battery_charge(state, flow)
        assert accepted <= state.power_limit + 1e-12
        out, delivered = sto.battery_discharge(state, flow)
        removal = (state.energy - out.energy) / 1.0
        assert removal <= state.power_limit + 1e-12


class TestBatteryRollover:
    def test_first_year_fade(self):
        state = sto.BatteryState.fresh(1000.0)
        out, replaced = sto.battery_year_rollover(state, 1)
        assert not replaced
        assert out.efficiency == pytest.approx(0.95 * 0.971)  # 0.92245

    def test_replacement_at_lifetime(self):
        state = sto.BatteryState(energy=0.0, capacity=1000.0, efficiency=0.70)
        out, replaced = sto.battery_year_rollover(state, 12)
        assert replaced
        assert out.efficiency == pytest.approx(0.95)

    def test_no_replacement_before_lifetime(self):
        state = sto.BatteryState(energy=0.0, capacity=1000.0, efficiency=0.70)
        out, replaced = sto.battery_year_rollover(state, 11)
        assert not replaced
        assert out.efficiency == pytest.approx(0.70 * 0.971)

    def test_no_replacement_at_final_year(self):
        state = sto.BatteryState(energy=0.0, capacity=1000.0, efficiency=0.70)
        _, replaced = sto.battery_year_rollover(state, 25, horizon_years=25)
        assert not replaced


# ----------------------------------------------------------------------
# Polarization curves and stacks
# ----------------------------------------------------------------------

class TestCurves:
    def test_needs_two_points(self):
        with pytest.raises(sto.StorageError):
            sto.PolarizationCurve(np.array([0.0]), np.array([1.0]), StackKind.FUEL_CELL)

    def test_currents_strictly_increasing(self):
        with pytest.raises(sto.StorageError):
            sto.PolarizationCurve(
                np.array([0.0, 0.0]), np.array([1.0, 1.0]), StackKind.FUEL_CELL
            )

    def test_electrolyser_voltage_monotone(self):
        with pytest.raises(sto.StorageError):
            sto.PolarizationCurve(
                np.array([0.0, 10.0]), np.array([1.8, 1.5]), StackKind.ELECTROLYSER
            )

    def test_fuel_cell_voltage_monotone(self):
        with pytest.raises(sto.StorageError):
            sto.PolarizationCurve(
                np.array([0.0, 10.0]), np.array([0.5, 0.9]), StackKind.FUEL_CELL
            )

    def test_origin_extension(self):
        curve = sto.PolarizationCurve(
            np.array([10.0, 20.0]), np.array([0.9, 0.8]), StackKind.FUEL_CELL
        )
        extended = curve.with_origin()
        assert extended.currents[0] == 0.0
        assert extended.voltages[0] == pytest.approx(1.0)

    def test_default_cells_hit_rated_power(self):
        el = sto.PolarizationCurve.default_electrolyser_cell()
        p_el = el.currents[-1] * el.voltages[-1]
        assert p_el == pytest.approx(500.0, rel=1e-12)
        fc = sto.PolarizationCurve.default_fuel_cell_cell()
        i = fc.currents[-1]
        assert i * fc.voltages[-1] == pytest.approx(250.0, rel=1e-12)

    def test_load_csv(self, tmp_path):
        path = tmp_path / "curve.csv"
        path.write_text("current_a,voltage_v\n10,0.9\n500,0.5\n")
        curve = sto.load_polarization_csv(path, StackKind.FUEL_CELL)
        assert curve.currents[0] == 0.0  # extended to the origin
        assert curve.kind is StackKind.FUEL_CELL


class TestCellVoltage:
    def test_fresh_is_interpolated_curve(self):
        stack = linear_fc_stack(op_hours=0.0)
        assert sto.cell_voltage(stack, 300.0) == pytest.approx(0.7, rel=1e-12)

    def test_electrolyser_drift_raises_voltage(self):
        # a cell reading 1.8 V fresh reads 1.9 V after 10,000 h at +10 uV/h
        curve = sto.PolarizationCurve(
            np.array([0.0, 100.0]), np.array([1.48, 1.83]), StackKind.ELECTROLYSER
        )
        i_at_18 = 100.0 * (1.8 - 1.48) / 0.35
        fresh = sto.StackState(StackKind.ELECTROLYSER, 1, curve, 0.0, 1.0e-5, 0.5)
        aged = sto.StackState(StackKind.ELECTROLYSER, 1, curve, 10_000.0, 1.0e-5, 0.5)
        assert sto.cell_voltage(fresh, i_at_18) == pytest.approx(1.8, rel=1e-12)
        assert sto.cell_voltage(aged, i_at_18) == pytest.approx(1.9, rel=1e-12)

    def test_fuel_cell_drift_lowers_voltage(self):
        aged = linear_fc_stack(op_hours=10_000.0)
        assert sto.cell_voltage(aged, 300.0) == pytest.approx(0.65, rel=1e-12)

    def test_fuel_cell_voltage_floors_at_zero(self):
        curve = linear_fc_curve()
        very_old = sto.StackState(StackKind.FUEL_CELL, 1, curve, 300_000.0, -5.0e-6, 0.25)
        assert sto.cell_voltage(very_old, 1000.0) == 0.0

    def test_current_outside_range(self):
        stack = linear_fc_stack()
        with pytest.raises(sto.StorageError):
            sto.cell_voltage(stack, 1001.0)


class TestSolveOperatingCurrent:
    def test_zero_power_zero_current(self):
        assert sto.solve_operating_current(linear_fc_stack(), 0.0) == 0.0

    def test_maximum_power_at_vertex(self):
        # I*(1 - 0.001 I) peaks at I = 500 A with 250 W
        assert sto.solve_operating_current(linear_fc_stack(), 0.25) == pytest.approx(500.0)

    def test_saturates_beyond_maximum(self):
        stack = linear_fc_stack()
        i = sto.solve_operating_current(stack, 0.5)
        assert i == pytest.approx(500.0)
        power = i * sto.cell_voltage(stack, i) / 1000.0
        assert power == pytest.approx(0.25)

    def test_smallest_root_selected(self):
        # 187.5 W is reached at 250 A and again at 750 A; the solve picks 250
        assert sto.solve_operating_current(linear_fc_stack(), 0.1875) == pytest.approx(250.0, rel=1e-8)

    @given(power=st.floats(0.001, 0.249))
    @settings(max_examples=100, deadline=None)
    def test_forward_reproduction_below_saturation(self, power):
        stack = linear_fc_stack()
        i = sto.solve_operating_current(stack, power)
        back = stack.n_cells * i * sto.cell_voltage(stack, i) / 1000.0
        assert back == pytest.approx(power, rel=1e-6)

    def test_electrolyser_solve(self):
        stack = sto.StackState.electrolyser(100.0)
        i = sto.solve_operating_current(stack, 60.0)
        back = stack.n_cells * i * sto.cell_voltage(stack, i) / 1000.0
        assert back == pytest.approx(60.0, rel=1e-6)


class TestElectrolyserStep:
    def test_idle_without_surplus(self):
        stack = sto.StackState.electrolyser(100.0)
        tank = sto.TankState(0.0, 1000.0)
        out_stack, out_tank, consumed, h2 = sto.electrolyser_step(stack, tank, 0.0)
        assert consumed == 0.0 and h2 == 0.0
        assert out_stack.op_hours == 0.0

    def test_flow_matches_current(self):
        # 100 A through 200 cells for one hour makes 0.756 kg
        stack = sto.StackState(
            StackKind.ELECTROLYSER, 200,
            sto.PolarizationCurve.default_electrolyser_cell(), 0.0, 1.0e-5, 100.0,
        )
        request = 200 * 100.0 * sto.cell_voltage(stack, 100.0) / 1000.0
        tank = sto.TankState(0.0, 1e9)
        out_stack, out_tank, consumed, h2 = sto.electrolyser_step(stack, tank, request)
        assert h2 == pytest.approx(1.05e-8 * 100.0 * 200 * 3600.0, rel=1e-9)
        assert consumed == pytest.approx(request, rel=1e-9)
        assert out_tank.mass == pytest.approx(h2)
        assert out_stack.op_hours == 1.0

    def test_full_tank_consumes_nothing(self):
        stack = sto.StackState.electrolyser(100.0)
        tank = sto.TankState(10.0, 10.0)
        _, out_tank, consumed, h2 = sto.electrolyser_step(stack, tank, 500.0)
        assert consumed == 0.0 and h2 == 0.0
        assert out_tank.mass == 10.0

    def test_headroom_relimits_power(self):
        stack = sto.StackState.electrolyser(100.0)
        tank = sto.TankState(0.0, 0.5)
        _, out_tank, consumed, h2 = sto.electrolyser_step(stack, tank, 500.0)
        assert h2 == pytest.approx(0.5)
        assert out_tank.mass == pytest.approx(0.5)
        assert 0.0 < consumed < 100.0

    def test_requires_electrolyser(self):
        with pytest.raises(sto.StorageError):
            sto.electrolyser_step(linear_fc_stack(), sto.TankState(0.0, 1.0), 10.0)


class TestFuelCellStep:
    def test_idle_without_deficit(self):
        stack = linear_fc_stack(n_cells=200)
        tank = sto.TankState(5.0, 10.0)
        _, out_tank, delivered, h2 = sto.fuel_cell_step(stack, tank, 0.0)
        assert delivered == 0.0 and h2 == 0.0
        assert out_tank.mass == 5.0

    def test_empty_tank_delivers_nothing(self):
        stack = linear_fc_stack(n_cells=200)
        tank = sto.TankState(0.0, 10.0)
        _, _, delivered, h2 = sto.fuel_cell_step(stack, tank, 100.0)
        assert delivered == 0.0 and h2 == 0.0

    def test_mass_bound_drains_tank_exactly(self):
        # exactly the mass for 100 A across 200 cells for one hour
        stack = linear_fc_stack(n_cells=200)
        mass = 1.05e-8 * 100.0 * 200 * 3600.0
        tank = sto.TankState(mass, 10.0)
        _, out_tank, delivered, h2 = sto.fuel_cell_step(stack, tank, 1e9)
        expected_power = 200 * 100.0 * (1.0 - 0.001 * 100.0) / 1000.0
        assert delivered == pytest.approx(expected_power, rel=1e-9)
        assert h2 == pytest.approx(mass, rel=1e-9)
        assert out_tank.mass == pytest.approx(0.0, abs=1e-9)

    def test_op_hours_accrue_only_when_delivering(self):
        stack = linear_fc_stack(n_cells=10)
        tank = sto.TankState(1.0, 10.0)
        out_stack, out_tank, delivered, _ = sto.fuel_cell_step(stack, tank, 0.5)
        assert delivered > 0.0
        assert out_stack.op_hours == 1.0
        idle_stack, _, delivered2, _ = sto.fuel_cell_step(out_stack, out_tank, 0.0)
        assert delivered2 == 0.0
        assert idle_stack.op_hours == 1.0

    def test_requires_fuel_cell(self):
        with pytest.raises(sto.StorageError):
            sto.fuel_cell_step(
                sto.StackState.electrolyser(10.0), sto.TankState(1.0, 10.0), 10.0
            )


class TestComponentSoh:
    def test_fresh_is_one(self):
        assert sto.component_soh(linear_fc_stack()) == pytest.approx(1.0)
        assert sto.component_soh(sto.StackState.electrolyser(100.0)) == pytest.approx(1.0)

    def test_fuel_cell_soh_10k_hours(self):
        assert sto.component_soh(linear_fc_stack(op_hours=10_000.0)) == pytest.approx(
            0.9025, abs=1e-9
        )

    def test_fuel_cell_soh_20k_hours(self):
        assert sto.component_soh(linear_fc_stack(op_hours=20_000.0)) == pytest.approx(
            0.81, abs=1e-9
        )

    def test_electrolyser_soh_below_one(self):
        stack = sto.StackState.electrolyser(100.0)
        aged = sto.StackState(
            stack.kind, stack.n_cells, stack.curve, 10_000.0, stack.drift, stack.rated_power
        )
        soh = sto.component_soh(aged)
        assert 0.0 < soh < 1.0

    def test_soh_non_increasing_in_op_hours(self):
        hours = np.linspace(0.0, 60_000.0, 25)
        for kind_stack in (
            lambda h: linear_fc_stack(op_hours=h),
            lambda h: sto.StackState(
                StackKind.ELECTROLYSER,
                1,
                sto.PolarizationCurve.default_electrolyser_cell(),
                h,
                1.0e-5,
                0.5,
            ),
        ):
            sohs = [sto.component_soh(kind_stack(h)) for h in hours]
            assert all(a >= b - 1e-12 for a, b in zip(sohs, sohs[1:]))


class TestTank:
    def test_mass_bounds(self):
        with pytest.raises(sto.StorageError):
            sto.TankState(-1.0, 10.0)
        with pytest.raises(sto.StorageError):
            sto.TankState(11.0, 10.0)

    def test_conservation_over_random_steps(self):
        rng = np.random.default_rng(42)
        el = sto.StackState.electrolyser(50.0)
        fc = linear_fc_stack(n_cells=100)
        tank = sto.TankState(0.0, 20.0)
        produced = consumed = 0.0
        for _ in range(500):
            if rng.random() < 0.5:
                el, tank, _, h2 = sto.electrolyser_step(el, tank, rng.uniform(0, 100))
                produced += h2
            else:
                fc, tank, _, h2 = sto.fuel_cell_step(fc, tank, rng.uniform(0, 50))
                consumed += h2
        assert tank.mass == pytest.approx(produced - consumed, rel=1e-9, abs=1e-12)
