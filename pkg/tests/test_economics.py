import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pvstorage import dispatch as dp
from pvstorage import economics as ec
from pvstorage import profiles as pf
from pvstorage.profiles import RateBand


def result_from_imports(import_rows, load=None):
    imports = np.asarray(import_rows, dtype=np.float64)
    years = imports.shape[0]
    load = np.asarray(load) if load is not None else imports.sum(axis=1) * 2.0 + 1.0
    return dp.SimulationResult(
        import_kwh_by_band=imports,
        load_kwh=load,
        replacements=(),
        soh_samples={},
        curtailed_kwh=0.0,
        final_storage_level=0.0,
        storage_kind="battery",
    )


class TestAnnualBill:
    def test_zero_imports(self):
        assert ec.annual_bill({band: 0.0 for band in pf.BAND_ORDER}, pf.default_tariff(), 1) == 0.0

    def test_peak_only(self):
        bill = ec.annual_bill({RateBand.PEAK: 1000.0}, pf.default_tariff(), 1)
        assert bill == pytest.approx(187.0)

    def test_escalated_equal_bands(self):
        factors = np.ones(25)
        factors[1] = 1.1
        tariff = pf.TariffSchedule(
            pf.default_band_calendar(), dict(pf.DEFAULT_FIRST_YEAR_RATES), factors
        )
        bill = ec.annual_bill(
            {RateBand.PEAK: 100.0, RateBand.SHOULDER: 100.0, RateBand.OFF_PEAK: 100.0},
            tariff,
            2,
        )
        assert bill == pytest.approx(110.0 * (0.187 + 0.107 + 0.060))  # 38.94

    def test_array_input(self):
        bill = ec.annual_bill(np.array([100.0, 0.0, 0.0]), pf.default_tariff(), 1)
        assert bill == pytest.approx(18.70)

    def test_negative_energy_rejected(self):
        with pytest.raises(ec.EconomicsError):
            ec.annual_bill(np.array([-1.0, 0.0, 0.0]), pf.default_tariff(), 1)

    def test_linear_in_energy_and_factor(self):
        tariff = pf.default_tariff()
        b1 = ec.annual_bill(np.array([10.0, 20.0, 30.0]), tariff, 1)
        b2 = ec.annual_bill(np.array([20.0, 40.0, 60.0]), tariff, 1)
        assert b2 == pytest.approx(2.0 * b1, rel=1e-12)


class TestRevenueSeries:
    def test_identical_runs_zero_revenue(self):
        imports = np.tile([100.0, 200.0, 300.0], (25, 1))
        load = np.full(25, 1000.0)
        baseline = result_from_imports(imports, load)
        system = result_from_imports(imports, load)
        revenue = ec.revenue_series(baseline, system, pf.default_tariff())
        assert np.allclose(revenue, 0.0)

    def test_peak_reduction_revenue(self):
        base = np.tile([500.0, 0.0, 0.0], (25, 1))
        sys_rows = np.tile([0.0, 0.0, 0.0], (25, 1))
        load = np.full(25, 1000.0)
        revenue = ec.revenue_series(
            result_from_imports(base, load), result_from_imports(sys_rows, load),
            pf.default_tariff(),
        )
        assert np.allclose(revenue, 500.0 * 0.187)  # 93.5 every year

    def test_horizon_mismatch(self):
        base = result_from_imports(np.zeros((25, 3)), np.full(25, 10.0))
        short = result_from_imports(np.zeros((10, 3)), np.full(10, 10.0))
        with pytest.raises(ec.EconomicsError):
            ec.revenue_series(base, short, pf.default_tariff())

    def test_load_mismatch(self):
        base = result_from_imports(np.zeros((25, 3)), np.full(25, 10.0))
        other = result_from_imports(np.zeros((25, 3)), np.full(25, 20.0))
        with pytest.raises(ec.EconomicsError):
            ec.revenue_series(base, other, pf.default_tariff())


class TestCostSchedule:
    def test_pv_only(self):
        book = ec.CostBook.default()
        schedule = ec.cost_schedule(book, dp.SystemSizing.battery(1000.0, 0.0))
        assert schedule.capex == pytest.approx(881_000.0)
        assert np.allclose(schedule.om, 8_810.0)
        assert np.allclose(schedule.replacement, 0.0)

    def test_battery_replacement(self):
        book = ec.CostBook.default()
        schedule = ec.cost_schedule(book, dp.SystemSizing.battery(0.0, 1890.0))
        assert schedule.capex == pytest.approx(926_100.0)
        assert schedule.replacement[11] == pytest.approx(463_050.0)  # year 12 at 50%
        assert schedule.replacement.sum() == pytest.approx(463_050.0)
        assert np.allclose(schedule.om, 926_100.0 * 0.005)

    def test_zero_sizing_zero_schedule(self):
        schedule = ec.cost_schedule(ec.CostBook.default(), dp.SystemSizing.battery(0.0, 0.0))
        assert schedule.capex == 0.0
        assert np.allclose(schedule.om, 0.0)
        assert np.allclose(schedule.replacement, 0.0)

    def test_hydrogen_components(self):
        book = ec.CostBook.default()
        sizing = dp.SystemSizing.hydrogen(0.0, 100.0, 50.0, 10.0)
        schedule = ec.cost_schedule(book, sizing)
        assert schedule.capex == pytest.approx(100 * 1500.0 + 50 * 600.0 + 10 * 4000.0)
        # electrolyser replaced once in year 15 at 60%
        assert schedule.replacement[14] == pytest.approx(
            100 * 1500.0 * 0.60 + 10 * 4000.0 * 0.325
        )
        # fuel cell at years 5/10/15/20 with falling factors
        assert schedule.replacement[4] == pytest.approx(10 * 4000.0 * 0.775)
        assert schedule.replacement[19] == pytest.approx(10 * 4000.0 * 0.10)

    def test_ultimate_replacement_factors_are_full(self):
        book = ec.CostBook.default(ec.CostScenario.ULTIMATE)
        sizing = dp.SystemSizing.hydrogen(0.0, 100.0, 50.0, 10.0)
        schedule = ec.cost_schedule(book, sizing)
        assert schedule.replacement[4] == pytest.approx(10 * 400.0)
        assert schedule.replacement[14] == pytest.approx(100 * 200.0 + 10 * 400.0)

    def test_battery_per_kw_reading(self):
        book = ec.CostBook.default()
        alt = ec.CostBook(
            book.components, battery_cost_per_kw=True, battery_ep_ratio=2.5
        )
        schedule = ec.cost_schedule(alt, dp.SystemSizing.battery(0.0, 1000.0))
        assert schedule.capex == pytest.approx(490.0 * 400.0)  # 1000 kWh / 2.5 h


class TestNpvNpc:
    def test_zero_schedule(self):
        schedule = ec.CashflowSchedule(0.0, np.zeros(25), np.zeros(25), np.zeros(25))
        assert ec.npv_npc(schedule, 0.05) == (0.0, 0.0)

    def test_annuity(self):
        # 100 per year for 25 years at 5%: 100 * (1 - 1.05^-25) / 0.05
        schedule = ec.CashflowSchedule(0.0, np.zeros(25), np.zeros(25), np.full(25, 100.0))
        npc, npv = ec.npv_npc(schedule, 0.05)
        assert npv == pytest.approx(1409.39, abs=0.01)
        assert npc == 0.0

    def test_capex_only(self):
        schedule = ec.CashflowSchedule(1000.0, np.zeros(25), np.zeros(25), np.zeros(25))
        npc, npv = ec.npv_npc(schedule, 0.05)
        assert npc == pytest.approx(1000.0)
        assert npv == pytest.approx(-1000.0)

    @given(
        capex=st.floats(0.0, 1e6),
        seed=st.integers(0, 2**31 - 1),
        rate=st.floats(0.01, 0.3),
    )
    @settings(max_examples=60, deadline=None)
    def test_npv_plus_npc_is_discounted_revenue(self, capex, seed, rate):
        rng = np.random.default_rng(seed)
        schedule = ec.CashflowSchedule(
            capex,
            rng.uniform(0, 1e5, 25),
            rng.uniform(0, 1e5, 25),
            rng.uniform(0, 1e6, 25),
        )
        npc, npv = ec.npv_npc(schedule, rate)
        discounted_revenue = float(
            (schedule.revenue / (1.0 + rate) ** np.arange(1, 26)).sum()
        )
        assert npv + npc == pytest.approx(discounted_revenue, rel=1e-9, abs=1e-6)

    def test_npv_non_increasing_in_unit_cost(self):
        revenue = np.full(25, 200_000.0)
        npvs = []
        for unit in (300.0, 490.0, 900.0):
            book = ec.CostBook(
                {**ec.CostBook.default().components, "battery": ec.ComponentCost(unit, 0.005, ((12, 0.5),))}
            )
            schedule = ec.cost_schedule(book, dp.SystemSizing.battery(0.0, 1000.0)).with_revenue(revenue)
            npvs.append(ec.npv_npc(schedule, 0.05)[1])
        assert npvs[0] >= npvs[1] >= npvs[2]


class TestSelfSufficiency:
    def test_zero_imports(self):
        result = result_from_imports(np.zeros((25, 3)), np.full(25, 100.0))
        assert ec.self_sufficiency_ratio(result) == pytest.approx(1.0)

    def test_full_import(self):
        load = np.full(25, 300.0)
        result = result_from_imports(np.tile([100.0, 100.0, 100.0], (25, 1)), load)
        assert ec.self_sufficiency_ratio(result) == pytest.approx(0.0)

    def test_half_import(self):
        load = np.full(25, 300.0)
        result = result_from_imports(np.tile([50.0, 50.0, 50.0], (25, 1)), load)
        assert ec.self_sufficiency_ratio(result) == pytest.approx(0.5)

    def test_scale_invariance(self):
        load = np.full(25, 300.0)
        r1 = result_from_imports(np.tile([40.0, 30.0, 20.0], (25, 1)), load)
        r2 = result_from_imports(np.tile([400.0, 300.0, 200.0], (25, 1)), load * 10)
        assert ec.self_sufficiency_ratio(r1) == pytest.approx(
            ec.self_sufficiency_ratio(r2), rel=1e-12
        )

    def test_zero_load_rejected(self):
        result = result_from_imports(np.zeros((25, 3)), np.zeros(25))
        with pytest.raises(ec.EconomicsError):
            ec.self_sufficiency_ratio(result)


class TestSummarize:
    def test_end_to_end_consistency(self, tropical_scenario):
        sizing = dp.SystemSizing.battery(2000.0, 2000.0)
        baseline = dp.simulate_horizon(tropical_scenario, dp.SystemSizing.battery(0.0, 0.0))
        system = dp.simulate_horizon(tropical_scenario, sizing)
        summary, schedule = ec.summarize(
            baseline, system, tropical_scenario.tariff, ec.CostBook.default(), sizing
        )
        assert 0.0 < summary.ssr < 1.0
        assert summary.npc > 0.0
        # identity: npv + npc equals the discounted revenue stream
        disc = (1.05) ** np.arange(1, 26)
        assert summary.npv + summary.npc == pytest.approx(
            float((schedule.revenue / disc).sum()), rel=1e-9
        )
        assert np.all(schedule.revenue >= 0.0)
