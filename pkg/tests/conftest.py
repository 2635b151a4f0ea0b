import pytest

from pvstorage import dispatch as dp
from pvstorage import profiles as pf


def make_scenario(
    pv_amplitude: float = 0.1,
    pv_annual_per_kwp: float = 1460.0,
    load_annual: float = 3_000_000.0,
    noise: float = 0.05,
    horizon_years: int = 25,
    pv_seed: int = 11,
    load_seed: int = 12,
) -> dp.Scenario:
    """Synthetic scenario with a per-kWp base plant."""
    pv = pf.synth_pv_profile(pv_annual_per_kwp, pv_amplitude, noise, seed=pv_seed)
    load = pf.synth_load_profile(load_annual, 3.0, 0.6, seed=load_seed, noise_level=noise)
    return dp.Scenario(
        pv_plant=pf.PvPlantConfig(pv, base_kwp=1.0),
        load=load,
        tariff=pf.default_tariff(horizon_years),
        horizon_years=horizon_years,
    )


@pytest.fixture(scope="session")
def tropical_scenario() -> dp.Scenario:
    return make_scenario(pv_amplitude=0.1)


@pytest.fixture(scope="session")
def subtropical_scenario() -> dp.Scenario:
    return make_scenario(pv_amplitude=0.8)


@pytest.fixture(scope="session", autouse=True)
def warm_kernels(tropical_scenario):
    """Compile the jitted horizon kernels once so timed tests measure the
    simulation, not the compiler."""
    dp.simulate_horizon(tropical_scenario, dp.SystemSizing.battery(100.0, 100.0))
    dp.simulate_horizon(
        tropical_scenario, dp.SystemSizing.hydrogen(100.0, 50.0, 50.0, 50.0)
    )
    yield
