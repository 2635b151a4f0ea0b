"""Scenario files: a YAML document with nested sections for profiles,
tariff, costs, sizing, strategy, optimizer parameters and decision bounds.

Files are validated fully before anything runs; unknown keys are rejected
with their field path. Every parameter has a shipped default, so a scenario
file only states what differs.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .dispatch import Scenario, StrategyConfig, StrategyMode, SystemSizing
from .economics import ComponentCost, CostBook, CostScenario
from .profiles import (
    HourlySeries,
    PvPlantConfig,
    RateBand,
    TariffSchedule,
    default_band_calendar,
    ingest_hourly_csv,
    synth_load_profile,
    synth_pv_profile,
)
from .storage import (
    BatterySpec,
    StackKind,
    load_polarization_csv,
)


class ScenarioError(ValueError):
    """Raised when a scenario file is malformed or inconsistent."""


DEFAULT_CONFIG = {
    "horizon_years": 25,
    "profiles": {
        "pv": {
            "source": "synthetic",  # synthetic | csv
            "path": None,
            "years": 1,
            "base_kwp": 1000.0,
            "depreciation_rate": 0.0055,
            "annual_kwh_per_kwp": 1460.0,
            "seasonal_amplitude": 0.1,
            "noise_level": 0.05,
            "seed": 11,
        },
        "load": {
            "source": "synthetic",
            "path": None,
            "years": 1,
            "annual_kwh": 3_000_000.0,
            "day_night_ratio": 3.0,
            "weekend_factor": 0.6,
            "noise_level": 0.05,
            "seed": 12,
        },
    },
    "tariff": {
        "rates": {"peak": 0.187, "shoulder": 0.107, "off_peak": 0.060},
        "price_factors": None,  # null means flat 1.0 for every year
    },
    "storage": {
        "inverter_efficiency": 0.97,
        "battery": {
            "ep_ratio": 2.5,
            "initial_efficiency": 0.95,
            "annual_fade": 0.029,
            "lifetime_years": 12,
        },
        "electrolyser": {
            "drift_v_per_hour": 1.0e-5,
            "cell_rated_w": 500.0,
            "curve_path": None,
        },
        "fuel_cell": {
            "drift_v_per_hour": -5.0e-6,
            "cell_rated_w": 250.0,
            "curve_path": None,
        },
    },
    "costs": {
        "discount_rate": 0.05,
        "battery_cost_per_kw": False,
        "current": {
            "pv": {"unit_cost": 881.0, "om_factor": 0.01, "replacements": []},
            "battery": {"unit_cost": 490.0, "om_factor": 0.005, "replacements": [[12, 0.5]]},
            "electrolyser": {"unit_cost": 1500.0, "om_factor": 0.01, "replacements": [[15, 0.6]]},
            "tank": {"unit_cost": 600.0, "om_factor": 0.01, "replacements": []},
            "fuel_cell": {
                "unit_cost": 4000.0,
                "om_factor": 0.01,
                "replacements": [[5, 0.775], [10, 0.55], [15, 0.325], [20, 0.10]],
            },
        },
        "ultimate": {
            "pv": {"unit_cost": 881.0, "om_factor": 0.01, "replacements": []},
            "battery": {"unit_cost": 270.0, "om_factor": 0.005, "replacements": [[12, 1.0]]},
            "electrolyser": {"unit_cost": 200.0, "om_factor": 0.01, "replacements": [[15, 1.0]]},
            "tank": {"unit_cost": 266.0, "om_factor": 0.01, "replacements": []},
            "fuel_cell": {
                "unit_cost": 400.0,
                "om_factor": 0.01,
                "replacements": [[5, 1.0], [10, 1.0], [15, 1.0], [20, 1.0]],
            },
        },
    },
    "sizing": {
        "pv_kwp": 0.0,
        "battery_kwh": None,
        "el_kw": None,
        "tank_kg": None,
        "fc_kw": None,
    },
    "strategy": {
        "mode": "cs",  # cs | olds
        "t_start": [1, 0],  # [day-of-year, hour]
        "t_end": [365, 23],
        "limit_sunny": 0.0,
        "limit_cloudy": 0.0,
    },
    "bounds": {
        "pv_kwp": [0.0, 10000.0],
        "battery_kwh": [0.0, 30000.0],
        "el_kw": [0.0, 5000.0],
        "tank_kg": [0.0, 10000.0],
        "fc_kw": [0.0, 5000.0],
    },
    "optimizer": {
        "population": 40,
        "archive_capacity": 100,
        "beta0": 0.2,
        "gamma": 1.0,
        "alpha0": 1.0,
        "theta": 0.9,
        "eta": 4.0,
        "tau": 1.5,
        "crossover_prob": 0.9,
        "sbx_eta": 15.0,
        "mutation_eta": 20.0,
    },
}


def _merge(defaults, user, path: str):
    """Deep-merge a user mapping over the defaults, rejecting unknown keys."""
    if user is None:
        return json.loads(json.dumps(defaults))
    if not isinstance(user, dict):
        raise ScenarioError(f"{path or 'config'}: expected a mapping, got {type(user).__name__}")
    merged = {}
    for key, default_value in defaults.items():
        child_path = f"{path}.{key}" if path else key
        if key in user and isinstance(default_value, dict):
            merged[key] = _merge(default_value, user[key], child_path)
        elif key in user:
            merged[key] = user[key]
        else:
            merged[key] = json.loads(json.dumps(default_value))
    unknown = set(user) - set(defaults)
    if unknown:
        key = sorted(unknown)[0]
        where = f"{path}.{key}" if path else key
        raise ScenarioError(f"unknown key: {where}")
    return merged


def _require_number(cfg, path: str, low=None, high=None, allow_none=False):
    value = cfg
    if value is None:
        if allow_none:
            return None
        raise ScenarioError(f"{path}: value required")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{path}: expected a number, got {value!r}")
    value = float(value)
    if low is not None and value < low:
        raise ScenarioError(f"{path}: must be >= {low}, got {value}")
    if high is not None and value > high:
        raise ScenarioError(f"{path}: must be <= {high}, got {value}")
    return value


def config_digest(mapping: dict) -> str:
    """Stable digest of a resolved configuration mapping."""
    canonical = json.dumps(mapping, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _build_pv_series(cfg, horizon_years: int) -> HourlySeries:
    if cfg["source"] == "csv":
        if not cfg["path"]:
            raise ScenarioError("profiles.pv.path: required when source is csv")
        return ingest_hourly_csv(cfg["path"], int(cfg["years"]))
    if cfg["source"] != "synthetic":
        raise ScenarioError(f"profiles.pv.source: must be synthetic or csv, got {cfg['source']!r}")
    per_kwp = synth_pv_profile(
        _require_number(cfg["annual_kwh_per_kwp"], "profiles.pv.annual_kwh_per_kwp", low=1e-9),
        _require_number(cfg["seasonal_amplitude"], "profiles.pv.seasonal_amplitude", 0.0, 1.0),
        _require_number(cfg["noise_level"], "profiles.pv.noise_level", 0.0),
        int(cfg["seed"]),
    )
    # the generator yields per-kWp output; the base plant is base_kwp strong
    base_kwp = _require_number(cfg["base_kwp"], "profiles.pv.base_kwp", low=1e-9)
    return HourlySeries(per_kwp.values * base_kwp, start_weekday=per_kwp.start_weekday)


def _build_load_series(cfg) -> HourlySeries:
    if cfg["source"] == "csv":
        if not cfg["path"]:
            raise ScenarioError("profiles.load.path: required when source is csv")
        return ingest_hourly_csv(cfg["path"], int(cfg["years"]))
    if cfg["source"] != "synthetic":
        raise ScenarioError(f"profiles.load.source: must be synthetic or csv, got {cfg['source']!r}")
    return synth_load_profile(
        _require_number(cfg["annual_kwh"], "profiles.load.annual_kwh", low=1e-9),
        _require_number(cfg["day_night_ratio"], "profiles.load.day_night_ratio", low=1e-9),
        _require_number(cfg["weekend_factor"], "profiles.load.weekend_factor", low=1e-9),
        int(cfg["seed"]),
        _require_number(cfg["noise_level"], "profiles.load.noise_level", 0.0),
    )


def _build_tariff(cfg, horizon_years: int) -> TariffSchedule:
    rates = cfg["rates"]
    factors = cfg["price_factors"]
    if factors is None:
        price_factors = np.ones(horizon_years)
    else:
        price_factors = np.asarray(factors, dtype=np.float64)
        if price_factors.size != horizon_years:
            raise ScenarioError(
                f"tariff.price_factors: expected {horizon_years} entries, got {price_factors.size}"
            )
    return TariffSchedule(
        band_calendar=default_band_calendar(),
        first_year_rates={
            RateBand.PEAK: _require_number(rates["peak"], "tariff.rates.peak", low=1e-12),
            RateBand.SHOULDER: _require_number(rates["shoulder"], "tariff.rates.shoulder", low=1e-12),
            RateBand.OFF_PEAK: _require_number(rates["off_peak"], "tariff.rates.off_peak", low=1e-12),
        },
        price_factors=price_factors,
    )


def _build_cost_book(cfg, scenario: CostScenario, discount_rate: float, per_kw: bool, ep_ratio: float) -> CostBook:
    section = cfg["current"] if scenario is CostScenario.CURRENT else cfg["ultimate"]
    components = {}
    for name, comp in section.items():
        components[name] = ComponentCost(
            unit_cost=_require_number(comp["unit_cost"], f"costs.{scenario.value}.{name}.unit_cost", low=0.0),
            om_factor=_require_number(comp["om_factor"], f"costs.{scenario.value}.{name}.om_factor", low=0.0),
            replacements=tuple((int(y), float(f)) for y, f in comp["replacements"]),
        )
    return CostBook(
        components,
        discount_rate=discount_rate,
        scenario=scenario,
        battery_cost_per_kw=per_kw,
        battery_ep_ratio=ep_ratio,
    )


def _build_sizing(cfg, inverter_efficiency: float) -> SystemSizing:
    battery = cfg["battery_kwh"]
    hess = [cfg["el_kw"], cfg["tank_kg"], cfg["fc_kw"]]
    pv_kwp = _require_number(cfg["pv_kwp"], "sizing.pv_kwp", low=0.0)
    if battery is not None and any(v is not None for v in hess):
        raise ScenarioError("sizing: battery_kwh cannot be combined with hydrogen components")
    if any(v is not None for v in hess):
        return SystemSizing.hydrogen(
            pv_kwp,
            _require_number(cfg["el_kw"], "sizing.el_kw", low=0.0, allow_none=True) or 0.0,
            _require_number(cfg["tank_kg"], "sizing.tank_kg", low=0.0, allow_none=True) or 0.0,
            _require_number(cfg["fc_kw"], "sizing.fc_kw", low=0.0, allow_none=True) or 0.0,
            inverter_efficiency=inverter_efficiency,
        )
    return SystemSizing.battery(
        pv_kwp,
        _require_number(battery, "sizing.battery_kwh", low=0.0, allow_none=True) or 0.0,
        inverter_efficiency=inverter_efficiency,
    )


def _build_strategy(cfg) -> StrategyConfig:
    mode = cfg["mode"]
    if mode not in ("cs", "olds"):
        raise ScenarioError(f"strategy.mode: must be cs or olds, got {mode!r}")
    t_start = cfg["t_start"]
    t_end = cfg["t_end"]
    for name, val in (("t_start", t_start), ("t_end", t_end)):
        if not (isinstance(val, (list, tuple)) and len(val) == 2):
            raise ScenarioError(f"strategy.{name}: expected [day_of_year, hour]")
    return StrategyConfig(
        mode=StrategyMode(mode),
        window_start=(int(t_start[0]), int(t_start[1])),
        window_end=(int(t_end[0]), int(t_end[1])),
        limit_sunny=_require_number(cfg["limit_sunny"], "strategy.limit_sunny", 0.0, 1.0),
        limit_cloudy=_require_number(cfg["limit_cloudy"], "strategy.limit_cloudy", 0.0, 1.0),
    )


@dataclass(frozen=True)
class ResolvedScenario:
    """A fully validated scenario ready to simulate or optimise."""

    scenario: Scenario
    cost_books: dict  # CostScenario -> CostBook
    sizing: SystemSizing
    strategy: StrategyConfig
    bounds: dict  # variable name -> (low, high)
    optimizer: dict  # optimizer parameter mapping
    digest: str
    resolved: dict  # the merged configuration mapping

    @property
    def inverter_efficiency(self) -> float:
        return self.sizing.inverter_efficiency


def build_scenario(config: dict | None) -> ResolvedScenario:
    """Validate and resolve a configuration mapping."""
    cfg = _merge(DEFAULT_CONFIG, config, "")
    horizon = cfg["horizon_years"]
    if not isinstance(horizon, int) or not 1 <= horizon <= 25:
        raise ScenarioError(f"horizon_years: must be an integer in 1..25, got {horizon!r}")

    try:
        pv_series = _build_pv_series(cfg["profiles"]["pv"], horizon)
        load_series = _build_load_series(cfg["profiles"]["load"])
        tariff = _build_tariff(cfg["tariff"], horizon)
    except (ScenarioError, FileNotFoundError):
        raise
    except ValueError as exc:
        raise ScenarioError(f"profiles: {exc}") from exc

    st_cfg = cfg["storage"]
    eta_inv = _require_number(st_cfg["inverter_efficiency"], "storage.inverter_efficiency", 1e-9, 1.0)
    bat_cfg = st_cfg["battery"]
    battery = BatterySpec(
        ep_ratio=_require_number(bat_cfg["ep_ratio"], "storage.battery.ep_ratio", low=1e-9),
        initial_efficiency=_require_number(
            bat_cfg["initial_efficiency"], "storage.battery.initial_efficiency", 1e-9, 1.0
        ),
        annual_fade=_require_number(bat_cfg["annual_fade"], "storage.battery.annual_fade", 0.0, 1.0 - 1e-12),
        lifetime=int(bat_cfg["lifetime_years"]),
    )

    el_cfg = st_cfg["electrolyser"]
    fc_cfg = st_cfg["fuel_cell"]
    el_curve = (
        load_polarization_csv(el_cfg["curve_path"], StackKind.ELECTROLYSER)
        if el_cfg["curve_path"]
        else None
    )
    fc_curve = (
        load_polarization_csv(fc_cfg["curve_path"], StackKind.FUEL_CELL)
        if fc_cfg["curve_path"]
        else None
    )

    costs_cfg = cfg["costs"]
    discount = _require_number(costs_cfg["discount_rate"], "costs.discount_rate", 1e-12, 1.0 - 1e-12)
    per_kw = bool(costs_cfg["battery_cost_per_kw"])
    books = {
        CostScenario.CURRENT: _build_cost_book(costs_cfg, CostScenario.CURRENT, discount, per_kw, battery.ep_ratio),
        CostScenario.ULTIMATE: _build_cost_book(costs_cfg, CostScenario.ULTIMATE, discount, per_kw, battery.ep_ratio),
    }
    # stack replacement years drive the in-simulation ageing resets
    el_years = tuple(y for y, _ in books[CostScenario.CURRENT].component("electrolyser").replacements)
    fc_years = tuple(y for y, _ in books[CostScenario.CURRENT].component("fuel_cell").replacements)

    pv_cfg = cfg["profiles"]["pv"]
    scenario = Scenario(
        pv_plant=PvPlantConfig(
            base_series=pv_series,
            base_kwp=_require_number(pv_cfg["base_kwp"], "profiles.pv.base_kwp", low=1e-9),
            depreciation_rate=_require_number(
                pv_cfg["depreciation_rate"], "profiles.pv.depreciation_rate", 0.0, 1.0 - 1e-12
            ),
        ),
        load=load_series,
        tariff=tariff,
        horizon_years=horizon,
        battery=battery,
        el_cell_curve=el_curve,
        fc_cell_curve=fc_curve,
        el_cell_rated_w=_require_number(el_cfg["cell_rated_w"], "storage.electrolyser.cell_rated_w", low=1e-9),
        fc_cell_rated_w=_require_number(fc_cfg["cell_rated_w"], "storage.fuel_cell.cell_rated_w", low=1e-9),
        el_drift=_require_number(el_cfg["drift_v_per_hour"], "storage.electrolyser.drift_v_per_hour"),
        fc_drift=_require_number(fc_cfg["drift_v_per_hour"], "storage.fuel_cell.drift_v_per_hour"),
        el_replacement_years=el_years,
        fc_replacement_years=fc_years,
    )

    sizing = _build_sizing(cfg["sizing"], eta_inv)
    strategy = _build_strategy(cfg["strategy"])
    if strategy.mode is StrategyMode.OLDS and not sizing.is_hess:
        raise ScenarioError("strategy.mode: olds requires hydrogen storage sizing")

    bounds = {}
    for name, pair in cfg["bounds"].items():
        if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
            raise ScenarioError(f"bounds.{name}: expected [low, high]")
        low = _require_number(pair[0], f"bounds.{name}[0]")
        high = _require_number(pair[1], f"bounds.{name}[1]")
        if not low < high:
            raise ScenarioError(f"bounds.{name}: low must be below high")
        bounds[name] = (low, high)

    opt = dict(cfg["optimizer"])
    if int(opt["population"]) < 2:
        raise ScenarioError("optimizer.population: must be at least 2")

    return ResolvedScenario(
        scenario=scenario,
        cost_books=books,
        sizing=sizing,
        strategy=strategy,
        bounds=bounds,
        optimizer=opt,
        digest=config_digest(cfg),
        resolved=cfg,
    )


def load_scenario(path) -> ResolvedScenario:
    """Load, validate and resolve a scenario YAML file."""
    path = Path(path)
    if not path.exists():
        raise ScenarioError(f"scenario file not found: {path}")
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{path}: invalid YAML ({exc})") from exc
    if raw is None:
        raw = {}
    return build_scenario(raw)
