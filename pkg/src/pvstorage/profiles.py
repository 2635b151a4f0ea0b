"""Hourly PV and load series, synthetic profile generators and the
time-of-use tariff calendar.

All series use a fixed 8,760-hour year (leap days are never modelled) so
that annual sums and the tariff calendar line up exactly.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import datetime, timedelta
from enum import Enum
from pathlib import Path

import numpy as np

HOURS_PER_YEAR = 8760
HOURS_PER_DAY = 24
DAYS_PER_YEAR = 365

# First day-of-year (0-based) of each calendar month, non-leap year.
MONTH_STARTS = (0, 31, 59, 90, 120, 151, 181, 212, 243, 273, 304, 334, 365)

MONDAY = 0
SATURDAY = 5
SUNDAY = 6


class RateBand(Enum):
    """Time-of-use price band."""

    PEAK = "peak"
    SHOULDER = "shoulder"
    OFF_PEAK = "off_peak"


# Stable ordering used for band-indexed arrays throughout the package.
BAND_ORDER = (RateBand.PEAK, RateBand.SHOULDER, RateBand.OFF_PEAK)
BAND_CODE = {band: i for i, band in enumerate(BAND_ORDER)}
OFF_PEAK_CODE = BAND_CODE[RateBand.OFF_PEAK]


class ProfileError(ValueError):
    """Raised for malformed or inconsistent profile inputs."""


@dataclass(frozen=True)
class HourlySeries:
    """Per-hour power series covering one or more whole 8,760-hour years.

    values : kW for each hour slot, all non-negative.
    start_weekday : day of week of hour 0 (0 = Monday .. 6 = Sunday).
    """

    values: np.ndarray
    start_weekday: int = MONDAY

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64, copy=True)
        if vals.ndim != 1 or vals.size == 0 or vals.size % HOURS_PER_YEAR != 0:
            raise ProfileError(
                f"series length must be a positive multiple of {HOURS_PER_YEAR}, got {vals.size}"
            )
        if not np.all(np.isfinite(vals)):
            raise ProfileError("series contains non-finite values")
        if np.any(vals < 0):
            raise ProfileError("series contains negative power values")
        if not 0 <= int(self.start_weekday) <= 6:
            raise ProfileError(f"start_weekday must be 0..6, got {self.start_weekday}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "start_weekday", int(self.start_weekday))

    @property
    def years(self) -> int:
        return self.values.size // HOURS_PER_YEAR

    def year_values(self, year: int) -> np.ndarray:
        """Values of one year (1-based)."""
        if not 1 <= year <= self.years:
            raise ProfileError(f"year {year} outside series ({self.years} years)")
        lo = (year - 1) * HOURS_PER_YEAR
        return self.values[lo : lo + HOURS_PER_YEAR]

    def annual_totals(self) -> np.ndarray:
        """kWh per covered year (1-hour slots)."""
        return self.values.reshape(self.years, HOURS_PER_YEAR).sum(axis=1)


def default_band_calendar() -> np.ndarray:
    """Default weekly band calendar, shape (7, 24) of band codes.

    Mon-Sat 10:00-12:00 and 17:00-20:00 are peak; Mon-Sat 4:00-10:00,
    12:00-17:00 and 20:00-22:00 plus Sun 4:00-22:00 are shoulder; all other
    hours are off-peak.
    """
    cal = np.full((7, HOURS_PER_DAY), BAND_CODE[RateBand.OFF_PEAK], dtype=np.int8)
    for dow in range(MONDAY, SUNDAY):  # Monday .. Saturday
        cal[dow, 4:10] = BAND_CODE[RateBand.SHOULDER]
        cal[dow, 10:12] = BAND_CODE[RateBand.PEAK]
        cal[dow, 12:17] = BAND_CODE[RateBand.SHOULDER]
        cal[dow, 17:20] = BAND_CODE[RateBand.PEAK]
        cal[dow, 20:22] = BAND_CODE[RateBand.SHOULDER]
    cal[SUNDAY, 4:22] = BAND_CODE[RateBand.SHOULDER]
    return cal


DEFAULT_FIRST_YEAR_RATES = {
    RateBand.PEAK: 0.187,
    RateBand.SHOULDER: 0.107,
    RateBand.OFF_PEAK: 0.060,
}


@dataclass(frozen=True)
class TariffSchedule:
    """Time-of-use tariff: weekly band calendar, first-year rates and the
    per-year price escalation factors."""

    band_calendar: np.ndarray  # (7, 24) band codes
    first_year_rates: dict  # RateBand -> $/kWh
    price_factors: np.ndarray  # factor per year, first entry must be 1

    def __post_init__(self):
        cal = np.array(self.band_calendar, dtype=np.int8, copy=True)
        if cal.shape != (7, HOURS_PER_DAY):
            raise ProfileError(f"band calendar must be 7x24, got {cal.shape}")
        if cal.min() < 0 or cal.max() >= len(BAND_ORDER):
            raise ProfileError("band calendar contains invalid band codes")
        cal.setflags(write=False)
        object.__setattr__(self, "band_calendar", cal)

        rates = dict(self.first_year_rates)
        if set(rates) != set(BAND_ORDER):
            raise ProfileError("first-year rates must cover exactly the three bands")
        if any(r <= 0 for r in rates.values()):
            raise ProfileError("all first-year rates must be positive")
        object.__setattr__(self, "first_year_rates", rates)

        k = np.array(self.price_factors, dtype=np.float64, copy=True)
        if k.ndim != 1 or k.size == 0:
            raise ProfileError("price_factors must be a non-empty 1-D sequence")
        if np.any(k <= 0):
            raise ProfileError("all price factors must be positive")
        if abs(k[0] - 1.0) > 1e-12:
            raise ProfileError(f"first-year price factor must be 1.0, got {k[0]}")
        k.setflags(write=False)
        object.__setattr__(self, "price_factors", k)

    @property
    def horizon_years(self) -> int:
        return self.price_factors.size

    def rate(self, band: RateBand, year: int) -> float:
        """$/kWh of a band in a given year (1-based)."""
        if not 1 <= year <= self.horizon_years:
            raise ProfileError(f"year {year} outside tariff horizon {self.horizon_years}")
        return self.first_year_rates[band] * float(self.price_factors[year - 1])

    def rates_array(self, year: int) -> np.ndarray:
        """Rates for (peak, shoulder, off-peak) in a given year."""
        return np.array([self.rate(band, year) for band in BAND_ORDER])


def default_tariff(horizon_years: int = 25) -> TariffSchedule:
    """Default tariff with flat price factors."""
    return TariffSchedule(
        band_calendar=default_band_calendar(),
        first_year_rates=dict(DEFAULT_FIRST_YEAR_RATES),
        price_factors=np.ones(horizon_years),
    )


def tariff_band_at(schedule: TariffSchedule, day_of_week: int, hour_of_day: int):
    """Band and first-year rate for a weekday/hour pair."""
    if not 0 <= day_of_week <= 6:
        raise ProfileError(f"day_of_week must be 0..6, got {day_of_week}")
    if not 0 <= hour_of_day <= 23:
        raise ProfileError(f"hour_of_day must be 0..23, got {hour_of_day}")
    band = BAND_ORDER[schedule.band_calendar[day_of_week, hour_of_day]]
    return band, schedule.first_year_rates[band]


@dataclass(frozen=True)
class PvPlantConfig:
    """Measured base PV system used to scale candidate plant sizes."""

    base_series: HourlySeries
    base_kwp: float
    depreciation_rate: float = 0.0055  # output loss per year of age

    def __post_init__(self):
        if self.base_kwp <= 0:
            raise ProfileError(f"base_kwp must be positive, got {self.base_kwp}")
        if not 0 <= self.depreciation_rate < 1:
            raise ProfileError(
                f"depreciation_rate must be in [0, 1), got {self.depreciation_rate}"
            )


def scaled_pv_output(
    plant: PvPlantConfig, new_kwp: float, year: int, hour: int
) -> float:
    """Output of a resized plant at one hour of a given project year.

    Linear in plant size, with linear output depreciation applied per year
    of age. Year is 1-based and limited to the 25-year project horizon.
    """
    if new_kwp < 0:
        raise ProfileError(f"new_kwp must be non-negative, got {new_kwp}")
    if not 1 <= year <= 25:
        raise ProfileError(f"year {year} outside the 25-year horizon")
    base = float(plant.base_series.values[hour])
    derate = 1.0 - plant.depreciation_rate * (year - 1)
    return max(base * (new_kwp / plant.base_kwp) * derate, 0.0)


def pv_unit_horizon(plant: PvPlantConfig, horizon_years: int) -> np.ndarray:
    """Per-kWp output over the whole horizon, kW/kWp.

    A single-year base series is tiled with per-year depreciation applied; a
    base series covering the full horizon is used verbatim (it already
    embodies any ageing).
    """
    base = plant.base_series
    if base.years == horizon_years:
        return base.values / plant.base_kwp
    if base.years != 1:
        raise ProfileError(
            f"base series covers {base.years} years; expected 1 or {horizon_years}"
        )
    unit = base.values / plant.base_kwp
    derates = 1.0 - plant.depreciation_rate * np.arange(horizon_years)
    out = (derates[:, None] * unit[None, :]).reshape(-1)
    return np.maximum(out, 0.0)


def tile_series(series: HourlySeries, horizon_years: int) -> np.ndarray:
    """Series values over the whole horizon (tiled if single-year)."""
    if series.years == horizon_years:
        return series.values.copy()
    if series.years != 1:
        raise ProfileError(
            f"series covers {series.years} years; expected 1 or {horizon_years}"
        )
    return np.tile(series.values, horizon_years)


def band_horizon(
    tariff: TariffSchedule, start_weekday: int, horizon_years: int
) -> np.ndarray:
    """Band code for every hour of the horizon.

    The weekday advances continuously across tiled years (365 days shift the
    calendar by one weekday per year).
    """
    days = horizon_years * DAYS_PER_YEAR
    dows = (start_weekday + np.arange(days)) % 7
    return tariff.band_calendar[dows].reshape(-1)


def ingest_hourly_csv(path, expected_year_count: int) -> HourlySeries:
    """Read a ``timestamp,power_kw`` CSV into an HourlySeries.

    Timestamps must be ISO-8601, hourly, strictly increasing and gap-free;
    the row count must equal 8,760 times ``expected_year_count``.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"profile file not found: {path}")
    values: list[float] = []
    prev_ts = None
    first_ts = None
    step = timedelta(hours=1)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip().lower() for c in header[:2]] != ["timestamp", "power_kw"]:
            raise ProfileError(f"{path}: expected header 'timestamp,power_kw'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ProfileError(f"{path}:{lineno}: malformed row, expected 2 fields")
            try:
                ts = datetime.fromisoformat(row[0].strip())
            except ValueError as exc:
                raise ProfileError(f"{path}:{lineno}: malformed timestamp {row[0]!r}") from exc
            try:
                power = float(row[1])
            except ValueError as exc:
                raise ProfileError(f"{path}:{lineno}: malformed power value {row[1]!r}") from exc
            if power < 0:
                raise ProfileError(f"{path}:{lineno}: negative power {power}")
            if prev_ts is not None:
                delta = ts - prev_ts
                if delta <= timedelta(0):
                    raise ProfileError(
                        f"{path}:{lineno}: duplicate or out-of-order timestamp {ts.isoformat()}"
                    )
                if delta != step:
                    missing = (prev_ts + step).isoformat()
                    raise ProfileError(
                        f"{path}:{lineno}: gap in hourly data, missing {missing}"
                    )
            else:
                first_ts = ts
            prev_ts = ts
            values.append(power)
    expected = HOURS_PER_YEAR * expected_year_count
    if len(values) != expected:
        raise ProfileError(
            f"{path}: expected {expected} rows ({expected_year_count} years), got {len(values)}"
        )
    return HourlySeries(np.asarray(values), start_weekday=first_ts.weekday())


def synth_pv_profile(
    annual_kwh_per_kwp: float,
    seasonal_amplitude: float,
    noise_level: float = 0.0,
    seed: int = 0,
) -> HourlySeries:
    """Synthetic one-year PV yield per kWp.

    Each day is a daylight bell between 06:00 and 18:00; the daily total is
    modulated by a cosine season (maximum at day 0, i.e. a southern-summer
    January peak) plus optional per-day noise. The year is rescaled so the
    sum equals ``annual_kwh_per_kwp`` exactly.
    """
    if annual_kwh_per_kwp <= 0:
        raise ProfileError("annual_kwh_per_kwp must be positive")
    if not 0 <= seasonal_amplitude <= 1:
        raise ProfileError(
            f"seasonal_amplitude must be in [0, 1], got {seasonal_amplitude}"
        )
    if noise_level < 0:
        raise ProfileError("noise_level must be non-negative")
    rng = np.random.default_rng(seed)
    hours = np.arange(HOURS_PER_DAY)
    sun = np.sin(np.pi * (hours - 6) / 12.0)
    day_shape = np.where((hours >= 6) & (hours <= 18), np.maximum(sun, 0.0) ** 2, 0.0)
    days = np.arange(DAYS_PER_YEAR)
    seasonal = 1.0 + seasonal_amplitude * np.cos(2.0 * np.pi * days / DAYS_PER_YEAR)
    noise = np.maximum(1.0 + noise_level * rng.standard_normal(DAYS_PER_YEAR), 0.05)
    raw = np.outer(seasonal * noise, day_shape).reshape(-1)
    values = raw * (annual_kwh_per_kwp / raw.sum())
    return HourlySeries(values, start_weekday=MONDAY)


def synth_load_profile(
    annual_kwh: float,
    day_night_ratio: float,
    weekend_factor: float,
    seed: int = 0,
    noise_level: float = 0.0,
) -> HourlySeries:
    """Synthetic one-year load profile.

    Daytime hours (07:00-19:00) carry ``day_night_ratio`` times the night
    weight, weekends are scaled by ``weekend_factor``, and optional per-hour
    noise is applied before rescaling the year to ``annual_kwh`` exactly.
    All values stay strictly positive.
    """
    if annual_kwh <= 0:
        raise ProfileError("annual_kwh must be positive")
    if day_night_ratio <= 0:
        raise ProfileError("day_night_ratio must be positive")
    if weekend_factor <= 0:
        raise ProfileError("weekend_factor must be positive")
    if noise_level < 0:
        raise ProfileError("noise_level must be non-negative")
    rng = np.random.default_rng(seed)
    hours = np.arange(HOURS_PER_DAY)
    hour_weight = np.where((hours >= 7) & (hours < 19), day_night_ratio, 1.0)
    dows = (MONDAY + np.arange(DAYS_PER_YEAR)) % 7
    day_weight = np.where(dows >= SATURDAY, weekend_factor, 1.0)
    raw = np.outer(day_weight, hour_weight)
    noise = np.maximum(1.0 + noise_level * rng.standard_normal(raw.shape), 0.05)
    raw = (raw * noise).reshape(-1)
    values = raw * (annual_kwh / raw.sum())
    return HourlySeries(values, start_weekday=MONDAY)


def monthly_totals(series: HourlySeries, year: int = 1) -> np.ndarray:
    """kWh per calendar month for one covered year."""
    vals = series.year_values(year)
    daily = vals.reshape(DAYS_PER_YEAR, HOURS_PER_DAY).sum(axis=1)
    return np.array(
        [daily[MONTH_STARTS[m] : MONTH_STARTS[m + 1]].sum() for m in range(12)]
    )
