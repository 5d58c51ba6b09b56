"""Hourly capacity-factor simulation and levelized electricity cost.

The generation models are compact, fully documented surrogates with every
constant exposed as a parameter:

* PV: irradiance-linear output with a cell-temperature derating,
  cf = clip((ghi/1000) * PR * (1 + gamma * (T_cell - 25)), 0, 1) where
  T_cell = T_air + k_noct * ghi / 800.
* Wind: power-law hub-height extrapolation onto a tabulated turbine curve.
* Hydropower: exogenous series resampled linearly onto the hourly grid.
* Geothermal: flat dispatchable ceiling at an availability factor.

Levelized cost divides the annuitized capex plus fixed O&M by annual yield.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataQualityError, InputError, UndefinedCostError

HOURS_PER_YEAR = 8760


def _fmean(values: np.ndarray) -> float:
    # compensated summation keeps series means independent of chunking order
    return math.fsum(map(float, values)) / len(values)


@dataclass(frozen=True)
class WeatherSeries:
    """Hourly weather for one location; lengths must be a multiple of 8760."""

    location: int
    ghi_w_per_m2: np.ndarray
    air_temp_c: np.ndarray
    wind_speed_ms_at_ref: np.ndarray
    ref_height_m: float = 10.0

    def __post_init__(self):
        ghi = np.asarray(self.ghi_w_per_m2, dtype=float)
        temp = np.asarray(self.air_temp_c, dtype=float)
        wind = np.asarray(self.wind_speed_ms_at_ref, dtype=float)
        n = ghi.size
        if n == 0 or n % HOURS_PER_YEAR != 0:
            raise InputError("weather series length must be a positive multiple of 8760")
        if temp.size != n or wind.size != n:
            raise InputError("weather series lengths differ")
        if np.any(ghi < 0):
            raise InputError("negative irradiance")
        if np.any(wind < 0):
            raise InputError("negative wind speed")
        for name, arr in (("ghi_w_per_m2", ghi), ("air_temp_c", temp),
                          ("wind_speed_ms_at_ref", wind)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def hours(self) -> int:
        return self.ghi_w_per_m2.size

    @property
    def years(self) -> int:
        return self.hours // HOURS_PER_YEAR


@dataclass(frozen=True)
class TechnoEconomics:
    """Cost and financing assumptions for one technology and year."""

    technology: str
    year: int
    capex_eur_per_kw: float
    opex_share_per_year: float
    lifetime_years: int
    wacc: float

    def __post_init__(self):
        if self.capex_eur_per_kw <= 0 or self.opex_share_per_year < 0:
            raise ValueError("capex must be positive, opex share non-negative")
        if not 0 < self.wacc < 1:
            raise ValueError("wacc must lie in (0, 1)")
        if self.lifetime_years < 1:
            raise ValueError("lifetime must be at least one year")

    def annuity_factor(self) -> float:
        return annuity(self.wacc, self.lifetime_years)

    def annual_cost_eur_per_mw(self) -> float:
        """Annuitized capex plus fixed O&M, per MW of capacity."""
        return self.capex_eur_per_kw * (self.annuity_factor() + self.opex_share_per_year) * 1000.0


@dataclass(frozen=True)
class GenerationProfile:
    """Hourly capacity factors with their exact mean and full-load hours."""

    capacity_factor: np.ndarray
    mean_cf: float = field(init=False)
    full_load_hours: float = field(init=False)

    def __post_init__(self):
        cf = np.asarray(self.capacity_factor, dtype=float)
        if cf.size == 0:
            raise InputError("empty capacity factor series")
        if np.any(cf < 0) or np.any(cf > 1 + 1e-12):
            raise InputError("capacity factors must lie in [0, 1]")
        cf.setflags(write=False)
        object.__setattr__(self, "capacity_factor", cf)
        mean = _fmean(cf)
        object.__setattr__(self, "mean_cf", mean)
        object.__setattr__(self, "full_load_hours", mean * HOURS_PER_YEAR)

    @property
    def hours(self) -> int:
        return self.capacity_factor.size

    def yearly_slices(self) -> list["GenerationProfile"]:
        n = self.hours // HOURS_PER_YEAR
        return [GenerationProfile(self.capacity_factor[i * HOURS_PER_YEAR:(i + 1) * HOURS_PER_YEAR])
                for i in range(n)]


def representative_year(profile: GenerationProfile) -> GenerationProfile:
    """Pick the chronological year whose mean cf is the median of all years.

    For an even year count the lower median is used; ties resolve to the
    earliest year. A single-year profile is returned unchanged.
    """
    years = profile.yearly_slices()
    if len(years) <= 1:
        return profile
    order = sorted(range(len(years)), key=lambda i: (years[i].mean_cf, i))
    return years[order[(len(years) - 1) // 2]]


# ---------------------------------------------------------------------------
# PV
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PVParams:
    performance_ratio: float = 0.85
    temp_coeff_per_k: float = -0.0035
    noct_rise_k: float = 25.0  # cell heating at 800 W/m2


def simulate_pv(weather: WeatherSeries, params: PVParams = PVParams()) -> GenerationProfile:
    ghi = weather.ghi_w_per_m2
    cell_temp = weather.air_temp_c + params.noct_rise_k * ghi / 800.0
    cf = (ghi / 1000.0) * params.performance_ratio * (
        1.0 + params.temp_coeff_per_k * (cell_temp - 25.0)
    )
    return GenerationProfile(np.clip(cf, 0.0, 1.0))


# ---------------------------------------------------------------------------
# Wind
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TurbineCurve:
    """Tabulated normalized power curve with hub height and shear exponent."""

    speeds_ms: np.ndarray
    power_norm: np.ndarray  # fraction of rated power at each tabulated speed
    hub_height_m: float = 120.0
    cut_in_ms: float = 3.0
    rated_ms: float = 12.0
    cut_out_ms: float = 25.0
    shear_alpha: float = 0.14

    def __post_init__(self):
        v = np.asarray(self.speeds_ms, dtype=float)
        p = np.asarray(self.power_norm, dtype=float)
        if v.size != p.size or v.size < 2:
            raise InputError("power curve needs matching speed and power columns")
        if np.any(np.diff(v) <= 0):
            raise InputError("power curve speeds must increase strictly")
        below_rated = v <= self.rated_ms + 1e-9
        seg = p[below_rated]
        if np.any(np.diff(seg) < -1e-12):
            raise InputError("power curve must be non-decreasing below rated speed")
        v.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "speeds_ms", v)
        object.__setattr__(self, "power_norm", p)

    def cf_at(self, speed_ms: np.ndarray) -> np.ndarray:
        cf = np.interp(speed_ms, self.speeds_ms, self.power_norm)
        cf = np.where(speed_ms < self.cut_in_ms, 0.0, cf)
        cf = np.where(speed_ms > self.cut_out_ms, 0.0, cf)
        return np.clip(cf, 0.0, 1.0)


def default_turbine() -> TurbineCurve:
    """Synthetic reference turbine: cubic ramp between cut-in 3 and rated 12 m/s."""
    speeds = np.arange(0.0, 26.5, 0.5)
    cut_in, rated = 3.0, 12.0
    ramp = (speeds ** 3 - cut_in ** 3) / (rated ** 3 - cut_in ** 3)
    power = np.clip(ramp, 0.0, 1.0)
    power[speeds < cut_in] = 0.0
    return TurbineCurve(speeds_ms=speeds, power_norm=power)


def load_turbine_csv(path, **kwargs) -> TurbineCurve:
    """Read a (speed_ms, power_kw) CSV; power is normalized by its maximum."""
    speeds, power = [], []
    with open(path) as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().lower().startswith("speed"):
                continue
            speeds.append(float(row[0]))
            power.append(float(row[1]))
    power = np.asarray(power)
    rated = power.max()
    if rated <= 0:
        raise InputError(f"{path}: power curve has no positive output")
    return TurbineCurve(speeds_ms=np.asarray(speeds), power_norm=power / rated, **kwargs)


def simulate_wind(weather: WeatherSeries, turbine: TurbineCurve | None = None) -> GenerationProfile:
    if turbine is None:
        turbine = default_turbine()
    scale = (turbine.hub_height_m / weather.ref_height_m) ** turbine.shear_alpha
    v_hub = weather.wind_speed_ms_at_ref * scale
    return GenerationProfile(turbine.cf_at(v_hub))


# ---------------------------------------------------------------------------
# Hydropower and geothermal
# ---------------------------------------------------------------------------

MAX_GAP_HOURS = 30 * 24


def resample_hydro(source_hours: np.ndarray, source_cf: np.ndarray,
                   hours: int = HOURS_PER_YEAR) -> GenerationProfile:
    """Linearly resample an exogenous generation series onto the hourly grid.

    Timestamps are hours since the start of the year and must increase
    strictly. A spacing counts as a data gap when it exceeds both 30 days and
    three times the series' median spacing, so coarse-but-regular sources
    (monthly values, a two-point ramp) resample cleanly while a hole in an
    otherwise finer series is rejected. The hourly mean conserves the
    trapezoidal integral of the source to well under 0.1%.
    """
    t = np.asarray(source_hours, dtype=float)
    v = np.asarray(source_cf, dtype=float)
    if t.size != v.size or t.size < 1:
        raise DataQualityError("source series empty or mismatched")
    if t.size > 1:
        spacing = np.diff(t)
        if np.any(spacing <= 0):
            raise DataQualityError("source timestamps must increase strictly")
        worst = float(spacing.max())
        if worst > MAX_GAP_HOURS and worst > 3.0 * float(np.median(spacing)):
            raise DataQualityError("source series has a gap longer than 30 days")
    grid = np.arange(hours, dtype=float)
    return GenerationProfile(np.clip(np.interp(grid, t, v), 0.0, 1.0))


def geothermal_profile(availability: float, hours: int = HOURS_PER_YEAR) -> GenerationProfile:
    """Dispatchable flat ceiling; the optimizer may run below it at will."""
    if not 0.0 < availability <= 1.0:
        raise InputError("availability must lie in (0, 1]")
    return GenerationProfile(np.full(hours, availability))


# ---------------------------------------------------------------------------
# Levelized cost
# ---------------------------------------------------------------------------

def annuity(wacc: float, lifetime_years: int) -> float:
    """Capital recovery factor wacc(1+wacc)^n / ((1+wacc)^n - 1)."""
    q = (1.0 + wacc) ** lifetime_years
    return wacc * q / (q - 1.0)


def lcoe(te: TechnoEconomics, aep_kwh_per_kw: float) -> float:
    """Levelized cost of electricity in EUR/kWh for a given specific yield."""
    if aep_kwh_per_kw <= 0:
        raise UndefinedCostError("levelized cost undefined for zero annual yield")
    a = te.annuity_factor()
    return (te.capex_eur_per_kw * a + te.capex_eur_per_kw * te.opex_share_per_year) / aep_kwh_per_kw


# ---------------------------------------------------------------------------
# Default techno-economic assumptions (surrogate defaults, not source values)
# ---------------------------------------------------------------------------

def default_technoeconomics() -> dict[str, dict[int, TechnoEconomics]]:
    """Ship-with defaults per technology and year, all overridable in config.

    Hydropower cost is held constant across years. The electrolyzer and
    battery entries live in h2opt defaults.
    """
    def te(tech, year, capex, opex, life, wacc=0.08):
        return TechnoEconomics(tech, year, capex, opex, life, wacc)

    table = {
        "pv": {2030: te("pv", 2030, 420.0, 0.020, 25),
               2050: te("pv", 2050, 300.0, 0.020, 25)},
        "wind": {2030: te("wind", 2030, 1250.0, 0.025, 25),
                 2050: te("wind", 2050, 1100.0, 0.025, 25)},
        "hydro": {2030: te("hydro", 2030, 2500.0, 0.020, 60),
                  2050: te("hydro", 2050, 2500.0, 0.020, 60)},
        "geothermal": {2030: te("geothermal", 2030, 4500.0, 0.030, 30),
                       2050: te("geothermal", 2050, 3800.0, 0.030, 30)},
    }
    return table


def load_weather_stack(directory, cell_index: int, ref_height_m: float = 10.0) -> WeatherSeries:
    """Read one location from a gridded hourly weather stack.

    The stack is three flat_binary files (ghi.bin, temp_c.bin, wind_ms.bin)
    whose rows are hours and whose columns are grid cells, so column j holds
    cell j's hourly series.
    """
    from .geodata import load_raster as _load

    series = {}
    for name in ("ghi", "temp_c", "wind_ms"):
        grid = _load(Path(directory) / f"{name}.bin", "flat_binary")
        if not 0 <= cell_index < grid.n_cols:
            raise InputError(f"cell index {cell_index} outside the weather stack")
        series[name] = np.asarray(grid.cells[:, cell_index], dtype=float)
    return WeatherSeries(
        location=cell_index,
        ghi_w_per_m2=series["ghi"],
        air_temp_c=series["temp_c"],
        wind_speed_ms_at_ref=series["wind_ms"],
        ref_height_m=ref_height_m,
    )


def load_weather_csv(path, location: int = 0) -> WeatherSeries:
    """Read an hour_index, ghi, temp_c, wind_ms CSV into a WeatherSeries."""
    ghi, temp, wind = [], [], []
    with open(path) as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().lower().startswith("hour"):
                continue
            ghi.append(float(row[1]))
            temp.append(float(row[2]))
            wind.append(float(row[3]))
    return WeatherSeries(
        location=location,
        ghi_w_per_m2=np.asarray(ghi),
        air_temp_c=np.asarray(temp),
        wind_speed_ms_at_ref=np.asarray(wind),
    )
