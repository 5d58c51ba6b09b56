"""Groundwater sustainable yield scenarios and desalination water costs.

Sustainable yield reserves an environmental-flow share of simulated recharge
and nets out all sectoral consumption afterwards:

    SY = max(0, supplementary_share * recharge - consumption)    [mm/yr]

with supplementary shares of 10/40/70% for the conservative, medium and
extreme scenarios. Where groundwater runs out, seawater desalination plus
pipeline transport is priced from distance to shore, elevation gain and the
local electricity price, and each region's supply options are ordered
cheapest-first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .geodata import RasterGrid, Region
from .res_sim import annuity

SUPPLEMENTARY_SHARES = {"conservative": 0.10, "medium": 0.40, "extreme": 0.70}
CLIMATES = ("rcp26", "rcp85")
HORIZON_WINDOWS = {2020: (2015, 2035), 2030: (2015, 2045), 2050: (2036, 2065)}

# electrolysis feed water incl. demineralization losses, configurable per run
DEFAULT_WATER_L_PER_KG_H2 = 10.0


@dataclass(frozen=True)
class YieldScenario:
    """One groundwater allocation scenario under one climate pathway."""

    name: str
    climate: str = "rcp26"
    horizon: int = 2020

    def __post_init__(self):
        if self.name not in SUPPLEMENTARY_SHARES:
            raise ConfigError(f"unknown yield scenario {self.name!r}")
        if self.climate not in CLIMATES:
            raise ConfigError(f"unknown climate {self.climate!r}")
        if self.horizon not in HORIZON_WINDOWS:
            raise ConfigError(f"unknown horizon {self.horizon!r}")

    @property
    def supplementary_share(self) -> float:
        return SUPPLEMENTARY_SHARES[self.name]

    @property
    def averaging_window(self) -> tuple[int, int]:
        return HORIZON_WINDOWS[self.horizon]


@dataclass(frozen=True)
class WaterSupplyOption:
    """One source a region can draw on, with its cap and unit cost."""

    kind: str  # groundwater | desalination
    annual_volume_m3: float  # inf for desalination
    cost_eur_per_m3: float

    def __post_init__(self):
        if self.kind not in ("groundwater", "desalination"):
            raise ConfigError(f"unknown water supply kind {self.kind!r}")
        if not self.cost_eur_per_m3 > 0:
            raise ConfigError("water cost must be positive")
        if self.annual_volume_m3 < 0:
            raise ConfigError("water volume must be non-negative")


def sustainable_yield(recharge_mm: RasterGrid, sectoral_consumption_mm: RasterGrid,
                      scenario: YieldScenario) -> RasterGrid:
    """Per-cell sustainable yield in mm/yr; nodata propagates."""
    recharge_mm.require_alignment(sectoral_consumption_mm, "consumption raster")
    r = recharge_mm.cells
    c = sectoral_consumption_mm.cells
    valid = recharge_mm.valid_mask() & sectoral_consumption_mm.valid_mask()
    sy = np.maximum(0.0, scenario.supplementary_share * r - c)
    sy = np.where(valid, sy, recharge_mm.nodata)
    return recharge_mm.with_cells(sy)


def region_water_budget(sy: RasterGrid, region: Region) -> tuple[float, float]:
    """Annual extractable volume in m3 plus the area-weighted mean in mm/yr.

    Nodata cells contribute neither volume nor area.
    """
    rows, cols = region.rows_cols(sy)
    values = sy.cells[rows, cols]
    valid = values != sy.nodata
    areas_m2 = np.asarray(sy.cell_area_km2_of_row(rows)) * 1e6
    volume = float(np.sum(values[valid] * 1e-3 * areas_m2[valid]))
    total_area = float(areas_m2[valid].sum())
    mean_mm = volume * 1e3 / total_area if total_area > 0 else 0.0
    return volume, mean_mm


@dataclass(frozen=True)
class DesalParams:
    """Cost constants for seawater desalination plus pipeline transport.

    Surrogate defaults; every value is a plain config knob.
    """

    desal_base_eur_per_m3: float = 0.70
    pipeline_capex_eur_per_m3_km: float = 0.011
    pipeline_lifetime_years: int = 30
    pipeline_wacc: float = 0.08
    pump_efficiency: float = 0.75
    friction_kwh_per_m3_km: float = 0.004

    def pipeline_annuity(self) -> float:
        return annuity(self.pipeline_wacc, self.pipeline_lifetime_years)


GRAVITY = 9.81
WATER_DENSITY = 1000.0  # kg/m3


def desal_transport_cost(distance_to_coast_km: float, elevation_gain_m: float,
                         electricity_price_eur_per_kwh: float,
                         params: DesalParams = DesalParams()) -> float:
    """Delivered desalinated-water cost in EUR/m3 at a region centroid.

    Negative elevation gain earns no energy credit. The lift and friction
    terms buy electricity at the given price; pipeline capex amortizes with
    its own annuity.
    """
    if distance_to_coast_km < 0:
        raise ConfigError("distance must be non-negative")
    lift_kwh_per_m3 = (WATER_DENSITY * GRAVITY * max(0.0, elevation_gain_m)) / (
        3.6e6 * params.pump_efficiency
    )
    friction_kwh_per_m3 = params.friction_kwh_per_m3_km * distance_to_coast_km
    return (
        params.desal_base_eur_per_m3
        + params.pipeline_capex_eur_per_m3_km * distance_to_coast_km * params.pipeline_annuity()
        + electricity_price_eur_per_kwh * (lift_kwh_per_m3 + friction_kwh_per_m3)
    )


def supply_curve(groundwater_cost_eur_per_m3: float, groundwater_cap_m3: float,
                 desal_option: WaterSupplyOption) -> list[WaterSupplyOption]:
    """Order a region's water options cheapest-first.

    The groundwater option carries its volume cap; desalination is unbounded.
    A zero cap drops the groundwater entry entirely.
    """
    if desal_option.kind != "desalination":
        raise ConfigError("the unbounded option must be desalination")
    options = [desal_option]
    if groundwater_cap_m3 > 0:
        options.append(WaterSupplyOption(
            kind="groundwater",
            annual_volume_m3=groundwater_cap_m3,
            cost_eur_per_m3=groundwater_cost_eur_per_m3,
        ))
    options.sort(key=lambda o: (o.cost_eur_per_m3, o.kind))
    return options


def blended_water_cost(options: list[WaterSupplyOption], demand_m3: float) -> float:
    """Total EUR of meeting a demand by draining the cheapest options first."""
    if demand_m3 <= 0:
        return 0.0
    remaining = demand_m3
    total = 0.0
    for opt in options:
        take = min(remaining, opt.annual_volume_m3) if math.isfinite(opt.annual_volume_m3) \
            else remaining
        total += take * opt.cost_eur_per_m3
        remaining -= take
        if remaining <= 1e-12:
            return total
    raise ConfigError("supply options cannot cover the demanded volume")


def water_sourcing(options: list[WaterSupplyOption], demand_m3: float) -> dict[str, float]:
    """Volume drawn per option kind, cheapest-first."""
    drawn: dict[str, float] = {}
    remaining = max(demand_m3, 0.0)
    for opt in options:
        cap = opt.annual_volume_m3 if math.isfinite(opt.annual_volume_m3) else remaining
        take = min(remaining, cap)
        drawn[opt.kind] = drawn.get(opt.kind, 0.0) + take
        remaining -= take
    return drawn
