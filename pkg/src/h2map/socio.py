"""Socio-economic sub-indicators, their composite and per-country statistics.

Three sub-indicators score where green-hydrogen projects would matter most:
energy access weights the unserved population density, the macroeconomic
score combines job factors with unemployment and labor density, and the
other-effects score averages biomass dependence and poverty. The composite
min-max normalizes each sub-indicator over the study extent to [0, 100] and
averages them. The exact formulas are surrogates; tests assert units,
orderings and statistical identities rather than published magnitudes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .geodata import RasterGrid, Region


@dataclass(frozen=True)
class SocioInputs:
    """Gridded and per-country drivers of the three sub-indicators."""

    electricity_access: RasterGrid  # fraction of population served
    clean_fuel_access: RasterGrid  # fraction cooking with clean fuels
    population_density: RasterGrid  # capita/km2
    labor_force_density: RasterGrid  # capita/km2
    biomass_dependence: RasterGrid  # fraction
    poverty_headcount: RasterGrid  # fraction
    unemployment_rate: dict[str, float]  # per ISO3 country
    employment_factor: dict[str, float]  # jobs/MWp per ISO3 country

    def __post_init__(self):
        ref = self.electricity_access
        for name in ("clean_fuel_access", "population_density", "labor_force_density",
                     "biomass_dependence", "poverty_headcount"):
            ref.require_alignment(getattr(self, name), name)
        for name in ("electricity_access", "clean_fuel_access", "biomass_dependence",
                     "poverty_headcount"):
            grid = getattr(self, name)
            vals = grid.cells[grid.valid_mask()]
            if np.any(vals < 0) or np.any(vals > 1 + 1e-9):
                raise ValueError(f"{name} must hold fractions in [0, 1]")
        for name in ("population_density", "labor_force_density"):
            grid = getattr(self, name)
            if np.any(grid.cells[grid.valid_mask()] < 0):
                raise ValueError(f"{name} must be non-negative")
        if any(v < 0 for v in self.unemployment_rate.values()):
            raise ValueError("unemployment rates must be non-negative")
        if any(v < 0 for v in self.employment_factor.values()):
            raise ValueError("employment factors must be non-negative")


@dataclass(frozen=True)
class IndicatorStats:
    """Quartile summary of one indicator over one country's cells."""

    country_code: str
    median: float
    q25: float
    q75: float

    def __post_init__(self):
        if not (self.q25 <= self.median <= self.q75):
            raise ValueError("quartiles out of order")

    @property
    def iqr(self) -> float:
        return self.q75 - self.q25


def _masked(grids: list[RasterGrid]) -> np.ndarray:
    valid = grids[0].valid_mask()
    for g in grids[1:]:
        valid &= g.valid_mask()
    return valid


DEFAULT_ACCESS_WEIGHTS = (0.5, 0.5)  # electricity, clean fuel


def energy_access_indicator(inputs: SocioInputs,
                            weights: tuple[float, float] = DEFAULT_ACCESS_WEIGHTS) -> RasterGrid:
    """Unserved population density in capita/km2.

    Blends electricity and clean-fuel access, then weights the gap with the
    population density, so fully served or empty cells score zero.
    """
    w_e, w_f = weights
    grids = [inputs.electricity_access, inputs.clean_fuel_access, inputs.population_density]
    valid = _masked(grids)
    blended = w_e * inputs.electricity_access.cells + w_f * inputs.clean_fuel_access.cells
    ae = (1.0 - blended) * inputs.population_density.cells
    out = np.where(valid, np.maximum(ae, 0.0), grids[0].nodata)
    return grids[0].with_cells(out)


def macroeconomic_indicator(inputs: SocioInputs, country_of_cell: dict[int, str],
                            installable_density: RasterGrid) -> RasterGrid:
    """Job-creation potential score in a jobs/(MWp*km2) convention.

    Cell score = employment_factor * unemployment_rate * labor_force_density,
    normalized by the study-extent maximum of installable capacity density.
    Cells outside any country emit nodata.
    """
    ref = inputs.labor_force_density
    ref.require_alignment(installable_density, "installable density")
    dens = installable_density.cells[installable_density.valid_mask()]
    max_density = float(dens.max()) if dens.size else 0.0
    norm = max_density if max_density > 0 else 1.0

    out = np.full(ref.cells.shape, ref.nodata)
    lfd = ref.cells
    valid = ref.valid_mask()
    n_cols = ref.n_cols
    for idx, country in country_of_cell.items():
        r, c = divmod(idx, n_cols)
        if not valid[r, c]:
            continue
        ef = inputs.employment_factor.get(country, 0.0)
        un = inputs.unemployment_rate.get(country, 0.0)
        out[r, c] = ef * un * lfd[r, c] / norm
    return ref.with_cells(out)


def other_effects_indicator(inputs: SocioInputs) -> RasterGrid:
    """Mean of biomass dependence and poverty headcount, in [0, 1]."""
    grids = [inputs.biomass_dependence, inputs.poverty_headcount]
    valid = _masked(grids)
    oe = 0.5 * (inputs.biomass_dependence.cells + inputs.poverty_headcount.cells)
    return grids[0].with_cells(np.where(valid, oe, grids[0].nodata))


def _minmax_scaled(grid: RasterGrid, label: str) -> np.ndarray:
    valid = grid.valid_mask()
    vals = grid.cells[valid]
    lo, hi = float(vals.min()), float(vals.max())
    if hi - lo <= 0:
        warnings.warn(f"{label}: constant over the study extent, scored at its midpoint 50",
                      stacklevel=3)
        scaled = np.full(grid.cells.shape, 50.0)
    else:
        scaled = (grid.cells - lo) / (hi - lo) * 100.0
    return np.where(valid, scaled, np.nan)


def composite_indicator(ae: RasterGrid, me: RasterGrid, oe: RasterGrid,
                        weights: tuple[float, float, float] = (1.0, 1.0, 1.0)) -> RasterGrid:
    """Weighted mean of the min-max normalized sub-indicators, in [0, 100]."""
    ae.require_alignment(me, "macroeconomic indicator")
    ae.require_alignment(oe, "other-effects indicator")
    total = sum(weights)
    if total <= 0:
        raise ValueError("weights must sum to a positive value")
    parts = [
        _minmax_scaled(ae, "energy access") * (weights[0] / total),
        _minmax_scaled(me, "macroeconomic effect") * (weights[1] / total),
        _minmax_scaled(oe, "other effects") * (weights[2] / total),
    ]
    combined = parts[0] + parts[1] + parts[2]
    out = np.where(np.isnan(combined), ae.nodata, combined)
    return ae.with_cells(out)


def regional_stats(indicator: RasterGrid, regions: list[Region]) -> list[IndicatorStats]:
    """Quartiles of the indicator pooled per country, sorted by ISO3 code.

    Quantiles interpolate linearly between order statistics; the IQR is the
    exact difference of the returned quartiles.
    """
    by_country: dict[str, list[np.ndarray]] = {}
    for region in regions:
        rows, cols = region.rows_cols(indicator)
        vals = indicator.cells[rows, cols]
        vals = vals[vals != indicator.nodata]
        if vals.size:
            by_country.setdefault(region.country_code, []).append(vals)
    out = []
    for country in sorted(by_country):
        pooled = np.concatenate(by_country[country])
        q25, med, q75 = np.quantile(pooled, [0.25, 0.5, 0.75], method="linear")
        out.append(IndicatorStats(country_code=country, median=float(med),
                                  q25=float(q25), q75=float(q75)))
    return out
