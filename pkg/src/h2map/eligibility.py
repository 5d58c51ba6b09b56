"""Buffered exclusion criteria, eligible-land accounting and capacity placement.

A criterion excludes every cell whose center lies strictly closer to the
criterion's feature than its buffer distance; a zero buffer excludes only the
feature footprint itself. Stacking criteria over a region yields the eligible
mask, the per-criterion exclusion shares (computed independently against the
whole region, so they may sum past one) and the eligible area, from which a
capacity density produces a placement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .geodata import RasterGrid, Region, distance_to_feature

TECHNOLOGIES = ("pv", "wind", "geothermal")

# MW installable per km2 of eligible land; overridable per run
DEFAULT_DENSITY_MW_PER_KM2 = {"pv": 50.0, "wind": 7.5, "geothermal": 5.0}


@dataclass(frozen=True)
class Criterion:
    """One buffered exclusion layer for one technology."""

    name: str
    technology: str
    buffer_m: float
    feature_mask_path: str | None = None

    def __post_init__(self):
        if self.technology not in TECHNOLOGIES:
            raise ConfigError(f"criterion {self.name}: unknown technology {self.technology!r}")
        if not math.isfinite(self.buffer_m) or self.buffer_m < 0:
            raise ConfigError(f"criterion {self.name}: buffer_m must be finite and >= 0")


@dataclass(frozen=True)
class EligibilityResult:
    """Eligible mask plus exclusion accounting for one region and technology."""

    eligible: RasterGrid
    per_criterion_excluded_share: dict[str, float]
    eligible_share: float
    eligible_area_km2: float
    region_id: str = ""

    def __post_init__(self):
        if not 0.0 <= self.eligible_share <= 1.0 + 1e-12:
            raise ValueError("eligible_share out of [0, 1]")
        lower = 1.0 - sum(self.per_criterion_excluded_share.values())
        if self.eligible_share < lower - 1e-9:
            raise ValueError("eligible_share below the inclusion-exclusion bound")


@dataclass(frozen=True)
class PlacementSet:
    """Installable capacity laid onto eligible cells at a fixed density."""

    technology: str
    capacity_mw_per_cell: RasterGrid
    total_capacity_mw: float

    def __post_init__(self):
        cells = self.capacity_mw_per_cell.cells
        valid = self.capacity_mw_per_cell.valid_mask()
        total = float(cells[valid].sum())
        if self.total_capacity_mw > 0 and not math.isclose(
            total, self.total_capacity_mw, rel_tol=1e-6
        ):
            raise ValueError("total_capacity_mw does not match the cell sum")


def apply_criterion(criterion: Criterion, distance_field: RasterGrid) -> RasterGrid:
    """Excluded-where-true mask from a precomputed distance field.

    Exclusion is strict (distance < buffer); buffer 0 therefore excludes the
    feature cells alone, whose distance is exactly 0. Nodata propagates.
    """
    d = distance_field.cells
    valid = distance_field.valid_mask()
    if criterion.buffer_m == 0.0:
        excluded = (d == 0.0) & valid
    else:
        excluded = (d < criterion.buffer_m) & valid
    out = excluded.astype(float)
    out[~valid] = distance_field.nodata
    return distance_field.with_cells(out)


def criterion_exclusion(criterion: Criterion, feature_mask: RasterGrid) -> RasterGrid:
    """Distance-transform a feature mask and apply the criterion's buffer."""
    return apply_criterion(criterion, distance_to_feature(feature_mask))


def combine_exclusions(
    criteria_masks: list[tuple[Criterion, RasterGrid]],
    region: Region,
    reference: RasterGrid,
) -> EligibilityResult:
    """Stack exclusion masks over a region.

    criteria_masks pairs each criterion with its excluded-where-true raster
    (from apply_criterion). Shares are fractions of the region's land area.
    """
    if region.mask.size == 0:
        raise ValueError(f"region {region.id}: empty mask")
    rows, cols = region.rows_cols(reference)
    cell_areas = np.asarray(reference.cell_area_km2_of_row(rows))
    land_area = float(cell_areas.sum())

    excluded_any = np.zeros(region.mask.size, dtype=bool)
    shares: dict[str, float] = {}
    for criterion, mask in criteria_masks:
        reference.require_alignment(mask, f"criterion {criterion.name}")
        flags = mask.cells[rows, cols]
        exc = (flags != 0) & (flags != mask.nodata)
        shares[criterion.name] = float(cell_areas[exc].sum()) / land_area
        excluded_any |= exc

    eligible_idx = region.mask[~excluded_any]
    eligible_cells = np.zeros(reference.n_rows * reference.n_cols)
    eligible_cells[eligible_idx] = 1.0
    eligible_area = float(cell_areas[~excluded_any].sum())
    return EligibilityResult(
        eligible=reference.with_cells(eligible_cells),
        per_criterion_excluded_share=shares,
        eligible_share=eligible_area / land_area,
        eligible_area_km2=eligible_area,
        region_id=region.id,
    )


def place_capacity(result: EligibilityResult, technology: str,
                   density_mw_per_km2: float | None = None) -> PlacementSet:
    """Spread capacity uniformly over the eligible cells at the given density."""
    if density_mw_per_km2 is None:
        density_mw_per_km2 = DEFAULT_DENSITY_MW_PER_KM2[technology]
    if not density_mw_per_km2 > 0:
        raise ConfigError("density_mw_per_km2 must be positive")
    grid = result.eligible
    eligible = (grid.cells != 0) & grid.valid_mask()
    areas = grid.cell_areas_km2()
    capacity = np.where(eligible, areas * density_mw_per_km2, 0.0)
    total = float(capacity.sum())
    return PlacementSet(
        technology=technology,
        capacity_mw_per_cell=grid.with_cells(capacity),
        total_capacity_mw=total,
    )
