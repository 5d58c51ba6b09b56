import numpy as np
import pytest

from conftest import make_grid
from oracles import brute_force_distance_field

from h2map.errors import ConfigError, GridAlignmentError
from h2map.eligibility import (
    Criterion,
    apply_criterion,
    combine_exclusions,
    criterion_exclusion,
    place_capacity,
)
from h2map.geodata import distance_to_feature, region_from_mask


def region_of_all_cells(grid, rid="R", country="AAA"):
    return region_from_mask(grid, rid, country, np.arange(grid.n_rows * grid.n_cols))


class TestApplyCriterion:
    def test_zero_buffer_excludes_only_feature(self):
        grid = make_grid(5, 5)
        cells = np.zeros((5, 5))
        cells[2, 2] = 1.0
        dist = distance_to_feature(grid.with_cells(cells))
        crit = Criterion(name="Airports", technology="pv", buffer_m=0.0)
        excl = apply_criterion(crit, dist)
        assert excl.cells[2, 2] == 1.0
        assert excl.cells.sum() == 1.0

    def test_buffer_disc_matches_brute_force(self):
        grid = make_grid(11, 11, origin_lat=-0.055)
        cells = np.zeros((11, 11))
        cells[5, 5] = 1.0
        dist = distance_to_feature(grid.with_cells(cells))
        crit = Criterion(name="Settlements", technology="wind", buffer_m=1500.0)
        excl = apply_criterion(crit, dist).cells
        want = brute_force_distance_field(grid, cells != 0) < 1500.0
        np.testing.assert_array_equal(excl != 0, want)
        # strictness: a center exactly on the buffer distance stays eligible
        d = brute_force_distance_field(grid, cells != 0)
        on_ring = np.isclose(d, 1500.0)
        assert not np.any(excl[on_ring])

    def test_infinite_buffer_rejected(self):
        with pytest.raises(ConfigError, match="finite"):
            Criterion(name="Bad", technology="pv", buffer_m=float("inf"))

    def test_misaligned_distance_field(self):
        grid = make_grid(4, 4)
        other = make_grid(4, 5)
        crit = Criterion(name="Roads", technology="pv", buffer_m=100.0)
        region = region_of_all_cells(grid)
        excl = apply_criterion(crit, distance_to_feature(other))
        with pytest.raises(GridAlignmentError):
            combine_exclusions([(crit, excl)], region, grid)


class TestCombineExclusions:
    def test_no_criteria_full_eligibility(self):
        grid = make_grid(6, 6)
        res = combine_exclusions([], region_of_all_cells(grid), grid)
        assert res.eligible_share == 1.0

    def test_full_exclusion(self):
        grid = make_grid(4, 4)
        crit = Criterion(name="Everything", technology="pv", buffer_m=0.0)
        excl = grid.with_cells(np.ones(16))
        res = combine_exclusions([(crit, excl)], region_of_all_cells(grid), grid)
        assert res.eligible_share == 0.0
        assert res.per_criterion_excluded_share["Everything"] == 1.0

    def test_random_stack_matches_per_cell_brute_force(self):
        rng = np.random.default_rng(21)
        grid = make_grid(50, 50, origin_lat=5.0, cell_size=0.02)
        region = region_of_all_cells(grid)
        pairs = []
        feature_masks = []
        for i in range(3):
            feats = (rng.random((50, 50)) < 0.02).astype(float)
            feats[rng.integers(50), rng.integers(50)] = 1.0
            buffer_m = float(rng.uniform(0, 6000))
            crit = Criterion(name=f"C{i}", technology="pv", buffer_m=buffer_m)
            pairs.append((crit, criterion_exclusion(crit, grid.with_cells(feats))))
            feature_masks.append((feats != 0, buffer_m))
        res = combine_exclusions(pairs, region, grid)

        # oracle: for each cell test every criterion against all-pairs distances
        eligible_oracle = np.ones((50, 50), dtype=bool)
        for feats, buffer_m in feature_masks:
            d = brute_force_distance_field(grid, feats)
            if buffer_m == 0:
                eligible_oracle &= ~(d == 0)
            else:
                eligible_oracle &= ~(d < buffer_m)
        np.testing.assert_array_equal(res.eligible.cells != 0, eligible_oracle)

    def test_order_independence(self):
        rng = np.random.default_rng(8)
        grid = make_grid(20, 20)
        region = region_of_all_cells(grid)
        pairs = []
        for i in range(4):
            feats = (rng.random((20, 20)) < 0.05).astype(float)
            crit = Criterion(name=f"C{i}", technology="wind", buffer_m=float(rng.uniform(0, 3000)))
            pairs.append((crit, criterion_exclusion(crit, grid.with_cells(feats))))
        a = combine_exclusions(pairs, region, grid)
        b = combine_exclusions(pairs[::-1], region, grid)
        np.testing.assert_array_equal(a.eligible.cells, b.eligible.cells)
        assert a.eligible_share == b.eligible_share

    def test_monotonicity_adding_criterion(self):
        rng = np.random.default_rng(13)
        grid = make_grid(15, 15)
        region = region_of_all_cells(grid)
        pairs = []
        shares = []
        for i in range(4):
            feats = (rng.random((15, 15)) < 0.06).astype(float)
            crit = Criterion(name=f"C{i}", technology="pv", buffer_m=float(rng.uniform(0, 2500)))
            pairs.append((crit, criterion_exclusion(crit, grid.with_cells(feats))))
            shares.append(combine_exclusions(pairs, region, grid).eligible_share)
        assert all(b <= a + 1e-12 for a, b in zip(shares, shares[1:]))

    def test_buffer_monotonicity(self):
        grid = make_grid(15, 15)
        region = region_of_all_cells(grid)
        feats = np.zeros((15, 15))
        feats[7, 7] = 1.0
        mask = grid.with_cells(feats)
        prev = -1.0
        for buffer_m in (0.0, 500.0, 1000.0, 2000.0):
            crit = Criterion(name="C", technology="pv", buffer_m=buffer_m)
            res = combine_exclusions([(crit, criterion_exclusion(crit, mask))], region, grid)
            share = res.per_criterion_excluded_share["C"]
            assert share >= prev
            prev = share


class TestPlaceCapacity:
    def make_eligibility(self, area_km2_target, lat=16.0):
        # single-row grid sized to hit the requested eligible area at lat
        cell_area = 0.01 * 110_540 * 0.01 * 111_320 * np.cos(np.radians(lat + 0.005)) / 1e6
        n = int(round(area_km2_target / cell_area))
        grid = make_grid(1, n, origin_lat=lat, cell_size=0.01,
                         cells=np.ones(n))
        region = region_of_all_cells(grid)
        return combine_exclusions([], region, grid)

    def test_niger_pv_anchor(self):
        res = self.make_eligibility(590_072.0)
        placed = place_capacity(res, "pv", 50.0)
        assert placed.total_capacity_mw == pytest.approx(res.eligible_area_km2 * 50.0, rel=1e-9)
        assert placed.total_capacity_mw == pytest.approx(29_504_000.0, rel=2e-3)

    def test_zero_eligible_area(self):
        grid = make_grid(3, 3)
        crit = Criterion(name="All", technology="pv", buffer_m=0.0)
        excl = grid.with_cells(np.ones(9))
        res = combine_exclusions([(crit, excl)], region_of_all_cells(grid), grid)
        placed = place_capacity(res, "pv", 50.0)
        assert placed.total_capacity_mw == 0.0

    def test_wind_density_anchor(self):
        res = self.make_eligibility(573_744.0)
        density = 4_618_000.0 / 573_744.0  # capacity over eligible area
        placed = place_capacity(res, "wind", density)
        assert placed.total_capacity_mw == pytest.approx(4_618_000.0, rel=2e-3)

    def test_linear_in_density(self):
        res = self.make_eligibility(1000.0)
        a = place_capacity(res, "pv", 10.0)
        b = place_capacity(res, "pv", 20.0)
        np.testing.assert_allclose(
            b.capacity_mw_per_cell.cells, 2.0 * a.capacity_mw_per_cell.cells, rtol=1e-12
        )

    def test_capacity_only_on_eligible_cells(self):
        grid = make_grid(4, 4)
        cells = np.zeros((4, 4))
        cells[0, :] = 1.0
        crit = Criterion(name="North", technology="pv", buffer_m=0.0)
        excl = grid.with_cells(cells.reshape(-1))
        res = combine_exclusions([(crit, excl)], region_of_all_cells(grid), grid)
        placed = place_capacity(res, "pv", 5.0)
        assert np.all(placed.capacity_mw_per_cell.cells[0, :] == 0.0)
        assert np.all(placed.capacity_mw_per_cell.cells[1:, :] > 0.0)

    def test_bad_density(self):
        res = self.make_eligibility(10.0)
        with pytest.raises(ConfigError):
            place_capacity(res, "pv", 0.0)
