import numpy as np
import pytest

from conftest import make_grid
from oracles import brute_force_distance_field, point_in_polygon

from h2map.errors import GeometryError, RasterFormatError
from h2map.geodata import (
    CellAreaModel,
    RasterGrid,
    Region,
    distance_to_feature,
    load_raster,
    rasterize_regions,
    region_from_mask,
    save_raster,
)


class TestRasterGrid:
    def test_invariants_rejected(self):
        with pytest.raises(ValueError):
            make_grid(0, 2)
        with pytest.raises(ValueError):
            make_grid(2, 2, cell_size=0.0)
        with pytest.raises(ValueError):
            make_grid(2, 2, cells=np.zeros(3))
        with pytest.raises(ValueError):
            make_grid(1, 2, cells=np.array([np.nan, 0.0]))
        # +inf is tolerated: distance fields mark unreachable cells with it
        make_grid(1, 2, cells=np.array([np.inf, 0.0]))

    def test_nodata_cells_allowed(self):
        g = make_grid(1, 2, cells=np.array([-9999.0, 1.0]))
        assert g.valid_mask().tolist() == [[False, True]]

    def test_cells_immutable(self):
        g = make_grid(2, 2)
        with pytest.raises(ValueError):
            g.cells[0, 0] = 1.0

    def test_equator_cell_area_closed_form(self):
        # 0.01 deg cell centered on the equator
        g = make_grid(2, 2, origin_lat=-0.01, cell_size=0.01)
        area_km2 = g.cell_area_km2_of_row(0)  # row 0 center at +0.005 deg
        expected = 111_320.0 * 110_540.0 * 1e-4 / 1e6 * np.cos(np.radians(0.005))
        assert area_km2 == pytest.approx(expected, rel=1e-12)
        # at exactly zero latitude the closed form holds to 1e-9 relative
        exact = CellAreaModel.cell_area_m2(0.01, 0.0)
        assert exact == pytest.approx(111_320.0 * 110_540.0 * 1e-4, rel=1e-9)

    def test_cell_area_decreases_with_latitude(self):
        areas = [CellAreaModel.cell_area_m2(0.01, lat) for lat in (0, 15, 30, 60)]
        assert areas == sorted(areas, reverse=True)


class TestAsciiIO:
    def test_spec_header_example(self, tmp_path):
        p = tmp_path / "a.asc"
        p.write_text(
            "ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\n"
            "NODATA_value -9999\n3 -9999\n"
        )
        g = load_raster(p, "esri_ascii")
        assert g.n_cols == 2 and g.n_rows == 1
        assert g.cells[0, 0] == 3.0
        assert g.cells[0, 1] == g.nodata == -9999.0

    def test_round_trip_identity(self, tmp_path):
        rng = np.random.default_rng(7)
        cells = np.round(rng.uniform(-5, 5, 12 * 9), 6)
        cells[rng.random(cells.size) < 0.2] = -9999.0
        g = make_grid(9, 12, origin_lat=4.25, origin_lon=-3.5, cell_size=0.125, cells=cells)
        p = tmp_path / "rt.asc"
        save_raster(g, p)
        g2 = load_raster(p)
        assert g2.n_cols == g.n_cols and g2.n_rows == g.n_rows
        assert g2.origin_lon == g.origin_lon and g2.origin_lat == g.origin_lat
        assert g2.cell_size == g.cell_size and g2.nodata == g.nodata
        np.testing.assert_array_equal(g2.cells, g.cells)
        # saving again produces byte-identical content
        p2 = tmp_path / "rt2.asc"
        save_raster(g2, p2)
        assert p.read_bytes() == p2.read_bytes()

    def test_random_fixture_sum(self, tmp_path):
        rng = np.random.default_rng(123)
        cells = np.round(rng.uniform(0, 100, 100 * 100), 4)
        recorded_sum = float(cells.sum())
        g = make_grid(100, 100, cells=cells)
        p = tmp_path / "big.asc"
        save_raster(g, p)
        loaded = load_raster(p)
        assert float(loaded.cells.sum()) == pytest.approx(recorded_sum, rel=1e-12)

    def test_round_trip_non_dyadic_values(self, tmp_path):
        # repr writes shortest round-trip decimals, so odd floats survive
        cells = np.array([0.1 + 0.2, 1 / 3, 2.0000000000000004, -9999.0])
        g = make_grid(2, 2, origin_lat=-7.77, origin_lon=11.113, cell_size=0.0567,
                      cells=cells)
        p = tmp_path / "odd.asc"
        save_raster(g, p)
        g2 = load_raster(p)
        assert g2.origin_lat == g.origin_lat
        assert g2.cell_size == g.cell_size
        np.testing.assert_array_equal(g2.cells, g.cells)

    def test_malformed_header_names_line(self, tmp_path):
        p = tmp_path / "bad.asc"
        p.write_text("ncols 2\nnrows one two\nxllcorner 0\n")
        with pytest.raises(RasterFormatError, match="line 2"):
            load_raster(p)

    def test_cell_count_mismatch(self, tmp_path):
        p = tmp_path / "short.asc"
        p.write_text(
            "ncols 3\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n"
            "NODATA_value -9999\n1 2 3 4\n"
        )
        with pytest.raises(RasterFormatError, match="expected 6"):
            load_raster(p)

    def test_missing_header_key(self, tmp_path):
        p = tmp_path / "nohdr.asc"
        p.write_text("ncols 2\nnrows 1\n1 2\n")
        with pytest.raises(RasterFormatError, match="xllcorner"):
            load_raster(p)


class TestFlatBinaryIO:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(5)
        cells = rng.standard_normal(6 * 4)
        cells[3] = -9999.0
        g = make_grid(4, 6, origin_lat=-20.0, origin_lon=11.5, cell_size=0.05, cells=cells)
        p = tmp_path / "g.bin"
        save_raster(g, p, "flat_binary")
        g2 = load_raster(p, "flat_binary")
        assert g2.origin_lon == g.origin_lon
        assert g2.origin_lat == g.origin_lat
        assert g2.cell_size == g.cell_size
        np.testing.assert_array_equal(g2.cells, g.cells)

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "junk.bin"
        p.write_bytes(b"NOPE" + b"\x00" * 64)
        with pytest.raises(RasterFormatError, match="magic"):
            load_raster(p, "flat_binary")

    def test_truncated_body(self, tmp_path):
        g = make_grid(2, 2, cells=np.arange(4.0))
        p = tmp_path / "t.bin"
        save_raster(g, p, "flat_binary")
        p.write_bytes(p.read_bytes()[:-8])
        with pytest.raises(RasterFormatError, match="expected 4"):
            load_raster(p, "flat_binary")


def square(lon0, lat0, lon1, lat1):
    return [[[lon0, lat0], [lon1, lat0], [lon1, lat1], [lon0, lat1], [lon0, lat0]]]


def feature(gid, country, coords, gtype="Polygon"):
    return {
        "type": "Feature",
        "properties": {"gid": gid, "country": country},
        "geometry": {"type": gtype, "coordinates": coords},
    }


class TestRasterizeRegions:
    def test_unit_square_full_containment(self):
        grid = make_grid(2, 2, cell_size=0.5)
        fc = {"type": "FeatureCollection",
              "features": [feature("R1", "AAA", square(0, 0, 1, 1))]}
        res = rasterize_regions(fc, grid)
        assert sorted(res.cell_to_region) == [0, 1, 2, 3]
        assert all(v == "R1" for v in res.cell_to_region.values())
        assert res.regions[0].mask_area_km2(grid) == pytest.approx(res.regions[0].area_km2)

    def test_disjoint_squares_match_brute_force(self):
        grid = make_grid(10, 10, cell_size=0.1)
        f1 = feature("A", "AAA", square(0.0, 0.0, 0.45, 0.95))
        f2 = feature("B", "BBB", square(0.55, 0.05, 1.0, 0.85))
        fc = {"type": "FeatureCollection", "features": [f1, f2]}
        res = rasterize_regions(fc, grid)
        masks = {r.id: set(r.mask.tolist()) for r in res.regions}
        assert masks["A"] & masks["B"] == set()
        for f, gid in ((f1, "A"), (f2, "B")):
            rings = [np.array(r) for r in f["geometry"]["coordinates"]]
            expected = set()
            for idx in range(100):
                r, c = divmod(idx, 10)
                lon = float(grid.lon_of_col(c))
                lat = float(grid.lat_of_row(r))
                if point_in_polygon(lon, lat, [rr.tolist() for rr in rings]):
                    expected.add(idx)
            assert masks[gid] == expected

    def test_zero_cover_polygon_warns_and_is_retained(self):
        grid = make_grid(2, 2, cell_size=1.0)
        tiny = feature("T", "AAA", square(0.1, 0.1, 0.2, 0.2))
        fc = {"type": "FeatureCollection", "features": [tiny]}
        with pytest.warns(UserWarning, match="no cell centers"):
            res = rasterize_regions(fc, grid)
        assert res.regions == []
        (gid, country, area) = res.empty_regions[0]
        assert gid == "T"
        expected = 0.1 * 0.1 * 110_540 * 111_320 * np.cos(np.radians(0.15)) / 1e6
        assert area == pytest.approx(expected, rel=1e-6)

    def test_invalid_ring_reports_polygon_id(self):
        grid = make_grid(2, 2)
        bad = feature("BAD", "AAA", [[[0, 0], [1, 0], [1, 1]]])
        with pytest.raises(GeometryError, match="BAD"):
            rasterize_regions({"type": "FeatureCollection", "features": [bad]}, grid)

    def test_polygon_hole_excluded(self):
        grid = make_grid(10, 10, cell_size=0.1)
        shell = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.0, 0.0]]
        hole = [[0.3, 0.3], [0.7, 0.3], [0.7, 0.7], [0.3, 0.7], [0.3, 0.3]]
        f = feature("H", "AAA", [shell, hole])
        res = rasterize_regions({"type": "FeatureCollection", "features": [f]}, grid)
        mask = set(res.regions[0].mask.tolist())
        for idx in range(100):
            r, c = divmod(idx, 10)
            lon = float(grid.lon_of_col(c))
            lat = float(grid.lat_of_row(r))
            in_hole = 0.3 < lon < 0.7 and 0.3 < lat < 0.7
            assert (idx in mask) == (not in_hole)

    def test_multipolygon_parts_union(self):
        grid = make_grid(4, 8, cell_size=0.25)
        coords = [square(0.0, 0.0, 0.5, 1.0), square(1.5, 0.0, 2.0, 1.0)]
        f = feature("M", "AAA", coords, gtype="MultiPolygon")
        res = rasterize_regions({"type": "FeatureCollection", "features": [f]}, grid)
        mask = set(res.regions[0].mask.tolist())
        cols = {idx % 8 for idx in mask}
        assert cols == {0, 1, 6, 7}

    def test_overlapping_polygons_stay_disjoint(self):
        grid = make_grid(6, 6, cell_size=0.2)
        f1 = feature("A", "AAA", square(0.0, 0.0, 0.8, 1.2))
        f2 = feature("B", "AAA", square(0.4, 0.0, 1.2, 1.2))
        res = rasterize_regions({"type": "FeatureCollection", "features": [f1, f2]}, grid)
        masks = {r.id: set(r.mask.tolist()) for r in res.regions}
        assert masks["A"] & masks["B"] == set()


class TestRegion:
    def test_area_within_half_percent_of_mask(self):
        grid = make_grid(8, 8, origin_lat=10.0, cell_size=0.05)
        region = region_from_mask(grid, "R", "AAA", np.array([0, 1, 9, 17]))
        assert abs(region.area_km2 - region.mask_area_km2(grid)) <= 0.005 * region.area_km2

    def test_empty_mask_rejected(self):
        with pytest.raises(ValueError):
            Region(id="X", country_code="AAA", mask=np.array([], dtype=int), area_km2=1.0)


class TestDistanceToFeature:
    def test_self_distance_zero(self, equator_grid):
        cells = np.zeros((20, 20))
        cells[7, 3] = 1.0
        d = distance_to_feature(equator_grid.with_cells(cells))
        assert d.cells[7, 3] == 0.0

    def test_one_column_apart_at_equator(self):
        # centers on the equator: rows straddle lat 0 at row 9/10 boundary
        grid = make_grid(1, 2, origin_lat=-0.005, cell_size=0.01)
        cells = np.array([[1.0, 0.0]])
        d = distance_to_feature(grid.with_cells(cells.reshape(-1)))
        assert d.cells[0, 1] == pytest.approx(111_320 * 0.01, rel=1e-12)

    def test_random_mask_matches_brute_force(self, equator_grid):
        rng = np.random.default_rng(42)
        cells = (rng.random((20, 20)) < 0.08).astype(float)
        cells[0, 0] = 1.0
        masked = equator_grid.with_cells(cells)
        got = distance_to_feature(masked).cells
        want = brute_force_distance_field(equator_grid, cells != 0)
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-9)

    def test_high_latitude_matches_brute_force(self):
        grid = make_grid(15, 15, origin_lat=55.0, cell_size=0.05)
        rng = np.random.default_rng(3)
        cells = (rng.random((15, 15)) < 0.1).astype(float)
        cells[4, 9] = 1.0
        got = distance_to_feature(grid.with_cells(cells)).cells
        want = brute_force_distance_field(grid, cells != 0)
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-9)

    def test_all_false_gives_infinity(self, equator_grid):
        d = distance_to_feature(equator_grid)
        assert np.all(np.isinf(d.cells))

    def test_mask_monotonicity(self, equator_grid):
        rng = np.random.default_rng(11)
        m1 = rng.random((20, 20)) < 0.05
        m2 = m1 | (rng.random((20, 20)) < 0.05)
        d1 = distance_to_feature(equator_grid.with_cells(m1.astype(float))).cells
        d2 = distance_to_feature(equator_grid.with_cells(m2.astype(float))).cells
        assert np.all(d2 <= d1 + 1e-12)

    def test_nodata_cells_emit_nodata(self, equator_grid):
        cells = np.zeros((20, 20))
        cells[5, 5] = 1.0
        cells[2, 2] = equator_grid.nodata
        d = distance_to_feature(equator_grid.with_cells(cells))
        assert d.cells[2, 2] == equator_grid.nodata
        assert d.cells[5, 5] == 0.0

    def test_transposition_symmetry_with_metric_relabeling(self):
        # on an equator-symmetric grid with square cells, swapping the roles of
        # rows and columns while scaling the metric constants leaves the cell
        # distances of a transposed mask transposed
        n = 12
        grid = make_grid(n, n, origin_lat=-n * 0.01 / 2, cell_size=0.01)
        rng = np.random.default_rng(9)
        mask = rng.random((n, n)) < 0.1
        mask[3, 8] = True
        d = distance_to_feature(grid.with_cells(mask.astype(float))).cells
        dt = distance_to_feature(grid.with_cells(mask.T.astype(float))).cells
        # near the equator lon and lat scales differ by the constant factor
        # 111320/110540 only, so compare after normalizing each axis
        got = d / 110_540.0
        want = dt.T / 110_540.0
        np.testing.assert_allclose(got, want, rtol=0.012, atol=1e-12)
