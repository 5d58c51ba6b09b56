"""Lon/lat raster grids, administrative regions and distance fields.

All spatial computation in the toolkit runs on a plain geographic grid with a
two-constant local-meter metric (no projection library): one degree of
latitude is 110 540 m everywhere, one degree of longitude is
111 320 * cos(lat) m. Grids store cells row-major with row 0 at the northern
edge, matching the ESRI ASCII file layout.
"""

from __future__ import annotations

import json
import math
import struct
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError, GridAlignmentError, RasterFormatError

DEFAULT_NODATA = -9999.0

_FLAT_MAGIC = b"H2AR"
_FLAT_HEADER = struct.Struct("<4sII3d")  # magic, n_cols, n_rows, origin_lon, origin_lat, cell_size


class CellAreaModel:
    """Local-meter metric for the geographic grid.

    Degrees of latitude map to a constant 110 540 m; degrees of longitude
    shrink with cos(lat). East-west distances between two points use the
    cosine at their mean latitude, which keeps the metric symmetric.
    """

    M_PER_DEG_LAT = 110_540.0
    M_PER_DEG_LON_EQUATOR = 111_320.0

    @classmethod
    def meters_per_degree_lon_at(cls, lat_deg: float) -> float:
        return cls.M_PER_DEG_LON_EQUATOR * math.cos(math.radians(lat_deg))

    @classmethod
    def distance_m(cls, lat1: float, lon1: float, lat2: float, lon2: float) -> float:
        """Symmetric point-to-point distance in meters."""
        dy = (lat2 - lat1) * cls.M_PER_DEG_LAT
        mean_lat = 0.5 * (lat1 + lat2)
        dx = (lon2 - lon1) * cls.meters_per_degree_lon_at(mean_lat)
        return math.hypot(dx, dy)

    @classmethod
    def cell_area_m2(cls, cell_size_deg: float, lat_center_deg: float) -> float:
        """Area of one cell whose center sits at the given latitude."""
        return (
            cell_size_deg * cls.M_PER_DEG_LAT
            * cell_size_deg * cls.meters_per_degree_lon_at(lat_center_deg)
        )


@dataclass(frozen=True)
class RasterGrid:
    """Regular lon/lat grid of scalar cells with a nodata sentinel.

    cells has shape (n_rows, n_cols); row 0 is the northernmost row. The
    origin names the lower-left corner of the grid.
    """

    n_cols: int
    n_rows: int
    origin_lon: float
    origin_lat: float
    cell_size: float
    nodata: float
    cells: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.n_cols < 1 or self.n_rows < 1:
            raise ValueError("grid must have at least one row and one column")
        if not self.cell_size > 0:
            raise ValueError("cell_size must be positive")
        arr = np.asarray(self.cells, dtype=float)
        if arr.size != self.n_cols * self.n_rows:
            raise ValueError(
                f"cell count mismatch: got {arr.size}, expected {self.n_rows * self.n_cols}"
            )
        arr = arr.reshape(self.n_rows, self.n_cols)
        valid = arr != self.nodata
        # distance fields legitimately carry +inf for unreachable cells, so
        # only NaN is rejected here
        if np.any(np.isnan(arr[valid])):
            raise ValueError("non-nodata cells must not be NaN")
        arr.setflags(write=False)
        object.__setattr__(self, "cells", arr)

    # -- geometry helpers ---------------------------------------------------

    def lat_of_row(self, row) -> np.ndarray | float:
        """Latitude of the cell center(s) of the given row index(es)."""
        return self.origin_lat + (self.n_rows - np.asarray(row) - 0.5) * self.cell_size

    def lon_of_col(self, col) -> np.ndarray | float:
        return self.origin_lon + (np.asarray(col) + 0.5) * self.cell_size

    def row_lats(self) -> np.ndarray:
        return self.lat_of_row(np.arange(self.n_rows))

    def cell_area_km2_of_row(self, row) -> np.ndarray | float:
        lat = self.lat_of_row(row)
        return (
            self.cell_size * CellAreaModel.M_PER_DEG_LAT
            * self.cell_size * CellAreaModel.M_PER_DEG_LON_EQUATOR
            * np.cos(np.radians(lat))
        ) / 1e6

    def cell_areas_km2(self) -> np.ndarray:
        """Per-cell geodesic area, shape (n_rows, n_cols)."""
        per_row = np.asarray(self.cell_area_km2_of_row(np.arange(self.n_rows)))
        return np.broadcast_to(per_row[:, None], (self.n_rows, self.n_cols))

    def same_geometry(self, other: "RasterGrid") -> bool:
        return (
            self.n_cols == other.n_cols
            and self.n_rows == other.n_rows
            and math.isclose(self.origin_lon, other.origin_lon, abs_tol=1e-9)
            and math.isclose(self.origin_lat, other.origin_lat, abs_tol=1e-9)
            and math.isclose(self.cell_size, other.cell_size, rel_tol=1e-12)
        )

    def require_alignment(self, other: "RasterGrid", what: str = "raster"):
        if not self.same_geometry(other):
            raise GridAlignmentError(f"{what} does not align with the reference grid")

    def with_cells(self, cells: np.ndarray, nodata: float | None = None) -> "RasterGrid":
        return RasterGrid(
            n_cols=self.n_cols,
            n_rows=self.n_rows,
            origin_lon=self.origin_lon,
            origin_lat=self.origin_lat,
            cell_size=self.cell_size,
            nodata=self.nodata if nodata is None else nodata,
            cells=cells,
        )

    def valid_mask(self) -> np.ndarray:
        return self.cells != self.nodata


@dataclass(frozen=True)
class Region:
    """Administrative unit scoping optimization and statistics.

    mask holds flat cell indices (row * n_cols + col) on the reference grid,
    sorted ascending.
    """

    id: str
    country_code: str
    mask: np.ndarray = field(repr=False)
    area_km2: float

    def __post_init__(self):
        arr = np.unique(np.asarray(self.mask, dtype=np.int64))
        if arr.size == 0:
            raise ValueError(f"region {self.id}: mask must be non-empty")
        if not self.area_km2 > 0:
            raise ValueError(f"region {self.id}: area must be positive")
        arr.setflags(write=False)
        object.__setattr__(self, "mask", arr)

    def rows_cols(self, grid: RasterGrid) -> tuple[np.ndarray, np.ndarray]:
        return np.divmod(self.mask, grid.n_cols)

    def mask_area_km2(self, grid: RasterGrid) -> float:
        rows, _ = self.rows_cols(grid)
        return float(np.sum(grid.cell_area_km2_of_row(rows)))


def region_from_mask(grid: RasterGrid, region_id: str, country_code: str,
                     mask: np.ndarray) -> Region:
    """Build a Region whose area is the geodesic area of its mask cells."""
    mask = np.asarray(mask, dtype=np.int64)
    rows = mask // grid.n_cols
    area = float(np.sum(grid.cell_area_km2_of_row(rows)))
    return Region(id=region_id, country_code=country_code, mask=mask, area_km2=area)


# ---------------------------------------------------------------------------
# Raster file I/O
# ---------------------------------------------------------------------------

_ASCII_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value")


def load_raster(path, format: str = "esri_ascii") -> RasterGrid:
    """Read a raster file in one of the two supported formats.

    esri_ascii expects the six standard header lines followed by whitespace
    separated values; flat_binary is the packed little-endian layout written
    by save_raster (NaN cells mark nodata on disk).
    """
    if format == "esri_ascii":
        return _load_ascii(path)
    if format == "flat_binary":
        return _load_flat(path)
    raise ValueError(f"unknown raster format {format!r}")


def save_raster(grid: RasterGrid, path, format: str = "esri_ascii"):
    if format == "esri_ascii":
        _save_ascii(grid, path)
    elif format == "flat_binary":
        _save_flat(grid, path)
    else:
        raise ValueError(f"unknown raster format {format!r}")


def _load_ascii(path) -> RasterGrid:
    header: dict[str, float] = {}
    with open(path, "r") as fh:
        lines = fh.read().split("\n")
    n_header = 0
    for lineno, line in enumerate(lines, start=1):
        parts = line.split()
        if not parts:
            n_header += 1
            continue
        key = parts[0].lower()
        if key in _ASCII_KEYS:
            if len(parts) != 2:
                raise RasterFormatError(f"{path}: malformed header at line {lineno}: {line!r}")
            try:
                header[key] = float(parts[1])
            except ValueError:
                raise RasterFormatError(
                    f"{path}: malformed header value at line {lineno}: {line!r}"
                ) from None
            n_header += 1
        else:
            break
    for key in ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize"):
        if key not in header:
            raise RasterFormatError(f"{path}: missing header key '{key}'")
    nodata = header.get("nodata_value", DEFAULT_NODATA)
    body = " ".join(lines[n_header:])
    try:
        values = np.array(body.split(), dtype=float)
    except ValueError:
        raise RasterFormatError(f"{path}: unparseable cell values") from None
    n_cols = int(header["ncols"])
    n_rows = int(header["nrows"])
    if values.size != n_cols * n_rows:
        raise RasterFormatError(
            f"{path}: expected {n_cols * n_rows} cells, found {values.size}"
        )
    return RasterGrid(
        n_cols=n_cols,
        n_rows=n_rows,
        origin_lon=header["xllcorner"],
        origin_lat=header["yllcorner"],
        cell_size=header["cellsize"],
        nodata=nodata,
        cells=values,
    )


def _format_num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def _save_ascii(grid: RasterGrid, path):
    with open(path, "w") as fh:
        fh.write(f"ncols {grid.n_cols}\n")
        fh.write(f"nrows {grid.n_rows}\n")
        fh.write(f"xllcorner {_format_num(grid.origin_lon)}\n")
        fh.write(f"yllcorner {_format_num(grid.origin_lat)}\n")
        fh.write(f"cellsize {_format_num(grid.cell_size)}\n")
        fh.write(f"NODATA_value {_format_num(grid.nodata)}\n")
        for row in grid.cells:
            fh.write(" ".join(_format_num(v) for v in row))
            fh.write("\n")


def _load_flat(path) -> RasterGrid:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _FLAT_HEADER.size:
        raise RasterFormatError(f"{path}: truncated header")
    magic, n_cols, n_rows, origin_lon, origin_lat, cell_size = _FLAT_HEADER.unpack_from(raw)
    if magic != _FLAT_MAGIC:
        raise RasterFormatError(f"{path}: bad magic {magic!r}")
    body = np.frombuffer(raw, dtype="<f8", offset=_FLAT_HEADER.size)
    if body.size != n_cols * n_rows:
        raise RasterFormatError(
            f"{path}: expected {n_cols * n_rows} cells, found {body.size}"
        )
    cells = body.copy()
    cells[np.isnan(cells)] = DEFAULT_NODATA
    return RasterGrid(
        n_cols=int(n_cols),
        n_rows=int(n_rows),
        origin_lon=origin_lon,
        origin_lat=origin_lat,
        cell_size=cell_size,
        nodata=DEFAULT_NODATA,
        cells=cells,
    )


def _save_flat(grid: RasterGrid, path):
    cells = np.array(grid.cells, dtype="<f8").reshape(-1)
    cells[cells == grid.nodata] = np.nan
    with open(path, "wb") as fh:
        fh.write(_FLAT_HEADER.pack(
            _FLAT_MAGIC, grid.n_cols, grid.n_rows,
            grid.origin_lon, grid.origin_lat, grid.cell_size,
        ))
        fh.write(cells.tobytes())


# ---------------------------------------------------------------------------
# Region rasterization
# ---------------------------------------------------------------------------

@dataclass
class RegionAssignment:
    """Result of rasterizing a boundary collection onto a grid.

    Regions whose polygon covers no cell center are retained in
    empty_regions as (gid, country, polygon_area_km2) and reported in
    warnings.
    """

    cell_to_region: dict[int, str]
    regions: list[Region]
    empty_regions: list[tuple[str, str, float]]
    warnings: list[str]


def _polygon_rings(geometry: dict, feature_id: str) -> list[list[np.ndarray]]:
    """Return one list of rings per polygon part; ring 0 is the outer shell."""
    gtype = geometry.get("type")
    if gtype == "Polygon":
        polys = [geometry["coordinates"]]
    elif gtype == "MultiPolygon":
        polys = geometry["coordinates"]
    else:
        raise GeometryError(f"feature {feature_id}: unsupported geometry type {gtype!r}")
    out = []
    for rings in polys:
        parsed = []
        for ring in rings:
            pts = np.asarray(ring, dtype=float)
            if pts.ndim != 2 or pts.shape[0] < 4 or pts.shape[1] < 2:
                raise GeometryError(f"feature {feature_id}: ring with fewer than 4 points")
            if not np.allclose(pts[0, :2], pts[-1, :2]):
                raise GeometryError(f"feature {feature_id}: ring is not closed")
            parsed.append(pts[:, :2])
        if not parsed:
            raise GeometryError(f"feature {feature_id}: polygon without rings")
        out.append(parsed)
    return out


def _points_in_ring(lons: np.ndarray, lats: np.ndarray, ring: np.ndarray) -> np.ndarray:
    """Even-odd ray casting, vectorized over points."""
    inside = np.zeros(lons.shape, dtype=bool)
    x1, y1 = ring[:-1, 0], ring[:-1, 1]
    x2, y2 = ring[1:, 0], ring[1:, 1]
    for xa, ya, xb, yb in zip(x1, y1, x2, y2):
        if ya == yb:
            continue
        crosses = (ya > lats) != (yb > lats)
        with np.errstate(invalid="ignore"):
            xint = xa + (lats - ya) * (xb - xa) / (yb - ya)
        inside ^= crosses & (lons < xint)
    return inside


def _points_in_geometry(lons, lats, polys) -> np.ndarray:
    inside = np.zeros(lons.shape, dtype=bool)
    for rings in polys:
        part = np.zeros(lons.shape, dtype=bool)
        for ring in rings:  # even-odd handles holes
            part ^= _points_in_ring(lons, lats, ring)
        inside |= part
    return inside


def _planar_ring_area_deg2(ring: np.ndarray) -> float:
    x, y = ring[:, 0], ring[:, 1]
    return 0.5 * abs(float(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1])))


def _polygon_area_km2(polys) -> float:
    total = 0.0
    for rings in polys:
        shell = rings[0]
        lat0 = float(np.mean(shell[:, 1]))
        scale = (CellAreaModel.M_PER_DEG_LAT
                 * CellAreaModel.meters_per_degree_lon_at(lat0)) / 1e6
        area = _planar_ring_area_deg2(shell)
        for hole in rings[1:]:
            area -= _planar_ring_area_deg2(hole)
        total += max(area, 0.0) * scale
    return total


def rasterize_regions(boundaries: dict, grid_spec: RasterGrid) -> RegionAssignment:
    """Assign each grid cell to at most one region by cell-center containment.

    boundaries is a GeoJSON FeatureCollection whose features carry "gid" and
    "country" properties. Later features never overwrite earlier assignments,
    so a non-overlapping collection yields pairwise disjoint masks. A feature
    covering no cell centers is retained with its polygon area and reported
    as a warning.
    """
    if boundaries.get("type") != "FeatureCollection":
        raise GeometryError("boundaries must be a GeoJSON FeatureCollection")
    cols, rows = np.meshgrid(np.arange(grid_spec.n_cols), np.arange(grid_spec.n_rows))
    lons = np.asarray(grid_spec.lon_of_col(cols), dtype=float)
    lats = np.asarray(grid_spec.lat_of_row(rows), dtype=float)

    taken = np.zeros(lons.shape, dtype=bool)
    cell_to_region: dict[int, str] = {}
    regions: list[Region] = []
    empty_regions: list[tuple[str, str, float]] = []
    warns: list[str] = []

    for feature in boundaries.get("features", []):
        props = feature.get("properties", {})
        gid = str(props.get("gid", ""))
        country = str(props.get("country", ""))
        if not gid:
            raise GeometryError("feature without 'gid' property")
        polys = _polygon_rings(feature.get("geometry", {}), gid)
        inside = _points_in_geometry(lons, lats, polys) & ~taken
        idx = np.flatnonzero(inside.reshape(-1))
        if idx.size == 0:
            warns.append(f"region {gid}: polygon covers no cell centers")
            warnings.warn(warns[-1], stacklevel=2)
            empty_regions.append((gid, country, _polygon_area_km2(polys)))
            continue
        taken |= inside
        for i in idx:
            cell_to_region[int(i)] = gid
        regions.append(region_from_mask(grid_spec, gid, country, idx))
    return RegionAssignment(
        cell_to_region=cell_to_region,
        regions=regions,
        empty_regions=empty_regions,
        warnings=warns,
    )


def load_boundaries(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# Distance transform
# ---------------------------------------------------------------------------

def distance_to_feature(feature_mask: RasterGrid) -> RasterGrid:
    """Minimum metric distance from every cell center to any feature cell.

    Exact under the anisotropic local-meter metric: for each pair of rows the
    east-west scale is evaluated at their mean latitude, so the result equals
    the all-pairs brute force. Feature cells hold 0; an all-false mask yields
    +infinity everywhere. Nodata cells are not features and emit nodata.
    """
    grid = feature_mask
    valid = grid.valid_mask()
    feat = (grid.cells != 0) & valid
    n_rows, n_cols = grid.n_rows, grid.n_cols
    out = np.full((n_rows, n_cols), np.inf)

    feat_rows = np.flatnonzero(feat.any(axis=1))
    if feat_rows.size:
        # per feature row: column distance (in cells) to the nearest feature
        col_idx = np.arange(n_cols)
        ncol_dist = np.empty((feat_rows.size, n_cols))
        for i, r in enumerate(feat_rows):
            cols_r = np.flatnonzero(feat[r])
            pos = np.searchsorted(cols_r, col_idx)
            left = np.where(pos > 0, col_idx - cols_r[np.maximum(pos - 1, 0)], np.iinfo(np.int64).max)
            right = np.where(pos < cols_r.size, cols_r[np.minimum(pos, cols_r.size - 1)] - col_idx,
                             np.iinfo(np.int64).max)
            ncol_dist[i] = np.minimum(left, right)

        lats = grid.row_lats()
        dy_deg = grid.cell_size * CellAreaModel.M_PER_DEG_LAT
        for r in range(n_rows):
            drow = (r - feat_rows) * dy_deg
            mean_lat = 0.5 * (lats[r] + lats[feat_rows])
            bscale = grid.cell_size * CellAreaModel.M_PER_DEG_LON_EQUATOR * np.cos(np.radians(mean_lat))
            d2 = drow[:, None] ** 2 + (bscale[:, None] * ncol_dist) ** 2
            out[r] = np.sqrt(d2.min(axis=0))

    out[~valid] = grid.nodata
    return grid.with_cells(out)
