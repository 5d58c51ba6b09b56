"""Deterministic synthetic demo dataset: 12 districts in 4 countries.

Everything derives from one seed, so two generations are byte-identical and
the pipeline's determinism check can hash its outputs. The geography is a
2.4 x 2.4 degree box with the coast on the western edge: solar quality rises
toward the dry north-east, wind concentrates along the coast and blows
night-heavy, two southern districts carry hydropower, and groundwater
recharge falls off toward the north.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .geodata import RasterGrid, save_raster

GRID_N = 48
CELL_SIZE = 0.05
ORIGIN_LON = 0.0
ORIGIN_LAT = 10.0
HOURS = 8760

COUNTRIES = ("AAA", "BBB", "CCC", "DDD")
REGION_TAGS = {"AAA": "W", "BBB": "W", "CCC": "S-E", "DDD": "S-E"}


def _grid(cells, nodata=-9999.0) -> RasterGrid:
    return RasterGrid(
        n_cols=GRID_N, n_rows=GRID_N, origin_lon=ORIGIN_LON, origin_lat=ORIGIN_LAT,
        cell_size=CELL_SIZE, nodata=nodata, cells=np.asarray(cells, dtype=float),
    )


def _region_boxes():
    """12 rectangles: 4 country columns x 3 district rows, in lon/lat degrees."""
    span = GRID_N * CELL_SIZE
    boxes = []
    for ci, country in enumerate(COUNTRIES):
        lon0 = ORIGIN_LON + ci * span / 4
        lon1 = ORIGIN_LON + (ci + 1) * span / 4
        for ri in range(3):
            lat0 = ORIGIN_LAT + ri * span / 3
            lat1 = ORIGIN_LAT + (ri + 1) * span / 3
            gid = f"{country}.{ri + 1}_1"
            boxes.append((gid, country, lon0, lat0, lon1, lat1))
    return boxes


def _boundaries_geojson():
    features = []
    for gid, country, lon0, lat0, lon1, lat1 in _region_boxes():
        features.append({
            "type": "Feature",
            "properties": {"gid": gid, "country": country},
            "geometry": {
                "type": "Polygon",
                "coordinates": [[[lon0, lat0], [lon1, lat0], [lon1, lat1],
                                 [lon0, lat1], [lon0, lat0]]],
            },
        })
    return {"type": "FeatureCollection", "features": features}


def _blob_mask(rng, density=0.015, blobs=6, blob_size=2) -> np.ndarray:
    mask = rng.random((GRID_N, GRID_N)) < density
    for _ in range(blobs):
        r, c = rng.integers(0, GRID_N, 2)
        r1 = min(r + blob_size, GRID_N)
        c1 = min(c + blob_size, GRID_N)
        mask[r:r1, c:c1] = True
    return mask


def _weather_series(rng, region_index: int):
    """One year of hourly ghi, temperature and wind for one district."""
    h = np.arange(HOURS)
    day_pos = np.clip(np.sin((h % 24 - 6) / 12 * np.pi), 0, None)
    seasonal = 1.0 + 0.18 * np.sin(h / HOURS * 2 * np.pi + 0.7)
    clearness = 0.62 + 0.03 * (region_index % 4) + 0.02 * (region_index // 4)
    ghi = 1000.0 * day_pos * seasonal * clearness
    ghi *= 1.0 - 0.25 * (rng.random(HOURS) < 0.08)  # cloud dropouts
    temp = 24.0 + 8.0 * day_pos + 3.0 * np.sin(h / HOURS * 2 * np.pi) \
        + rng.normal(0, 1.0, HOURS)
    coastal = max(0.0, 1.0 - (region_index // 3) * 0.28)
    night = 1.0 + 0.45 * np.cos((h % 24) / 24 * 2 * np.pi)
    synoptic = 1.0 + 0.35 * np.sin(h / 96 * 2 * np.pi + region_index)
    wind = np.clip(
        (3.2 + 4.5 * coastal) * night * synoptic / 1.75 + rng.normal(0, 0.9, HOURS),
        0.0, None,
    )
    return ghi, temp, wind


def _write_weather_csv(path: Path, ghi, temp, wind):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["hour_index", "ghi", "temp_c", "wind_ms"])
        for i in range(HOURS):
            writer.writerow([i, f"{ghi[i]:.2f}", f"{temp[i]:.2f}", f"{wind[i]:.2f}"])


def _write_country_table(path: Path):
    rows = [
        # country, tag, unemployment, employment factor, elec demand (H2-eq TWh), H2 demand TWh
        ("AAA", "W", 0.056, 5.4, 0.60, 0.060),
        ("BBB", "W", 0.128, 5.9, 0.25, 0.025),
        ("CCC", "S-E", 0.206, 1.4, 0.18, 0.018),
        ("DDD", "S-E", 0.052, 5.8, 0.40, 0.040),
    ]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["country", "region_tag", "unemployment_rate", "employment_factor",
                         "elec_demand_twh_h2eq", "h2_demand_twh"])
        for row in rows:
            writer.writerow(row)


CONFIG_TEMPLATE = """\
# Demo run configuration. Values marked "surrogate default" stand in for
# unpublished source parameters; override them per study.

[run]
year = {year}
steps = [0.01, 0.05, 0.10, 0.25, 0.50, 0.75, 1.00]
threads = 1

[paths]
boundaries = "regions.geojson"
weather_dir = "weather"
recharge_raster = "recharge.asc"
consumption_raster = "consumption.asc"
coast_distance_raster = "coast_distance_km.asc"
elevation_raster = "elevation_m.asc"
country_table = "countries.csv"
socio_dir = "socio"

[water]
scenario = "medium"
climate = "rcp26"
horizon = 2020
groundwater_cost_eur_per_m3 = 0.30
water_l_per_kg = 10.0              # surrogate default
electricity_price_eur_per_kwh = 0.05

[technologies.pv]
density_mw_per_km2 = 50.0

[technologies.wind]
density_mw_per_km2 = 7.5

[technologies.hydro]
# existing fleets, exogenous profiles; cost constant over the years

{criteria}
"""

CRITERION_TEMPLATE = """\
[[criteria]]
name = "{name}"
technology = "{technology}"
raster = "{raster}"
buffer_m = {buffer_m}            # illustrative buffer, survey values vary
"""


def build_demo_dataset(target_dir, seed: int = 0, year: int = 2030) -> Path:
    """Write the bundled 12-region dataset and its config; returns the config path."""
    target = Path(target_dir)
    (target / "weather").mkdir(parents=True, exist_ok=True)
    (target / "features").mkdir(exist_ok=True)
    (target / "socio").mkdir(exist_ok=True)
    rng = np.random.default_rng(seed)

    with open(target / "regions.geojson", "w") as fh:
        json.dump(_boundaries_geojson(), fh, sort_keys=True)

    cols, rows = np.meshgrid(np.arange(GRID_N), np.arange(GRID_N))
    lat = ORIGIN_LAT + (GRID_N - rows - 0.5) * CELL_SIZE
    lon = ORIGIN_LON + (cols + 0.5) * CELL_SIZE

    # coast along the western edge; distance grows eastward
    coast_km = (lon - ORIGIN_LON) * 111.320 * np.cos(np.radians(lat))
    save_raster(_grid(np.round(coast_km, 3)), target / "coast_distance_km.asc")
    elevation = 40.0 + 260.0 * (lon - ORIGIN_LON) / (GRID_N * CELL_SIZE) \
        + 25.0 * rng.standard_normal((GRID_N, GRID_N))
    save_raster(_grid(np.round(np.maximum(elevation, 0.0), 2)), target / "elevation_m.asc")

    # recharge collapses toward the arid north so the sunniest districts end
    # up groundwater-limited; consumption is a small sectoral draw
    northness = (lat - ORIGIN_LAT) / (GRID_N * CELL_SIZE)
    recharge = 115.0 * (1.0 - northness) ** 2 + 3.0 \
        + 2.5 * rng.standard_normal((GRID_N, GRID_N))
    save_raster(_grid(np.round(np.maximum(recharge, 0.0), 2)), target / "recharge.asc")
    consumption = np.full((GRID_N, GRID_N), 1.3) + 0.5 * rng.random((GRID_N, GRID_N))
    save_raster(_grid(np.round(consumption, 3)), target / "consumption.asc")

    criteria_rows = []
    buffers = {"Settlements": 9000.0, "Protected Areas": 6000.0, "Waterbodies": 5000.0}
    for name, buffer_m in buffers.items():
        mask = _blob_mask(rng)
        fname = f"features/{name.lower().replace(' ', '_')}.asc"
        save_raster(_grid(mask.astype(float)), target / fname)
        for tech in ("pv", "wind"):
            criteria_rows.append(CRITERION_TEMPLATE.format(
                name=name, technology=tech, raster=fname,
                buffer_m=buffer_m if tech == "pv" else buffer_m * 1.2,
            ))

    for i, (gid, _c, *_rest) in enumerate(_region_boxes()):
        ghi, temp, wind = _weather_series(rng, i)
        _write_weather_csv(target / "weather" / f"{gid}.csv", ghi, temp, wind)

    # two southern districts of BBB run existing hydropower fleets
    month_hours = np.round(np.linspace(0, 8759, 13), 1)
    for gid, capacity in (("BBB.1_1", 120.0), ("BBB.2_1", 60.0)):
        cf = np.clip(0.55 + 0.3 * np.sin(np.linspace(0, 2 * np.pi, 13) + 1.2)
                     + rng.normal(0, 0.03, 13), 0.05, 0.95)
        with open(target / "weather" / f"hydro_{gid}.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["hour_index", "cf", "capacity_mw"])
            for t, v in zip(month_hours, cf):
                writer.writerow([t, f"{v:.4f}", capacity])

    # socio grids: access improves toward the coast, population clusters south
    access = np.clip(0.85 - 0.6 * (lon - ORIGIN_LON) / (GRID_N * CELL_SIZE)
                     + 0.1 * rng.standard_normal((GRID_N, GRID_N)), 0.0, 1.0)
    fuel = np.clip(access - 0.15 + 0.05 * rng.standard_normal((GRID_N, GRID_N)), 0.0, 1.0)
    pop = np.maximum(0.0, 180.0 * (1.0 - northness) + 20.0
                     + 120.0 * _blob_mask(rng, density=0.0, blobs=10, blob_size=3))
    labor = np.maximum(0.0, pop * 0.45 + 4.0 * rng.standard_normal((GRID_N, GRID_N)))
    biomass = np.clip(1.0 - access + 0.05 * rng.standard_normal((GRID_N, GRID_N)), 0.0, 1.0)
    poverty = np.clip(0.6 * biomass + 0.15 + 0.05 * rng.standard_normal((GRID_N, GRID_N)),
                      0.0, 1.0)
    for name, arr in (("electricity_access", access), ("clean_fuel_access", fuel),
                      ("population_density", pop), ("labor_force_density", labor),
                      ("biomass_dependence", biomass), ("poverty_headcount", poverty)):
        save_raster(_grid(np.round(arr, 4)), target / "socio" / f"{name}.asc")

    _write_country_table(target / "countries.csv")

    config_path = target / "config.toml"
    config_path.write_text(CONFIG_TEMPLATE.format(year=year, criteria="".join(criteria_rows)))
    return config_path
