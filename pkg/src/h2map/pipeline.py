"""Staged pipeline: eligibility, placement, simulation, water, optimization,
curves and socio-economics, with a checksum manifest over every artifact.

Each stage reads the original inputs plus the artifacts of upstream stages
and writes one numbered directory, so deleting a downstream directory and
rerunning its subcommand reproduces it byte-for-byte without recomputing
upstream work. All iteration orders are sorted and floats are written with
repr, which makes a rerun with identical config and inputs bit-identical.
"""

from __future__ import annotations

import csv
import hashlib
import json
import shutil
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig
from .eligibility import Criterion, combine_exclusions, criterion_exclusion
from .errors import StageError
from .geodata import (
    RasterGrid,
    Region,
    load_boundaries,
    load_raster,
    rasterize_regions,
    save_raster,
)
from .h2opt import (
    BatteryOption,
    CostPotentialCurve,
    CurvePoint,
    RegionSystemInputs,
    TechnologyOption,
    aggregate_national,
    cost_potential_curve,
    demand_set_aside,
    groundwater_feasible_share,
    max_h2_potential,
)
from .render import choropleth_svg, curves_svg
from .res_sim import (
    GenerationProfile,
    TechnoEconomics,
    lcoe,
    load_weather_csv,
    resample_hydro,
    simulate_pv,
    simulate_wind,
)
from .socio import (
    SocioInputs,
    composite_indicator,
    energy_access_indicator,
    macroeconomic_indicator,
    other_effects_indicator,
    regional_stats,
)
from .water import (
    DesalParams,
    WaterSupplyOption,
    YieldScenario,
    desal_transport_cost,
    region_water_budget,
    supply_curve,
    sustainable_yield,
)

STAGE_DIRS = {
    "eligibility": "01_eligibility",
    "placement": "02_placement",
    "simulation": "03_simulation",
    "water": "04_water",
    "optimization": "05_optimization",
    "curves": "06_curves",
    "socio": "07_socio",
}
STAGE_ORDER = tuple(STAGE_DIRS)


def _write_csv(path: Path, header: list[str], rows: list[list]):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([
                repr(float(v)) if isinstance(v, (float, np.floating)) else v
                for v in row
            ])


def _read_csv(path: Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _stage_dir(cfg: RunConfig, stage: str, create: bool = False) -> Path:
    d = cfg.output_dir / STAGE_DIRS[stage]
    if create:
        d.mkdir(parents=True, exist_ok=True)
    return d


def _recharge_path(cfg: RunConfig) -> Path:
    """Recharge raster for the configured scenario.

    The configured path may carry {climate} and {horizon} placeholders so one
    config addresses the whole raster set; a plain path is used as-is.
    """
    water = cfg.section("water")
    raw = str(cfg.raw.get("paths", {}).get("recharge_raster", ""))
    resolved = raw.format(climate=water["climate"], horizon=water["horizon"])
    return cfg.base_dir / resolved


def _reference_grid(cfg: RunConfig) -> RasterGrid:
    return load_raster(_recharge_path(cfg))


def _load_regions(cfg: RunConfig, reference: RasterGrid) -> list[Region]:
    rows = _read_csv(_stage_dir(cfg, "eligibility") / "region_cells.csv")
    cells: dict[str, list[int]] = {}
    countries: dict[str, str] = {}
    for row in rows:
        cells.setdefault(row["region_id"], []).append(int(row["cell_index"]))
        countries[row["region_id"]] = row["country"]
    from .geodata import region_from_mask

    return [
        region_from_mask(reference, rid, countries[rid], np.array(sorted(idx)))
        for rid, idx in sorted(cells.items())
    ]


# ---------------------------------------------------------------------------
# Stage 1+2: eligibility and placement
# ---------------------------------------------------------------------------

def stage_eligibility(cfg: RunConfig):
    out = _stage_dir(cfg, "eligibility", create=True)
    reference = _reference_grid(cfg)
    boundaries = load_boundaries(cfg.path("boundaries"))
    assignment = rasterize_regions(boundaries, reference)

    cell_rows = [
        [idx, rid, next(r.country_code for r in assignment.regions if r.id == rid)]
        for idx, rid in sorted(assignment.cell_to_region.items())
    ]
    _write_csv(out / "region_cells.csv", ["cell_index", "region_id", "country"], cell_rows)

    technologies = [t for t in cfg.technologies() if t in ("pv", "wind", "geothermal")]
    exclusion_masks: dict[tuple[str, str], RasterGrid] = {}
    criteria_by_tech: dict[str, list[Criterion]] = {t: [] for t in technologies}
    for record in cfg.criteria():
        tech = str(record["technology"])
        if tech not in criteria_by_tech:
            continue
        crit = Criterion(name=str(record["name"]), technology=tech,
                         buffer_m=float(record["buffer_m"]),
                         feature_mask_path=str(record["raster"]))
        feature = load_raster(cfg.base_dir / str(record["raster"]))
        criteria_by_tech[tech].append(crit)
        exclusion_masks[(tech, crit.name)] = criterion_exclusion(crit, feature)

    eligibility_rows = []
    exclusion_rows = []
    for tech in technologies:
        merged = np.zeros(reference.cells.shape).reshape(-1)
        for region in sorted(assignment.regions, key=lambda r: r.id):
            pairs = [(c, exclusion_masks[(tech, c.name)]) for c in criteria_by_tech[tech]]
            result = combine_exclusions(pairs, region, reference)
            merged += result.eligible.cells.reshape(-1)
            land = region.mask_area_km2(reference)
            eligibility_rows.append([
                region.id, region.country_code, tech, land,
                result.eligible_share, result.eligible_area_km2,
            ])
            for crit in criteria_by_tech[tech]:
                exclusion_rows.append([
                    region.id, tech, crit.name,
                    result.per_criterion_excluded_share[crit.name],
                ])
        save_raster(reference.with_cells(np.minimum(merged, 1.0)),
                    out / f"eligible_{tech}.asc")
    _write_csv(out / "eligibility.csv",
               ["region_id", "country", "technology", "land_area_km2",
                "eligible_share", "eligible_area_km2"],
               eligibility_rows)
    _write_csv(out / "exclusions.csv",
               ["region_id", "technology", "criterion", "excluded_share"],
               exclusion_rows)


def stage_placement(cfg: RunConfig):
    out = _stage_dir(cfg, "placement", create=True)
    reference = _reference_grid(cfg)
    upstream = _stage_dir(cfg, "eligibility")
    regions = _load_regions(cfg, reference)
    region_of_cell = {}
    for row in _read_csv(upstream / "region_cells.csv"):
        region_of_cell[int(row["cell_index"])] = row["region_id"]

    rows = []
    technologies = [t for t in cfg.technologies() if t in ("pv", "wind", "geothermal")]
    for tech in technologies:
        eligible = load_raster(upstream / f"eligible_{tech}.asc")
        density = float(cfg.tech_params(tech)["density_mw_per_km2"])
        areas = reference.cell_areas_km2().reshape(-1)
        capacity = np.where(eligible.cells.reshape(-1) != 0, areas * density, 0.0)
        save_raster(reference.with_cells(capacity), out / f"capacity_{tech}.asc")
        per_region: dict[str, float] = {r.id: 0.0 for r in regions}
        for idx, rid in region_of_cell.items():
            per_region[rid] += capacity[idx]
        for rid in sorted(per_region):
            rows.append([rid, tech, per_region[rid], "density"])

    # exogenous hydropower fleets, one CSV per equipped region
    weather_dir = cfg.path("weather_dir")
    for hydro_file in sorted(weather_dir.glob("hydro_*.csv")):
        rid = hydro_file.stem.removeprefix("hydro_")
        records = _read_csv(hydro_file)
        capacity = float(records[0]["capacity_mw"]) if records else 0.0
        rows.append([rid, "hydro", capacity, "exogenous"])

    _write_csv(out / "placements.csv",
               ["region_id", "technology", "capacity_mw", "source"], rows)


# ---------------------------------------------------------------------------
# Stage 3: simulation
# ---------------------------------------------------------------------------

def _tech_te(cfg: RunConfig, tech: str) -> TechnoEconomics:
    params = cfg.tech_params(tech)
    return TechnoEconomics(
        technology=tech,
        year=cfg.year,
        capex_eur_per_kw=float(params[f"capex_eur_per_kw_{cfg.year}"]),
        opex_share_per_year=float(params["opex_share"]),
        lifetime_years=int(params["lifetime_years"]),
        wacc=float(params["wacc"]),
    )


def stage_simulation(cfg: RunConfig):
    out = _stage_dir(cfg, "simulation", create=True)
    (out / "profiles").mkdir(exist_ok=True)
    weather_dir = cfg.path("weather_dir")
    placements = _read_csv(_stage_dir(cfg, "placement") / "placements.csv")
    region_ids = sorted({p["region_id"] for p in placements})

    summary = []
    for rid in region_ids:
        weather = load_weather_csv(weather_dir / f"{rid}.csv")
        profiles = {"pv": simulate_pv(weather), "wind": simulate_wind(weather)}
        hydro_file = weather_dir / f"hydro_{rid}.csv"
        if hydro_file.exists():
            records = _read_csv(hydro_file)
            t = np.array([float(r["hour_index"]) for r in records])
            v = np.array([float(r["cf"]) for r in records])
            profiles["hydro"] = resample_hydro(t, v)
        header = ["hour"] + sorted(profiles)
        rows = []
        for h in range(weather.hours):
            rows.append([h] + [float(profiles[k].capacity_factor[h]) for k in sorted(profiles)])
        _write_csv(out / "profiles" / f"{rid}.csv", header, rows)
        for tech in sorted(profiles):
            prof = profiles[tech]
            te = _tech_te(cfg, tech)
            cost = lcoe(te, prof.mean_cf * 8760.0) if prof.mean_cf > 0 else float("nan")
            summary.append([rid, tech, prof.mean_cf, prof.full_load_hours, cost])
    _write_csv(out / "simulation.csv",
               ["region_id", "technology", "mean_cf", "full_load_hours", "lcoe_eur_per_kwh"],
               summary)


# ---------------------------------------------------------------------------
# Stage 4: water
# ---------------------------------------------------------------------------

def stage_water(cfg: RunConfig):
    out = _stage_dir(cfg, "water", create=True)
    water_cfg = cfg.section("water")
    reference = _reference_grid(cfg)
    consumption = load_raster(cfg.path("consumption_raster"))
    scenario = YieldScenario(name=str(water_cfg["scenario"]),
                             climate=str(water_cfg["climate"]),
                             horizon=int(water_cfg["horizon"]))
    sy = sustainable_yield(reference, consumption, scenario)
    save_raster(sy, out / "sustainable_yield.asc")

    coast = load_raster(cfg.path("coast_distance_raster"))
    elevation = load_raster(cfg.path("elevation_raster"))
    params = DesalParams(
        desal_base_eur_per_m3=float(water_cfg["desal_base_eur_per_m3"]),
        pipeline_capex_eur_per_m3_km=float(water_cfg["pipeline_capex_eur_per_m3_km"]),
        pipeline_lifetime_years=int(water_cfg["pipeline_lifetime_years"]),
        pipeline_wacc=float(water_cfg["pipeline_wacc"]),
        pump_efficiency=float(water_cfg["pump_efficiency"]),
        friction_kwh_per_m3_km=float(water_cfg["friction_kwh_per_m3_km"]),
    )
    price = float(water_cfg["electricity_price_eur_per_kwh"])

    rows = []
    for region in _load_regions(cfg, reference):
        volume, mean_mm = region_water_budget(sy, region)
        rows_idx, cols_idx = region.rows_cols(reference)
        centroid = (int(round(float(rows_idx.mean()))), int(round(float(cols_idx.mean()))))
        distance_km = float(coast.cells[centroid])
        elev_m = max(0.0, float(elevation.cells[centroid]))
        desal = desal_transport_cost(distance_km, elev_m, price, params)
        rows.append([
            region.id, region.country_code, mean_mm, volume,
            float(water_cfg["groundwater_cost_eur_per_m3"]), desal, distance_km, elev_m,
        ])
    _write_csv(out / "water.csv",
               ["region_id", "country", "sy_mean_mm_yr", "groundwater_cap_m3",
                "groundwater_cost_eur_per_m3", "desal_cost_eur_per_m3",
                "distance_to_coast_km", "elevation_gain_m"],
               rows)


# ---------------------------------------------------------------------------
# Stage 5: optimization
# ---------------------------------------------------------------------------

def _electrolyzer_te(cfg: RunConfig) -> tuple[TechnoEconomics, float]:
    ez = cfg.section("electrolyzer")
    te = TechnoEconomics(
        technology="electrolyzer",
        year=cfg.year,
        capex_eur_per_kw=float(ez[f"capex_eur_per_kw_{cfg.year}"]),
        opex_share_per_year=float(ez["opex_share"]),
        lifetime_years=int(ez["lifetime_years"]),
        wacc=float(ez["wacc"]),
    )
    return te, float(ez[f"efficiency_kwh_per_kg_{cfg.year}"])


def _battery_option(cfg: RunConfig) -> BatteryOption | None:
    section = cfg.section("battery")
    if not section.get("enabled", True):
        return None
    year = cfg.year
    return BatteryOption(
        energy=TechnoEconomics("battery_energy", year,
                               float(section[f"energy_capex_eur_per_kwh_{year}"]),
                               float(section["opex_share"]),
                               int(section["lifetime_years"]), float(section["wacc"])),
        power=TechnoEconomics("battery_power", year,
                              float(section[f"power_capex_eur_per_kw_{year}"]),
                              float(section["opex_share"]),
                              int(section["lifetime_years"]), float(section["wacc"])),
        roundtrip_efficiency=float(section["roundtrip_efficiency"]),
    )


def _region_inputs(cfg: RunConfig, rid: str, ceilings: dict[str, float],
                   water_row: dict[str, str]) -> RegionSystemInputs:
    profile_rows = _read_csv(_stage_dir(cfg, "simulation") / "profiles" / f"{rid}.csv")
    techs = []
    for tech in sorted(ceilings):
        if tech not in profile_rows[0]:
            continue
        cf = np.array([float(r[tech]) for r in profile_rows])
        techs.append(TechnologyOption(
            name=tech,
            ceiling_mw=ceilings[tech],
            profile=GenerationProfile(np.clip(cf, 0.0, 1.0)),
            technoeconomics=_tech_te(cfg, tech),
        ))
    electrolyzer, efficiency = _electrolyzer_te(cfg)
    desal = WaterSupplyOption("desalination", float("inf"),
                              float(water_row["desal_cost_eur_per_m3"]))
    options = supply_curve(float(water_row["groundwater_cost_eur_per_m3"]),
                           float(water_row["groundwater_cap_m3"]), desal)
    return RegionSystemInputs(
        region_id=rid,
        technologies=tuple(techs),
        electrolyzer=electrolyzer,
        efficiency_kwh_per_kg=efficiency,
        water_options=tuple(options),
        water_l_per_kg=float(cfg.section("water")["water_l_per_kg"]),
        battery=_battery_option(cfg),
    )


TECH_COLUMNS = ("pv", "wind", "hydro", "geothermal")


def stage_optimization(cfg: RunConfig):
    out = _stage_dir(cfg, "optimization", create=True)
    placements = _read_csv(_stage_dir(cfg, "placement") / "placements.csv")
    water_rows = {r["region_id"]: r for r in _read_csv(_stage_dir(cfg, "water") / "water.csv")}
    eligibility = _read_csv(_stage_dir(cfg, "eligibility") / "eligibility.csv")
    areas = {r["region_id"]: float(r["land_area_km2"]) for r in eligibility}

    ceilings: dict[str, dict[str, float]] = {}
    for row in placements:
        ceilings.setdefault(row["region_id"], {})[row["technology"]] = float(row["capacity_mw"])
    region_ids = sorted(ceilings)

    def solve(rid: str):
        inputs = _region_inputs(cfg, rid, ceilings[rid], water_rows[rid])
        curve, designs = cost_potential_curve(inputs, steps=tuple(cfg.steps))
        feas = groundwater_feasible_share(curve, inputs)
        return rid, inputs, curve, designs, feas

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            solved = {r[0]: r for r in pool.map(solve, region_ids)}
    else:
        solved = {rid: solve(rid) for rid in region_ids}

    system_rows = []
    curve_rows = []
    lcoh_map: dict[str, float] = {}
    area_map: dict[str, float] = {}
    gw_map: dict[str, float] = {}
    for rid in region_ids:
        _, inputs, curve, designs, feas = solved[rid]
        for design, point, wrow in zip(designs, curve.points, feas.per_step):
            system_rows.append([
                rid, point.step, design.lcoh_eur_per_kg,
                *[design.capacities_mw.get(t, 0.0) for t in TECH_COLUMNS],
                design.electrolyzer_mw, design.battery_mwh, design.battery_mw,
                design.electrolyzer_flh, design.curtailed_share,
                wrow["water_cost_share"],
            ])
            curve_rows.append([
                rid, point.step, point.cumulative_h2_twh, point.lcoh_eur_per_kg,
                curve.max_potential_twh, feas.feasible_share,
            ])
            if abs(point.step - 0.25) < 1e-9:
                lcoh_map[rid] = design.lcoh_eur_per_kg
        area_map[rid] = max_h2_potential(inputs) * 1e3 / areas[rid]  # kWh per m2
        gw_map[rid] = feas.feasible_share

    _write_csv(out / "systems.csv",
               ["region_id", "step", "lcoh_eur_per_kg",
                *[f"capacity_mw_{t}" for t in TECH_COLUMNS],
                "electrolyzer_mw", "battery_mwh", "battery_mw",
                "electrolyzer_flh", "curtailed_share", "water_cost_share"],
               system_rows)
    _write_csv(out / "curves.csv",
               ["region_id", "step", "cumulative_h2_twh", "lcoh_eur_per_kg",
                "max_potential_twh", "gw_feasible_share"],
               curve_rows)

    boundaries = load_boundaries(cfg.path("boundaries"))
    for feature in boundaries["features"]:
        gid = str(feature["properties"]["gid"])
        feature["properties"].update({
            "lcoh_eur_per_kg_25pct": lcoh_map.get(gid),
            "h2_kwh_per_m2": area_map.get(gid),
            "gw_feasible_share": gw_map.get(gid),
        })
    with open(out / "regions.geojson", "w") as fh:
        json.dump(boundaries, fh, sort_keys=True)

    features = boundaries["features"]
    (out / "lcoh_map.svg").write_text(choropleth_svg(
        features, lcoh_map, "Levelized cost of hydrogen at 25% expansion", "EUR/kg"))
    (out / "h2_per_area_map.svg").write_text(choropleth_svg(
        features, area_map, "Hydrogen potential per area", "kWh/(a*m2)"))


# ---------------------------------------------------------------------------
# Stage 6: national curves and demand set-aside
# ---------------------------------------------------------------------------

def stage_curves(cfg: RunConfig):
    out = _stage_dir(cfg, "curves", create=True)
    curve_rows = _read_csv(_stage_dir(cfg, "optimization") / "curves.csv")
    country_rows = _read_csv(cfg.path("country_table"))
    region_cells = _read_csv(_stage_dir(cfg, "eligibility") / "region_cells.csv")
    country_of_region = {}
    for row in region_cells:
        country_of_region[row["region_id"]] = row["country"]

    by_region: dict[str, list[dict]] = {}
    for row in curve_rows:
        by_region.setdefault(row["region_id"], []).append(row)
    curves_by_country: dict[str, list[CostPotentialCurve]] = {}
    for rid, rows in sorted(by_region.items()):
        rows.sort(key=lambda r: float(r["step"]))
        points = tuple(
            CurvePoint(step=float(r["step"]),
                       cumulative_h2_twh=float(r["cumulative_h2_twh"]),
                       lcoh_eur_per_kg=float(r["lcoh_eur_per_kg"]))
            for r in rows
        )
        curve = CostPotentialCurve(region_id=rid, points=points,
                                   max_potential_twh=float(rows[-1]["max_potential_twh"]))
        curves_by_country.setdefault(country_of_region[rid], []).append(curve)

    _, efficiency = _electrolyzer_te(cfg)
    demand = {r["country"]: r for r in country_rows}
    national_rows = []
    summary_rows = []
    plot_curves = {}
    for country in sorted(curves_by_country):
        national, weighted = aggregate_national(curves_by_country[country], country=country)
        for point in national.points:
            national_rows.append([country, point.cumulative_h2_twh, point.lcoh_eur_per_kg])
        drow = demand.get(country)
        elec = float(drow["elec_demand_twh_h2eq"]) if drow else 0.0
        h2d = float(drow["h2_demand_twh"]) if drow else 0.0
        setaside = demand_set_aside(national, elec, h2d, efficiency)
        exportable_twh = setaside.exportable.max_potential_twh if setaside.exportable else 0.0
        summary_rows.append([
            country, national.max_potential_twh,
            *[weighted.get(round(s, 6), float("nan")) for s in cfg.steps],
            setaside.reserved_twh, setaside.reserved_share,
            int(setaside.over_demand), exportable_twh,
        ])
        plot_curves[country] = [(p.cumulative_h2_twh, p.lcoh_eur_per_kg)
                                for p in national.points]

    _write_csv(out / "national_curves.csv",
               ["country", "cumulative_h2_twh", "lcoh_eur_per_kg"], national_rows)
    _write_csv(out / "national_summary.csv",
               ["country", "max_potential_twh",
                *[f"lcoh_at_{s:g}" for s in cfg.steps],
                "reserved_twh", "reserved_share", "over_demand", "exportable_twh"],
               summary_rows)
    (out / "cost_potential_curves.svg").write_text(curves_svg(
        plot_curves, "National cost-potential curves",
        "cumulative hydrogen [TWh/a]", "LCOH [EUR/kg]"))

    gw_share = {}
    for row in curve_rows:
        gw_share[row["region_id"]] = float(row["gw_feasible_share"])
    boundaries = load_boundaries(cfg.path("boundaries"))
    (out / "groundwater_share_map.svg").write_text(choropleth_svg(
        boundaries["features"], gw_share,
        "Hydrogen producible from sustainable groundwater", "share of potential"))


# ---------------------------------------------------------------------------
# Stage 7: socio-economics
# ---------------------------------------------------------------------------

def stage_socio(cfg: RunConfig):
    out = _stage_dir(cfg, "socio", create=True)
    socio_dir = cfg.path("socio_dir")
    reference = _reference_grid(cfg)
    grids = {
        name: load_raster(socio_dir / f"{name}.asc")
        for name in ("electricity_access", "clean_fuel_access", "population_density",
                     "labor_force_density", "biomass_dependence", "poverty_headcount")
    }
    country_rows = _read_csv(cfg.path("country_table"))
    unemployment = {r["country"]: float(r["unemployment_rate"]) for r in country_rows}
    employment = {r["country"]: float(r["employment_factor"]) for r in country_rows}
    tags = {r["country"]: r.get("region_tag", "") for r in country_rows}
    inputs = SocioInputs(unemployment_rate=unemployment, employment_factor=employment, **grids)

    socio_cfg = cfg.section("socio")
    ae = energy_access_indicator(
        inputs, (float(socio_cfg["access_weight_electricity"]),
                 float(socio_cfg["access_weight_fuel"])))
    country_of_cell = {}
    for row in _read_csv(_stage_dir(cfg, "eligibility") / "region_cells.csv"):
        country_of_cell[int(row["cell_index"])] = row["country"]
    installable = load_raster(_stage_dir(cfg, "placement") / "capacity_pv.asc")
    dens_cells = installable.cells / np.maximum(reference.cell_areas_km2(), 1e-9)
    me = macroeconomic_indicator(inputs, country_of_cell,
                                 installable.with_cells(dens_cells))
    oe = other_effects_indicator(inputs)
    weights = tuple(float(w) for w in socio_cfg["composite_weights"])
    composite = composite_indicator(ae, me, oe, weights)

    for name, grid in (("energy_access", ae), ("macroeconomic", me),
                       ("other_effects", oe), ("composite", composite)):
        save_raster(grid, out / f"{name}.asc")

    regions = _load_regions(cfg, reference)
    pop = grids["population_density"]
    for label, indicator in (("energy_access", ae), ("macroeconomic", me)):
        rows = []
        stats = {s.country_code: s for s in regional_stats(indicator, regions)}
        for country in sorted(stats):
            s = stats[country]
            extras: list[float] = []
            if label == "energy_access":
                cells = [r for r in regions if r.country_code == country]
                access_vals = []
                dens_vals = []
                for region in cells:
                    rr, cc = region.rows_cols(reference)
                    access_vals.append(grids["electricity_access"].cells[rr, cc])
                    dens_vals.append(pop.cells[rr, cc])
                extras = [float(np.concatenate(access_vals).mean()) * 100.0,
                          float(np.concatenate(dens_vals).mean())]
            else:
                extras = [unemployment[country] * 100.0, employment[country]]
            rows.append([country, tags.get(country, ""), s.median, s.q25, s.q75,
                         s.iqr, *extras])
        extra_header = (["access_avg_pct", "density_avg_c_km2"] if label == "energy_access"
                        else ["unemployment_pct", "employment_factor_job_mwp"])
        _write_csv(out / f"{label}_stats.csv",
                   ["country", "region_tag", "median", "q25", "q75", "iqr", *extra_header],
                   rows)

    comp_stats = regional_stats(composite, regions)
    _write_csv(out / "composite_stats.csv",
               ["country", "median", "q25", "q75", "iqr"],
               [[s.country_code, s.median, s.q25, s.q75, s.iqr] for s in comp_stats])

    values = {}
    for region in regions:
        rr, cc = region.rows_cols(reference)
        vals = composite.cells[rr, cc]
        vals = vals[vals != composite.nodata]
        values[region.id] = float(np.median(vals)) if vals.size else float("nan")
    boundaries = load_boundaries(cfg.path("boundaries"))
    (out / "composite_map.svg").write_text(choropleth_svg(
        boundaries["features"], values, "Socio-economic composite indicator", "score 0-100"))


def stage_report(cfg: RunConfig):
    """Collect the rendered figures from the stage directories into report/."""
    out = cfg.output_dir / "report"
    out.mkdir(parents=True, exist_ok=True)
    sources = [
        _stage_dir(cfg, "optimization") / "lcoh_map.svg",
        _stage_dir(cfg, "optimization") / "h2_per_area_map.svg",
        _stage_dir(cfg, "curves") / "cost_potential_curves.svg",
        _stage_dir(cfg, "curves") / "groundwater_share_map.svg",
        _stage_dir(cfg, "socio") / "composite_map.svg",
    ]
    for src in sources:
        if not src.exists():
            raise StageError("report", f"missing upstream figure {src}")
        shutil.copyfile(src, out / src.name)


STAGE_FUNCS = {
    "eligibility": stage_eligibility,
    "placement": stage_placement,
    "simulation": stage_simulation,
    "water": stage_water,
    "optimization": stage_optimization,
    "curves": stage_curves,
    "socio": stage_socio,
}


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(cfg: RunConfig, config_path: Path) -> Path:
    stages = {}
    for stage, dirname in STAGE_DIRS.items():
        stage_dir = cfg.output_dir / dirname
        if not stage_dir.exists():
            continue
        files = {}
        for path in sorted(stage_dir.rglob("*")):
            if path.is_file():
                files[str(path.relative_to(stage_dir))] = _sha256(path)
        stages[dirname] = files
    report_dir = cfg.output_dir / "report"
    report = {}
    if report_dir.exists():
        report = {p.name: _sha256(p) for p in sorted(report_dir.glob("*")) if p.is_file()}
    manifest = {
        "version": __version__,
        "config_sha256": _sha256(config_path),
        "stages": stages,
        "report": report,
    }
    path = cfg.output_dir / "manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)
    return path


def run_stage(cfg: RunConfig, stage: str):
    """Run one stage; on failure move its partial outputs under failed/."""
    func = STAGE_FUNCS[stage]
    stage_dir = _stage_dir(cfg, stage)
    try:
        func(cfg)
    except Exception as err:
        if stage_dir.exists():
            failed = cfg.output_dir / "failed" / stage_dir.name
            failed.parent.mkdir(parents=True, exist_ok=True)
            if failed.exists():
                shutil.rmtree(failed)
            shutil.move(str(stage_dir), str(failed))
        raise StageError(stage, str(err)) from err


def run_pipeline(cfg: RunConfig, config_path: Path) -> Path:
    """Execute every stage in order, collect the report, write the manifest."""
    for stage in STAGE_ORDER:
        run_stage(cfg, stage)
    stage_report(cfg)
    return write_manifest(cfg, config_path)
