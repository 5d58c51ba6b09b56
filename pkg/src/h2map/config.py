"""Run configuration: TOML loading, defaults and full-file validation.

The configuration is a single TOML file; every tunable that stands in for an
unpublished source parameter is a plain key with a surrogate default, so a
run is reproducible from the config alone. validate() checks the whole file
and reports every failure, not just the first.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError

SUPPORTED_YEARS = (2030, 2050)
WATER_SCENARIOS = ("conservative", "medium", "extreme")
CLIMATES = ("rcp26", "rcp85")
HORIZONS = (2020, 2030, 2050)

DEFAULTS = {
    "run": {
        "year": 2030,
        "steps": [0.01, 0.05, 0.10, 0.25, 0.50, 0.75, 1.00],
        "threads": 1,
    },
    "water": {
        "scenario": "medium",
        "climate": "rcp26",
        "horizon": 2020,
        "groundwater_cost_eur_per_m3": 0.30,
        "water_l_per_kg": 10.0,  # surrogate default
        "electricity_price_eur_per_kwh": 0.05,
        "desal_base_eur_per_m3": 0.70,
        "pipeline_capex_eur_per_m3_km": 0.011,  # surrogate default
        "pipeline_lifetime_years": 30,
        "pipeline_wacc": 0.08,
        "pump_efficiency": 0.75,
        "friction_kwh_per_m3_km": 0.004,  # surrogate default
    },
    "electrolyzer": {
        "efficiency_kwh_per_kg_2030": 48.0,  # surrogate default
        "efficiency_kwh_per_kg_2050": 44.0,  # surrogate default
        "capex_eur_per_kw_2030": 500.0,
        "capex_eur_per_kw_2050": 300.0,
        "opex_share": 0.03,
        "lifetime_years": 20,
        "wacc": 0.08,
    },
    "battery": {
        "enabled": True,
        "energy_capex_eur_per_kwh_2030": 180.0,
        "energy_capex_eur_per_kwh_2050": 100.0,
        "power_capex_eur_per_kw_2030": 160.0,
        "power_capex_eur_per_kw_2050": 100.0,
        "opex_share": 0.02,
        "lifetime_years": 15,
        "wacc": 0.08,
        "roundtrip_efficiency": 0.92,
    },
    "socio": {
        "access_weight_electricity": 0.5,  # surrogate default
        "access_weight_fuel": 0.5,  # surrogate default
        "composite_weights": [1.0, 1.0, 1.0],  # surrogate default
    },
}

TECH_DEFAULTS = {
    "pv": {
        "density_mw_per_km2": 50.0,
        "capex_eur_per_kw_2030": 420.0,
        "capex_eur_per_kw_2050": 300.0,
        "opex_share": 0.02,
        "lifetime_years": 25,
        "wacc": 0.08,
    },
    "wind": {
        "density_mw_per_km2": 7.5,
        "capex_eur_per_kw_2030": 1250.0,
        "capex_eur_per_kw_2050": 1100.0,
        "opex_share": 0.025,
        "lifetime_years": 25,
        "wacc": 0.08,
    },
    "hydro": {
        # cost constant over the years
        "capex_eur_per_kw_2030": 2500.0,
        "capex_eur_per_kw_2050": 2500.0,
        "opex_share": 0.02,
        "lifetime_years": 60,
        "wacc": 0.08,
    },
}

REQUIRED_PATH_KEYS = (
    "boundaries",
    "weather_dir",
    "recharge_raster",
    "consumption_raster",
    "coast_distance_raster",
    "elevation_raster",
    "country_table",
    "socio_dir",
)


@dataclass
class RunConfig:
    """Parsed and merged configuration with an anchor directory for paths."""

    base_dir: Path
    output_dir: Path
    raw: dict = field(repr=False, default_factory=dict)

    def section(self, name: str) -> dict:
        merged = dict(DEFAULTS.get(name, {}))
        merged.update(self.raw.get(name, {}))
        return merged

    def tech_params(self, tech: str) -> dict:
        merged = dict(TECH_DEFAULTS.get(tech, {}))
        merged.update(self.raw.get("technologies", {}).get(tech, {}))
        return merged

    def technologies(self) -> list[str]:
        listed = list(self.raw.get("technologies", {}))
        return listed or ["pv", "wind"]

    def path(self, key: str) -> Path:
        paths = self.raw.get("paths", {})
        if key not in paths:
            raise ConfigError(f"paths.{key} missing from configuration")
        return self.base_dir / str(paths[key])

    def criteria(self) -> list[dict]:
        return list(self.raw.get("criteria", []))

    @property
    def year(self) -> int:
        return int(self.section("run")["year"])

    @property
    def steps(self) -> list[float]:
        return [float(s) for s in self.section("run")["steps"]]

    @property
    def threads(self) -> int:
        return int(self.section("run")["threads"])


def load_config(path, output_dir=None, overrides: dict | None = None) -> RunConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read configuration: {err}") from err
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"{path}: invalid TOML: {err}") from err
    for section, values in (overrides or {}).items():
        raw.setdefault(section, {}).update(values)
    out = Path(output_dir) if output_dir else path.parent / "out"
    return RunConfig(base_dir=path.parent, output_dir=out, raw=raw)


def validate(cfg: RunConfig) -> list[str]:
    """Collect every configuration failure; empty list means valid."""
    failures: list[str] = []

    run = cfg.section("run")
    if run["year"] not in SUPPORTED_YEARS:
        failures.append(f"run.year must be one of {SUPPORTED_YEARS}, got {run['year']}")
    steps = run["steps"]
    if not steps:
        failures.append("run.steps must not be empty")
    if any(not (0 < float(s) <= 1) for s in steps):
        failures.append("run.steps must lie in (0,1]")
    if sorted(steps) != list(steps):
        failures.append("run.steps must be sorted ascending")
    if int(run["threads"]) < 1:
        failures.append("run.threads must be at least 1")

    water = cfg.section("water")
    if water["scenario"] not in WATER_SCENARIOS:
        failures.append(f"water.scenario must be one of {WATER_SCENARIOS}")
    if water["climate"] not in CLIMATES:
        failures.append(f"water.climate must be one of {CLIMATES}")
    if water["horizon"] not in HORIZONS:
        failures.append(f"water.horizon must be one of {HORIZONS}")
    for key in ("groundwater_cost_eur_per_m3", "water_l_per_kg", "desal_base_eur_per_m3"):
        if float(water[key]) <= 0:
            failures.append(f"water.{key} must be positive")
    if not 0 < float(water["pump_efficiency"]) <= 1:
        failures.append("water.pump_efficiency must lie in (0,1]")

    paths = cfg.raw.get("paths", {})
    for key in REQUIRED_PATH_KEYS:
        if key not in paths:
            failures.append(f"paths.{key} missing")
            continue
        raw_path = str(paths[key])
        if key == "recharge_raster":
            # the recharge path may template the scenario raster set
            raw_path = raw_path.format(climate=water["climate"], horizon=water["horizon"])
        target = cfg.base_dir / raw_path
        if not target.exists():
            failures.append(f"paths.{key}: {target} does not exist")
        elif key == "boundaries":
            try:
                with open(target) as fh:
                    collection = json.load(fh)
                if not collection.get("features"):
                    failures.append("paths.boundaries: region set is empty")
            except (OSError, ValueError) as err:
                failures.append(f"paths.boundaries: unreadable GeoJSON ({err})")

    criteria = cfg.criteria()
    seen: set[tuple[str, str]] = set()
    for i, crit in enumerate(criteria):
        label = crit.get("name", f"#{i}")
        for key in ("name", "technology", "raster", "buffer_m"):
            if key not in crit:
                failures.append(f"criteria[{label}]: missing key '{key}'")
        if "buffer_m" in crit and not (0 <= float(crit["buffer_m"]) < float("inf")):
            failures.append(f"criteria[{label}]: buffer_m must be finite and >= 0")
        if "raster" in crit and not (cfg.base_dir / str(crit["raster"])).exists():
            failures.append(f"criteria[{label}]: raster {crit['raster']} does not exist")
        key2 = (crit.get("technology", ""), crit.get("name", ""))
        if key2 in seen:
            failures.append(f"criteria[{label}]: duplicate name for {key2[0]}")
        seen.add(key2)

    battery = cfg.section("battery")
    if not 0 < float(battery["roundtrip_efficiency"]) <= 1:
        failures.append("battery.roundtrip_efficiency must lie in (0,1]")

    ez = cfg.section("electrolyzer")
    for year in SUPPORTED_YEARS:
        eff = float(ez[f"efficiency_kwh_per_kg_{year}"])
        if eff < 33.33:
            failures.append(f"electrolyzer.efficiency_kwh_per_kg_{year} below 33.33 kWh/kg")

    for tech in cfg.technologies():
        params = cfg.tech_params(tech)
        if tech in ("pv", "wind", "geothermal") and float(params.get("density_mw_per_km2", 1)) <= 0:
            failures.append(f"technologies.{tech}.density_mw_per_km2 must be positive")
        for year in SUPPORTED_YEARS:
            if float(params.get(f"capex_eur_per_kw_{year}", 1)) <= 0:
                failures.append(f"technologies.{tech}.capex_eur_per_kw_{year} must be positive")

    return failures
