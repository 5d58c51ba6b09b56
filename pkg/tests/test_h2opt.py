import numpy as np
import pytest

from oracles import grid_search_design, min_electrolyzer_for_target

from h2map.errors import ConfigError, InfeasibleTargetError
from h2map.h2opt import (
    EXPANSION_STEPS,
    LHV_KWH_PER_KG,
    BatteryOption,
    CostPotentialCurve,
    CurvePoint,
    RegionSystemInputs,
    TechnologyOption,
    aggregate_national,
    cost_potential_curve,
    default_battery,
    demand_set_aside,
    evaluate_design,
    groundwater_feasible_share,
    h2_kg_from_twh,
    h2_twh_from_kg,
    max_h2_potential,
    optimize_system,
    reconstruct_dispatch,
)
from h2map.res_sim import GenerationProfile, TechnoEconomics
from h2map.water import WaterSupplyOption

T = 8760
HOURS = np.arange(T)


def solar_profile(scale=1.0, seasonal=0.25):
    cf = np.clip(np.sin((HOURS % 24 - 6) / 12 * np.pi), 0, None)
    cf = cf * (0.75 + seasonal * np.sin(HOURS / T * 2 * np.pi)) * scale
    return GenerationProfile(np.clip(cf, 0, 1))


def wind_profile(mean=0.5, seed=1, night_heavy=True):
    rng = np.random.default_rng(seed)
    base = mean + 0.25 * np.sin(HOURS / 96 * 2 * np.pi + 1.3)
    if night_heavy:
        base = base + 0.18 * np.cos((HOURS % 24) / 24 * 2 * np.pi)
    cf = np.clip(base + 0.12 * rng.standard_normal(T), 0, 1)
    return GenerationProfile(cf)


def te(tech, capex, opex=0.02, life=25, wacc=0.08, year=2030):
    return TechnoEconomics(tech, year, capex, opex, life, wacc)


def desal_only(cost=1.2):
    return (WaterSupplyOption("desalination", float("inf"), cost),)


def make_inputs(techs, efficiency=48.0, water=None, battery=None, region="R"):
    return RegionSystemInputs(
        region_id=region,
        technologies=tuple(techs),
        electrolyzer=te("electrolyzer", 500.0, opex=0.03, life=20),
        efficiency_kwh_per_kg=efficiency,
        water_options=water or desal_only(),
        battery=battery,
    )


class TestMaxPotential:
    def test_generation_scale_anchor(self):
        # fleet generating 81 946 TWh/a at a conversion ratio of 0.699
        cf = GenerationProfile(np.full(T, 0.5))
        ceiling = 81_946e6 / (0.5 * T)  # MW
        eff = LHV_KWH_PER_KG / 0.699
        inputs = make_inputs([TechnologyOption("wind", ceiling, cf, te("wind", 1100.0))],
                             efficiency=eff)
        assert max_h2_potential(inputs) == pytest.approx(57_272, rel=2e-4)

    def test_zero_ceilings(self):
        inputs = make_inputs([TechnologyOption("pv", 0.0, solar_profile(), te("pv", 420.0))])
        assert max_h2_potential(inputs) == 0.0

    def test_single_tech_arithmetic(self):
        cf = GenerationProfile(np.full(T, 0.25))
        inputs = make_inputs([TechnologyOption("pv", 100.0, cf, te("pv", 420.0))],
                             efficiency=LHV_KWH_PER_KG / 0.7)
        # 100 MW * 0.25 * 8760 h * 0.7 = 153.3 GWh
        assert max_h2_potential(inputs) == pytest.approx(0.1533, rel=1e-9)


class TestOptimizeSystem:
    def test_flat_profile_closed_form(self):
        flat = GenerationProfile(np.ones(T))
        gen_te = te("flat", 800.0)
        inputs = make_inputs([TechnologyOption("flat", 10.0, flat, gen_te)])
        target_kg = 4000.0 * 1000.0 / 48.0  # 4000 MWh as hydrogen
        design = optimize_system(inputs, target_kg)
        expected_mw = 4000.0 / 8760.0
        assert design.capacities_mw["flat"] == pytest.approx(expected_mw, rel=1e-6)
        assert design.electrolyzer_mw == pytest.approx(expected_mw, rel=1e-6)
        assert design.electrolyzer_flh == pytest.approx(8760.0, rel=1e-6)
        fixed = expected_mw * (gen_te.annual_cost_eur_per_mw()
                               + inputs.electrolyzer.annual_cost_eur_per_mw())
        water = 1.2 * target_kg * 10.0 / 1000.0
        assert design.annual_cost_eur == pytest.approx(fixed + water, rel=1e-6)

    def test_energy_identity_and_balance(self):
        inputs = make_inputs([
            TechnologyOption("pv", 400.0, solar_profile(), te("pv", 420.0)),
            TechnologyOption("wind", 300.0, wind_profile(), te("wind", 1250.0, opex=0.025)),
        ])
        h2 = h2_kg_from_twh(0.25 * max_h2_potential(inputs))
        design = optimize_system(inputs, h2)
        assert design.annual_energy_mwh == pytest.approx(h2 * 48.0 / 1000.0, rel=1e-9)
        gen, intake, curt = reconstruct_dispatch(inputs, design)
        assert float(intake.sum()) == pytest.approx(design.annual_energy_mwh, rel=1e-9)
        np.testing.assert_allclose(gen, intake + curt, rtol=0, atol=1e-9)
        assert np.all(curt >= -1e-9)
        assert np.all(intake <= design.electrolyzer_mw * (1 + 1e-9))

    def test_matches_grid_search_oracle_small(self):
        rng = np.random.default_rng(5)
        for trial in range(4):
            n_tech = rng.integers(1, 4)
            techs = []
            for i in range(n_tech):
                kind = rng.choice(["solar", "wind"])
                prof = solar_profile(scale=rng.uniform(0.7, 1.0)) if kind == "solar" \
                    else wind_profile(mean=rng.uniform(0.3, 0.55), seed=int(rng.integers(1e6)))
                techs.append(TechnologyOption(
                    f"t{i}", float(rng.uniform(50, 400)), prof,
                    te(f"t{i}", float(rng.uniform(350, 1600))),
                ))
            inputs = make_inputs(techs)
            h2 = h2_kg_from_twh(rng.uniform(0.1, 0.6) * max_h2_potential(inputs))
            design = optimize_system(inputs, h2)
            cf = np.vstack([t.profile.capacity_factor for t in techs])
            best = grid_search_design(
                cf, np.array([t.ceiling_mw for t in techs]),
                np.array([t.annual_cost_per_mw() for t in techs]),
                inputs.electrolyzer.annual_cost_eur_per_mw(),
                inputs.horizon_target_mwh(h2),
            )
            water = design.annual_cost_eur * design.water_cost_share
            oracle_cost = best[2] + water
            assert design.annual_cost_eur <= oracle_cost * (1 + 5e-3)
            assert abs(design.annual_cost_eur - oracle_cost) <= 5e-3 * oracle_cost

    def test_cost_dominates_random_feasible_designs(self):
        rng = np.random.default_rng(9)
        techs = [
            TechnologyOption("pv", 300.0, solar_profile(), te("pv", 420.0)),
            TechnologyOption("wind", 250.0, wind_profile(seed=3), te("wind", 1250.0)),
        ]
        inputs = make_inputs(techs)
        h2 = h2_kg_from_twh(0.3 * max_h2_potential(inputs))
        design = optimize_system(inputs, h2)
        cf = np.vstack([t.profile.capacity_factor for t in techs])
        target = inputs.horizon_target_mwh(h2)
        checked = 0
        while checked < 100:
            caps = rng.uniform(0, [300.0, 250.0])
            e = min_electrolyzer_for_target(caps @ cf, target)
            if e is None:
                continue
            cost = evaluate_design(inputs, {"pv": caps[0], "wind": caps[1]}, e * 1.0000001, h2)
            if cost is None:
                continue
            assert design.annual_cost_eur <= cost * (1 + 1e-9)
            checked += 1

    def test_battery_zero_at_default_costs(self):
        inputs = make_inputs(
            [TechnologyOption("pv", 400.0, solar_profile(), te("pv", 420.0)),
             TechnologyOption("wind", 300.0, wind_profile(), te("wind", 1250.0))],
            battery=default_battery(2030),
        )
        h2 = h2_kg_from_twh(0.25 * max_h2_potential(inputs))
        design = optimize_system(inputs, h2)
        assert design.battery_mwh == 0.0
        assert design.battery_mw == 0.0

    def test_cheap_battery_triggers_escalation(self):
        # short horizon keeps the full LP fast; storage at junk prices must
        # enter the design for a day/night solar system
        t = 240
        day = np.clip(np.sin((np.arange(t) % 24 - 6) / 12 * np.pi), 0, None)
        techs = [TechnologyOption("pv", 50.0, GenerationProfile(day), te("pv", 900.0))]
        cheap = BatteryOption(
            energy=TechnoEconomics("battery_energy", 2030, 1.0, 0.0, 20, 0.08),
            power=TechnoEconomics("battery_power", 2030, 1.0, 0.0, 20, 0.08),
        )
        inputs = make_inputs(techs, battery=cheap)
        h2 = h2_kg_from_twh(0.5 * max_h2_potential(inputs))
        design = optimize_system(inputs, h2)
        assert design.battery_mwh > 1e-3
        # and the battery design must be at least as cheap as the best
        # battery-free alternative
        free = optimize_system(inputs, h2, strategy="convex")
        assert design.annual_cost_eur <= free.annual_cost_eur * (1 + 1e-9)

    def test_infeasible_target_reports_ceiling(self):
        inputs = make_inputs([TechnologyOption("pv", 10.0, solar_profile(), te("pv", 420.0))])
        too_much = h2_kg_from_twh(1.5 * max_h2_potential(inputs))
        with pytest.raises(InfeasibleTargetError) as err:
            optimize_system(inputs, too_much)
        assert err.value.binding == "pv"
        assert err.value.max_h2_kg > 0

    def test_hybrid_beats_single_technology(self):
        solar = solar_profile()
        wind = wind_profile(mean=0.52, night_heavy=True, seed=8)
        pv_te = te("pv", 420.0)
        wind_te = te("wind", 1250.0, opex=0.025)
        both = make_inputs([
            TechnologyOption("pv", 5000.0, solar, pv_te),
            TechnologyOption("wind", 5000.0, wind, wind_te),
        ])
        h2 = h2_kg_from_twh(0.25 * max_h2_potential(both))
        mixed = optimize_system(both, h2)
        solar_only = optimize_system(
            make_inputs([TechnologyOption("pv", 50000.0, solar, pv_te)]), h2)
        wind_only = optimize_system(
            make_inputs([TechnologyOption("wind", 50000.0, wind, wind_te)]), h2)
        assert mixed.lcoh_eur_per_kg < solar_only.lcoh_eur_per_kg
        assert mixed.lcoh_eur_per_kg < wind_only.lcoh_eur_per_kg

    def test_year_monotonicity(self):
        solar = solar_profile()
        wind = wind_profile(seed=2)
        def build(year, pv_capex, wind_capex, ez_capex, eff):
            return RegionSystemInputs(
                region_id="R",
                technologies=(
                    TechnologyOption("pv", 400.0, solar, te("pv", pv_capex, year=year)),
                    TechnologyOption("wind", 300.0, wind, te("wind", wind_capex, year=year)),
                ),
                electrolyzer=te("electrolyzer", ez_capex, opex=0.03, life=20, year=year),
                efficiency_kwh_per_kg=eff,
                water_options=desal_only(),
            )
        now = build(2030, 420.0, 1250.0, 500.0, 48.0)
        future = build(2050, 300.0, 1100.0, 300.0, 44.0)
        for step in (0.1, 0.25, 0.5, 1.0):
            h2_now = h2_kg_from_twh(step * max_h2_potential(now))
            h2_future = h2_kg_from_twh(step * max_h2_potential(future))
            lcoh_now = optimize_system(now, h2_now).lcoh_eur_per_kg
            lcoh_future = optimize_system(future, h2_future).lcoh_eur_per_kg
            assert lcoh_future <= lcoh_now + 1e-9

    def test_convex_path_matches_full_lp(self):
        # short horizon keeps the LP cheap; both strategies must agree on the
        # battery-free optimum
        t = 336
        h = np.arange(t)
        day = np.clip(np.sin((h % 24 - 6) / 12 * np.pi), 0, None) * 0.8
        breeze = np.clip(0.45 + 0.25 * np.cos(h / 24 * 2 * np.pi), 0, 1)
        techs = [
            TechnologyOption("pv", 80.0, GenerationProfile(day), te("pv", 420.0)),
            TechnologyOption("wind", 60.0, GenerationProfile(breeze),
                             te("wind", 1250.0, opex=0.025)),
        ]
        inputs = make_inputs(techs)
        h2 = h2_kg_from_twh(0.4 * max_h2_potential(inputs))
        convex = optimize_system(inputs, h2, strategy="convex")
        lp = optimize_system(inputs, h2, strategy="lp")
        assert lp.annual_cost_eur == pytest.approx(convex.annual_cost_eur, rel=1e-6)
        assert lp.battery_mwh == pytest.approx(0.0, abs=1e-6)

    def test_fractional_year_horizon_annualizes(self):
        # a one-week horizon still reports annual quantities consistently
        t = 168
        flat = GenerationProfile(np.ones(t))
        inputs = make_inputs([TechnologyOption("flat", 10.0, flat, te("flat", 800.0))])
        h2_annual = 4000.0 * 1000.0 / 48.0
        design = optimize_system(inputs, h2_annual)
        assert design.annual_energy_mwh == pytest.approx(4000.0, rel=1e-9)
        assert design.electrolyzer_flh == pytest.approx(8760.0, rel=1e-6)
        assert design.capacities_mw["flat"] == pytest.approx(4000.0 / 8760.0, rel=1e-6)

    def test_dispatchable_geothermal(self):
        from h2map.res_sim import geothermal_profile
        geo = TechnologyOption("geothermal", 100.0, geothermal_profile(0.9),
                               te("geothermal", 4500.0, opex=0.03, life=30),
                               dispatchable=True)
        inputs = make_inputs([geo])
        h2 = h2_kg_from_twh(0.5 * max_h2_potential(inputs))
        design = optimize_system(inputs, h2)
        gen, intake, curt = reconstruct_dispatch(inputs, design)
        # dispatchable fleets run only to fill the electrolyzer, nothing spills
        assert float(curt.sum()) == pytest.approx(0.0, abs=1e-6)
        assert design.electrolyzer_flh <= 8760.0 + 1e-9


class TestCostPotentialCurve:
    def make(self):
        return make_inputs([
            TechnologyOption("pv", 300.0, solar_profile(), te("pv", 420.0)),
            TechnologyOption("wind", 200.0, wind_profile(seed=4), te("wind", 1250.0)),
        ])

    def test_default_steps_monotone(self):
        curve, designs = cost_potential_curve(self.make())
        steps = [p.step for p in curve.points]
        assert steps == list(EXPANSION_STEPS)
        qs = [p.cumulative_h2_twh for p in curve.points]
        assert all(b > a for a, b in zip(qs, qs[1:]))
        costs = [p.lcoh_eur_per_kg for p in curve.points]
        assert all(b >= a * (1 - 1e-9) for a, b in zip(costs, costs[1:]))
        assert len(designs) == len(EXPANSION_STEPS)

    def test_single_step_closed_form(self):
        flat = GenerationProfile(np.ones(T))
        gen_te = te("flat", 800.0)
        inputs = make_inputs([TechnologyOption("flat", 10.0, flat, gen_te)])
        curve, _ = cost_potential_curve(inputs, steps=(0.25,))
        max_twh = max_h2_potential(inputs)
        h2_kg = h2_kg_from_twh(0.25 * max_twh)
        mw = inputs.horizon_target_mwh(h2_kg) / T
        fixed = mw * (gen_te.annual_cost_eur_per_mw()
                      + inputs.electrolyzer.annual_cost_eur_per_mw())
        water = 1.2 * h2_kg * 10.0 / 1000.0
        assert curve.points[0].lcoh_eur_per_kg == pytest.approx((fixed + water) / h2_kg, rel=1e-6)

    def test_invalid_steps(self):
        with pytest.raises(ConfigError):
            cost_potential_curve(self.make(), steps=(0.5, 0.25))
        with pytest.raises(ConfigError):
            cost_potential_curve(self.make(), steps=(0.0, 0.5))
        with pytest.raises(ConfigError):
            cost_potential_curve(self.make(), steps=(0.5, 1.5))


class TestGroundwaterShare:
    def curve_inputs(self, cap_m3, gw_cost=0.3, desal_cost=2.5):
        water = [WaterSupplyOption("desalination", float("inf"), desal_cost)]
        if cap_m3 > 0:
            water.append(WaterSupplyOption("groundwater", cap_m3, gw_cost))
        inputs = make_inputs(
            [TechnologyOption("pv", 300.0, solar_profile(), te("pv", 420.0))],
            water=tuple(sorted(water, key=lambda o: o.cost_eur_per_m3)),
        )
        curve, _ = cost_potential_curve(inputs, steps=(0.1, 0.25, 0.5, 1.0))
        return curve, inputs

    def test_zero_cap(self):
        curve, inputs = self.curve_inputs(0.0)
        feas = groundwater_feasible_share(curve, inputs)
        assert feas.feasible_share == 0.0
        assert all(r["groundwater_m3"] == 0.0 for r in feas.per_step)

    def test_full_cap(self):
        curve, inputs = self.curve_inputs(1e15)
        feas = groundwater_feasible_share(curve, inputs)
        assert feas.feasible_share == 1.0

    def test_partial_cap_picks_largest_covered_step(self):
        curve, inputs = self.curve_inputs(0.0)
        demand_at_half = h2_kg_from_twh(curve.points[2].cumulative_h2_twh) * 10.0 / 1000.0
        curve2, inputs2 = self.curve_inputs(demand_at_half * 1.01)
        feas = groundwater_feasible_share(curve2, inputs2)
        assert feas.feasible_share == 0.5


class TestDemandSetAside:
    def flat_curve(self, total=100.0, cost=2.0, n=4):
        pts = tuple(
            CurvePoint(step=(i + 1) / n, cumulative_h2_twh=total * (i + 1) / n,
                       lcoh_eur_per_kg=cost + 0.1 * i)
            for i in range(n)
        )
        return CostPotentialCurve(region_id="CN", points=pts, max_potential_twh=total)

    def test_worked_example_52_percent(self):
        curve = self.flat_curve(total=100.0)
        res = demand_set_aside(curve, 33.0, 19.0, 48.0, elec_is_h2_equivalent=True)
        assert res.reserved_twh == pytest.approx(52.0)
        assert res.reserved_share == pytest.approx(0.52)
        assert not res.over_demand
        assert res.exportable.max_potential_twh == pytest.approx(48.0)

    def test_guinea_style_over_demand(self):
        curve = self.flat_curve(total=25.0)
        res = demand_set_aside(curve, 33.0, 3.2, 48.0)
        assert res.over_demand
        assert res.reserved_share == pytest.approx((33.0 + 3.2) / 25.0, rel=1e-12)
        assert res.exportable is None

    def test_zero_demands_identity(self):
        curve = self.flat_curve()
        res = demand_set_aside(curve, 0.0, 0.0, 48.0)
        assert res.reserved_twh == 0.0
        assert res.exportable is curve

    def test_reserved_taken_from_cheap_end(self):
        curve = self.flat_curve(total=100.0, cost=2.0, n=4)
        res = demand_set_aside(curve, 30.0, 0.0, 48.0)
        # the 25 TWh at 2.0 disappear entirely, 5 TWh at 2.1 partially
        assert res.exportable.segments()[0][1] == pytest.approx(2.1)
        assert res.exportable.max_potential_twh == pytest.approx(70.0)

    def test_electricity_conversion_when_not_h2_equivalent(self):
        curve = self.flat_curve(total=100.0)
        res = demand_set_aside(curve, 10.0, 0.0, 48.0, elec_is_h2_equivalent=False)
        assert res.reserved_twh == pytest.approx(10.0 * LHV_KWH_PER_KG / 48.0)


class TestAggregateNational:
    def region_curve(self, rid, lcohs, total=10.0):
        n = len(lcohs)
        pts = tuple(
            CurvePoint(step=(i + 1) / n, cumulative_h2_twh=total * (i + 1) / n,
                       lcoh_eur_per_kg=c)
            for i, c in enumerate(lcohs)
        )
        return CostPotentialCurve(region_id=rid, points=pts, max_potential_twh=total)

    def test_single_region_identity(self):
        c = self.region_curve("A", [2.0, 2.2, 2.5])
        national, weighted = aggregate_national([c], country="X")
        assert national.max_potential_twh == pytest.approx(10.0)
        assert [round(s[1], 9) for s in national.segments()] == [2.0, 2.2, 2.5]
        assert weighted[round(1 / 3, 6)] == pytest.approx(2.0)

    def test_equal_potentials_mean(self):
        a = self.region_curve("A", [2.0], total=10.0)
        b = self.region_curve("B", [3.0], total=10.0)
        _, weighted = aggregate_national([a, b], country="X")
        assert weighted[1.0] == pytest.approx(2.5)

    def test_three_region_pooling_oracle(self):
        rng = np.random.default_rng(14)
        curves = []
        pooled = []
        for rid in ("A", "B", "C"):
            lcohs = np.sort(rng.uniform(1.5, 3.5, 4))
            total = float(rng.uniform(5, 20))
            curves.append(self.region_curve(rid, list(lcohs), total=total))
            prev = 0.0
            for p in curves[-1].points:
                pooled.append((p.cumulative_h2_twh - prev, p.lcoh_eur_per_kg))
                prev = p.cumulative_h2_twh
        national, _ = aggregate_national(curves, country="X")
        pooled.sort(key=lambda s: s[1])
        want_cum = np.cumsum([q for q, _ in pooled])
        got = national.points
        np.testing.assert_allclose([p.cumulative_h2_twh for p in got], want_cum, rtol=1e-12)
        assert [p.lcoh_eur_per_kg for p in got] == [c for _, c in pooled]


class TestConversions:
    def test_round_trip(self):
        assert h2_kg_from_twh(h2_twh_from_kg(123456.0)) == pytest.approx(123456.0, rel=1e-12)

    def test_efficiency_floor(self):
        with pytest.raises(ConfigError, match="floor"):
            make_inputs(
                [TechnologyOption("pv", 1.0, solar_profile(), te("pv", 400.0))],
                efficiency=30.0,
            )
