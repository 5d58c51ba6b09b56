"""Per-region cost-minimal hydrogen system design and cost-potential curves.

Each region is an islanded system: renewable fleets feed a PEM electrolyzer,
optionally buffered by a battery, and must deliver a fixed annual hydrogen
quantity with free intra-year timing. The optimization minimizes annuitized
capex plus fixed O&M plus water cost subject to the hourly energy balance,
per-technology capacity ceilings and the electrolyzer rating.

Solver notes. Without a battery the problem collapses to a small convex
program: annual deliverable energy sum_t min(gen_t, E) is concave in the
capacity vector, so a cutting-plane loop over (capacities, electrolyzer)
finds the exact optimum in milliseconds. Batteries are screened on a reduced
chronological horizon with the full hourly linear program; only when the
screen sizes a battery does the solver escalate to the full-year LP. At
default battery costs the screen never triggers, matching the observation
that storage loses to overbuilt generation for annual-quantity targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .errors import ConfigError, InfeasibleTargetError
from .res_sim import HOURS_PER_YEAR, GenerationProfile, TechnoEconomics
from .water import WaterSupplyOption, blended_water_cost, water_sourcing

LHV_KWH_PER_KG = 33.33

EXPANSION_STEPS = (0.01, 0.05, 0.10, 0.25, 0.50, 0.75, 1.00)


@dataclass(frozen=True)
class TechnologyOption:
    """One renewable fleet a region may build, up to its ceiling."""

    name: str
    ceiling_mw: float
    profile: GenerationProfile
    technoeconomics: TechnoEconomics
    dispatchable: bool = False

    def __post_init__(self):
        if self.ceiling_mw < 0:
            raise ConfigError(f"{self.name}: capacity ceiling must be non-negative")

    def annual_cost_per_mw(self) -> float:
        return self.technoeconomics.annual_cost_eur_per_mw()


@dataclass(frozen=True)
class BatteryOption:
    """Storage offer split into an energy and a power cost component."""

    energy: TechnoEconomics  # capex per kWh of storage
    power: TechnoEconomics  # capex per kW of charge/discharge rating
    roundtrip_efficiency: float = 0.92

    def __post_init__(self):
        if not 0 < self.roundtrip_efficiency <= 1:
            raise ConfigError("round-trip efficiency must lie in (0, 1]")

    def one_way_efficiency(self) -> float:
        return math.sqrt(self.roundtrip_efficiency)

    def annual_cost_per_mwh(self) -> float:
        return self.energy.annual_cost_eur_per_mw()  # per-kWh capex scales to per-MWh

    def annual_cost_per_mw(self) -> float:
        return self.power.annual_cost_eur_per_mw()


def default_battery(year: int = 2030) -> BatteryOption:
    capex_e = {2030: 180.0, 2050: 100.0}[year]
    capex_p = {2030: 160.0, 2050: 100.0}[year]
    return BatteryOption(
        energy=TechnoEconomics("battery_energy", year, capex_e, 0.02, 15, 0.08),
        power=TechnoEconomics("battery_power", year, capex_p, 0.02, 15, 0.08),
    )


@dataclass(frozen=True)
class RegionSystemInputs:
    """Everything one regional optimization needs."""

    region_id: str
    technologies: tuple[TechnologyOption, ...]
    electrolyzer: TechnoEconomics
    efficiency_kwh_per_kg: float
    water_options: tuple[WaterSupplyOption, ...]
    water_l_per_kg: float = 10.0
    battery: BatteryOption | None = None

    def __post_init__(self):
        if self.efficiency_kwh_per_kg < LHV_KWH_PER_KG:
            raise ConfigError(
                f"electrolyzer efficiency below the {LHV_KWH_PER_KG} kWh/kg heating-value floor"
            )
        if not self.technologies:
            raise ConfigError("at least one technology required")
        hours = {t.profile.hours for t in self.technologies}
        if len(hours) != 1:
            raise ConfigError("technology profiles must share one horizon")
        object.__setattr__(self, "technologies", tuple(self.technologies))
        object.__setattr__(self, "water_options", tuple(self.water_options))

    @property
    def hours(self) -> int:
        return self.technologies[0].profile.hours

    def h2_kg_per_mwh(self) -> float:
        return 1000.0 / self.efficiency_kwh_per_kg

    def target_mwh(self, h2_target_kg: float) -> float:
        """Annual electrolyzer intake for an annual hydrogen quantity."""
        return h2_target_kg * self.efficiency_kwh_per_kg / 1000.0

    def horizon_target_mwh(self, h2_target_kg: float) -> float:
        """Intake summed over the whole (possibly multi-year) profile horizon."""
        return self.target_mwh(h2_target_kg) * self.hours / HOURS_PER_YEAR

    def water_demand_m3(self, h2_kg: float) -> float:
        return h2_kg * self.water_l_per_kg / 1000.0

    def groundwater_cap_m3(self) -> float:
        return sum(o.annual_volume_m3 for o in self.water_options
                   if o.kind == "groundwater" and math.isfinite(o.annual_volume_m3))


@dataclass(frozen=True)
class SystemDesign:
    """Optimized capacities and annual operation summary for one target."""

    region_id: str
    capacities_mw: dict[str, float]
    electrolyzer_mw: float
    battery_mwh: float
    battery_mw: float
    annual_h2_kg: float
    electrolyzer_flh: float
    curtailed_share: float
    water_cost_share: float
    lcoh_eur_per_kg: float
    annual_cost_eur: float
    annual_energy_mwh: float

    def __post_init__(self):
        if self.electrolyzer_flh > HOURS_PER_YEAR + 1e-6:
            raise ValueError("electrolyzer full-load hours exceed the year")
        if not 0.0 <= self.curtailed_share < 1.0 + 1e-12:
            raise ValueError("curtailed share out of range")


@dataclass(frozen=True)
class CurvePoint:
    step: float
    cumulative_h2_twh: float
    lcoh_eur_per_kg: float


@dataclass(frozen=True)
class CostPotentialCurve:
    """Ordered cost-quantity points for one region or one country."""

    region_id: str
    points: tuple[CurvePoint, ...]
    max_potential_twh: float
    groundwater_feasible_share: float = float("nan")
    reserved_for_demand_twh: float = 0.0

    def __post_init__(self):
        qs = [p.cumulative_h2_twh for p in self.points]
        if any(b <= a for a, b in zip(qs, qs[1:])):
            raise ValueError("curve quantities must increase strictly")
        costs = [p.lcoh_eur_per_kg for p in self.points]
        if any(b < a * (1 - 1e-7) - 1e-12 for a, b in zip(costs, costs[1:])):
            raise ValueError("curve cost must be non-decreasing")
        object.__setattr__(self, "points", tuple(self.points))

    def segments(self) -> list[tuple[float, float]]:
        """(incremental quantity, cost at step) pairs."""
        out = []
        prev = 0.0
        for p in self.points:
            out.append((p.cumulative_h2_twh - prev, p.lcoh_eur_per_kg))
            prev = p.cumulative_h2_twh
        return out


# ---------------------------------------------------------------------------
# Potentials
# ---------------------------------------------------------------------------

def h2_twh_from_kg(h2_kg: float) -> float:
    return h2_kg * LHV_KWH_PER_KG / 1e9


def h2_kg_from_twh(h2_twh: float) -> float:
    return h2_twh * 1e9 / LHV_KWH_PER_KG


def max_h2_potential(inputs: RegionSystemInputs) -> float:
    """Hydrogen ceiling in TWh/a (heating value) with every ceiling built out.

    Full conversion of all generable electricity at the electrolyzer energy
    ratio; the electrolyzer is sized to swallow the generation peak.
    """
    gen_mwh = sum(
        t.ceiling_mw * t.profile.mean_cf * t.profile.hours for t in inputs.technologies
    )
    per_year = gen_mwh / (inputs.hours / HOURS_PER_YEAR)
    return per_year * (LHV_KWH_PER_KG / inputs.efficiency_kwh_per_kg) / 1e6


# ---------------------------------------------------------------------------
# Battery-free convex solve
# ---------------------------------------------------------------------------

def _profiles_matrix(inputs: RegionSystemInputs) -> np.ndarray:
    return np.vstack([t.profile.capacity_factor for t in inputs.technologies])


def _deliverable_mwh(gen: np.ndarray, e_cap: float) -> float:
    return float(np.minimum(gen, e_cap).sum())


def _min_electrolyzer(gen: np.ndarray, target: float) -> float | None:
    """Exact inverse of E -> sum min(gen, E); None if unreachable."""
    if target <= 0:
        return 0.0
    total = float(gen.sum())
    if total < target:
        return None
    g = np.sort(gen)
    csum = np.cumsum(g)
    n = g.size
    deliv = csum + (n - 1 - np.arange(n)) * g  # deliverable with E == g[j]
    j = int(np.searchsorted(deliv, target, side="left"))
    lo_deliv = deliv[j - 1] if j > 0 else 0.0
    lo_e = g[j - 1] if j > 0 else 0.0
    slope = n - j
    if slope <= 0:
        return float(g[-1])
    return float(lo_e + (target - lo_deliv) / slope)


@dataclass
class _ConvexSolution:
    capacities: np.ndarray
    electrolyzer_mw: float
    fixed_cost_eur: float


def _solve_batteryless(inputs: RegionSystemInputs, target_mwh: float,
                       tol: float = 1e-10, max_iter: int = 400) -> _ConvexSolution:
    """Cutting-plane minimization over (capacities, electrolyzer rating).

    Deliverable energy is concave, the objective linear, so Kelley cuts
    converge to the global optimum of the battery-free problem.
    """
    cf = _profiles_matrix(inputs)
    k, horizon = cf.shape
    ceil = np.array([t.ceiling_mw for t in inputs.technologies])
    cost_c = np.array([t.annual_cost_per_mw() for t in inputs.technologies])
    cost_e = inputs.electrolyzer.annual_cost_eur_per_mw()
    annual_per_mw = cf.sum(axis=1)  # MWh per MW over the horizon

    if target_mwh <= 0:
        return _ConvexSolution(np.zeros(k), 0.0, 0.0)

    max_gen = float(annual_per_mw @ ceil)
    if max_gen < target_mwh * (1 - 1e-12):
        raise InfeasibleTargetError(
            f"target needs {target_mwh:.6g} MWh but ceilings deliver {max_gen:.6g} MWh",
            max_h2_kg=max_gen / inputs.efficiency_kwh_per_kg * 1000.0,
            binding=max(inputs.technologies, key=lambda t: t.ceiling_mw * t.profile.mean_cf).name,
        )

    gen_full = ceil @ cf
    # the feasibility guard admits targets within rounding of the deliverable
    # total; clamp so the anchor sizing below cannot fall on the wrong side
    target_mwh = min(target_mwh, float(gen_full.sum()))
    e_anchor = _min_electrolyzer(gen_full, target_mwh)
    e_ub = float(gen_full.max())
    e_lb = target_mwh / horizon

    def g_value_grad(c: np.ndarray, e: float):
        gen = c @ cf
        unsat = gen < e
        value = float(np.minimum(gen, e).sum())
        grad_c = cf[:, unsat].sum(axis=1)
        grad_e = float(np.count_nonzero(~unsat))
        return value, np.concatenate([grad_c, [grad_e]])

    # master constraints in A x >= b form, x = (c_1..c_k, E)
    cuts_a = [np.concatenate([annual_per_mw, [0.0]])]  # energy adequacy
    cuts_b = [target_mwh]
    obj = np.concatenate([cost_c, [cost_e]])
    bounds = [(0.0, float(cl)) for cl in ceil] + [(e_lb, e_ub)]

    best_x = np.concatenate([ceil, [e_anchor]])
    best_cost = float(obj @ best_x)

    for _ in range(max_iter):
        res = linprog(obj, A_ub=-np.array(cuts_a), b_ub=-np.array(cuts_b),
                      bounds=bounds, method="highs")
        if res.status != 0:
            raise RuntimeError(f"capacity master problem failed: {res.message}")
        lb = float(res.fun)
        x_hat = res.x
        c_hat, e_hat = x_hat[:k], float(x_hat[k])
        value, grad = g_value_grad(c_hat, e_hat)
        if value >= target_mwh * (1 - 1e-12):
            cand_cost = float(obj @ x_hat)
            if cand_cost < best_cost:
                best_cost, best_x = cand_cost, x_hat.copy()
        else:
            # repair: keep capacities, size the electrolyzer exactly; scale
            # toward full build when even that cannot reach the target
            gen = c_hat @ cf
            e_fix = _min_electrolyzer(gen, target_mwh)
            if e_fix is not None:
                cand = np.concatenate([c_hat, [max(e_fix, e_lb)]])
            else:
                lam_lo, lam_hi = 0.0, 1.0
                anchor = np.concatenate([ceil, [max(e_anchor, e_hat)]])
                for _ in range(80):
                    lam = 0.5 * (lam_lo + lam_hi)
                    x_try = x_hat + lam * (anchor - x_hat)
                    v, _ = g_value_grad(x_try[:k], float(x_try[k]))
                    if v >= target_mwh:
                        lam_hi = lam
                    else:
                        lam_lo = lam
                cand = x_hat + lam_hi * (anchor - x_hat)
            cand_cost = float(obj @ cand)
            if cand_cost < best_cost:
                best_cost, best_x = cand_cost, cand.copy()
        cuts_a.append(grad)
        cuts_b.append(target_mwh - value + float(grad @ x_hat))
        if best_cost - lb <= tol * max(best_cost, 1.0):
            break
    else:
        gap = (best_cost - lb) / max(best_cost, 1.0)
        if gap > 1e-6:
            raise RuntimeError(f"capacity optimization did not converge (gap {gap:.2e})")

    return _ConvexSolution(best_x[:k].copy(), float(best_x[k]), best_cost)


# ---------------------------------------------------------------------------
# Full hourly LP (battery-aware)
# ---------------------------------------------------------------------------

def _solve_full_lp(inputs: RegionSystemInputs, target_mwh: float,
                   hour_slice: np.ndarray | None = None):
    """Hourly LP over capacities, dispatch and battery state.

    hour_slice restricts the horizon (used by the battery screen); the
    target scales with the window's share of full-build generation. Returns a
    dict of solution arrays.
    """
    cf_all = _profiles_matrix(inputs)
    ceil_all = np.array([t.ceiling_mw for t in inputs.technologies])
    if hour_slice is not None:
        cf = cf_all[:, hour_slice]
        # scale the target with the window's share of full-build generation so
        # a below-average window stays exactly as stressed as the full year
        full = float((ceil_all @ cf_all).sum())
        window = float((ceil_all @ cf).sum())
        target = target_mwh * (window / full) if full > 0 else 0.0
    else:
        cf = cf_all
        target = target_mwh
    k, horizon = cf.shape
    fixed = [i for i, t in enumerate(inputs.technologies) if not t.dispatchable]
    disp = [i for i, t in enumerate(inputs.technologies) if t.dispatchable]

    ceil = ceil_all
    cost_c = np.array([t.annual_cost_per_mw() for t in inputs.technologies])
    cost_e = inputs.electrolyzer.annual_cost_eur_per_mw()
    battery = inputs.battery
    eta = battery.one_way_efficiency() if battery else 1.0

    t_idx = np.arange(horizon)
    i_e_cap = k
    i_be, i_bp = k + 1, k + 2
    base = k + 3
    i_e = base + t_idx
    i_ch = base + horizon + t_idx
    i_dis = base + 2 * horizon + t_idx
    i_s = base + 3 * horizon + t_idx
    i_g = {}
    nv = base + 4 * horizon
    for j, tech in enumerate(disp):
        i_g[tech] = nv + j * horizon + t_idx
    nv += len(disp) * horizon

    ones = np.ones(horizon)
    rows, cols, vals = [], [], []
    row = 0

    def block(r0, col_idx, coeff):
        rows.append(t_idx + r0)
        cols.append(np.broadcast_to(col_idx, (horizon,)))
        vals.append(np.broadcast_to(coeff, (horizon,)).astype(float))

    # balance: e + ch - dis - sum_fixed cf c - sum_disp g <= 0
    block(row, i_e, ones)
    block(row, i_ch, ones)
    block(row, i_dis, -ones)
    for i in fixed:
        block(row, np.full(horizon, i), -cf[i])
    for i in disp:
        block(row, i_g[i], -ones)
    row += horizon
    # e <= E
    block(row, i_e, ones)
    block(row, np.full(horizon, i_e_cap), -ones)
    row += horizon
    # s <= Be ; ch <= Bp ; dis <= Bp
    block(row, i_s, ones)
    block(row, np.full(horizon, i_be), -ones)
    row += horizon
    block(row, i_ch, ones)
    block(row, np.full(horizon, i_bp), -ones)
    row += horizon
    block(row, i_dis, ones)
    block(row, np.full(horizon, i_bp), -ones)
    row += horizon
    # dispatchable: g <= availability * c
    for i in disp:
        block(row, i_g[i], ones)
        block(row, np.full(horizon, i), -cf[i])
        row += horizon

    A_ub = sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(row, nv),
    )
    b_ub = np.zeros(row)

    rows, cols, vals = [], [], []
    # cyclic SOC: s_t - s_{t-1} - eta*ch_t + dis_t/eta = 0
    rows += [t_idx, t_idx, t_idx, t_idx]
    cols += [i_s, i_s[(t_idx - 1) % horizon], i_ch, i_dis]
    vals += [np.ones(horizon), -np.ones(horizon),
             np.full(horizon, -eta), np.full(horizon, 1.0 / eta)]
    rows.append(np.full(horizon, horizon))
    cols.append(i_e)
    vals.append(np.ones(horizon))
    A_eq = sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(horizon + 1, nv),
    )
    b_eq = np.zeros(horizon + 1)
    b_eq[horizon] = target

    scale = horizon / HOURS_PER_YEAR  # annual fixed costs over the modeled span
    obj = np.zeros(nv)
    obj[:k] = cost_c * scale
    obj[i_e_cap] = cost_e * scale
    if battery is not None:
        obj[i_be] = battery.annual_cost_per_mwh() * scale
        obj[i_bp] = battery.annual_cost_per_mw() * scale
    bounds = [(0.0, float(cl)) for cl in ceil] + [(0.0, None)] * 3
    bounds += [(0.0, None)] * (nv - k - 3)
    if battery is None:
        bounds[i_be] = (0.0, 0.0)
        bounds[i_bp] = (0.0, 0.0)

    res = linprog(obj, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=bounds, method="highs")
    if res.status == 2:
        raise InfeasibleTargetError("hourly dispatch problem infeasible")
    if res.status != 0:
        raise RuntimeError(f"hourly dispatch problem failed: {res.message}")
    x = res.x
    sol = {
        "capacities": x[:k].copy(),
        "electrolyzer_mw": float(x[i_e_cap]),
        "battery_mwh": float(x[i_be]),
        "battery_mw": float(x[i_bp]),
        "e": x[i_e].copy(),
        "charge": x[i_ch].copy(),
        "discharge": x[i_dis].copy(),
        "dispatch": {inputs.technologies[i].name: x[i_g[i]].copy() for i in disp},
        "objective": float(res.fun),
        "horizon": horizon,
    }
    return sol


def _screen_slice(horizon: int, days: int = 21, windows: int = 7) -> np.ndarray:
    """Chronological sample of contiguous day blocks spread over the horizon."""
    n_days = horizon // 24
    if n_days <= days:
        return np.arange(horizon)
    per = max(1, days // windows)
    starts = np.linspace(0, n_days - per, windows).astype(int)
    idx = []
    for s in starts:
        idx.append(np.arange(s * 24, (s + per) * 24))
    return np.unique(np.concatenate(idx))


# ---------------------------------------------------------------------------
# Public optimizer
# ---------------------------------------------------------------------------

def evaluate_design(inputs: RegionSystemInputs, capacities_mw: dict[str, float],
                    electrolyzer_mw: float, h2_target_kg: float) -> float | None:
    """Annual cost of a battery-free candidate under greedy dispatch.

    Returns None when the design cannot deliver the target. Excess generation
    is curtailed for free, so the cost is the annuitized fixed cost plus the
    blended water cost of the target volume.
    """
    cf = _profiles_matrix(inputs)
    caps = np.array([capacities_mw.get(t.name, 0.0) for t in inputs.technologies])
    if np.any(caps < -1e-12):
        return None
    gen = caps @ cf
    target = inputs.horizon_target_mwh(h2_target_kg)
    if _deliverable_mwh(gen, electrolyzer_mw) < target * (1 - 1e-12):
        return None
    fixed = float(sum(
        caps[i] * t.annual_cost_per_mw() for i, t in enumerate(inputs.technologies)
    )) + electrolyzer_mw * inputs.electrolyzer.annual_cost_eur_per_mw()
    water = blended_water_cost(list(inputs.water_options),
                               inputs.water_demand_m3(h2_target_kg))
    return fixed + water


def reconstruct_dispatch(inputs: RegionSystemInputs, design: SystemDesign):
    """Hourly operation of a battery-free design: (generation, intake, curtailment).

    Dispatchable fleets run only to fill electrolyzer headroom, fixed-profile
    fleets generate at their capacity factor, and intake scales so its sum
    hits the design's energy exactly. The three arrays satisfy
    generation == intake + curtailment element-wise.
    """
    cf = _profiles_matrix(inputs)
    caps = np.array([design.capacities_mw.get(t.name, 0.0) for t in inputs.technologies])
    fixed_idx = [i for i, t in enumerate(inputs.technologies) if not t.dispatchable]
    disp_idx = [i for i, t in enumerate(inputs.technologies) if t.dispatchable]
    fixed_gen = caps[fixed_idx] @ cf[fixed_idx] if fixed_idx else np.zeros(cf.shape[1])
    disp_ceiling = caps[disp_idx] @ cf[disp_idx] if disp_idx else np.zeros(cf.shape[1])
    target = inputs.horizon_target_mwh(design.annual_h2_kg)
    e_raw = np.minimum(fixed_gen + disp_ceiling, design.electrolyzer_mw)
    total_raw = float(e_raw.sum())
    e = e_raw * (target / total_raw) if total_raw > 0 else e_raw
    disp_used = np.maximum(0.0, e - fixed_gen)
    generation = fixed_gen + disp_used
    return generation, e, generation - e


def optimize_system(inputs: RegionSystemInputs, h2_target_kg: float,
                    strategy: str = "auto") -> SystemDesign:
    """Cost-minimal design delivering the annual hydrogen target.

    strategy:
      auto      battery-free convex solve plus a reduced-horizon battery
                screen; escalates to the full hourly LP only when the screen
                sizes a battery (default).
      convex    battery-free convex solve only.
      lp        full hourly LP over the whole horizon.
    """
    if h2_target_kg < 0:
        raise ConfigError("hydrogen target must be non-negative")
    target_mwh = inputs.horizon_target_mwh(h2_target_kg)

    if strategy not in ("auto", "convex", "lp"):
        raise ConfigError(f"unknown strategy {strategy!r}")

    if strategy == "lp":
        return _design_from_lp(inputs, h2_target_kg, _solve_full_lp(inputs, target_mwh))

    convex = _solve_batteryless(inputs, target_mwh)
    if strategy == "auto" and inputs.battery is not None and h2_target_kg > 0:
        cf = _profiles_matrix(inputs)
        ceilings = np.array([t.ceiling_mw for t in inputs.technologies])
        max_deliverable = float((ceilings @ cf).sum())
        # near total conversion there is no ceiling headroom to feed round-trip
        # losses, so storage cannot enter and the screen would be degenerate
        if target_mwh < 0.995 * max_deliverable:
            sl = _screen_slice(inputs.hours)
            screen = _solve_full_lp(inputs, target_mwh, hour_slice=sl)
            e_scale = max(screen["electrolyzer_mw"], 1e-9)
            if (screen["battery_mwh"] > 1e-4 * e_scale
                    or screen["battery_mw"] > 1e-4 * e_scale):
                return _design_from_lp(inputs, h2_target_kg,
                                       _solve_full_lp(inputs, target_mwh))
    return _design_from_convex(inputs, h2_target_kg, convex)


def _water_cost(inputs: RegionSystemInputs, h2_kg: float) -> float:
    return blended_water_cost(list(inputs.water_options), inputs.water_demand_m3(h2_kg))


def _design_from_convex(inputs: RegionSystemInputs, h2_target_kg: float,
                        sol: _ConvexSolution) -> SystemDesign:
    cf = _profiles_matrix(inputs)
    caps = sol.capacities
    target = inputs.horizon_target_mwh(h2_target_kg)
    fixed_idx = [i for i, t in enumerate(inputs.technologies) if not t.dispatchable]
    disp_idx = [i for i, t in enumerate(inputs.technologies) if t.dispatchable]

    fixed_gen = caps[fixed_idx] @ cf[fixed_idx] if fixed_idx else np.zeros(cf.shape[1])
    disp_ceiling = caps[disp_idx] @ cf[disp_idx] if disp_idx else np.zeros(cf.shape[1])
    e_raw = np.minimum(fixed_gen + disp_ceiling, sol.electrolyzer_mw)
    total_raw = float(e_raw.sum())
    if h2_target_kg > 0 and total_raw <= 0:
        raise InfeasibleTargetError("no deliverable energy at the optimized design")
    e = e_raw * (target / total_raw) if total_raw > 0 else e_raw
    disp_used = np.maximum(0.0, e - fixed_gen)
    realized_gen = fixed_gen + disp_used
    curtailed = realized_gen - e
    gen_total = float(realized_gen.sum())
    curt_share = float(curtailed.sum() / gen_total) if gen_total > 0 else 0.0

    years = inputs.hours / HOURS_PER_YEAR
    water = _water_cost(inputs, h2_target_kg)
    annual_cost = sol.fixed_cost_eur + water
    annual_energy = target / years
    flh = (annual_energy / sol.electrolyzer_mw) if sol.electrolyzer_mw > 0 else 0.0
    return SystemDesign(
        region_id=inputs.region_id,
        capacities_mw={t.name: float(caps[i]) for i, t in enumerate(inputs.technologies)},
        electrolyzer_mw=sol.electrolyzer_mw,
        battery_mwh=0.0,
        battery_mw=0.0,
        annual_h2_kg=h2_target_kg,
        electrolyzer_flh=flh,
        curtailed_share=max(curt_share, 0.0),
        water_cost_share=water / annual_cost if annual_cost > 0 else 0.0,
        lcoh_eur_per_kg=annual_cost / h2_target_kg if h2_target_kg > 0 else 0.0,
        annual_cost_eur=annual_cost,
        annual_energy_mwh=annual_energy,
    )


def _design_from_lp(inputs: RegionSystemInputs, h2_target_kg: float, sol: dict) -> SystemDesign:
    cf = _profiles_matrix(inputs)
    caps = sol["capacities"]
    fixed_idx = [i for i, t in enumerate(inputs.technologies) if not t.dispatchable]
    fixed_gen = caps[fixed_idx] @ cf[fixed_idx] if fixed_idx else np.zeros(cf.shape[1])
    disp_gen = np.zeros(cf.shape[1])
    for series in sol["dispatch"].values():
        disp_gen += series
    realized = fixed_gen + disp_gen
    e = sol["e"]
    curtailed = realized + sol["discharge"] - sol["charge"] - e
    gen_total = float(realized.sum())

    years = inputs.hours / HOURS_PER_YEAR
    water = _water_cost(inputs, h2_target_kg)
    annual_cost = sol["objective"] / years + water
    annual_energy = inputs.target_mwh(h2_target_kg)
    e_cap = sol["electrolyzer_mw"]
    flh = (annual_energy / e_cap) if e_cap > 0 else 0.0
    return SystemDesign(
        region_id=inputs.region_id,
        capacities_mw={t.name: float(caps[i]) for i, t in enumerate(inputs.technologies)},
        electrolyzer_mw=e_cap,
        battery_mwh=sol["battery_mwh"],
        battery_mw=sol["battery_mw"],
        annual_h2_kg=h2_target_kg,
        electrolyzer_flh=flh,
        curtailed_share=max(float(curtailed.sum()) / gen_total, 0.0) if gen_total > 0 else 0.0,
        water_cost_share=water / annual_cost if annual_cost > 0 else 0.0,
        lcoh_eur_per_kg=annual_cost / h2_target_kg if h2_target_kg > 0 else 0.0,
        annual_cost_eur=annual_cost,
        annual_energy_mwh=annual_energy,
    )


# ---------------------------------------------------------------------------
# Curves, water shares, set-aside, national aggregation
# ---------------------------------------------------------------------------

def cost_potential_curve(inputs: RegionSystemInputs,
                         steps: tuple[float, ...] = EXPANSION_STEPS,
                         strategy: str = "auto") -> tuple[CostPotentialCurve, list[SystemDesign]]:
    """One optimization per expansion step of the maximum potential."""
    if any(s <= 0 or s > 1 for s in steps) or list(steps) != sorted(steps):
        raise ConfigError("steps must be sorted fractions in (0, 1]")
    max_twh = max_h2_potential(inputs)
    points = []
    designs = []
    for step in steps:
        h2_kg = h2_kg_from_twh(step * max_twh)
        design = optimize_system(inputs, h2_kg, strategy=strategy)
        designs.append(design)
        points.append(CurvePoint(
            step=step,
            cumulative_h2_twh=step * max_twh,
            lcoh_eur_per_kg=design.lcoh_eur_per_kg,
        ))
    curve = CostPotentialCurve(
        region_id=inputs.region_id, points=tuple(points), max_potential_twh=max_twh,
    )
    return curve, designs


@dataclass(frozen=True)
class WaterFeasibility:
    """Groundwater reach of a region's curve plus per-step sourcing."""

    feasible_share: float
    per_step: tuple[dict, ...]


def groundwater_feasible_share(curve: CostPotentialCurve,
                               inputs: RegionSystemInputs) -> WaterFeasibility:
    """Largest expansion step coverable from groundwater, with sourcing rows."""
    cap = inputs.groundwater_cap_m3()
    options = list(inputs.water_options)
    rows = []
    feasible = 0.0
    for p in curve.points:
        h2_kg = h2_kg_from_twh(p.cumulative_h2_twh)
        demand = inputs.water_demand_m3(h2_kg)
        sourcing = water_sourcing(options, demand)
        water_eur = blended_water_cost(options, demand) if demand > 0 else 0.0
        water_share = (water_eur / h2_kg) / p.lcoh_eur_per_kg if h2_kg > 0 else 0.0
        ok = demand <= cap + 1e-9
        if ok:
            feasible = p.step
        rows.append({
            "step": p.step,
            "water_demand_m3": demand,
            "groundwater_m3": sourcing.get("groundwater", 0.0),
            "desalination_m3": sourcing.get("desalination", 0.0),
            "water_cost_share": water_share,
            "groundwater_covers": ok,
        })
    return WaterFeasibility(feasible_share=feasible, per_step=tuple(rows))


@dataclass(frozen=True)
class SetAsideResult:
    reserved_twh: float
    reserved_share: float
    over_demand: bool
    exportable: CostPotentialCurve | None


def demand_set_aside(national_curve: CostPotentialCurve, elec_demand_twh: float,
                     h2_demand_twh: float, efficiency_kwh_per_kg: float,
                     elec_is_h2_equivalent: bool = True) -> SetAsideResult:
    """Reserve national demand from the cheap end of the curve.

    Electricity demand converts to its hydrogen-equivalent unless already
    flagged as such. Over-demand (reserved beyond the full potential) flags
    the country and leaves nothing exportable.
    """
    if elec_demand_twh < 0 or h2_demand_twh < 0:
        raise ConfigError("demands must be non-negative")
    elec_h2eq = elec_demand_twh if elec_is_h2_equivalent else (
        elec_demand_twh * LHV_KWH_PER_KG / efficiency_kwh_per_kg
    )
    reserved = elec_h2eq + h2_demand_twh
    potential = national_curve.points[-1].cumulative_h2_twh if national_curve.points else 0.0
    share = reserved / potential if potential > 0 else math.inf
    if reserved > potential:
        return SetAsideResult(reserved, share, True, None)
    if reserved == 0:
        return SetAsideResult(0.0, 0.0, False, national_curve)

    remaining = reserved
    out_points = []
    cum = 0.0
    for qty, cost in national_curve.segments():
        take = min(remaining, qty)
        remaining -= take
        left = qty - take
        if left > 1e-12:
            cum += left
            out_points.append(CurvePoint(step=float("nan"), cumulative_h2_twh=cum,
                                         lcoh_eur_per_kg=cost))
    exportable = CostPotentialCurve(
        region_id=national_curve.region_id,
        points=tuple(out_points),
        max_potential_twh=cum,
        reserved_for_demand_twh=reserved,
    ) if out_points else None
    return SetAsideResult(reserved, share, False, exportable)


def aggregate_national(curves: list[CostPotentialCurve],
                       country: str = "") -> tuple[CostPotentialCurve, dict[float, float]]:
    """Merge regional curves into a national curve plus step-wise mean LCOH.

    The national curve pools every regional (quantity, cost) segment and
    re-sorts by cost; the per-step mean weighs each region's LCOH by its
    hydrogen quantity at that step.
    """
    if not curves:
        raise ConfigError("cannot aggregate an empty list of curves")
    segments = []
    for curve in curves:
        segments.extend(curve.segments())
    segments.sort(key=lambda s: s[1])
    points = []
    cum = 0.0
    for qty, cost in segments:
        if qty <= 0:
            continue
        cum += qty
        points.append(CurvePoint(step=float("nan"), cumulative_h2_twh=cum,
                                 lcoh_eur_per_kg=cost))

    steps = sorted({round(p.step, 6) for c in curves for p in c.points if not math.isnan(p.step)})
    weighted: dict[float, float] = {}
    for step in steps:
        num = den = 0.0
        for curve in curves:
            match = [p for p in curve.points if round(p.step, 6) == step]
            if match:
                qty = match[0].cumulative_h2_twh
                num += qty * match[0].lcoh_eur_per_kg
                den += qty
        if den > 0:
            weighted[step] = num / den
    national = CostPotentialCurve(
        region_id=country or curves[0].region_id,
        points=tuple(points),
        max_potential_twh=cum,
    )
    return national, weighted
