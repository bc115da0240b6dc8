"""Multi-year planning layer: investment, policy constraints, objective.

Builds the full model: one dispatch block per (year, period), telescoping
investment stock equations, emissions / RPS / reserve-margin constraints on
the policy zone, and the three-part cost objective (generation, maintenance,
investment).  Solution extraction reproduces the cost decomposition from
variable values so reports can be reconciled against the solver objective.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import SystemData, capital_recovery_factor, tau
from .ev import EvCluster, add_ev_constraints
from .linmodel import LinExpr, Model, const, lsum, term
from .uc import DispatchBlock, build_block


class PlanError(ValueError):
    pass


@dataclass
class InvestmentState:
    """Per-resource yearly stock expressions and build/retire variables."""

    thermal_status: dict[str, list[LinExpr]] = field(default_factory=dict)
    thermal_build: dict[str, np.ndarray] = field(default_factory=dict)
    thermal_retire: dict[str, np.ndarray] = field(default_factory=dict)
    storage_power: dict[str, list[LinExpr]] = field(default_factory=dict)
    storage_energy: dict[str, list[LinExpr]] = field(default_factory=dict)
    storage_power_build: dict[str, np.ndarray] = field(default_factory=dict)
    storage_energy_build: dict[str, np.ndarray] = field(default_factory=dict)
    renewable_capacity: dict[str, list[LinExpr]] = field(default_factory=dict)
    renewable_build: dict[str, np.ndarray] = field(default_factory=dict)
    all_vars: list[int] = field(default_factory=list)


@dataclass
class PlanningModel:
    system: SystemData
    regime: str
    model: Model
    blocks: dict[tuple[int, int], DispatchBlock]
    inv: InvestmentState
    clusters: list[EvCluster]
    gen_cost: list[LinExpr]      # per year, weighted
    mnt_cost: list[LinExpr]
    inv_cost: list[LinExpr]
    objective: LinExpr
    inv_block_vars: list[int]    # investment + policy-credit variables

    def residual_index(self) -> list[tuple[str, int, int, int]]:
        """Stable ordering of the dualized balance rows (zone, year, period, hour)."""
        out = []
        for (yi, wi), block in sorted(self.blocks.items()):
            for z in self.system.zone_ids:
                for t in range(block.hours):
                    out.append((z, yi, wi, t))
        return out

    def slack_pairs(self) -> list[tuple[int, int]]:
        out = []
        for (yi, wi), block in sorted(self.blocks.items()):
            for z in self.system.zone_ids:
                for t in range(block.hours):
                    _, rp, rn = block.residuals[(z, t)]
                    out.append((rp, rn))
        return out

    def residual_exprs(self) -> list[LinExpr]:
        out = []
        for (yi, wi), block in sorted(self.blocks.items()):
            for z in self.system.zone_ids:
                for t in range(block.hours):
                    expr, _, _ = block.residuals[(z, t)]
                    out.append(expr)
        return out

    def residual_weights(self) -> np.ndarray:
        """Objective weight (year weight x period weight) of each balance row."""
        grid = self.system.grid
        out = []
        for (yi, wi), block in sorted(self.blocks.items()):
            w = grid.year_weights[yi] * grid.period_weights[wi]
            out.extend([w] * (len(self.system.zones) * block.hours))
        return np.array(out)


def _annualized(capital: float, rate: float, lifetime: int) -> float:
    return capital * capital_recovery_factor(rate, lifetime)


def _build_investment(system: SystemData, model: Model) -> InvestmentState:
    inv = InvestmentState()
    grid = system.grid
    ny = grid.num_years

    def track(arr):
        inv.all_vars.extend(int(i) for i in arr)
        return arr

    for u in system.thermal:
        if not u.candidate and not u.retirable:
            inv.thermal_status[u.id] = [const(float(u.planned[y])) for y in range(ny)]
            continue
        iu = track(model.add_vars(f"inv.iu.{u.id}", ny, binary=True))
        build = track(model.add_vars(f"inv.iub.{u.id}", ny, binary=True)) \
            if u.candidate else None
        retire = track(model.add_vars(f"inv.iur.{u.id}", ny, binary=True)) \
            if u.retirable else None
        for y in range(ny):
            expr = term(iu[y]) - float(u.planned[y])
            for g in range(y + 1):
                if build is not None:
                    expr.add_term(int(build[g]), -1.0)
                if retire is not None:
                    expr.add_term(int(retire[g]), 1.0)
            model.add_eq(expr)
        if build is not None:
            model.add_le(lsum(term(b) for b in build), 1.0)
        if retire is not None:
            model.add_le(lsum(term(r) for r in retire), 1.0)
        inv.thermal_status[u.id] = [term(iu[y]) for y in range(ny)]
        if build is not None:
            inv.thermal_build[u.id] = build
        if retire is not None:
            inv.thermal_retire[u.id] = retire

    for s in system.storage:
        if not s.candidate:
            inv.storage_power[s.id] = [const(s.planned_mw[y]) for y in range(ny)]
            inv.storage_energy[s.id] = [const(s.planned_mwh[y]) for y in range(ny)]
            continue
        pb = track(model.add_vars(f"inv.icb.{s.id}", ny))
        eb = track(model.add_vars(f"inv.iceb.{s.id}", ny))
        inv.storage_power_build[s.id] = pb
        inv.storage_energy_build[s.id] = eb
        inv.storage_power[s.id] = [
            const(s.planned_mw[y]) + lsum(term(pb[g]) for g in range(y + 1))
            for y in range(ny)]
        inv.storage_energy[s.id] = [
            const(s.planned_mwh[y]) + lsum(term(eb[g]) for g in range(y + 1))
            for y in range(ny)]
        for y in range(ny):
            model.add_le(inv.storage_power[s.id][y], s.max_power)
            model.add_le(inv.storage_energy[s.id][y], s.max_energy)

    for r in system.renewables:
        if not r.candidate:
            inv.renewable_capacity[r.id] = [const(r.planned_mw[y]) for y in range(ny)]
            continue
        rb = track(model.add_vars(f"inv.icb.{r.id}", ny))
        inv.renewable_build[r.id] = rb
        inv.renewable_capacity[r.id] = [
            const(r.planned_mw[y]) + lsum(term(rb[g]) for g in range(y + 1))
            for y in range(ny)]

    return inv


def _storage_big_m(s) -> float:
    return max(s.max_power, max(s.planned_mw, default=0.0))


def add_emissions(system: SystemData, model: Model,
                  blocks: dict[tuple[int, int], DispatchBlock], yi: int,
                  import_vars: dict) -> int:
    """Yearly emissions cap on policy-zone thermal output plus imports."""
    grid = system.grid
    z0 = system.policy_zone
    year = grid.years[yi]
    total = LinExpr()
    for wi in range(grid.num_periods):
        block = blocks[(yi, wi)]
        w = grid.period_weights[wi]
        for u in system.thermal:
            if u.zone != z0:
                continue
            reg = block.vars[("thermal", u.id)]
            for t in range(block.hours):
                total.add_term(int(reg["p"][t]), w * u.emis_slope)
                total.add_term(int(reg["v"][t]), w * u.emis_intercept)
        for line in system.lines:
            lam = line.incidence(z0)
            if lam == 0 or line.import_emis_rate == 0.0:
                continue
            reg = block.vars[("line", line.id)]
            for t in range(block.hours):
                imp = model.add_var(f"imp.{line.id}.{yi}.{wi}[{t}]")
                import_vars[(line.id, yi, wi, t)] = imp
                # imp >= max(0, lam * flow)
                flow = term(reg["fp"][t]) - term(reg["fn"][t])
                model.add_ge(term(imp) - lam * flow)
                total.add_term(imp, w * line.import_emis_rate)
    return model.add_le(total, system.policy.emissions_cap[year])


def add_rps(system: SystemData, model: Model,
            blocks: dict[tuple[int, int], DispatchBlock], yi: int) -> int | None:
    """Minimum eligible renewable share of annual policy-zone load."""
    grid = system.grid
    z0 = system.policy_zone
    zi = system.zone_index(z0)
    year = grid.years[yi]
    rps = system.policy.rps_fraction[year]
    if rps <= 0:
        return None
    demand = sum(grid.period_weights[wi] * system.load[zi, yi, wi, :].sum()
                 for wi in range(grid.num_periods))
    supply = LinExpr()
    for wi in range(grid.num_periods):
        block = blocks[(yi, wi)]
        w = grid.period_weights[wi]
        for r in system.renewables:
            if r.zone != z0 or not r.rps_eligible:
                continue
            reg = block.vars[("renewable", r.id)]
            for t in range(block.hours):
                supply.add(reg["power"][t], w)
    return model.add_ge(supply, rps * demand)


def add_prm(system: SystemData, model: Model, inv: InvestmentState, yi: int,
            credit_vars: dict) -> int:
    """Reserve-margin constraint with piecewise-linear capacity credits."""
    grid = system.grid
    z0 = system.policy_zone
    year = grid.years[yi]
    lhs = LinExpr()
    for u in system.thermal:
        if u.zone == z0:
            lhs.add(inv.thermal_status[u.id][yi], u.p_max * u.nqc)
    for h in system.hydro:
        if h.zone == z0:
            lhs.add(h.p_max * h.nqc)

    wind = lsum(inv.renewable_capacity[r.id][yi] for r in system.renewables
                if r.zone == z0 and r.elcc_axis == "wind") + 0.0
    solar = lsum(inv.renewable_capacity[r.id][yi] for r in system.renewables
                 if r.zone == z0 and r.elcc_axis == "solar") + 0.0
    stor = lsum(inv.storage_power[s.id][yi] for s in system.storage
                if s.zone == z0) + 0.0

    for surface, expr_terms in (("vr", (wind, solar)), ("storage", (stor,))):
        planes = system.policy.planes(surface, year)
        if not planes:
            continue
        credit = model.add_var(f"elcc.{surface}.{yi}")
        credit_vars[(surface, yi)] = credit
        inv.all_vars.append(credit)
        for p in planes:
            cut = const(p.intercept_mw)
            if surface == "vr":
                cut.add(expr_terms[0], p.wind_slope)
                cut.add(expr_terms[1], p.solar_slope)
            else:
                cut.add(expr_terms[0], p.storage_slope)
            model.add_le(term(credit) - cut)
        lhs.add_term(credit, 1.0)
    return model.add_ge(lhs, system.policy.prm_mw[year])


def assemble_objective(system: SystemData, inv: InvestmentState,
                       blocks: dict[tuple[int, int], DispatchBlock],
                       ) -> tuple[list[LinExpr], list[LinExpr], list[LinExpr]]:
    """Yearly generation, maintenance and investment cost expressions."""
    grid = system.grid
    rate = system.discount_rate
    gen, mnt, cap = [], [], []
    for yi in range(grid.num_years):
        wy = grid.year_weights[yi]
        g = LinExpr()
        for wi in range(grid.num_periods):
            g.add(blocks[(yi, wi)].cost, wy * grid.period_weights[wi])
        gen.append(g)

        m = LinExpr()
        for u in system.thermal:
            m.add(inv.thermal_status[u.id][yi], u.maintenance)
        for s in system.storage:
            m.add(inv.storage_energy[s.id][yi], s.maintenance_energy)
            m.add(inv.storage_power[s.id][yi], s.maintenance_power)
        for r in system.renewables:
            m.add(inv.renewable_capacity[r.id][yi], r.maintenance)
        for h in system.hydro:
            m.add(h.p_max * h.maintenance)
        m.scale(wy)
        mnt.append(m)

        tail = grid.tail_weight(yi)
        c = LinExpr()
        for u in system.thermal:
            if u.id in inv.thermal_build:
                c.add_term(int(inv.thermal_build[u.id][yi]),
                           _annualized(u.capital, rate, u.lifetime))
        for s in system.storage:
            if s.id in inv.storage_power_build:
                c.add_term(int(inv.storage_power_build[s.id][yi]),
                           _annualized(s.capital_power, rate, s.lifetime))
                c.add_term(int(inv.storage_energy_build[s.id][yi]),
                           _annualized(s.capital_energy, rate, s.lifetime))
        for r in system.renewables:
            if r.id in inv.renewable_build:
                c.add_term(int(inv.renewable_build[r.id][yi]),
                           _annualized(r.capital, rate, r.lifetime))
        c.scale(tail)
        cap.append(c)
    return gen, mnt, cap


def build_planning_model(system: SystemData, clusters: list[EvCluster],
                         regime: str,
                         background: dict[int, np.ndarray] | None = None,
                         ) -> PlanningModel:
    """Assemble the complete multi-year model for one charging regime."""
    grid = system.grid
    model = Model(name=f"{system.name}-{regime}")
    inv = _build_investment(system, model)
    big_m = {s.id: _storage_big_m(s) for s in system.storage}

    blocks: dict[tuple[int, int], DispatchBlock] = {}
    for yi in range(grid.num_years):
        year = grid.years[yi]
        for wi in range(grid.num_periods):
            block = build_block(
                system, model, yi, wi,
                thermal_status={u.id: inv.thermal_status[u.id][yi]
                                for u in system.thermal},
                renewable_capacity={r.id: inv.renewable_capacity[r.id][yi]
                                    for r in system.renewables},
                storage_power={s.id: inv.storage_power[s.id][yi]
                               for s in system.storage},
                storage_energy={s.id: inv.storage_energy[s.id][yi]
                                for s in system.storage},
                storage_big_m=big_m)
            for cluster in clusters:
                add_ev_constraints(block, cluster, regime, system.ev_config)
            if background and year in background:
                prof = background[year]
                for t in range(block.hours):
                    mw = float(prof[t % 24])
                    if mw:
                        block.add_fixed_load(cluster_zone(system, clusters), t, mw)
            block.finalize_balance()
            blocks[(yi, wi)] = block

    import_vars: dict = {}
    credit_vars: dict = {}
    for yi in range(grid.num_years):
        add_emissions(system, model, blocks, yi, import_vars)
        add_rps(system, model, blocks, yi)
        add_prm(system, model, inv, yi, credit_vars)
    for var in import_vars.values():
        inv.all_vars.append(var)

    gen, mnt, cap = assemble_objective(system, inv, blocks)
    objective = LinExpr()
    for yi in range(grid.num_years):
        objective.add(gen[yi]).add(mnt[yi]).add(cap[yi])
    model.objective = objective
    return PlanningModel(system=system, regime=regime, model=model, blocks=blocks,
                         inv=inv, clusters=clusters, gen_cost=gen, mnt_cost=mnt,
                         inv_cost=cap, objective=objective,
                         inv_block_vars=list(inv.all_vars))


def cluster_zone(system: SystemData, clusters: list[EvCluster]) -> str:
    if system.ev_config.zone:
        return system.ev_config.zone
    if clusters:
        return clusters[0].zone
    return system.policy_zone
