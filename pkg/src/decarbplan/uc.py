"""Dispatch-block construction for one (year, period) slice.

A block owns the hourly variables and constraints of every resource plus the
per-zone power-balance expressions (generation minus load).  The balance can
be finalized either as hard equalities or as relaxable expressions carrying
slack variables for dualization.  The block also accumulates its operating
cost expression: fuel, startup/shutdown, wheeling on absolute flow, and
curtailment.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (HydroUnit, RenewableResource, StorageResource, SystemData,
                   ThermalUnit, tau)
from .linmodel import LinExpr, Model, const, term


class BlockError(ValueError):
    """Structural problem while assembling a dispatch block."""


@dataclass
class DispatchBlock:
    """Variables, balance expressions and cost of one (year, period) pair."""

    system: SystemData
    model: Model
    yi: int
    wi: int
    hours: int
    cost: LinExpr = field(default_factory=LinExpr)
    # zone -> per-hour balance expression, generation minus load
    balance: dict[str, list[LinExpr]] = field(default_factory=dict)
    # (kind, resource id) -> named variable arrays / expressions
    vars: dict[tuple[str, str], dict] = field(default_factory=dict)
    all_vars: list[int] = field(default_factory=list)
    # per hour: (expr, pos slack, neg slack) after finalize_balance
    residuals: dict[tuple[str, int], tuple[LinExpr, int, int]] = field(default_factory=dict)
    finalized: bool = False

    def __post_init__(self):
        load = self.system.load
        for z in self.system.zone_ids:
            zi = self.system.zone_index(z)
            self.balance[z] = [const(-load[zi, self.yi, self.wi, t])
                               for t in range(self.hours)]

    @property
    def key(self) -> tuple[int, int]:
        return (self.yi, self.wi)

    def _new(self, prefix: str, n: int, lb: float = 0.0, ub: float = np.inf,
             binary: bool = False) -> np.ndarray:
        tag = f"b{self.yi}.{self.wi}.{prefix}"
        arr = self.model.add_vars(tag, n, lb=lb, ub=ub, binary=binary)
        self.all_vars.extend(int(i) for i in arr)
        return arr

    # -- resources --------------------------------------------------------

    def add_thermal(self, unit: ThermalUnit, status: LinExpr) -> None:
        """Commitment, output bounds, min up/down, ramps, and the status link."""
        m, T = self.model, self.hours
        v = self._new(f"v.{unit.id}", T, binary=True)
        p = self._new(f"p.{unit.id}", T, ub=unit.p_max)
        su = self._new(f"su.{unit.id}", T, ub=1.0)
        sd = self._new(f"sd.{unit.id}", T, ub=1.0)
        for t in range(T):
            m.add_le(term(p[t]) - unit.p_max * term(v[t]))
            m.add_ge(term(p[t]) - unit.p_min * term(v[t]))
            m.add_le(term(v[t]) - status)
            tp = tau(t - 1, T)
            m.add_eq(term(su[t]) - term(sd[t]) - term(v[t]) + term(v[tp]))
            m.add_le(term(su[t]) - term(v[t]))
            m.add_le(term(sd[t]) + term(v[t]), 1.0)
            ru = unit.ramp_up
            rd = unit.ramp_down
            m.add_le(term(p[t]) - term(p[tp]) - ru * term(v[tp])
                     - max(unit.p_min, ru) * term(su[t]))
            m.add_le(term(p[tp]) - term(p[t]) - rd * term(v[t])
                     - max(unit.p_min, rd) * term(sd[t]))
        if unit.min_up > 1:
            k = min(unit.min_up, T)
            for t in range(T):
                window = sum(term(su[tau(t - i, T)]) for i in range(k))
                m.add_le(window - term(v[t]))
        if unit.min_down > 1:
            k = min(unit.min_down, T)
            for t in range(T):
                window = sum(term(sd[tau(t - i, T)]) for i in range(k))
                m.add_le(window + term(v[t]), 1.0)
        for t in range(T):
            self.balance[unit.zone][t].add_term(int(p[t]), 1.0)
            self.cost.add(unit.startup_cost * term(su[t])
                          + unit.shutdown_cost * term(sd[t])
                          + unit.cost_intercept * term(v[t])
                          + unit.cost_slope * term(p[t]))
        self.vars[("thermal", unit.id)] = {"v": v, "p": p, "su": su, "sd": sd,
                                           "status": status, "zone": unit.zone}

    def add_renewable(self, res: RenewableResource, capacity: LinExpr) -> None:
        """Output = capacity * production factor, less curtailment where allowed."""
        m, T = self.model, self.hours
        pf = res.profile[self.wi]
        curt = None
        if res.curtailable:
            curt = self._new(f"curt.{res.id}", T)
            for t in range(T):
                # output must stay non-negative
                m.add_le(term(curt[t]) - pf[t] * capacity)
                self.cost.add(res.curtailment_cost * term(curt[t]))
        power: list[LinExpr] = []
        for t in range(T):
            expr = capacity * pf[t]
            if curt is not None:
                expr.add_term(int(curt[t]), -1.0)
            power.append(expr)
            self.balance[res.zone][t].add(expr)
        self.vars[("renewable", res.id)] = {"curt": curt, "power": power,
                                            "capacity": capacity, "zone": res.zone}

    def add_storage(self, res: StorageResource, power_cap: LinExpr,
                    energy_cap: LinExpr, rate_big_m: float) -> None:
        """Mode binary, rate bounds, cyclic SoC recursion, SoC envelope, durations."""
        m, T = self.model, self.hours
        v = self._new(f"vs.{res.id}", T, binary=True)   # 0 = charge mode, 1 = discharge
        pc = self._new(f"pc.{res.id}", T)
        pd = self._new(f"pd.{res.id}", T)
        soc = self._new(f"soc.{res.id}", T)
        for t in range(T):
            m.add_le(term(pc[t]) + rate_big_m * term(v[t]), rate_big_m)
            m.add_le(term(pd[t]) - rate_big_m * term(v[t]))
            m.add_le(term(pc[t]) - power_cap)
            m.add_le(term(pd[t]) - power_cap)
            keep = 1.0 - res.self_discharge
            m.add_eq(term(soc[t]) - keep * term(soc[tau(t - 1, T)])
                     - res.eta_c * term(pc[t]) + (1.0 / res.eta_d) * term(pd[t]))
            m.add_le(term(soc[t]) - res.soc_max_frac * energy_cap)
            m.add_ge(term(soc[t]) - res.soc_min_frac * energy_cap)
        for dur, up in ((res.min_discharge_hours, True), (res.min_charge_hours, False)):
            if dur > 1:
                yy = self._new(f"{'yu' if up else 'yd'}.{res.id}", T, ub=1.0)
                k = min(dur, T)
                for t in range(T):
                    tp = tau(t - 1, T)
                    sign = 1.0 if up else -1.0
                    m.add_ge(term(yy[t]) - sign * (term(v[t]) - term(v[tp])))
                    window = sum(term(yy[tau(t - i, T)]) for i in range(k))
                    if up:
                        m.add_le(window - term(v[t]))
                    else:
                        m.add_le(window + term(v[t]), 1.0)
        for t in range(T):
            self.balance[res.zone][t].add_term(int(pd[t]), 1.0)
            self.balance[res.zone][t].add_term(int(pc[t]), -1.0)
        self.vars[("storage", res.id)] = {"v": v, "pc": pc, "pd": pd, "soc": soc,
                                          "zone": res.zone}

    def add_hydro(self, unit: HydroUnit) -> None:
        m, T = self.model, self.hours
        p = self._new(f"ph.{unit.id}", T, lb=unit.p_min, ub=unit.p_max)
        for t in range(T):
            tp = tau(t - 1, T)
            m.add_le(term(p[t]) - term(p[tp]), unit.ramp)
            m.add_le(term(p[tp]) - term(p[t]), unit.ramp)
        m.add_le(sum(term(p[t]) for t in range(T)), unit.budget_mwh[self.wi])
        for t in range(T):
            self.balance[unit.zone][t].add_term(int(p[t]), 1.0)
        self.vars[("hydro", unit.id)] = {"p": p, "zone": unit.zone}

    def add_lines(self) -> None:
        """Directional flow pair per line; wheeling charged on absolute flow."""
        T = self.hours
        for line in self.system.lines:
            fp = self._new(f"fp.{line.id}", T, ub=line.limit_mw)
            fn = self._new(f"fn.{line.id}", T, ub=line.limit_mw)
            for t in range(T):
                self.balance[line.zone_to][t].add_term(int(fp[t]), 1.0)
                self.balance[line.zone_to][t].add_term(int(fn[t]), -1.0)
                self.balance[line.zone_from][t].add_term(int(fp[t]), -1.0)
                self.balance[line.zone_from][t].add_term(int(fn[t]), 1.0)
                self.cost.add(line.wheeling_cost * (term(fp[t]) + term(fn[t])))
            self.vars[("line", line.id)] = {"fp": fp, "fn": fn}

    def add_fixed_load(self, zone: str, hour: int, mw: float) -> None:
        """Constant demand-side addition (fixed EV charging profiles)."""
        self.balance[zone][hour].add(-mw)
        reg = self.vars.setdefault(("fixed_load", "ev"), {"series": {}})
        reg["series"][(zone, hour)] = reg["series"].get((zone, hour), 0.0) + mw

    # -- balance ----------------------------------------------------------

    def finalize_balance(self) -> None:
        """Attach slack pairs so the balance can be solved hard or relaxed.

        Each zone/hour gets ``expr - rp + rn = 0`` with rp, rn >= 0.  Fixing
        the slacks at zero recovers the hard equality; leaving them free and
        pricing them in the objective yields the relaxed form.
        """
        if self.finalized:
            raise BlockError("balance already finalized")
        for z in self.system.zone_ids:
            for t in range(self.hours):
                expr = self.balance[z][t]
                if not expr.coefs:
                    raise BlockError(f"zone {z} has no dispatch attached at hour {t}")
                rp = self.model.add_var(f"b{self.yi}.{self.wi}.rp.{z}[{t}]")
                rn = self.model.add_var(f"b{self.yi}.{self.wi}.rn.{z}[{t}]")
                self.model.add_eq(expr - term(rp) + term(rn), 0.0, group="balance_link")
                self.residuals[(z, t)] = (expr, rp, rn)
                self.all_vars.extend((rp, rn))
        self.finalized = True

    def slack_vars(self) -> list[int]:
        out = []
        for _, rp, rn in self.residuals.values():
            out.extend((rp, rn))
        return out

    def generation_cost(self) -> LinExpr:
        return self.cost


def build_block(system: SystemData, model: Model, yi: int, wi: int, *,
                thermal_status: dict[str, LinExpr],
                renewable_capacity: dict[str, LinExpr],
                storage_power: dict[str, LinExpr],
                storage_energy: dict[str, LinExpr],
                storage_big_m: dict[str, float]) -> DispatchBlock:
    """Assemble every grid resource of one (year, period) into a fresh block."""
    block = DispatchBlock(system=system, model=model, yi=yi, wi=wi,
                          hours=system.grid.hours_per_period)
    for unit in system.thermal:
        block.add_thermal(unit, thermal_status[unit.id])
    for res in system.renewables:
        block.add_renewable(res, renewable_capacity[res.id])
    for res in system.storage:
        block.add_storage(res, storage_power[res.id], storage_energy[res.id],
                          storage_big_m[res.id])
    for unit in system.hydro:
        block.add_hydro(unit)
    block.add_lines()
    return block


def audit_balance(block: DispatchBlock, x: np.ndarray) -> np.ndarray:
    """Recompute the per-zone hourly balance directly from solution values.

    Walks the variable registry and raw system data instead of the stored
    expressions, so it cross-checks the balance used for dualization.
    Returns an array of shape (zones, hours), generation minus load.
    """
    sysd = block.system
    T = block.hours
    out = np.zeros((len(sysd.zones), T))
    for zi, z in enumerate(sysd.zone_ids):
        out[zi, :] = -sysd.load[zi, block.yi, block.wi, :]
    for (kind, rid), reg in block.vars.items():
        if kind == "thermal" or kind == "hydro":
            zi = sysd.zone_index(reg["zone"])
            out[zi, :] += x[reg["p"]]
        elif kind == "storage":
            zi = sysd.zone_index(reg["zone"])
            out[zi, :] += x[reg["pd"]] - x[reg["pc"]]
        elif kind == "renewable":
            res = next(r for r in sysd.renewables if r.id == rid)
            zi = sysd.zone_index(res.zone)
            cap = reg["capacity"].value(x)
            gen = cap * res.profile[block.wi]
            if reg["curt"] is not None:
                gen = gen - x[reg["curt"]]
            out[zi, :] += gen
        elif kind == "line":
            line = next(l for l in sysd.lines if l.id == rid)
            flow = x[reg["fp"]] - x[reg["fn"]]
            out[sysd.zone_index(line.zone_to), :] += flow
            out[sysd.zone_index(line.zone_from), :] -= flow
        elif kind == "ev":
            zi = sysd.zone_index(reg["zone"])
            for pos, var in reg["pc_by_hour"].items():
                out[zi, pos] -= x[var]
            for pos, var in reg["pd_by_hour"].items():
                out[zi, pos] += x[var]
    for (z, t), mw in block.vars.get(("fixed_load", "ev"), {}).get("series", {}).items():
        out[sysd.zone_index(z), t] -= mw
    return out
