"""Solution container and extraction of costs, investments, and series."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .core import SystemData
from .plan import PlanningModel
from .uc import audit_balance


@dataclass
class PlanSolution:
    scenario: str
    regime: str
    mode: str
    status: str
    objective: float
    gap: float | None
    x: np.ndarray
    costs: dict[int, dict[str, float]]            # year -> component -> $
    totals: dict[str, float]
    investments: dict[str, dict[str, dict[int, float]]]
    max_residual: float
    series: pd.DataFrame                          # hourly policy-zone series
    ev_soc: dict[tuple[str, int, int], np.ndarray]  # (cluster, year, period) -> MWh
    ev_caps: dict[tuple[str, int], float]         # (cluster, year) -> MWh
    meta: dict = field(default_factory=dict)

    def write(self, outdir: Path) -> None:
        outdir.mkdir(parents=True, exist_ok=True)
        payload = {
            "scenario": self.scenario, "regime": self.regime, "mode": self.mode,
            "status": self.status, "objective": self.objective, "gap": self.gap,
            "max_residual": self.max_residual,
            "costs": {str(y): c for y, c in self.costs.items()},
            "totals": self.totals,
            "investments": {k: {rid: {str(y): v for y, v in vals.items()}
                                for rid, vals in grp.items()}
                            for k, grp in self.investments.items()},
            "meta": self.meta,
        }
        (outdir / "plan_solution.json").write_text(json.dumps(payload, indent=2))
        rows = []
        for y, comps in self.costs.items():
            for name, val in comps.items():
                rows.append({"year": y, "component": name, "dollars": val})
        for name, val in self.totals.items():
            rows.append({"year": "all", "component": name, "dollars": val})
        pd.DataFrame(rows).to_csv(outdir / "costs.csv", index=False)
        cap_rows = []
        for kind, grp in self.investments.items():
            for rid, vals in grp.items():
                for y, v in vals.items():
                    cap_rows.append({"kind": kind, "resource": rid, "year": y,
                                     "value": v})
        pd.DataFrame(cap_rows).to_csv(outdir / "installed_capacity.csv", index=False)
        self.series.to_csv(outdir / "hourly_series.csv", index=False)
        soc_rows = []
        for (cid, year, wi), arr in sorted(self.ev_soc.items()):
            for t, v in enumerate(arr):
                soc_rows.append({"cluster": cid, "year": year, "period": wi,
                                 "hour": t, "soc_mwh": v,
                                 "cap_mwh": self.ev_caps[(cid, year)]})
        pd.DataFrame(soc_rows).to_csv(outdir / "ev_soc.csv", index=False)


def _zone_operating_cost(pm: PlanningModel, x: np.ndarray, yi: int,
                         zone: str) -> float:
    """Weighted fuel/start/stop/curtailment cost of one zone's resources."""
    sysd = pm.system
    grid = sysd.grid
    total = 0.0
    for wi in range(grid.num_periods):
        block = pm.blocks[(yi, wi)]
        w = grid.year_weights[yi] * grid.period_weights[wi]
        for u in sysd.thermal:
            if u.zone != zone:
                continue
            reg = block.vars[("thermal", u.id)]
            total += w * (u.startup_cost * x[reg["su"]].sum()
                          + u.shutdown_cost * x[reg["sd"]].sum()
                          + u.cost_intercept * x[reg["v"]].sum()
                          + u.cost_slope * x[reg["p"]].sum())
        for r in sysd.renewables:
            if r.zone != zone or not r.curtailable:
                continue
            reg = block.vars[("renewable", r.id)]
            total += w * r.curtailment_cost * x[reg["curt"]].sum()
    return total


def _import_cost(pm: PlanningModel, x: np.ndarray, yi: int) -> float:
    """Wheeling spend on corridors touching the policy zone."""
    sysd = pm.system
    grid = sysd.grid
    z0 = sysd.policy_zone
    total = 0.0
    for wi in range(grid.num_periods):
        block = pm.blocks[(yi, wi)]
        w = grid.year_weights[yi] * grid.period_weights[wi]
        for line in sysd.lines:
            if line.incidence(z0) == 0:
                continue
            reg = block.vars[("line", line.id)]
            total += w * line.wheeling_cost * (x[reg["fp"]].sum() + x[reg["fn"]].sum())
    return total


def _ev_soc_series(pm: PlanningModel, x: np.ndarray | None,
                   ) -> tuple[dict, dict]:
    """Full-period SoC per cluster: solved (or profile-implied) inside the
    depot window, linear drive-time interpolation outside."""
    sysd = pm.system
    grid = sysd.grid
    T = grid.hours_per_period
    out: dict[tuple[str, int, int], np.ndarray] = {}
    caps: dict[tuple[str, int], float] = {}
    for cluster in pm.clusters:
        window = cluster.window_hours
        for yi, year in enumerate(grid.years):
            if year not in cluster.years:
                continue
            cy = cluster.years[year]
            caps[(cluster.id, year)] = cy.cap_mwh
            for wi in range(grid.num_periods):
                block = pm.blocks[(yi, wi)]
                series = np.full(T, np.nan)
                days = T // 24
                for d in range(days):
                    start = cluster.t_depot + d * 24
                    if pm.regime == "fixed" or x is None:
                        soc = cy.soc_depot_mwh
                        series[start % T] = soc
                        for i in range(window):
                            soc += cluster.eta_c * cy.profile_mw[i]
                            series[(start + i + 1) % T] = soc
                    else:
                        reg = block.vars[("ev", cluster.id)]
                        for i in range(window + 1):
                            pos = (start + i) % T
                            series[pos] = x[reg["soc_by_hour"][pos]]
                    # driving hours: ramp from full to the arrival state
                    end = start + window
                    gap_hours = start + 24 - end
                    for i in range(1, gap_hours):
                        frac = i / gap_hours
                        series[(end + i) % T] = (
                            (1 - frac) * cy.soc_drive_mwh + frac * cy.soc_depot_mwh)
                out[(cluster.id, year, wi)] = series
    return out, caps


def _hourly_series(pm: PlanningModel, x: np.ndarray) -> pd.DataFrame:
    sysd = pm.system
    grid = sysd.grid
    z0 = sysd.policy_zone
    zi = sysd.zone_index(z0)
    rows = []
    for (yi, wi), block in sorted(pm.blocks.items()):
        year = grid.years[yi]
        base = sysd.load[zi, yi, wi, :].copy()
        ev_c = np.zeros(block.hours)
        ev_d = np.zeros(block.hours)
        for (kind, rid), reg in block.vars.items():
            if kind == "ev" and reg["zone"] == z0:
                for pos, var in reg["pc_by_hour"].items():
                    ev_c[pos] += x[var]
                for pos, var in reg["pd_by_hour"].items():
                    ev_d[pos] += x[var]
            elif kind == "fixed_load":
                for (z, t), mw in reg["series"].items():
                    if z == z0:
                        ev_c[t] += mw
        ren = np.zeros(block.hours)
        for r in sysd.renewables:
            if r.zone != z0:
                continue
            reg = block.vars[("renewable", r.id)]
            cap = reg["capacity"].value(x)
            gen = cap * r.profile[wi]
            if reg["curt"] is not None:
                gen = gen - x[reg["curt"]]
            ren += gen
        gross = base + ev_c - ev_d
        for t in range(block.hours):
            rows.append({"year": year, "period": grid.period_ids[wi], "hour": t,
                         "base_load_mw": base[t], "ev_charge_mw": ev_c[t],
                         "ev_discharge_mw": ev_d[t], "gross_load_mw": gross[t],
                         "net_load_mw": gross[t] - ren[t]})
    return pd.DataFrame(rows)


def extract_solution(pm: PlanningModel, x: np.ndarray, *, status: str,
                     objective: float, gap: float | None, mode: str,
                     meta: dict | None = None) -> PlanSolution:
    sysd = pm.system
    grid = sysd.grid
    z0 = sysd.policy_zone

    costs: dict[int, dict[str, float]] = {}
    for yi, year in enumerate(grid.years):
        gen = pm.gen_cost[yi].value(x)
        mnt = pm.mnt_cost[yi].value(x)
        cap = pm.inv_cost[yi].value(x)
        ca_op = _zone_operating_cost(pm, x, yi, z0)
        imports = _import_cost(pm, x, yi)
        costs[year] = {
            "generation": gen, "maintenance": mnt, "investment": cap,
            "total": gen + mnt + cap,
            "ca_operational": ca_op, "import_cost": imports,
            "ca_total": ca_op + imports + mnt + cap,
        }
    totals = {key: sum(c[key] for c in costs.values())
              for key in next(iter(costs.values()))} if costs else {}

    investments: dict[str, dict[str, dict[int, float]]] = {
        "thermal_status": {}, "storage_power_mw": {}, "storage_energy_mwh": {},
        "renewable_mw": {}}
    for u in sysd.thermal:
        investments["thermal_status"][u.id] = {
            grid.years[yi]: pm.inv.thermal_status[u.id][yi].value(x)
            for yi in range(grid.num_years)}
    for s in sysd.storage:
        investments["storage_power_mw"][s.id] = {
            grid.years[yi]: pm.inv.storage_power[s.id][yi].value(x)
            for yi in range(grid.num_years)}
        investments["storage_energy_mwh"][s.id] = {
            grid.years[yi]: pm.inv.storage_energy[s.id][yi].value(x)
            for yi in range(grid.num_years)}
    for r in sysd.renewables:
        investments["renewable_mw"][r.id] = {
            grid.years[yi]: pm.inv.renewable_capacity[r.id][yi].value(x)
            for yi in range(grid.num_years)}

    max_resid = 0.0
    for block in pm.blocks.values():
        max_resid = max(max_resid, float(np.abs(audit_balance(block, x)).max()))

    soc, caps = _ev_soc_series(pm, x)
    return PlanSolution(
        scenario=sysd.name, regime=pm.regime, mode=mode, status=status,
        objective=objective, gap=gap, x=x, costs=costs, totals=totals,
        investments=investments, max_residual=max_resid,
        series=_hourly_series(pm, x), ev_soc=soc, ev_caps=caps,
        meta=meta or {})
