"""Scenario directory parsing.

A scenario is a directory of fixed-format files:

    system.json       zones, time grid, EV config, discount rate
    thermal.csv       thermal units (planned status pipe-separated per year)
    renewables.csv    renewable/firm resources
    profiles.csv      production factors (resource, period, hour, pf)
    storage.csv       storage resources
    hydro.csv         large hydro (budget pipe-separated per period)
    lines.csv         transmission corridors
    load.csv          zone, year, period, hour, mw
    policy.csv        year, emissions_cap, rps_fraction, prm_mw
    costs.csv         resource, capital, maintenance, lifetime
    elcc.csv          capacity-credit hyperplanes
    clusters.csv      EV clusters (ev mode "clusters"), optional
    fixed_profiles.csv  per-cluster fixed charging profiles, optional
    drives.csv        drive records (ev mode "fleet"), optional
    population.csv    adoption projections (ev mode "fleet"), optional

Unknown columns are rejected; parse failures carry file and row context.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pandas as pd

from .core import (ElccPlane, EvConfig, HydroUnit, Line, PolicyInputs,
                   RenewableResource, StorageResource, SystemData, ThermalUnit,
                   TimeGrid, Zone)


class ScenarioError(ValueError):
    """Parse failure with file/row context."""


def _read_csv(path: Path, columns: list[str], optional: tuple[str, ...] = ()) -> pd.DataFrame:
    if not path.exists():
        raise ScenarioError(f"{path.name}: file missing")
    df = pd.read_csv(path)
    unknown = set(df.columns) - set(columns) - set(optional)
    if unknown:
        raise ScenarioError(f"{path.name}: unknown columns {sorted(unknown)}")
    missing = set(columns) - set(df.columns)
    if missing:
        raise ScenarioError(f"{path.name}: missing columns {sorted(missing)}")
    return df


def _pipe_floats(cell, path: Path, row: int, want: int | None = None) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in str(cell).split("|"))
    except ValueError:
        raise ScenarioError(f"{path.name} row {row}: bad pipe-separated value {cell!r}")
    if want is not None and len(vals) != want:
        raise ScenarioError(f"{path.name} row {row}: expected {want} values, got {len(vals)}")
    return vals


def _bool(cell) -> bool:
    return str(cell).strip().lower() in ("1", "true", "yes")


def load_costs(path: Path) -> dict[str, tuple[float, float, int]]:
    df = _read_csv(path, ["resource", "capital", "maintenance", "lifetime"])
    out = {}
    for i, row in df.iterrows():
        out[str(row["resource"])] = (float(row["capital"]), float(row["maintenance"]),
                                     int(row["lifetime"]))
    return out


def _cost(costs: dict, key: str, path: str) -> tuple[float, float, int]:
    if key not in costs:
        raise ScenarioError(f"costs.csv: no entry for resource {key!r} ({path})")
    return costs[key]


def load_system(directory: str | Path) -> SystemData:
    d = Path(directory)
    sysfile = d / "system.json"
    if not sysfile.exists():
        raise ScenarioError(f"{sysfile}: file missing")
    try:
        spec = json.loads(sysfile.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"system.json: {exc}")

    tg = spec["time_grid"]
    grid = TimeGrid(
        years=tuple(int(y) for y in tg["years"]),
        year_weights=tuple(float(w) for w in tg["year_weights"]),
        period_ids=tuple(str(p["id"]) for p in tg["periods"]),
        period_weights=tuple(float(p["weight"]) for p in tg["periods"]),
        hours_per_period=int(tg["hours_per_period"]),
    )
    zones = tuple(Zone(id=str(z["id"]), policy_zone=bool(z.get("policy_zone", False)))
                  for z in spec["zones"])
    evspec = spec.get("ev", {})
    ev = EvConfig(
        mode=evspec.get("mode", "clusters"),
        zone=evspec.get("zone", ""),
        eta_c=float(evspec.get("eta_c", 0.95)),
        eta_d=float(evspec.get("eta_d", 0.95)),
        cluster_threshold=float(evspec.get("cluster_threshold", 0.001)),
        discharge_divides_eta=bool(evspec.get("discharge_divides_eta", False)),
        soc_min_frac=float(evspec.get("soc_min_frac", 0.0)),
        drive_soc_frac=float(evspec.get("drive_soc_frac", 1.0)),
    )
    costs = load_costs(d / "costs.csv")
    ny, nw, nt = grid.num_years, grid.num_periods, grid.hours_per_period

    tdf = _read_csv(d / "thermal.csv", [
        "id", "zone", "p_min", "p_max", "ramp_up", "ramp_down", "min_up", "min_down",
        "startup_cost", "shutdown_cost", "cost_slope", "cost_intercept",
        "emis_slope", "emis_intercept", "nqc", "candidate", "retirable", "planned"])
    thermal = []
    for i, r in tdf.iterrows():
        cap, mnt, life = _cost(costs, str(r["id"]), "thermal.csv")
        thermal.append(ThermalUnit(
            id=str(r["id"]), zone=str(r["zone"]),
            p_min=float(r["p_min"]), p_max=float(r["p_max"]),
            ramp_up=float(r["ramp_up"]), ramp_down=float(r["ramp_down"]),
            min_up=int(r["min_up"]), min_down=int(r["min_down"]),
            startup_cost=float(r["startup_cost"]), shutdown_cost=float(r["shutdown_cost"]),
            cost_slope=float(r["cost_slope"]), cost_intercept=float(r["cost_intercept"]),
            emis_slope=float(r["emis_slope"]), emis_intercept=float(r["emis_intercept"]),
            nqc=float(r["nqc"]), candidate=_bool(r["candidate"]), retirable=_bool(r["retirable"]),
            planned=tuple(int(v) for v in _pipe_floats(r["planned"], d / "thermal.csv", i, ny)),
            capital=cap, maintenance=mnt, lifetime=life))

    pdf = _read_csv(d / "profiles.csv", ["resource", "period", "hour", "pf"])
    rdf = _read_csv(d / "renewables.csv", [
        "id", "zone", "curtailable", "rps_eligible", "elcc_axis", "curtailment_cost",
        "candidate", "planned_mw"])
    renewables = []
    period_pos = {p: i for i, p in enumerate(grid.period_ids)}
    for i, r in rdf.iterrows():
        rid = str(r["id"])
        rows = pdf[pdf["resource"] == rid]
        profile = np.zeros((nw, nt))
        seen = np.zeros((nw, nt), dtype=bool)
        for _, p in rows.iterrows():
            if str(p["period"]) not in period_pos:
                raise ScenarioError(f"profiles.csv: unknown period {p['period']!r} for {rid}")
            w, t = period_pos[str(p["period"])], int(p["hour"])
            if not 0 <= t < nt:
                raise ScenarioError(f"profiles.csv: hour {t} out of range for {rid}")
            profile[w, t] = float(p["pf"])
            seen[w, t] = True
        if not seen.all():
            raise ScenarioError(f"profiles.csv: incomplete profile for {rid}")
        cap, mnt, life = _cost(costs, rid, "renewables.csv")
        renewables.append(RenewableResource(
            id=rid, zone=str(r["zone"]), curtailable=_bool(r["curtailable"]),
            rps_eligible=_bool(r["rps_eligible"]), elcc_axis=str(r["elcc_axis"]),
            curtailment_cost=float(r["curtailment_cost"]), candidate=_bool(r["candidate"]),
            planned_mw=_pipe_floats(r["planned_mw"], d / "renewables.csv", i, ny),
            profile=profile, capital=cap, maintenance=mnt, lifetime=life))

    sdf = _read_csv(d / "storage.csv", [
        "id", "zone", "planned_mw", "planned_mwh", "eta_c", "eta_d", "self_discharge",
        "soc_max_frac", "soc_min_frac", "min_charge_hours", "min_discharge_hours",
        "candidate", "max_power", "max_energy"])
    storage = []
    for i, r in sdf.iterrows():
        sid = str(r["id"])
        cap_p, mnt_p, life = _cost(costs, f"{sid}.power", "storage.csv")
        cap_e, mnt_e, _ = _cost(costs, f"{sid}.energy", "storage.csv")
        storage.append(StorageResource(
            id=sid, zone=str(r["zone"]),
            planned_mw=_pipe_floats(r["planned_mw"], d / "storage.csv", i, ny),
            planned_mwh=_pipe_floats(r["planned_mwh"], d / "storage.csv", i, ny),
            eta_c=float(r["eta_c"]), eta_d=float(r["eta_d"]),
            self_discharge=float(r["self_discharge"]),
            soc_max_frac=float(r["soc_max_frac"]), soc_min_frac=float(r["soc_min_frac"]),
            min_charge_hours=int(r["min_charge_hours"]),
            min_discharge_hours=int(r["min_discharge_hours"]),
            candidate=_bool(r["candidate"]),
            max_power=float(r["max_power"]), max_energy=float(r["max_energy"]),
            capital_power=cap_p, capital_energy=cap_e,
            maintenance_power=mnt_p, maintenance_energy=mnt_e, lifetime=life))

    hdf = _read_csv(d / "hydro.csv", ["id", "zone", "p_min", "p_max", "ramp",
                                      "budget_mwh", "nqc"])
    hydro = []
    for i, r in hdf.iterrows():
        _, mnt, _ = costs.get(str(r["id"]), (0.0, 0.0, 30))
        hydro.append(HydroUnit(
            id=str(r["id"]), zone=str(r["zone"]), p_min=float(r["p_min"]),
            p_max=float(r["p_max"]), ramp=float(r["ramp"]),
            budget_mwh=_pipe_floats(r["budget_mwh"], d / "hydro.csv", i, nw),
            nqc=float(r["nqc"]), maintenance=mnt))

    ldf = _read_csv(d / "lines.csv", ["id", "zone_from", "zone_to", "limit_mw",
                                      "wheeling_cost", "import_emis_rate"])
    lines = tuple(Line(id=str(r["id"]), zone_from=str(r["zone_from"]),
                       zone_to=str(r["zone_to"]), limit_mw=float(r["limit_mw"]),
                       wheeling_cost=float(r["wheeling_cost"]),
                       import_emis_rate=float(r["import_emis_rate"]))
                  for _, r in ldf.iterrows())

    loaddf = _read_csv(d / "load.csv", ["zone", "year", "period", "hour", "mw"])
    zone_pos = {z.id: i for i, z in enumerate(zones)}
    year_pos = {y: i for i, y in enumerate(grid.years)}
    load = np.full((len(zones), ny, nw, nt), np.nan)
    for i, r in loaddf.iterrows():
        try:
            zi = zone_pos[str(r["zone"])]
            yi = year_pos[int(r["year"])]
            wi = period_pos[str(r["period"])]
            ti = int(r["hour"])
            load[zi, yi, wi, ti] = float(r["mw"])
        except (KeyError, ValueError, IndexError):
            raise ScenarioError(f"load.csv row {i}: unknown zone/year/period/hour")
    if np.isnan(load).any():
        raise ScenarioError("load.csv: incomplete load series")

    podf = _read_csv(d / "policy.csv", ["year", "emissions_cap", "rps_fraction", "prm_mw"])
    emissions, rps, prm = {}, {}, {}
    for _, r in podf.iterrows():
        y = int(r["year"])
        emissions[y] = float(r["emissions_cap"])
        rps[y] = float(r["rps_fraction"])
        prm[y] = float(r["prm_mw"])

    edf = _read_csv(d / "elcc.csv", ["surface", "year", "intercept_mw",
                                     "wind_slope", "solar_slope", "storage_slope"])
    planes = tuple(ElccPlane(surface=str(r["surface"]), year=int(r["year"]),
                             intercept_mw=float(r["intercept_mw"]),
                             wind_slope=float(r["wind_slope"]),
                             solar_slope=float(r["solar_slope"]),
                             storage_slope=float(r["storage_slope"]))
                   for _, r in edf.iterrows())

    return SystemData(
        name=d.name, grid=grid, zones=zones, lines=lines, thermal=tuple(thermal),
        renewables=tuple(renewables), storage=tuple(storage), hydro=tuple(hydro),
        policy=PolicyInputs(emissions_cap=emissions, rps_fraction=rps, prm_mw=prm,
                            elcc_planes=planes),
        load=load, ev_config=ev,
        discount_rate=float(spec.get("discount_rate", 0.05)))
