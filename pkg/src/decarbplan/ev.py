"""Truck fleet processing: bootstrap, clustering, fixed profiles, constraints.

Vehicles sharing a rounded depot-arrival and drive-start hour form one
cluster dispatched as a virtual power plant.  Clusters below the size
threshold are not controlled; they contribute an immediate-charge profile to
background load.  Constraint emission covers the three regimes: fixed
(profile as load), v1g (controlled charging only), v2g (bidirectional).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .core import EvConfig, TimeGrid, tau
from .linmodel import term
from .uc import DispatchBlock

log = logging.getLogger(__name__)

REGIMES = ("fixed", "v1g", "v2g")


class FleetError(ValueError):
    pass


@dataclass(frozen=True)
class VehicleSpec:
    charger_kw: float
    capacity_kwh: float
    kwh_per_mile: float


# charger / battery / efficiency assumptions by truck class
DEFAULT_SPECS: dict[str, VehicleSpec] = {
    "2-3": VehicleSpec(150.0, 100.0, 0.6),
    "4-6": VehicleSpec(150.0, 300.0, 1.05),
    "7": VehicleSpec(150.0, 400.0, 1.1),
    "8": VehicleSpec(150.0, 600.0, 1.8),
}


@dataclass(frozen=True)
class DriveRecord:
    vclass: str
    vocation: str
    start_min: int   # drive start, minutes of day
    end_min: int     # drive end, minutes of day
    miles: float


@dataclass(frozen=True)
class Vehicle:
    vclass: str
    vocation: str
    arrival_min: int    # depot arrival = drive end
    depart_min: int     # depot departure = next drive start
    charger_kw: float
    capacity_kwh: float
    soc_arrival_kwh: float


@dataclass
class ClusterYear:
    count: float
    p_max_mw: float
    cap_mwh: float
    soc_min_mwh: float
    soc_depot_mwh: float
    soc_drive_mwh: float
    profile_mw: np.ndarray   # fixed charging, one entry per window hour


@dataclass
class EvCluster:
    id: str
    zone: str
    t_depot: int
    t_drive: int
    eta_c: float
    eta_d: float
    years: dict[int, ClusterYear] = field(default_factory=dict)

    @property
    def t_delta(self) -> int:
        return 24 if self.t_depot > self.t_drive else 0

    @property
    def window_hours(self) -> int:
        return self.t_drive + self.t_delta - self.t_depot

    def grid_energy_mwh(self, year: int) -> float:
        cy = self.years[year]
        return (cy.soc_drive_mwh - cy.soc_depot_mwh) / self.eta_c


def parse_hhmm(text: str) -> int:
    h, m = str(text).split(":")
    mins = int(h) * 60 + int(m)
    if not 0 <= mins < 24 * 60:
        raise FleetError(f"time of day out of range: {text!r}")
    return mins


def round_window(arrival_min: int, depart_min: int) -> tuple[int, int]:
    """Charge window hours: arrival ceiled, departure floored.

    Shrinking inward avoids overstating flexibility; an arrival exactly on
    the hour keeps that hour.
    """
    t_depot = math.ceil(arrival_min / 60) % 24
    t_drive = depart_min // 60
    return t_depot, t_drive


def bootstrap_fleet(records: list[DriveRecord],
                    projections: dict[tuple[int, str, str], float],
                    specs: dict[str, VehicleSpec] | None = None,
                    seed: int = 0) -> dict[int, list[Vehicle]]:
    """Sample drive records with replacement to match projected counts.

    Stratified by (class, vocation); deterministic for a given seed.  Records
    whose trip consumption exceeds the battery (which would require en-route
    charging) are dropped up front with a logged count.
    """
    specs = specs or DEFAULT_SPECS
    rng = np.random.default_rng(seed)
    pools: dict[tuple[str, str], list[Vehicle]] = {}
    dropped = 0
    for rec in records:
        if rec.miles <= 0:
            raise FleetError(f"non-positive mileage in {rec.vclass}/{rec.vocation}")
        if rec.vclass not in specs:
            raise FleetError(f"no vehicle spec for class {rec.vclass!r}")
        spec = specs[rec.vclass]
        consumption = rec.miles * spec.kwh_per_mile
        if consumption > spec.capacity_kwh:
            dropped += 1
            continue
        pools.setdefault((rec.vclass, rec.vocation), []).append(Vehicle(
            vclass=rec.vclass, vocation=rec.vocation,
            arrival_min=rec.end_min, depart_min=rec.start_min,
            charger_kw=spec.charger_kw, capacity_kwh=spec.capacity_kwh,
            soc_arrival_kwh=spec.capacity_kwh - consumption))
    if dropped:
        log.info("dropped %d drive records exceeding battery capacity", dropped)

    fleet: dict[int, list[Vehicle]] = {}
    years = sorted({y for y, _, _ in projections})
    for year in years:
        sampled: list[Vehicle] = []
        for (y, vclass, vocation), count in sorted(projections.items()):
            if y != year or count <= 0:
                continue
            pool = pools.get((vclass, vocation))
            if not pool:
                raise FleetError(
                    f"no usable drive records for stratum class={vclass} "
                    f"vocation={vocation} with projected count {count}")
            picks = rng.integers(0, len(pool), size=int(round(count)))
            sampled.extend(pool[i] for i in picks)
        fleet[year] = sampled
    return fleet


def _immediate_profile(energy_kwh: float, charger_kw: float, weight: float,
                       out: np.ndarray) -> None:
    """Accumulate full-power charging from hour 0 until the energy is delivered."""
    remaining = energy_kwh * weight
    power = charger_kw * weight
    h = 0
    while remaining > 1e-12 and h < len(out):
        step = min(power, remaining)
        out[h] += step
        remaining -= step
        h += 1


def vehicle_fixed_profile(energy_kwh: float, charger_kw: float,
                          window_hours: int) -> np.ndarray:
    """50/50 fixed-charging rule for one vehicle, kW per window hour.

    Half charges immediately at full power, half at the lowest constant power
    that completes by departure; the result integrates to ``energy_kwh``.
    """
    if energy_kwh > charger_kw * window_hours + 1e-9:
        raise FleetError(
            f"charge need {energy_kwh:.1f} kWh exceeds {charger_kw:.0f} kW "
            f"x {window_hours} h window")
    out = np.zeros(window_hours)
    _immediate_profile(energy_kwh, charger_kw, 0.5, out)
    out += 0.5 * energy_kwh / window_hours
    return out


def cluster_vehicles(fleet: dict[int, list[Vehicle]], config: EvConfig,
                     zone: str, threshold: float | None = None,
                     ) -> tuple[list[EvCluster], dict[int, dict]]:
    """Group vehicles by rounded charge window; small clusters go unmodeled.

    Returns the modeled clusters and, per year, the unmodeled remainder:
    vehicle count and a 24-hour immediate-charge load profile (MW by hour of
    day).  Vehicles whose window is empty or too short to recharge are also
    routed to the unmodeled remainder.
    """
    threshold = config.cluster_threshold if threshold is None else threshold
    clusters: dict[tuple[int, int], EvCluster] = {}
    unmodeled: dict[int, dict] = {}

    for year, vehicles in sorted(fleet.items()):
        total = len(vehicles)
        bg = np.zeros(24)
        bg_count = 0
        groups: dict[tuple[int, int], list[Vehicle]] = {}
        for veh in vehicles:
            t_depot, t_drive = round_window(veh.arrival_min, veh.depart_min)
            t_delta = 24 if t_depot > t_drive else 0
            window = t_drive + t_delta - t_depot
            need_kwh = (veh.capacity_kwh * config.drive_soc_frac
                        - veh.soc_arrival_kwh) / config.eta_c
            if window <= 0 or need_kwh > veh.charger_kw * window + 1e-9:
                _spill_to_background(bg, veh, need_kwh, t_depot)
                bg_count += 1
                continue
            groups.setdefault((t_depot, t_drive), []).append(veh)

        for key in sorted(groups):
            members = groups[key]
            if total and len(members) / total < threshold:
                for veh in members:
                    t_depot, _ = round_window(veh.arrival_min, veh.depart_min)
                    need_kwh = (veh.capacity_kwh * config.drive_soc_frac
                                - veh.soc_arrival_kwh) / config.eta_c
                    _spill_to_background(bg, veh, need_kwh, t_depot)
                bg_count += len(members)
                continue
            cluster = clusters.setdefault(key, EvCluster(
                id=f"c{key[0]:02d}_{key[1]:02d}", zone=zone,
                t_depot=key[0], t_drive=key[1],
                eta_c=config.eta_c, eta_d=config.eta_d))
            window = cluster.window_hours
            profile_kw = np.zeros(window)
            cap = soc_arr = 0.0
            for veh in members:
                need_kwh = (veh.capacity_kwh * config.drive_soc_frac
                            - veh.soc_arrival_kwh) / config.eta_c
                profile_kw += vehicle_fixed_profile(need_kwh, veh.charger_kw, window)
                cap += veh.capacity_kwh
                soc_arr += veh.soc_arrival_kwh
            cluster.years[year] = ClusterYear(
                count=len(members),
                p_max_mw=sum(v.charger_kw for v in members) / 1000.0,
                cap_mwh=cap / 1000.0,
                soc_min_mwh=config.soc_min_frac * cap / 1000.0,
                soc_depot_mwh=soc_arr / 1000.0,
                soc_drive_mwh=config.drive_soc_frac * cap / 1000.0,
                profile_mw=profile_kw / 1000.0)
        unmodeled[year] = {"count": bg_count, "profile_mw": bg / 1000.0}

    return [clusters[k] for k in sorted(clusters)], unmodeled


def _spill_to_background(bg: np.ndarray, veh: Vehicle, need_kwh: float,
                         t_depot: int) -> None:
    """Immediate full-power charge wrapped around the day clock."""
    remaining = max(need_kwh, 0.0)
    h = t_depot
    while remaining > 1e-12:
        step = min(veh.charger_kw, remaining)
        bg[h % 24] += step
        remaining -= step
        h += 1


def coverage(clusters: list[EvCluster], unmodeled: dict[int, dict]) -> float:
    """Fraction of all vehicle-years captured by controllable clusters."""
    modeled = sum(cy.count for c in clusters for cy in c.years.values())
    spilled = sum(info["count"] for info in unmodeled.values())
    denom = modeled + spilled
    return modeled / denom if denom else 0.0


# -- constraint emission --------------------------------------------------


def add_ev_constraints(block: DispatchBlock, cluster: EvCluster, regime: str,
                       config: EvConfig) -> None:
    """Emit one cluster's dispatch structure into a block.

    fixed: the charging profile enters as load, no variables.
    v1g:   controlled charging, no discharge.
    v2g:   bidirectional with a mode binary excluding simultaneous flows.
    """
    if regime not in REGIMES:
        raise FleetError(f"unknown charging regime {regime!r}")
    year = block.system.grid.years[block.yi]
    if year not in cluster.years:
        return
    cy = cluster.years[year]
    T = block.hours
    if T % 24:
        raise FleetError("EV constraints need whole modeled days")
    days = T // 24
    window = cluster.window_hours
    start0 = cluster.t_depot

    if regime == "fixed":
        for d in range(days):
            for i in range(window):
                block.add_fixed_load(cluster.zone, tau(start0 + d * 24 + i, T),
                                     float(cy.profile_mw[i]))
        return

    if cy.soc_drive_mwh - cy.soc_depot_mwh > cluster.eta_c * cy.p_max_mw * window + 1e-9:
        raise FleetError(f"cluster {cluster.id} cannot recharge within its window")
    for name, val in (("depot", cy.soc_depot_mwh), ("drive", cy.soc_drive_mwh)):
        if not cy.soc_min_mwh - 1e-9 <= val <= cy.cap_mwh + 1e-9:
            raise FleetError(
                f"cluster {cluster.id}: pinned {name} SoC {val:.3f} MWh is outside "
                f"[{cy.soc_min_mwh:.3f}, {cy.cap_mwh:.3f}]")

    m = block.model
    reg = {"zone": cluster.zone, "pc_by_hour": {}, "pd_by_hour": {},
           "soc_by_hour": {}, "mode_by_hour": {}, "pin_hours": []}
    for d in range(days):
        start = start0 + d * 24
        end = start + window
        soc = {h: block.model.add_var(
            f"b{block.yi}.{block.wi}.evsoc.{cluster.id}[{tau(h, T)}]",
            lb=cy.soc_min_mwh, ub=cy.cap_mwh) for h in range(start, end + 1)}
        block.all_vars.extend(soc.values())
        m.add_eq(term(soc[start]), cy.soc_depot_mwh)
        m.add_eq(term(soc[end]), cy.soc_drive_mwh)
        reg["pin_hours"].append((tau(start, T), tau(end, T)))
        for h in range(start, end + 1):
            reg["soc_by_hour"][tau(h, T)] = soc[h]
        for h in range(start, end):
            pos = tau(h, T)
            pc = m.add_var(f"b{block.yi}.{block.wi}.evpc.{cluster.id}[{pos}]",
                           ub=cy.p_max_mw)
            block.all_vars.append(pc)
            reg["pc_by_hour"][pos] = pc
            block.balance[cluster.zone][pos].add_term(pc, -1.0)
            soc_gain = cluster.eta_c * term(pc)
            if regime == "v2g":
                pd = m.add_var(f"b{block.yi}.{block.wi}.evpd.{cluster.id}[{pos}]",
                               ub=cy.p_max_mw)
                ve = m.add_var(f"b{block.yi}.{block.wi}.evv.{cluster.id}[{pos}]",
                               binary=True)
                block.all_vars.extend((pd, ve))
                reg["pd_by_hour"][pos] = pd
                reg["mode_by_hour"][pos] = ve
                m.add_le(term(pc) + cy.p_max_mw * term(ve), cy.p_max_mw)
                m.add_le(term(pd) - cy.p_max_mw * term(ve))
                block.balance[cluster.zone][pos].add_term(pd, 1.0)
                drain = (1.0 / cluster.eta_d if config.discharge_divides_eta
                         else cluster.eta_d)
                soc_gain = soc_gain - drain * term(pd)
            m.add_eq(term(soc[h + 1]) - term(soc[h]) - soc_gain)
    block.vars[("ev", cluster.id)] = reg


# -- file interfaces ------------------------------------------------------


def load_drive_records(path: Path) -> list[DriveRecord]:
    df = pd.read_csv(path)
    want = ["class", "vocation", "start_hhmm", "end_hhmm", "miles"]
    if list(df.columns) != want:
        raise FleetError(f"{path.name}: expected columns {want}, got {list(df.columns)}")
    return [DriveRecord(vclass=str(r["class"]), vocation=str(r["vocation"]),
                        start_min=parse_hhmm(r["start_hhmm"]),
                        end_min=parse_hhmm(r["end_hhmm"]),
                        miles=float(r["miles"]))
            for _, r in df.iterrows()]


def load_population(path: Path) -> dict[tuple[int, str, str], float]:
    df = pd.read_csv(path)
    want = ["year", "class", "vocation", "count"]
    if list(df.columns) != want:
        raise FleetError(f"{path.name}: expected columns {want}, got {list(df.columns)}")
    out: dict[tuple[int, str, str], float] = {}
    for _, r in df.iterrows():
        key = (int(r["year"]), str(r["class"]), str(r["vocation"]))
        count = float(r["count"])
        if count < 0:
            raise FleetError(f"{path.name}: negative count for {key}")
        out[key] = out.get(key, 0.0) + count
    return out


def write_clusters(clusters: list[EvCluster], unmodeled: dict[int, dict],
                   directory: Path) -> None:
    rows = []
    for c in clusters:
        for year, cy in sorted(c.years.items()):
            rows.append({"cluster": c.id, "zone": c.zone, "depot_hour": c.t_depot,
                         "drive_hour": c.t_drive, "year": year, "count": cy.count,
                         "p_max_mw": cy.p_max_mw, "cap_mwh": cy.cap_mwh,
                         "soc_min_mwh": cy.soc_min_mwh,
                         "soc_depot_mwh": cy.soc_depot_mwh,
                         "soc_drive_mwh": cy.soc_drive_mwh})
    pd.DataFrame(rows).to_csv(directory / "clusters.csv", index=False)
    prof = []
    for c in clusters:
        for year, cy in sorted(c.years.items()):
            for i, mw in enumerate(cy.profile_mw):
                prof.append({"cluster": c.id, "year": year,
                             "hour": (c.t_depot + i) % 24, "mw": mw})
    for year, info in sorted(unmodeled.items()):
        for hour, mw in enumerate(info["profile_mw"]):
            if mw:
                prof.append({"cluster": "unmodeled", "year": year,
                             "hour": hour, "mw": mw})
    pd.DataFrame(prof).to_csv(directory / "fixed_profiles.csv", index=False)


def load_background_profiles(directory: Path) -> dict[int, np.ndarray]:
    """Uncontrolled (unmodeled) charging load by year, MW per hour of day."""
    path = directory / "fixed_profiles.csv"
    if not path.exists():
        return {}
    profs = pd.read_csv(path)
    out: dict[int, np.ndarray] = {}
    for _, r in profs[profs["cluster"] == "unmodeled"].iterrows():
        arr = out.setdefault(int(r["year"]), np.zeros(24))
        arr[int(r["hour"])] += float(r["mw"])
    return out


def load_clusters(directory: Path, eta_c: float, eta_d: float) -> list[EvCluster]:
    """Read cluster parameters and fixed profiles written by the clustering pass."""
    cpath = directory / "clusters.csv"
    df = pd.read_csv(cpath)
    want = ["cluster", "zone", "depot_hour", "drive_hour", "year", "count",
            "p_max_mw", "cap_mwh", "soc_min_mwh", "soc_depot_mwh", "soc_drive_mwh"]
    if list(df.columns) != want:
        raise FleetError(f"{cpath.name}: expected columns {want}, got {list(df.columns)}")
    profs = pd.read_csv(directory / "fixed_profiles.csv")
    pwant = ["cluster", "year", "hour", "mw"]
    if list(profs.columns) != pwant:
        raise FleetError(f"fixed_profiles.csv: expected columns {pwant}")

    clusters: dict[str, EvCluster] = {}
    for _, r in df.iterrows():
        cid = str(r["cluster"])
        c = clusters.setdefault(cid, EvCluster(
            id=cid, zone=str(r["zone"]), t_depot=int(r["depot_hour"]),
            t_drive=int(r["drive_hour"]), eta_c=eta_c, eta_d=eta_d))
        year = int(r["year"])
        window = c.window_hours
        if window <= 0:
            raise FleetError(f"cluster {cid}: empty charge window")
        rows = profs[(profs["cluster"] == cid) & (profs["year"] == year)]
        profile = np.zeros(window)
        for _, p in rows.iterrows():
            offset = (int(p["hour"]) - c.t_depot) % 24
            if offset >= window:
                raise FleetError(f"cluster {cid}: profile hour outside charge window")
            profile[offset] = float(p["mw"])
        cy = ClusterYear(
            count=float(r["count"]), p_max_mw=float(r["p_max_mw"]),
            cap_mwh=float(r["cap_mwh"]), soc_min_mwh=float(r["soc_min_mwh"]),
            soc_depot_mwh=float(r["soc_depot_mwh"]),
            soc_drive_mwh=float(r["soc_drive_mwh"]), profile_mw=profile)
        if not (cy.soc_min_mwh - 1e-9 <= cy.soc_depot_mwh
                <= cy.soc_drive_mwh + 1e-9
                and cy.soc_drive_mwh <= cy.cap_mwh + 1e-9):
            raise FleetError(f"cluster {cid} year {year}: SoC ordering violated")
        c.years[year] = cy
    return [clusters[k] for k in sorted(clusters)]
