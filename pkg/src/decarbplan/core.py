"""Domain types, time-grid arithmetic, and system validation.

All quantities are immutable after scenario load and safe to share across
solver workers.  Hours are 0-based throughout; monetary values are 2025
dollars.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HOURS_PER_YEAR = 8760


def tau(t: int, period_hours: int) -> int:
    """Cyclic hour mapping: the hour before 0 is the last hour of the period."""
    return t % period_hours


@dataclass(frozen=True)
class TimeGrid:
    years: tuple[int, ...]
    year_weights: tuple[float, ...]
    period_ids: tuple[str, ...]
    period_weights: tuple[float, ...]
    hours_per_period: int

    @property
    def num_years(self) -> int:
        return len(self.years)

    @property
    def num_periods(self) -> int:
        return len(self.period_ids)

    @property
    def days_per_period(self) -> int:
        return self.hours_per_period // 24

    def tail_weight(self, year_index: int) -> float:
        """Sum of year weights from ``year_index`` to the end of the horizon."""
        return float(sum(self.year_weights[year_index:]))


@dataclass(frozen=True)
class Zone:
    id: str
    policy_zone: bool = False


@dataclass(frozen=True)
class Line:
    id: str
    zone_from: str  # incidence -1
    zone_to: str    # incidence +1
    limit_mw: float
    wheeling_cost: float = 0.0
    import_emis_rate: float = 0.0

    def incidence(self, zone: str) -> int:
        if zone == self.zone_to:
            return 1
        if zone == self.zone_from:
            return -1
        return 0


@dataclass(frozen=True)
class ThermalUnit:
    id: str
    zone: str
    p_min: float
    p_max: float
    ramp_up: float
    ramp_down: float
    min_up: int
    min_down: int
    startup_cost: float
    shutdown_cost: float
    cost_slope: float      # $/MWh
    cost_intercept: float  # $/h while committed
    emis_slope: float      # ton/MWh
    emis_intercept: float  # ton/h while committed
    nqc: float
    candidate: bool = False
    retirable: bool = False
    planned: tuple[int, ...] = ()   # operational status per year absent decisions
    capital: float = 0.0            # $ per unit
    maintenance: float = 0.0        # $ per unit-year
    lifetime: int = 30


@dataclass(frozen=True)
class RenewableResource:
    id: str
    zone: str
    curtailable: bool
    rps_eligible: bool
    elcc_axis: str                  # wind | solar | none
    curtailment_cost: float
    candidate: bool = False
    planned_mw: tuple[float, ...] = ()
    profile: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))  # (period, hour) -> PF
    capital: float = 0.0            # $/MW
    maintenance: float = 0.0        # $/MW-yr
    lifetime: int = 30

    def __eq__(self, other):  # profile array breaks the generated __eq__
        return isinstance(other, RenewableResource) and other.id == self.id

    def __hash__(self):
        return hash(self.id)


@dataclass(frozen=True)
class StorageResource:
    id: str
    zone: str
    planned_mw: tuple[float, ...]
    planned_mwh: tuple[float, ...]
    eta_c: float
    eta_d: float
    self_discharge: float
    soc_max_frac: float
    soc_min_frac: float
    min_charge_hours: int
    min_discharge_hours: int
    candidate: bool = False
    max_power: float = 0.0          # installable cap, also the big-M on rates
    max_energy: float = 0.0
    capital_power: float = 0.0      # $/MW
    capital_energy: float = 0.0     # $/MWh
    maintenance_power: float = 0.0
    maintenance_energy: float = 0.0
    lifetime: int = 20


@dataclass(frozen=True)
class HydroUnit:
    id: str
    zone: str
    p_min: float
    p_max: float
    ramp: float
    budget_mwh: tuple[float, ...]   # per representative period
    nqc: float = 1.0
    maintenance: float = 0.0        # $/MW-yr on fixed capacity


@dataclass(frozen=True)
class ElccPlane:
    surface: str                    # "vr" or "storage"
    year: int
    intercept_mw: float
    wind_slope: float = 0.0
    solar_slope: float = 0.0
    storage_slope: float = 0.0


@dataclass(frozen=True)
class PolicyInputs:
    emissions_cap: dict[int, float]      # ton/yr by year
    rps_fraction: dict[int, float]
    prm_mw: dict[int, float]
    elcc_planes: tuple[ElccPlane, ...] = ()

    def planes(self, surface: str, year: int) -> list[ElccPlane]:
        return [p for p in self.elcc_planes if p.surface == surface and p.year == year]


@dataclass(frozen=True)
class EvConfig:
    mode: str = "clusters"          # clusters | fleet
    zone: str = ""
    eta_c: float = 0.95
    eta_d: float = 0.95
    cluster_threshold: float = 0.001
    discharge_divides_eta: bool = False  # SoC recursion convention switch
    soc_min_frac: float = 0.0
    drive_soc_frac: float = 1.0     # SoC fraction required at drive start


@dataclass(frozen=True)
class SystemData:
    name: str
    grid: TimeGrid
    zones: tuple[Zone, ...]
    lines: tuple[Line, ...]
    thermal: tuple[ThermalUnit, ...]
    renewables: tuple[RenewableResource, ...]
    storage: tuple[StorageResource, ...]
    hydro: tuple[HydroUnit, ...]
    policy: PolicyInputs
    load: np.ndarray                # (zone, year, period, hour) MW
    ev_config: EvConfig
    discount_rate: float = 0.05

    @property
    def zone_ids(self) -> list[str]:
        return [z.id for z in self.zones]

    @property
    def policy_zone(self) -> str:
        return next(z.id for z in self.zones if z.policy_zone)

    def zone_index(self, zone: str) -> int:
        return self.zone_ids.index(zone)

    def peak_load(self, zone: str) -> float:
        return float(self.load[self.zone_index(zone)].max())


@dataclass(frozen=True)
class Violation:
    where: str
    message: str

    def __str__(self):
        return f"{self.where}: {self.message}"


def capital_recovery_factor(rate: float, lifetime: int) -> float:
    """Annualization factor; a zero rate degrades to straight-line 1/n."""
    if lifetime <= 0:
        raise ValueError("lifetime must be positive")
    if rate == 0.0:
        return 1.0 / lifetime
    g = (1.0 + rate) ** lifetime
    return rate * g / (g - 1.0)


def validate_system(data: SystemData) -> list[Violation]:
    """Check every structural invariant; an empty list means well-formed."""
    out: list[Violation] = []
    grid = data.grid

    if grid.hours_per_period <= 0 or grid.hours_per_period % 24:
        out.append(Violation("time_grid", "hours_per_period must be a positive multiple of 24"))
    covered = sum(w * grid.hours_per_period for w in grid.period_weights)
    if abs(covered - HOURS_PER_YEAR) > 1e-6:
        out.append(Violation(
            "time_grid",
            f"period weights cover {covered:g} hours per year, expected {HOURS_PER_YEAR}"))
    if any(w <= 0 for w in grid.year_weights):
        out.append(Violation("time_grid", "year weights must be strictly positive"))
    if len(grid.year_weights) != len(grid.years):
        out.append(Violation("time_grid", "one weight required per year"))

    n_policy = sum(z.policy_zone for z in data.zones)
    if n_policy != 1:
        out.append(Violation("zones", f"exactly one policy zone required, found {n_policy}"))
    zone_ids = set(data.zone_ids)
    if len(zone_ids) != len(data.zones):
        out.append(Violation("zones", "duplicate zone ids"))
    if np.any(data.load < 0):
        out.append(Violation("load", "negative load"))
    want_shape = (len(data.zones), grid.num_years, grid.num_periods, grid.hours_per_period)
    if data.load.shape != want_shape:
        out.append(Violation("load", f"load shape {data.load.shape} != {want_shape}"))

    for ln in data.lines:
        if ln.zone_from not in zone_ids or ln.zone_to not in zone_ids:
            out.append(Violation(f"lines/{ln.id}", "unknown endpoint zone"))
        if ln.zone_from == ln.zone_to:
            out.append(Violation(f"lines/{ln.id}", "line must join two distinct zones"))
        if ln.limit_mw <= 0:
            out.append(Violation(f"lines/{ln.id}", "flow limit must be positive"))
        if ln.import_emis_rate < 0:
            out.append(Violation(f"lines/{ln.id}", "import emission rate must be non-negative"))

    policy_zone = next((z.id for z in data.zones if z.policy_zone), None)
    for u in data.thermal:
        tag = f"thermal/{u.id}"
        if u.zone not in zone_ids:
            out.append(Violation(tag, "unknown zone"))
        if not 0 <= u.p_min <= u.p_max:
            out.append(Violation(tag, "need 0 <= p_min <= p_max"))
        if not 0 <= u.nqc <= 1:
            out.append(Violation(tag, "NQC must lie in [0, 1]"))
        if len(u.planned) != grid.num_years:
            out.append(Violation(tag, "planned status needs one entry per year"))
        if u.candidate and u.zone != policy_zone:
            out.append(Violation(tag, "candidate units are restricted to the policy zone"))

    for r in data.renewables:
        tag = f"renewables/{r.id}"
        if r.zone not in zone_ids:
            out.append(Violation(tag, "unknown zone"))
        if r.profile.shape != (grid.num_periods, grid.hours_per_period):
            out.append(Violation(tag, "production-factor profile must cover every block hour"))
        elif np.any(r.profile < 0) or np.any(r.profile > 1):
            out.append(Violation(tag, "production factors must lie in [0, 1]"))
        if len(r.planned_mw) != grid.num_years:
            out.append(Violation(tag, "planned capacity needs one entry per year"))
        if r.elcc_axis not in ("wind", "solar", "none"):
            out.append(Violation(tag, f"unknown elcc_axis {r.elcc_axis!r}"))
        if r.candidate and r.zone != policy_zone:
            out.append(Violation(tag, "candidate resources are restricted to the policy zone"))

    for s in data.storage:
        tag = f"storage/{s.id}"
        if s.zone not in zone_ids:
            out.append(Violation(tag, "unknown zone"))
        if not (0 < s.eta_c <= 1 and 0 < s.eta_d <= 1):
            out.append(Violation(tag, "efficiencies must lie in (0, 1]"))
        if not 0 < s.soc_max_frac <= 1:
            out.append(Violation(tag, "SoC headroom fraction must lie in (0, 1]"))
        if not 0 <= s.soc_min_frac < s.soc_max_frac:
            out.append(Violation(tag, "SoC footroom must lie below headroom"))
        if len(s.planned_mw) != grid.num_years or len(s.planned_mwh) != grid.num_years:
            out.append(Violation(tag, "planned capacities need one entry per year"))
        if s.candidate and (s.max_power <= 0 or s.max_energy <= 0):
            out.append(Violation(tag, "candidate storage needs positive max_power/max_energy"))
        if s.candidate and s.zone != policy_zone:
            out.append(Violation(tag, "candidate resources are restricted to the policy zone"))

    for h in data.hydro:
        tag = f"hydro/{h.id}"
        if h.zone not in zone_ids:
            out.append(Violation(tag, "unknown zone"))
        if not 0 <= h.p_min <= h.p_max:
            out.append(Violation(tag, "need 0 <= p_min <= p_max"))
        if len(h.budget_mwh) != grid.num_periods:
            out.append(Violation(tag, "energy budget needs one entry per period"))
        else:
            for pid, budget in zip(grid.period_ids, h.budget_mwh):
                if budget < h.p_min * grid.hours_per_period:
                    out.append(Violation(
                        tag, f"period {pid} budget below minimum-output energy"))

    for y in grid.years:
        for name, table in (("emissions_cap", data.policy.emissions_cap),
                            ("rps_fraction", data.policy.rps_fraction),
                            ("prm_mw", data.policy.prm_mw)):
            if y not in table:
                out.append(Violation("policy", f"{name} missing for year {y}"))
        if data.policy.emissions_cap.get(y, 0.0) < 0:
            out.append(Violation("policy", f"emissions cap negative in {y}"))
        rps = data.policy.rps_fraction.get(y, 0.0)
        if not 0 <= rps <= 1:
            out.append(Violation("policy", f"RPS fraction out of [0, 1] in {y}"))

    for p in data.policy.elcc_planes:
        tag = f"elcc/{p.surface}/{p.year}"
        if p.surface not in ("vr", "storage"):
            out.append(Violation(tag, "surface must be 'vr' or 'storage'"))
        if min(p.wind_slope, p.solar_slope, p.storage_slope) < 0:
            out.append(Violation(tag, "credit must be non-decreasing: slopes must be >= 0"))

    if data.ev_config.zone and data.ev_config.zone not in zone_ids:
        out.append(Violation("ev", f"unknown EV zone {data.ev_config.zone!r}"))
    if not 0 < data.ev_config.eta_c <= 1 or not 0 < data.ev_config.eta_d <= 1:
        out.append(Violation("ev", "charger efficiencies must lie in (0, 1]"))

    return out


class ValidationError(ValueError):
    def __init__(self, violations: list[Violation]):
        self.violations = violations
        super().__init__("; ".join(str(v) for v in violations))


def ensure_valid(data: SystemData) -> SystemData:
    violations = validate_system(data)
    if violations:
        raise ValidationError(violations)
    return data
