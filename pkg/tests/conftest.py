import json
from pathlib import Path

import numpy as np
import pytest

from decarbplan.analysis import load_run_inputs
from decarbplan.core import (ElccPlane, EvConfig, HydroUnit, Line,
                             PolicyInputs, RenewableResource, StorageResource,
                             SystemData, ThermalUnit, TimeGrid, Zone,
                             ensure_valid)
from decarbplan.ev import ClusterYear, EvCluster
from decarbplan.linmodel import BackendOptions
from decarbplan.plan import build_planning_model
from decarbplan.slr import solve_monolithic

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

# one line per acceptance criterion, printed after the run summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def make_grid(years=(2030,), year_weights=None, period_weights=(365.0,),
              hours=24):
    year_weights = year_weights or tuple(1.0 for _ in years)
    ids = tuple(f"p{i + 1}" for i in range(len(period_weights)))
    return TimeGrid(years=tuple(years), year_weights=tuple(year_weights),
                    period_ids=ids, period_weights=tuple(period_weights),
                    hours_per_period=hours)


def make_thermal(uid="gas1", zone="z0", p_min=20.0, p_max=120.0, ramp=60.0,
                 min_up=2, min_down=2, slope=40.0, intercept=200.0, **kw):
    defaults = dict(startup_cost=500.0, shutdown_cost=100.0, emis_slope=0.4,
                    emis_intercept=1.0, nqc=1.0, candidate=False,
                    retirable=False, planned=(1,), maintenance=10_000.0)
    defaults.update(kw)
    return ThermalUnit(id=uid, zone=zone, p_min=p_min, p_max=p_max,
                       ramp_up=ramp, ramp_down=ramp, min_up=min_up,
                       min_down=min_down, cost_slope=slope,
                       cost_intercept=intercept, **defaults)


def solar_profile(hours=24, peak=1.0):
    out = np.zeros(hours)
    for t in range(hours):
        if 6 <= t % 24 < 19:
            out[t] = peak * np.sin((t % 24 - 6) / 13 * np.pi)
    return np.clip(out, 0.0, 1.0)


def make_system(name="toy", load_base=100.0, load_amp=40.0, grid=None,
                thermal=None, renewables=None, storage=None, hydro=None,
                lines=None, zones=None, policy=None, ev_config=None,
                load=None, discount_rate=0.05):
    grid = grid or make_grid()
    zones = zones or (Zone("z0", policy_zone=True),)
    if load is None:
        load = np.zeros((len(zones), grid.num_years, grid.num_periods,
                         grid.hours_per_period))
        t = np.arange(grid.hours_per_period)
        load[:] = load_base + load_amp * np.sin(t / 24 * 2 * np.pi)
    if thermal is None:
        thermal = (make_thermal("gas1", planned=(1,) * grid.num_years),
                   make_thermal("gas2", p_min=10, p_max=80, ramp=40.0,
                                min_up=1, min_down=1, slope=55.0,
                                intercept=100.0, startup_cost=300.0,
                                shutdown_cost=50.0, emis_slope=0.5,
                                emis_intercept=0.5, retirable=True,
                                planned=(1,) * grid.num_years,
                                maintenance=8_000.0))
    if renewables is None:
        prof = np.tile(solar_profile(grid.hours_per_period),
                       (grid.num_periods, 1))
        renewables = (RenewableResource(
            id="pv", zone=zones[0].id, curtailable=True, rps_eligible=True,
            elcc_axis="solar", curtailment_cost=0.0, candidate=True,
            planned_mw=(50.0,) * grid.num_years, profile=prof,
            capital=1.0e6, maintenance=2.0e4, lifetime=25),)
    if storage is None:
        storage = (StorageResource(
            id="bat", zone=zones[0].id,
            planned_mw=(10.0,) * grid.num_years,
            planned_mwh=(40.0,) * grid.num_years,
            eta_c=0.92, eta_d=0.92, self_discharge=0.001, soc_max_frac=1.0,
            soc_min_frac=0.05, min_charge_hours=1, min_discharge_hours=1,
            candidate=True, max_power=100.0, max_energy=400.0,
            capital_power=2.0e5, capital_energy=1.5e5,
            maintenance_power=5e3, maintenance_energy=1e3, lifetime=15),)
    if hydro is None:
        hydro = (HydroUnit("hy", zones[0].id, p_min=5.0, p_max=30.0,
                           ramp=20.0,
                           budget_mwh=(400.0,) * grid.num_periods, nqc=0.9,
                           maintenance=1e3),)
    if policy is None:
        policy = PolicyInputs(
            emissions_cap={y: 5.0e5 for y in grid.years},
            rps_fraction={y: 0.2 for y in grid.years},
            prm_mw={y: 160.0 for y in grid.years},
            elcc_planes=tuple(
                p for y in grid.years for p in (
                    ElccPlane("vr", y, 0.0, wind_slope=0.1, solar_slope=0.5),
                    ElccPlane("vr", y, 20.0, solar_slope=0.2),
                    ElccPlane("storage", y, 0.0, storage_slope=0.9))))
    ev_config = ev_config or EvConfig(zone=zones[0].id, soc_min_frac=0.1)
    return ensure_valid(SystemData(
        name=name, grid=grid, zones=zones, lines=lines or (),
        thermal=tuple(thermal), renewables=tuple(renewables),
        storage=tuple(storage), hydro=tuple(hydro), policy=policy,
        load=load, ev_config=ev_config, discount_rate=discount_rate))


def make_cluster(year=2030, count=100, t_depot=19, t_drive=7,
                 cap_mwh=30.0, p_max_mw=15.0, depot_frac=0.4,
                 eta_c=0.95, eta_d=0.95):
    cluster = EvCluster(id=f"c{t_depot:02d}_{t_drive:02d}", zone="z0",
                        t_depot=t_depot, t_drive=t_drive, eta_c=eta_c,
                        eta_d=eta_d)
    window = cluster.window_hours
    depot = depot_frac * cap_mwh
    need = (cap_mwh - depot) / eta_c
    cluster.years[year] = ClusterYear(
        count=count, p_max_mw=p_max_mw, cap_mwh=cap_mwh,
        soc_min_mwh=0.1 * cap_mwh, soc_depot_mwh=depot,
        soc_drive_mwh=cap_mwh, profile_mw=np.full(window, need / window))
    return cluster


@pytest.fixture(scope="session")
def tiny_system():
    return make_system()


@pytest.fixture(scope="session")
def tiny_cluster():
    return make_cluster()


@pytest.fixture(scope="session")
def toy1z_dir():
    return SCENARIOS / "toy1z"


@pytest.fixture(scope="session")
def toy2z_dir():
    return SCENARIOS / "toy2z"


@pytest.fixture(scope="session")
def fleet_fd_dir():
    return SCENARIOS / "fleet_fd"


@pytest.fixture(scope="session")
def toy2z_inputs(toy2z_dir):
    system, clusters, background = load_run_inputs(toy2z_dir)
    return ensure_valid(system), clusters, background


@pytest.fixture(scope="session")
def toy2z_models(toy2z_inputs):
    system, clusters, background = toy2z_inputs
    return {regime: build_planning_model(system, clusters, regime,
                                         background=background)
            for regime in ("fixed", "v1g", "v2g")}


@pytest.fixture(scope="session")
def toy2z_monolithic(toy2z_models):
    """Monolithic reference solutions, shared across the whole run."""
    opts = BackendOptions(gap=1e-4)
    return {regime: solve_monolithic(pm, options=opts)
            for regime, pm in toy2z_models.items()}


@pytest.fixture(scope="session")
def toy2z_slr(toy2z_models):
    """Timed relaxation run plus primal recovery on the v2g model."""
    import time

    from decarbplan.slr import SlrConfig, SlrEngine
    engine = SlrEngine(toy2z_models["v2g"],
                       SlrConfig(subproblem_gap=1e-4, max_iterations=500))
    t0 = time.monotonic()
    engine.run_dual()
    solution = engine.recover_primal(options=BackendOptions(gap=1e-4))
    return engine, solution, time.monotonic() - t0


@pytest.fixture(scope="session")
def toy1z_solutions(toy1z_dir):
    system, clusters, background = load_run_inputs(toy1z_dir)
    out = {}
    for regime in ("fixed", "v1g", "v2g"):
        pm = build_planning_model(system, clusters, regime,
                                  background=background)
        out[regime] = (pm, solve_monolithic(pm))
    return out
