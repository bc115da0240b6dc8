"""Reporting layer: run orchestration, savings, and charger economics."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from . import ev as evmod
from .core import SystemData
from .linmodel import BackendOptions
from .plan import build_planning_model
from .scenario import load_system
from .slr import SlrConfig, SlrEngine, solve_monolithic
from .solution import PlanSolution

log = logging.getLogger(__name__)

CHARGER_COST = 142_200.0        # $ per charger
CHARGER_POWER_MW = 0.15
INVERTER_COST_PER_KW = 50.0


@dataclass
class SavingsReport:
    baseline_regime: str
    alternative_regime: str
    per_vehicle_year: dict[int, float]   # $ per vehicle, undiscounted

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [{"year": y, "savings_per_vehicle": v}
             for y, v in sorted(self.per_vehicle_year.items())])


def levelized_savings(baseline: PlanSolution, alternative: PlanSolution,
                      counts: dict[int, float]) -> SavingsReport:
    """Undiscounted per-vehicle-year system cost savings of the
    alternative charging regime over the baseline."""
    if baseline.scenario != alternative.scenario:
        raise ValueError("savings comparison requires the same scenario")
    out = {}
    for year, comps in baseline.costs.items():
        n = counts.get(year, 0.0)
        if n <= 0:
            continue
        out[year] = (comps["total"] - alternative.costs[year]["total"]) / n
    return SavingsReport(baseline.regime, alternative.regime, out)


@dataclass
class ChargerReport:
    policy: str
    v2g: bool
    chargers: dict[int, int]
    capital: dict[int, float]
    total: float = field(init=False)

    def __post_init__(self):
        self.total = sum(self.capital.values())


def charger_costs(counts: dict[int, float], *, policy: str = "dedicated",
                  v2g: bool = False,
                  peak_mw: dict[int, float] | None = None) -> ChargerReport:
    """Charger fleet capital.  ``dedicated`` gives every vehicle charging
    on a given day its own plug; ``peak-shared`` sizes the pool to the
    peak hourly charging demand instead."""
    if policy not in ("dedicated", "peak-shared"):
        raise ValueError(f"unknown charger policy {policy!r}")
    chargers: dict[int, int] = {}
    for year, n in sorted(counts.items()):
        if policy == "dedicated":
            chargers[year] = int(math.ceil(n))
        else:
            if peak_mw is None or year not in peak_mw:
                raise ValueError("peak-shared policy needs peak charging MW "
                                 f"for year {year}")
            chargers[year] = int(math.ceil(peak_mw[year] / CHARGER_POWER_MW))
    unit = CHARGER_COST
    if v2g:
        unit += INVERTER_COST_PER_KW * CHARGER_POWER_MW * 1000.0
    capital = {y: c * unit for y, c in chargers.items()}
    return ChargerReport(policy=policy, v2g=v2g, chargers=chargers,
                         capital=capital)


def ev_peak_charging_mw(solution: PlanSolution) -> dict[int, float]:
    """Peak hourly EV charging demand per year from the solved series."""
    df = solution.series
    out = {}
    for year, sub in df.groupby("year"):
        out[int(year)] = float(sub["ev_charge_mw"].max())
    return out


@dataclass
class RunConfig:
    scenario: Path
    regime: str = "v2g"
    mode: str = "slr"
    seed: int = 0
    outdir: Path | None = None
    gap: float = 1e-4
    time_limit: float | None = None
    slr: SlrConfig = field(default_factory=SlrConfig)


def load_run_inputs(scenario_dir: Path
                    ) -> tuple[SystemData, list, dict]:
    """System data plus any pre-clustered fleet shipped with the scenario."""
    system = load_system(scenario_dir)
    clusters: list = []
    background: dict[int, np.ndarray] = {}
    if (scenario_dir / "clusters.csv").exists():
        cfg = system.ev_config
        clusters = evmod.load_clusters(scenario_dir, cfg.eta_c, cfg.eta_d)
        background = evmod.load_background_profiles(scenario_dir)
    return system, clusters, background


def run(config: RunConfig) -> PlanSolution:
    if config.regime not in evmod.REGIMES:
        raise ValueError(f"unknown regime {config.regime!r}")
    if config.mode not in ("slr", "monolithic"):
        raise ValueError(f"unknown mode {config.mode!r}")
    system, clusters, background = load_run_inputs(config.scenario)
    pm = build_planning_model(system, clusters, config.regime,
                              background=background)
    options = BackendOptions(gap=config.gap, time_limit=config.time_limit)
    outdir = config.outdir
    if config.mode == "monolithic":
        solution = solve_monolithic(pm, options=options)
    else:
        engine = SlrEngine(pm, config.slr)
        engine.run_dual()
        if outdir is not None:
            outdir.mkdir(parents=True, exist_ok=True)
            engine.write_log(outdir / "iterations.csv")
        solution = engine.recover_primal(options=options)
    if outdir is not None:
        solution.write(outdir)
    log.info("run %s/%s/%s objective=%.2f max_residual=%.4g",
             system.name, config.regime, config.mode, solution.objective,
             solution.max_residual)
    return solution


def vehicle_counts(clusters, unmodeled: dict | None = None) -> dict[int, float]:
    counts: dict[int, float] = {}
    for cluster in clusters:
        for year, cy in cluster.years.items():
            counts[year] = counts.get(year, 0.0) + cy.count
    for year, info in (unmodeled or {}).items():
        counts[year] = counts.get(year, 0.0) + info.get("count", 0.0)
    return counts
