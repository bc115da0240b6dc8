"""Command-line interface."""

from __future__ import annotations

import logging
import sys
from pathlib import Path

import click

from . import ev as evmod
from .analysis import (RunConfig, SavingsReport, charger_costs,
                       ev_peak_charging_mw, levelized_savings, run,
                       vehicle_counts)
from .core import ValidationError, ensure_valid
from .degradation import (DEFAULT_PRICE_PER_KWH, DEFAULT_TARGET_RESIDUAL,
                          assess, calibrate)
from .linmodel import SolveError
from .scenario import ScenarioError, load_system
from .slr import SlrConfig

log = logging.getLogger(__name__)

_USAGE_ERRORS = (ScenarioError, ValidationError, ValueError,
                 FileNotFoundError, evmod.FleetError)


def _fail(exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(1)


@click.group(name="plan")
@click.option("--verbose", "-v", is_flag=True, help="Debug logging.")
def main(verbose: bool) -> None:
    """Capacity-expansion and unit-commitment planning with truck fleets."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")


scenario_opt = click.option(
    "--scenario", required=True,
    type=click.Path(exists=True, file_okay=False, path_type=Path))
regime_opt = click.option(
    "--regime", type=click.Choice(sorted(evmod.REGIMES)), default="v2g",
    show_default=True)
outdir_opt = click.option(
    "--outdir", type=click.Path(file_okay=False, path_type=Path),
    default=None)


@main.command()
@scenario_opt
def validate(scenario: Path) -> None:
    """Load a scenario and run every structural check."""
    try:
        system = ensure_valid(load_system(scenario))
    except _USAGE_ERRORS as exc:
        _fail(exc)
    click.echo(f"{system.name}: ok ({len(system.zones)} zones, "
               f"{len(system.thermal)} thermal units, "
               f"{system.grid.num_years} years)")


@main.command()
@scenario_opt
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--outdir", type=click.Path(file_okay=False, path_type=Path),
              default=None, help="Defaults to the scenario directory.")
def cluster(scenario: Path, seed: int, outdir: Path | None) -> None:
    """Bootstrap the fleet from drive records and write cluster files."""
    try:
        system = load_system(scenario)
        records = evmod.load_drive_records(scenario / "drives.csv")
        population = evmod.load_population(scenario / "population.csv")
        fleet = evmod.bootstrap_fleet(records, population, seed=seed)
        clusters, unmodeled = evmod.cluster_vehicles(
            fleet, system.ev_config, system.policy_zone)
        target = outdir or scenario
        target.mkdir(parents=True, exist_ok=True)
        evmod.write_clusters(clusters, unmodeled, target)
    except _USAGE_ERRORS as exc:
        _fail(exc)
    cov = evmod.coverage(clusters, unmodeled)
    click.echo(f"{len(clusters)} clusters, coverage {cov:.1%}")


def _run_one(scenario: Path, regime: str, mode: str, seed: int,
             outdir: Path | None, gap: float, time_limit: float | None,
             penalty: float):
    cfg = RunConfig(scenario=scenario, regime=regime, mode=mode, seed=seed,
                    outdir=outdir, gap=gap, time_limit=time_limit,
                    slr=SlrConfig(residual_penalty=penalty))
    return run(cfg)


run_opts = [
    click.option("--mode", type=click.Choice(["slr", "monolithic"]),
                 default="slr", show_default=True),
    click.option("--seed", type=int, default=0, show_default=True),
    click.option("--gap", type=float, default=1e-4, show_default=True),
    click.option("--time-limit", type=float, default=None),
    click.option("--penalty", type=float, default=1000.0, show_default=True,
                 help="$/MWh on relaxed balance residuals."),
]


def _with_run_opts(f):
    for opt in reversed(run_opts):
        f = opt(f)
    return f


@main.command(name="run")
@scenario_opt
@regime_opt
@outdir_opt
@_with_run_opts
def run_cmd(scenario: Path, regime: str, outdir: Path | None, mode: str,
            seed: int, gap: float, time_limit: float | None,
            penalty: float) -> None:
    """Solve one scenario under one charging regime."""
    try:
        solution = _run_one(scenario, regime, mode, seed, outdir, gap,
                            time_limit, penalty)
    except _USAGE_ERRORS as exc:
        _fail(exc)
    except SolveError as exc:
        click.echo(f"solve failed: {exc}", err=True)
        sys.exit(1)
    click.echo(f"{solution.status}: objective ${solution.objective:,.0f}, "
               f"max residual {solution.max_residual:.4g} MW")


@main.command()
@scenario_opt
@outdir_opt
@_with_run_opts
def sweep(scenario: Path, outdir: Path | None, mode: str, seed: int,
          gap: float, time_limit: float | None, penalty: float) -> None:
    """Run all three charging regimes and print the cost comparison."""
    solutions = {}
    try:
        for regime in ("fixed", "v1g", "v2g"):
            sub = (outdir / regime) if outdir else None
            solutions[regime] = _run_one(scenario, regime, mode, seed, sub,
                                         gap, time_limit, penalty)
    except _USAGE_ERRORS as exc:
        _fail(exc)
    except SolveError as exc:
        click.echo(f"solve failed: {exc}", err=True)
        sys.exit(1)
    for regime, sol in solutions.items():
        click.echo(f"{regime:>6}: ${sol.objective:,.0f}")


@main.command()
@scenario_opt
@click.option("--baseline", type=click.Path(file_okay=False, path_type=Path),
              required=True, help="Output directory of the baseline run.")
@click.option("--alternative", type=click.Path(file_okay=False,
                                               path_type=Path), required=True)
def report(scenario: Path, baseline: Path, alternative: Path) -> None:
    """Per-vehicle-year savings between two finished runs."""
    try:
        system, clusters, background = _load_inputs(scenario)
        counts = vehicle_counts(clusters)
        base = _reload_costs(baseline)
        alt = _reload_costs(alternative)
        if base["scenario"] != alt["scenario"]:
            raise ValueError("runs come from different scenarios")
        out = {}
        for year, n in sorted(counts.items()):
            if n <= 0:
                continue
            b = base["costs"][str(year)]["total"]
            a = alt["costs"][str(year)]["total"]
            out[year] = (b - a) / n
        rep = SavingsReport(base["regime"], alt["regime"], out)
    except _USAGE_ERRORS as exc:
        _fail(exc)
    click.echo(rep.to_frame().to_string(index=False))


def _load_inputs(scenario: Path):
    from .analysis import load_run_inputs
    return load_run_inputs(scenario)


def _reload_costs(rundir: Path) -> dict:
    import json
    path = rundir / "plan_solution.json"
    if not path.exists():
        raise FileNotFoundError(f"no plan_solution.json under {rundir}")
    return json.loads(path.read_text())


@main.command()
@scenario_opt
@outdir_opt
@_with_run_opts
@click.option("--price", type=float, default=DEFAULT_PRICE_PER_KWH,
              show_default=True, help="Degradation price, $/kWh.")
def degrade(scenario: Path, outdir: Path | None, mode: str, seed: int,
            gap: float, time_limit: float | None, penalty: float,
            price: float) -> None:
    """Battery-wear comparison across the three regimes.

    The proxy is calibrated so the uncontrolled baseline lands at
    {:.1%} residual capacity at the end of the horizon.""".format(
        DEFAULT_TARGET_RESIDUAL)
    try:
        system = load_system(scenario)
        solutions = {}
        for regime in ("fixed", "v1g", "v2g"):
            sub = (outdir / regime) if outdir else None
            solutions[regime] = _run_one(scenario, regime, mode, seed, sub,
                                         gap, time_limit, penalty)
        scale = calibrate(solutions["fixed"], system.grid)
        for regime, sol in solutions.items():
            rep = assess(sol, system.grid, scale=scale, price_per_kwh=price)
            click.echo(f"{regime:>6}: residual {rep.fleet_residual:.1%}, "
                       f"cost ${rep.cost:,.0f}")
    except _USAGE_ERRORS as exc:
        _fail(exc)
    except SolveError as exc:
        click.echo(f"solve failed: {exc}", err=True)
        sys.exit(1)


@main.command()
@scenario_opt
@regime_opt
@_with_run_opts
@click.option("--policy", type=click.Choice(["dedicated", "peak-shared"]),
              default="dedicated", show_default=True)
def chargers(scenario: Path, regime: str, mode: str, seed: int, gap: float,
             time_limit: float | None, penalty: float, policy: str) -> None:
    """Charger fleet capital under a plug-allocation policy."""
    try:
        system, clusters, background = _load_inputs(scenario)
        counts = vehicle_counts(clusters)
        peaks = None
        if policy == "peak-shared":
            solution = _run_one(scenario, regime, mode, seed, None, gap,
                                time_limit, penalty)
            peaks = ev_peak_charging_mw(solution)
        rep = charger_costs(counts, policy=policy, v2g=(regime == "v2g"),
                            peak_mw=peaks)
    except _USAGE_ERRORS as exc:
        _fail(exc)
    except SolveError as exc:
        click.echo(f"solve failed: {exc}", err=True)
        sys.exit(1)
    for year, n in sorted(rep.chargers.items()):
        click.echo(f"{year}: {n} chargers, ${rep.capital[year]:,.0f}")
    click.echo(f"total ${rep.total:,.0f}")


if __name__ == "__main__":
    main()
