"""Battery wear proxy for the truck fleet.

Residual capacity = 100% minus a calendar term (linear in elapsed time)
minus a throughput term (depth-weighted rainflow cycle count of the
normalized state-of-charge series), averaged over three chemistry
parameter sets.  A single calibration scale maps the proxy onto a known
end-of-horizon residual for the uncontrolled baseline; relative regime
comparisons are the point, not absolute electrochemistry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import TimeGrid
from .kernels import depth_weighted_throughput
from .solution import PlanSolution

HOURS_PER_YEAR = 8760.0
DEFAULT_PRICE_PER_KWH = 100.0
DEFAULT_TARGET_RESIDUAL = 0.819


@dataclass(frozen=True)
class ChemistryParams:
    name: str
    calendar_per_hour: float   # capacity fraction lost per hour at rest
    cycle_coef: float          # fraction lost per unit depth^exponent
    depth_exponent: float


# Representative spread of commercial cells; weighted equally.
CHEMISTRIES = (
    ChemistryParams("nmc", 1.2e-6, 6.0e-5, 1.1),
    ChemistryParams("lfp", 0.8e-6, 3.5e-5, 0.9),
    ChemistryParams("nca", 1.5e-6, 8.0e-5, 1.3),
)


class DegradationError(ValueError):
    pass


@dataclass
class DegradationReport:
    regime: str
    scale: float
    price_per_kwh: float
    residual: dict[str, float]        # cluster -> end-of-horizon fraction
    fleet_residual: float             # capacity-weighted
    cost: float                       # $ over the horizon
    yearly_fade: dict[str, dict[int, float]]


def _yearly_raw_fade(solution: PlanSolution, grid: TimeGrid,
                     chemistries=CHEMISTRIES) -> dict[str, dict[int, float]]:
    """Unscaled capacity-fraction loss per cluster per modeled year,
    averaged over chemistries, before the calibration scale."""
    by_cluster: dict[str, dict[int, float]] = {}
    T = grid.hours_per_period
    for (cid, year, wi), series in solution.ev_soc.items():
        if series.shape[0] < T:
            raise DegradationError(
                f"SoC series for {cid}/{year} covers {series.shape[0]} hours, "
                f"expected {T}")
        cap = solution.ev_caps[(cid, year)]
        if cap <= 0:
            continue
        norm = series / cap
        # the representative period repeats, so count the cyclic signal:
        # rotate to the minimum and close the loop, otherwise the wrap
        # point splits the main swing into alignment-dependent halves
        k = int(np.argmin(norm))
        norm = np.concatenate([norm[k:], norm[:k], norm[k:k + 1]])
        weight = grid.period_weights[wi]
        cyc = sum(c.cycle_coef * depth_weighted_throughput(norm, c.depth_exponent)
                  for c in chemistries) / len(chemistries)
        by_cluster.setdefault(cid, {}).setdefault(year, 0.0)
        by_cluster[cid][year] += weight * cyc
    calendar = sum(c.calendar_per_hour for c in chemistries) / len(chemistries)
    for years in by_cluster.values():
        for year in years:
            years[year] += calendar * HOURS_PER_YEAR
    return by_cluster


def _horizon_fade(yearly: dict[int, float], grid: TimeGrid) -> float:
    return sum(grid.year_weights[yi] * yearly.get(grid.years[yi], 0.0)
               for yi in range(grid.num_years))


def calibrate(baseline: PlanSolution, grid: TimeGrid, *,
              target_residual: float = DEFAULT_TARGET_RESIDUAL) -> float:
    """Scale such that the baseline fleet lands exactly at the target
    end-of-horizon residual capacity."""
    raw = _yearly_raw_fade(baseline, grid)
    if not raw:
        raise DegradationError("baseline has no EV state-of-charge series")
    caps = {cid: max(baseline.ev_caps[(cid, y)] for y in years)
            for cid, years in raw.items()}
    total_cap = sum(caps.values())
    fleet_fade = sum(caps[cid] * _horizon_fade(years, grid)
                     for cid, years in raw.items()) / total_cap
    if fleet_fade <= 0:
        raise DegradationError("baseline shows zero raw fade; cannot calibrate")
    return (1.0 - target_residual) / fleet_fade


def assess(solution: PlanSolution, grid: TimeGrid, *, scale: float = 1.0,
           price_per_kwh: float = DEFAULT_PRICE_PER_KWH) -> DegradationReport:
    raw = _yearly_raw_fade(solution, grid)
    residual: dict[str, float] = {}
    cost = 0.0
    caps: dict[str, float] = {}
    for cid, years in raw.items():
        fade = min(1.0, scale * _horizon_fade(years, grid))
        residual[cid] = 1.0 - fade
        caps[cid] = max(solution.ev_caps[(cid, y)] for y in years)
        for yi in range(grid.num_years):
            year = grid.years[yi]
            if year not in years:
                continue
            cap_kwh = solution.ev_caps[(cid, year)] * 1000.0
            cost += (grid.year_weights[yi] * scale * years[year]
                     * cap_kwh * price_per_kwh)
    total_cap = sum(caps.values())
    fleet = (sum(caps[cid] * residual[cid] for cid in residual) / total_cap
             if total_cap > 0 else 1.0)
    scaled_yearly = {cid: {y: scale * v for y, v in years.items()}
                     for cid, years in raw.items()}
    return DegradationReport(regime=solution.regime, scale=scale,
                             price_per_kwh=price_per_kwh, residual=residual,
                             fleet_residual=fleet, cost=cost,
                             yearly_fade=scaled_yearly)
