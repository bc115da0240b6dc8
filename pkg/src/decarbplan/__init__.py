"""Capacity-expansion and unit-commitment co-optimization with
fixed/V1G/V2G truck-charging fleets, solved monolithically or by
surrogate Lagrangian relaxation."""

from .analysis import (ChargerReport, RunConfig, SavingsReport, charger_costs,
                       levelized_savings, load_run_inputs, run)
from .core import (SystemData, TimeGrid, ValidationError, ensure_valid,
                   validate_system)
from .degradation import DegradationReport, assess, calibrate
from .linmodel import BackendOptions, SolveError, get_backend
from .plan import PlanningModel, build_planning_model
from .scenario import ScenarioError, load_system
from .slr import SlrConfig, SlrEngine, solve_monolithic, solve_slr
from .solution import PlanSolution, extract_solution

__version__ = "0.1.0"

__all__ = [
    "BackendOptions", "ChargerReport", "DegradationReport", "PlanSolution",
    "PlanningModel", "RunConfig", "SavingsReport", "ScenarioError",
    "SlrConfig", "SlrEngine", "SolveError", "SystemData", "TimeGrid",
    "ValidationError", "assess", "build_planning_model", "calibrate",
    "charger_costs", "ensure_valid", "extract_solution", "get_backend",
    "levelized_savings", "load_run_inputs", "load_system", "run",
    "solve_monolithic",
    "solve_slr", "validate_system", "__version__",
]
