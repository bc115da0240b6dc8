"""Surrogate Lagrangian relaxation of the zonal balance constraints.

The balance rows are written as ``expr - rp + rn = 0`` with nonnegative
slack pairs.  A monolithic ("hard") solve fixes every slack to zero.  The
relaxed solves leave them free and price them at ``penalty -/+ lambda``,
which is the exact epigraph form of

    minimize  cost - lambda . r + penalty * |r|

so every relaxed value is a valid lower bound on the hard optimum as long
as ``|lambda| < penalty``.  Multipliers move against the surrogate
residual, shrinking by ``alpha ** m / ||r||`` with the accepted-update
count m, and only updates satisfying the surrogate descent condition are
accepted; otherwise the subproblem subset is enlarged and re-solved.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
import scipy.sparse as sp

from .linmodel import BackendOptions, SolveError, SolverBackend, get_backend
from .plan import PlanningModel
from .solution import PlanSolution, extract_solution

log = logging.getLogger(__name__)


@dataclass
class SlrConfig:
    residual_penalty: float = 1000.0   # $/MWh on unserved/overserved energy
    step0: float = 10.0
    alpha: float = 0.98
    tolerance_fraction: float = 0.001  # of policy-zone peak load
    max_iterations: int = 200
    stability_window: int = 10
    fix_fraction: float = 0.95
    max_unfix_rounds: int = 6
    subproblem_gap: float = 1e-4
    time_limit: float | None = None


@dataclass
class DualIterate:
    k: int
    dual_value: float
    max_residual: float
    l2_residual: float
    step: float
    subset_size: int
    seconds: float


def _vectorize(pm: PlanningModel):
    """Dense objective vector and sparse residual map used for cheap
    surrogate evaluations between solves."""
    n = pm.model.num_vars
    c = np.zeros(n)
    for var, coef in pm.objective.coefs.items():
        c[var] += coef
    exprs = pm.residual_exprs()
    rows, cols, vals, consts = [], [], [], np.zeros(len(exprs))
    for i, expr in enumerate(exprs):
        consts[i] = expr.const
        for var, coef in expr.coefs.items():
            rows.append(i)
            cols.append(var)
            vals.append(coef)
    amat = sp.csr_matrix((vals, (rows, cols)), shape=(len(exprs), n))
    return c, pm.objective.const, amat, consts


def solve_monolithic(pm: PlanningModel, *, backend: SolverBackend | None = None,
                     options: BackendOptions | None = None,
                     mode: str = "monolithic") -> PlanSolution:
    """Solve the full MILP with every balance slack pinned to zero."""
    backend = backend or get_backend()
    options = options or BackendOptions()
    fixed = {v: 0.0 for rp, rn in pm.slack_pairs() for v in (rp, rn)}
    res = backend.solve(pm.model, objective=pm.objective, fixed=fixed,
                        options=options)
    if not res.ok:
        raise SolveError(f"monolithic solve failed with status {res.status}")
    return extract_solution(pm, res.values, status=res.status,
                            objective=res.objective, gap=res.gap, mode=mode)


class SlrEngine:
    def __init__(self, pm: PlanningModel, config: SlrConfig | None = None,
                 backend: SolverBackend | None = None):
        self.pm = pm
        self.config = config or SlrConfig()
        self.backend = backend or get_backend()
        if self.config.residual_penalty <= 0:
            raise ValueError("residual_penalty must be positive")
        self.block_keys = [*sorted(pm.blocks), "investment"]
        self.block_vars = {key: np.array(sorted(pm.blocks[key].all_vars))
                           for key in sorted(pm.blocks)}
        self.block_vars["investment"] = np.array(sorted(pm.inv_block_vars))
        covered = set()
        for arr in self.block_vars.values():
            covered.update(int(v) for v in arr)
        missing = set(range(pm.model.num_vars)) - covered
        if missing:
            raise ValueError(f"{len(missing)} variables not assigned to any "
                             "relaxation block")
        self.c, self.c0, self.amat, self.aconst = _vectorize(pm)
        self.weights = pm.residual_weights()
        self.num_residuals = self.amat.shape[0]
        self.multipliers = np.zeros(self.num_residuals)
        self.slack_cols = pm.slack_pairs()
        self.binary_idx = np.array(sorted(pm.model.binary_indices))
        self.binary_history: list[np.ndarray] = []
        self.iterates: list[DualIterate] = []
        self.x: np.ndarray | None = None
        self.accepted_updates = 0
        self._cursor = 0
        z0 = pm.system.policy_zone
        self.tolerance = (self.config.tolerance_fraction
                          * pm.system.peak_load(z0))

    # -- surrogate evaluation -------------------------------------------

    def residuals(self, x: np.ndarray) -> np.ndarray:
        return self.amat @ x + self.aconst

    def surrogate_value(self, x: np.ndarray,
                        multipliers: np.ndarray | None = None) -> float:
        lam = self.multipliers if multipliers is None else multipliers
        wr = self.weights * self.residuals(x)
        base = float(self.c @ x) + self.c0
        return base - float(lam @ wr) + self.config.residual_penalty * float(
            np.abs(wr).sum())

    def _dual_objective(self):
        obj = self.pm.objective.copy()
        rho = self.config.residual_penalty
        for i, (rp, rn) in enumerate(self.slack_cols):
            lam = self.multipliers[i]
            w = self.weights[i]
            obj.add_term(rp, w * (rho - lam))
            obj.add_term(rn, w * (rho + lam))
        return obj

    # -- subproblem solves ----------------------------------------------

    def _solve_subset(self, subset: list) -> np.ndarray:
        fixed = {}
        if self.x is not None:
            free = set()
            for key in subset:
                free.update(int(v) for v in self.block_vars[key])
            fixed = {v: float(self.x[v]) for v in range(self.pm.model.num_vars)
                     if v not in free}
        opts = BackendOptions(gap=self.config.subproblem_gap,
                              time_limit=self.config.time_limit)
        res = self.backend.solve(self.pm.model, objective=self._dual_objective(),
                                 fixed=fixed, options=opts)
        if not res.ok:
            raise SolveError(f"relaxed subproblem failed: {res.status}")
        return res.values

    def _next_block(self):
        key = self.block_keys[self._cursor % len(self.block_keys)]
        self._cursor += 1
        return key

    # -- dual loop -------------------------------------------------------

    def dual_iterate(self) -> DualIterate:
        t0 = time.monotonic()
        k = len(self.iterates)
        if self.x is None:
            subset = list(self.block_keys)
            x = self._solve_subset(subset)
        else:
            reference = self.surrogate_value(self.x)
            subset = [self._next_block()]
            while True:
                x = self._solve_subset(subset)
                if (self.surrogate_value(x) < reference - 1e-9
                        or len(subset) == len(self.block_keys)):
                    break
                subset.append(self._next_block())
        self.x = x
        r = self.residuals(x)
        wr = self.weights * r
        norm = float(np.linalg.norm(wr))
        step = 0.0
        if norm > 1e-9:
            # damped Polyak-style step: bounded even as the residual vanishes,
            # so the multipliers settle instead of slamming into the clip bound
            step = (self.config.step0 * self.config.alpha ** self.accepted_updates
                    / (1.0 + norm))
            lam = self.multipliers - step * wr
            bound = 0.9 * self.config.residual_penalty
            self.multipliers = np.clip(lam, -bound, bound)
            self.accepted_updates += 1
        self.binary_history.append(np.round(x[self.binary_idx]))
        if len(self.binary_history) > self.config.stability_window:
            self.binary_history.pop(0)
        it = DualIterate(k=k, dual_value=self.surrogate_value(x),
                         max_residual=float(np.abs(r).max()) if r.size else 0.0,
                         l2_residual=norm, step=step, subset_size=len(subset),
                         seconds=time.monotonic() - t0)
        self.iterates.append(it)
        log.info("slr k=%d dual=%.2f max_r=%.4f subset=%d", it.k,
                 it.dual_value, it.max_residual, it.subset_size)
        return it

    def run_dual(self) -> list[DualIterate]:
        for _ in range(self.config.max_iterations):
            it = self.dual_iterate()
            if it.max_residual <= self.tolerance:
                break
        return self.iterates

    def write_log(self, path: Path) -> None:
        pd.DataFrame([vars(it) for it in self.iterates]).to_csv(path,
                                                                index=False)

    # -- primal recovery -------------------------------------------------

    def _stable_binaries(self) -> list[int]:
        hist = np.stack(self.binary_history)
        flips = (np.diff(hist, axis=0) != 0).sum(axis=0)
        order = np.argsort(flips, kind="stable")
        keep = [int(self.binary_idx[j]) for j in order
                if flips[j] == 0]
        cap = int(self.config.fix_fraction * len(self.binary_idx))
        return keep[:cap]

    def recover_primal(self, *, options: BackendOptions | None = None
                       ) -> PlanSolution:
        if self.x is None:
            raise SolveError("run the dual loop before primal recovery")
        options = options or BackendOptions(gap=self.config.subproblem_gap,
                                            time_limit=self.config.time_limit)
        to_fix = self._stable_binaries()
        zero_slacks = {v: 0.0 for rp, rn in self.slack_cols for v in (rp, rn)}
        for attempt in range(self.config.max_unfix_rounds + 1):
            fixed = dict(zero_slacks)
            fixed.update({v: float(np.round(self.x[v])) for v in to_fix})
            res = self.backend.solve(self.pm.model, objective=self.pm.objective,
                                     fixed=fixed, options=options)
            if res.ok:
                lower = self.iterates[-1].dual_value if self.iterates else None
                meta = {"fixed_binaries": len(to_fix), "unfix_rounds": attempt,
                        "dual_lower_bound": lower,
                        "dual_iterations": len(self.iterates)}
                return extract_solution(self.pm, res.values, status=res.status,
                                        objective=res.objective, gap=res.gap,
                                        mode="slr", meta=meta)
            if not to_fix:
                break
            to_fix = to_fix[:len(to_fix) // 2]
            log.info("primal recovery infeasible; unfixing to %d binaries",
                     len(to_fix))
        raise SolveError("primal recovery failed even with all binaries free")


def solve_slr(pm: PlanningModel, config: SlrConfig | None = None, *,
              backend: SolverBackend | None = None,
              log_path: Path | None = None) -> PlanSolution:
    engine = SlrEngine(pm, config, backend=backend)
    engine.run_dual()
    if log_path is not None:
        engine.write_log(log_path)
    return engine.recover_primal()
