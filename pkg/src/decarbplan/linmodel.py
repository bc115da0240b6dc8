"""Sparse linear/MILP model container and solver backend adapters.

The model stores variables, tagged linear constraints and a linear objective.
Solver backends implement a small contract: load the matrices, apply bound
fixings, solve, and report status/values/objective.  The only backend shipped
here wraps HiGHS through :func:`scipy.optimize.milp`; the adapter boundary
exists so other MILP engines can be dropped in without touching model
construction code.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import Bounds, LinearConstraint, milp

INF = float("inf")


class SolveError(RuntimeError):
    """Raised when a backend cannot produce a usable solution."""


class LinExpr:
    """Mutable linear expression: sum of coef*var plus a constant."""

    __slots__ = ("coefs", "const")

    def __init__(self, coefs: dict[int, float] | None = None, const: float = 0.0):
        self.coefs = coefs if coefs is not None else {}
        self.const = const

    def copy(self) -> "LinExpr":
        return LinExpr(dict(self.coefs), self.const)

    def add_term(self, var: int, coef: float) -> "LinExpr":
        if coef:
            self.coefs[var] = self.coefs.get(var, 0.0) + coef
        return self

    def add(self, other: "LinExpr | float", scale: float = 1.0) -> "LinExpr":
        """In-place accumulate ``scale * other``."""
        if isinstance(other, LinExpr):
            for v, c in other.coefs.items():
                self.add_term(v, scale * c)
            self.const += scale * other.const
        else:
            self.const += scale * float(other)
        return self

    def __add__(self, other):
        return self.copy().add(other)

    __radd__ = __add__

    def __sub__(self, other):
        return self.copy().add(other, -1.0)

    def __rsub__(self, other):
        out = self.copy()
        out.scale(-1.0)
        return out.add(other)

    def __mul__(self, k: float):
        out = self.copy()
        out.scale(float(k))
        return out

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def scale(self, k: float) -> "LinExpr":
        for v in self.coefs:
            self.coefs[v] *= k
        self.const *= k
        return self

    def value(self, x: np.ndarray) -> float:
        return self.const + sum(c * x[v] for v, c in self.coefs.items())


def term(var: int, coef: float = 1.0) -> LinExpr:
    return LinExpr({var: float(coef)} if coef else {})


def const(value: float) -> LinExpr:
    return LinExpr({}, float(value))


def lsum(exprs) -> LinExpr:
    out = LinExpr()
    for e in exprs:
        out.add(e)
    return out


@dataclass
class SolveResult:
    status: str  # optimal | feasible-gap | infeasible | timeout
    objective: float
    values: np.ndarray | None
    gap: float | None = None

    @property
    def ok(self) -> bool:
        return self.status in ("optimal", "feasible-gap")


class Model:
    """Variable/constraint container with group-switchable constraints."""

    def __init__(self, name: str = ""):
        self.name = name
        self.var_names: list[str] = []
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.integrality: list[int] = []
        # constraints: (coef dict, lb, ub, group)
        self.cons: list[tuple[dict[int, float], float, float, str]] = []
        self.objective = LinExpr()

    # -- construction -----------------------------------------------------

    @property
    def num_vars(self) -> int:
        return len(self.lb)

    def add_var(self, name: str, lb: float = 0.0, ub: float = INF,
                binary: bool = False) -> int:
        idx = len(self.lb)
        self.var_names.append(name)
        if binary:
            self.lb.append(0.0)
            self.ub.append(1.0)
            self.integrality.append(1)
        else:
            self.lb.append(float(lb))
            self.ub.append(float(ub))
            self.integrality.append(0)
        return idx

    def add_vars(self, prefix: str, n: int, lb: float = 0.0, ub: float = INF,
                 binary: bool = False) -> np.ndarray:
        return np.array([self.add_var(f"{prefix}[{i}]", lb, ub, binary)
                         for i in range(n)], dtype=np.int64)

    def add_constr(self, expr: LinExpr, lb: float = -INF, ub: float = INF,
                   group: str = "core") -> int:
        """Add ``lb <= expr <= ub``; the expression constant is folded into the bounds."""
        idx = len(self.cons)
        self.cons.append((dict(expr.coefs), lb - expr.const, ub - expr.const, group))
        return idx

    def add_eq(self, expr: LinExpr, rhs: float = 0.0, group: str = "core") -> int:
        return self.add_constr(expr, rhs, rhs, group)

    def add_le(self, expr: LinExpr, rhs: float = 0.0, group: str = "core") -> int:
        return self.add_constr(expr, -INF, rhs, group)

    def add_ge(self, expr: LinExpr, rhs: float = 0.0, group: str = "core") -> int:
        return self.add_constr(expr, rhs, INF, group)

    @property
    def binary_indices(self) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.integrality, dtype=np.int8))

    # -- assembly ---------------------------------------------------------

    def constraint_matrix(self, groups: set[str]) -> tuple[sp.csr_matrix, np.ndarray, np.ndarray]:
        rows, cols, vals = [], [], []
        clb, cub = [], []
        r = 0
        for coefs, lo, hi, grp in self.cons:
            if grp not in groups:
                continue
            for v, c in coefs.items():
                rows.append(r)
                cols.append(v)
                vals.append(c)
            clb.append(lo)
            cub.append(hi)
            r += 1
        mat = sp.csr_matrix((vals, (rows, cols)), shape=(r, self.num_vars))
        return mat, np.array(clb), np.array(cub)

    def active_groups(self, exclude: set[str] | None = None) -> set[str]:
        groups = {g for *_, g in self.cons}
        if exclude:
            groups -= exclude
        return groups

    def value(self, expr: LinExpr, x: np.ndarray) -> float:
        return expr.value(x)


@dataclass
class BackendOptions:
    gap: float = 1e-4
    time_limit: float | None = None
    threads: int | None = None


class SolverBackend:
    """Adapter contract for MILP/LP engines."""

    name = "abstract"
    supports_milp = False
    supports_lp = False

    def solve(self, model: Model, *, objective: LinExpr | None = None,
              exclude_groups: set[str] | None = None,
              fixed: dict[int, float] | None = None,
              options: BackendOptions | None = None) -> SolveResult:
        raise NotImplementedError


class HighsBackend(SolverBackend):
    """HiGHS via scipy.optimize.milp."""

    name = "highs"
    supports_milp = True
    supports_lp = True

    _STATUS = {0: "optimal", 1: "timeout", 2: "infeasible", 3: "infeasible", 4: "timeout"}

    def solve(self, model: Model, *, objective: LinExpr | None = None,
              exclude_groups: set[str] | None = None,
              fixed: dict[int, float] | None = None,
              options: BackendOptions | None = None) -> SolveResult:
        opts = options or BackendOptions()
        obj = objective if objective is not None else model.objective
        n = model.num_vars
        c = np.zeros(n)
        for v, coef in obj.coefs.items():
            c[v] += coef
        lb = np.array(model.lb)
        ub = np.array(model.ub)
        if fixed:
            idx = np.fromiter(fixed.keys(), dtype=np.int64, count=len(fixed))
            val = np.fromiter(fixed.values(), dtype=np.float64, count=len(fixed))
            lb[idx] = val
            ub[idx] = val
        groups = model.active_groups(exclude_groups)
        mat, clb, cub = model.constraint_matrix(groups)
        constraints = LinearConstraint(mat, clb, cub) if mat.shape[0] else ()
        integrality = np.asarray(model.integrality, dtype=np.uint8)
        if fixed:
            # fixed binaries need no branching
            integrality = integrality.copy()
            integrality[np.flatnonzero(lb == ub)] = 0
        milp_opts: dict = {"mip_rel_gap": opts.gap}
        if opts.time_limit is not None:
            milp_opts["time_limit"] = opts.time_limit
        res = milp(c=c, constraints=constraints, integrality=integrality,
                   bounds=Bounds(lb, ub), options=milp_opts)
        status = self._STATUS.get(res.status, "infeasible")
        if res.x is None:
            if status == "optimal":
                status = "infeasible"
            return SolveResult(status=status, objective=float("nan"), values=None)
        gap = getattr(res, "mip_gap", None)
        if status == "optimal" and gap is not None and gap > opts.gap * 1.01 + 1e-12:
            status = "feasible-gap"
        if status == "timeout":
            status = "feasible-gap"
        return SolveResult(status=status, objective=float(res.fun) + obj.const,
                          values=np.asarray(res.x), gap=gap)


_BACKENDS = {"highs": HighsBackend}


def get_backend(name: str | None = None) -> SolverBackend:
    """Resolve a backend by name, the PLAN_BACKEND env var, or the default."""
    key = (name or os.environ.get("PLAN_BACKEND") or "highs").lower()
    try:
        return _BACKENDS[key]()
    except KeyError:
        raise SolveError(f"unknown solver backend {key!r}; available: {sorted(_BACKENDS)}")
