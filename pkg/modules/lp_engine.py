# modules/lp_engine.py
# Linear program container and a bounded-variable primal simplex with dual values.
# Контейнер линейной программы и прямой симплекс-метод с ограниченными переменными и двойственными оценками.

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from modules.errors import ProgramError
from modules.settings import SimplexSettings, Tolerances

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCES = Tolerances()
DEFAULT_SIMPLEX = SimplexSettings()


class VarKind(str, Enum):
    CONTINUOUS = "continuous"
    INTEGER = "integer"
    BINARY = "binary"


class Sense(str, Enum):
    LE = "<="
    GE = ">="
    EQ = "="


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"
    NUMERICAL = "numerical_error"


_SENSE_CODE = {Sense.LE: 0, Sense.GE: 1, Sense.EQ: 2}


@dataclass
class Variable:
    name: str
    kind: VarKind
    lb: float
    ub: float

    @property
    def is_integer(self):
        return self.kind is not VarKind.CONTINUOUS


@dataclass
class Constraint:
    name: str
    terms: dict
    sense: Sense
    rhs: float


@dataclass(frozen=True)
class ProgramArrays:
    # Dense snapshot of a program; arrays are read-only.
    A: np.ndarray
    senses: np.ndarray
    b: np.ndarray
    c: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integer: np.ndarray
    constant: float


class LinearProgram:
    # Minimization program over named variables; variables and rows are addressed by index.
    # Задача минимизации над именованными переменными; переменные и строки адресуются индексами.

    def __init__(self, name="model"):
        self.name = name
        self.variables = []
        self.constraints = []
        self.objective = {}
        self.objective_constant = 0.0
        self._names = {}
        self._row_names = set()

    @property
    def num_variables(self):
        return len(self.variables)

    @property
    def num_constraints(self):
        return len(self.constraints)

    def add_variable(self, name, kind=VarKind.CONTINUOUS, lb=0.0, ub=math.inf):
        kind = VarKind(kind)
        if name in self._names:
            raise ProgramError(f"duplicate variable name {name}")
        lb, ub = float(lb), float(ub)
        if kind is VarKind.BINARY:
            lb, ub = max(lb, 0.0), min(ub, 1.0)
        if math.isnan(lb) or math.isnan(ub) or lb > ub:
            raise ProgramError(f"variable {name}: invalid bounds [{lb}, {ub}]")
        self.variables.append(Variable(name, kind, lb, ub))
        self._names[name] = len(self.variables) - 1
        return self._names[name]

    def index(self, name):
        return self._names[name]

    def set_bounds(self, index, lb=None, ub=None):
        var = self.variables[index]
        new_lb = var.lb if lb is None else float(lb)
        new_ub = var.ub if ub is None else float(ub)
        if new_lb > new_ub:
            raise ProgramError(f"variable {var.name}: invalid bounds [{new_lb}, {new_ub}]")
        var.lb, var.ub = new_lb, new_ub

    def _normalize_terms(self, terms):
        items = terms.items() if hasattr(terms, "items") else terms
        merged = {}
        for index, coef in items:
            if not 0 <= index < len(self.variables):
                raise ProgramError(f"term references undeclared variable index {index}")
            coef = float(coef)
            if not math.isfinite(coef):
                raise ProgramError(f"non-finite coefficient on {self.variables[index].name}")
            merged[index] = merged.get(index, 0.0) + coef
        return {k: v for k, v in merged.items() if v != 0.0}

    def add_constraint(self, terms, sense, rhs, name=None):
        sense = Sense(sense)
        rhs = float(rhs)
        if not math.isfinite(rhs):
            raise ProgramError("non-finite right-hand side")
        normalized = self._normalize_terms(terms)
        name = name or f"c{len(self.constraints)}"
        if name in self._row_names:
            raise ProgramError(f"duplicate constraint name {name}")
        self._row_names.add(name)
        self.constraints.append(Constraint(name, normalized, sense, rhs))
        return len(self.constraints) - 1

    def set_objective(self, terms, constant=0.0):
        self.objective = self._normalize_terms(terms)
        self.objective_constant = float(constant)

    def integer_indices(self):
        return [i for i, v in enumerate(self.variables) if v.is_integer]

    def to_arrays(self):
        n, m = len(self.variables), len(self.constraints)
        A = np.zeros((m, n))
        senses = np.zeros(m, dtype=int)
        b = np.zeros(m)
        for i, row in enumerate(self.constraints):
            for j, coef in row.terms.items():
                A[i, j] = coef
            senses[i] = _SENSE_CODE[row.sense]
            b[i] = row.rhs
        c = np.zeros(n)
        for j, coef in self.objective.items():
            c[j] = coef
        lb = np.array([v.lb for v in self.variables], dtype=float)
        ub = np.array([v.ub for v in self.variables], dtype=float)
        integer = np.array([v.is_integer for v in self.variables], dtype=bool)
        for arr in (A, senses, b, c, lb, ub, integer):
            arr.setflags(write=False)
        return ProgramArrays(A, senses, b, c, lb, ub, integer, self.objective_constant)


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    values: np.ndarray
    duals: np.ndarray
    reduced_costs: np.ndarray
    objective: float
    dual_objective: float
    iterations: int
    warm_start: object = None

    @property
    def is_optimal(self):
        return self.status is LpStatus.OPTIMAL


@dataclass(frozen=True)
class WarmStart:
    # Final basis of a solve. A later solve of the same rows with tighter bounds or a new
    # right-hand side restarts from it with the dual simplex.
    # Итоговый базис; повторное решение с новыми границами или правой частью стартует с него.
    matrix: np.ndarray
    artificials: int
    basis: np.ndarray
    at_upper: np.ndarray


# --- Simplex ---

def _slack_bounds(senses):
    # Row i reads A[i] x + s[i] = b[i]: s >= 0 for <=, s <= 0 for >=, s = 0 for =.
    s_lb = np.zeros(len(senses))
    s_ub = np.zeros(len(senses))
    s_ub[senses == 0] = np.inf
    s_lb[senses == 1] = -np.inf
    return s_lb, s_ub


class _Simplex:
    # Working state of one solve: [A | I | artificials] with an explicit basis inverse.
    # Рабочее состояние одного решения: [A | I | искусственные] и явная обратная базисная матрица.

    def __init__(self, arrays, lb, ub, tolerances, settings):
        self.tol = tolerances
        self.settings = settings
        A, b, senses = arrays.A, arrays.b, arrays.senses
        m, n = A.shape
        self.m, self.n = m, n
        self.b = b
        self.senses = senses
        self.scale = 1.0 + (float(np.max(np.abs(b))) if m else 0.0)

        s_lb, s_ub = _slack_bounds(senses)

        x0 = np.where(np.isfinite(lb), lb, np.where(np.isfinite(ub), ub, 0.0))
        residual = b - A @ x0 if m else np.zeros(0)
        feas = tolerances.feasibility
        absorbs = (
            ((senses == 0) & (residual >= -feas))
            | ((senses == 1) & (residual <= feas))
            | ((senses == 2) & (np.abs(residual) <= feas))
        )
        art_rows = np.flatnonzero(~absorbs)
        k = len(art_rows)
        self.k = k

        art_cols = np.zeros((m, k))
        sigma = np.where(residual[art_rows] >= 0, 1.0, -1.0)
        art_cols[art_rows, np.arange(k)] = sigma
        self.M = np.hstack([A, np.eye(m), art_cols])
        self.lo = np.concatenate([lb, s_lb, np.zeros(k)])
        self.hi = np.concatenate([ub, s_ub, np.full(k, np.inf)])
        self.val = np.concatenate([x0, np.zeros(m), np.zeros(k)])

        self.basis = np.empty(m, dtype=int)
        diag = np.ones(m)
        slack_rows = np.flatnonzero(absorbs)
        self.basis[slack_rows] = n + slack_rows
        self.val[n + slack_rows] = residual[slack_rows]
        self.basis[art_rows] = n + m + np.arange(k)
        self.val[n + m + np.arange(k)] = np.abs(residual[art_rows])
        diag[art_rows] = sigma
        self.Binv = np.diag(diag)
        self.is_basic = np.zeros(n + m + k, dtype=bool)
        self.is_basic[self.basis] = True
        self.iterations = 0

    @classmethod
    def resume(cls, arrays, lb, ub, tolerances, settings, warm):
        # Rebuilds the state of a stored basis under new bounds and right-hand side.
        # Nonbasic columns stay on the bound side they had; artificials stay fixed at zero.
        self = cls.__new__(cls)
        self.tol = tolerances
        self.settings = settings
        m, n = arrays.A.shape
        k = warm.artificials
        self.m, self.n, self.k = m, n, k
        self.b = arrays.b
        self.senses = arrays.senses
        self.scale = 1.0 + (float(np.max(np.abs(arrays.b))) if m else 0.0)
        s_lb, s_ub = _slack_bounds(arrays.senses)
        self.M = warm.matrix
        self.lo = np.concatenate([lb, s_lb, np.zeros(k)])
        self.hi = np.concatenate([ub, s_ub, np.zeros(k)])
        val = np.where(warm.at_upper, self.hi, self.lo)
        self.val = np.where(np.isfinite(val), val, 0.0)
        self.basis = warm.basis.copy()
        self.is_basic = np.zeros(n + m + k, dtype=bool)
        self.is_basic[self.basis] = True
        self.iterations = 0
        self.cost = None
        if not self.refactor():
            return None
        return self

    def snapshot(self):
        nonbasic = ~self.is_basic
        at_upper = nonbasic & np.isfinite(self.hi) & (self.val >= self.hi - self.tol.feasibility)
        return WarmStart(self.M, self.k, self.basis.copy(), at_upper)

    def refactor(self):
        try:
            self.Binv = np.linalg.inv(self.M[:, self.basis])
        except np.linalg.LinAlgError:
            return False
        nonbasic = ~self.is_basic
        rhs = self.b - self.M[:, nonbasic] @ self.val[nonbasic]
        self.val[self.basis] = self.Binv @ rhs
        return bool(np.all(np.isfinite(self.Binv)))

    def iterate(self, cost):
        tol = self.tol
        feas, opt, piv = tol.feasibility, tol.optimality, tol.pivot
        degenerate = 0
        since_refactor = 0
        m = self.m
        while True:
            if self.iterations >= self.settings.max_iterations:
                return LpStatus.ITERATION_LIMIT
            y = cost[self.basis] @ self.Binv if m else np.zeros(0)
            d = cost - y @ self.M if m else cost.copy()
            d[self.is_basic] = 0.0
            nonbasic = ~self.is_basic
            can_inc = nonbasic & (self.val < self.hi - feas)
            can_dec = nonbasic & (self.val > self.lo + feas)
            inc = can_inc & (d < -opt)
            dec = can_dec & (d > opt)
            eligible = inc | dec
            if not eligible.any():
                return LpStatus.OPTIMAL

            bland = degenerate >= self.settings.bland_after_degenerate
            if bland:
                j = int(np.flatnonzero(eligible)[0])
            else:
                j = int(np.argmax(np.where(eligible, np.abs(d), -1.0)))
            direction = 1.0 if inc[j] else -1.0

            alpha = self.Binv @ self.M[:, j] if m else np.zeros(0)
            delta = direction * alpha
            flip = self.hi[j] - self.lo[j]
            leave = -1
            t = flip
            if m:
                vb = self.val[self.basis]
                lo_b = self.lo[self.basis]
                hi_b = self.hi[self.basis]
                ratios = np.full(m, np.inf)
                pos = delta > piv
                neg = delta < -piv
                ratios[pos] = (vb[pos] - lo_b[pos]) / delta[pos]
                ratios[neg] = (hi_b[neg] - vb[neg]) / (-delta[neg])
                ratios = np.maximum(ratios, 0.0)
                r_min = float(ratios.min())
                if r_min < flip:
                    ties = np.flatnonzero(ratios <= r_min + 1e-12)
                    if bland:
                        leave = int(ties[np.argmin(self.basis[ties])])
                    else:
                        leave = int(ties[np.argmax(np.abs(delta[ties]))])
                    t = float(ratios[leave])
            if not math.isfinite(t):
                return LpStatus.UNBOUNDED

            self.iterations += 1
            if leave < 0:
                self.val[j] = self.hi[j] if direction > 0 else self.lo[j]
                if m:
                    self.val[self.basis] -= t * delta
            else:
                self.val[j] += direction * t
                self.val[self.basis] -= t * delta
                out = self.basis[leave]
                self.val[out] = self.lo[out] if delta[leave] > 0 else self.hi[out]
                self.basis[leave] = j
                self.is_basic[j] = True
                self.is_basic[out] = False
                pivot_row = self.Binv[leave] / alpha[leave]
                self.Binv -= np.outer(alpha, pivot_row)
                self.Binv[leave] = pivot_row
                since_refactor += 1
                if since_refactor >= self.settings.refactor_interval:
                    since_refactor = 0
                    if not self.refactor():
                        return LpStatus.NUMERICAL

            degenerate = degenerate + 1 if t <= feas else 0

    def dual_iterate(self, cost):
        # Bounded dual simplex from a dual-feasible basis: the most violated basic column leaves
        # at the bound it violates, reduced costs keep their signs.
        # Двойственный симплекс-метод: уходит базисная переменная с наибольшим нарушением границы.
        tol = self.tol
        feas, opt, piv = tol.feasibility, tol.optimality, tol.pivot
        since_refactor = 0
        while True:
            if self.iterations >= self.settings.max_iterations:
                return LpStatus.ITERATION_LIMIT
            vb = self.val[self.basis]
            below = self.lo[self.basis] - vb
            above = vb - self.hi[self.basis]
            violation = np.maximum(below, above)
            r = int(np.argmax(violation))
            if violation[r] <= feas * self.scale:
                return LpStatus.OPTIMAL
            rising = below[r] > 0
            sign = 1.0 if rising else -1.0

            y = cost[self.basis] @ self.Binv
            d = cost - y @ self.M
            row = self.Binv[r] @ self.M
            # basic value r moves by -row[j] per unit increase of nonbasic column j
            movable = ~self.is_basic & (self.hi - self.lo > feas)
            up = movable & (self.val < self.hi - feas) & (sign * row < -piv)
            down = movable & (self.val > self.lo + feas) & (sign * row > piv)
            if not (up.any() or down.any()):
                return LpStatus.INFEASIBLE
            ratios = np.full(len(d), np.inf)
            ratios[up] = np.maximum(d[up], 0.0) / np.abs(row[up])
            ratios[down] = np.maximum(-d[down], 0.0) / np.abs(row[down])
            best = float(ratios.min())
            ties = np.flatnonzero(ratios <= best + opt)
            j = int(ties[np.argmax(np.abs(row[ties]))])

            out = self.basis[r]
            target = self.lo[out] if rising else self.hi[out]
            step = (target - vb[r]) / (-row[j])
            alpha = self.Binv @ self.M[:, j]
            self.iterations += 1
            self.val[j] += step
            self.val[self.basis] -= step * alpha
            self.val[out] = target
            self.basis[r] = j
            self.is_basic[j] = True
            self.is_basic[out] = False
            pivot_row = self.Binv[r] / alpha[r]
            self.Binv -= np.outer(alpha, pivot_row)
            self.Binv[r] = pivot_row
            since_refactor += 1
            if since_refactor >= self.settings.refactor_interval:
                since_refactor = 0
                if not self.refactor():
                    return LpStatus.NUMERICAL

    def solve(self, c):
        n, m, k = self.n, self.m, self.k
        if k:
            phase1 = np.zeros(n + m + k)
            phase1[n + m:] = 1.0
            status = self.iterate(phase1)
            if status is not LpStatus.OPTIMAL:
                return status
            infeasibility = float(np.sum(self.val[n + m:]))
            if infeasibility > self.tol.feasibility * self.scale:
                logger.debug("Phase 1 ended with infeasibility %.3g", infeasibility)
                return LpStatus.INFEASIBLE
            self.hi[n + m:] = 0.0
        cost = np.concatenate([c, np.zeros(m + k)])
        self.cost = cost
        status = self.iterate(cost)
        if status is LpStatus.OPTIMAL and m and not self.refactor():
            return LpStatus.NUMERICAL
        return status

    def resume_solve(self, c):
        # Dual simplex back to primal feasibility, then a primal pass to confirm optimality.
        cost = np.concatenate([c, np.zeros(self.m + self.k)])
        self.cost = cost
        status = self.dual_iterate(cost)
        if status is LpStatus.OPTIMAL:
            status = self.iterate(cost)
        if status is LpStatus.OPTIMAL and not self.refactor():
            return LpStatus.NUMERICAL
        return status

    def primal_ok(self):
        slack = 1e-6 * self.scale
        return bool(np.all(self.val >= self.lo - slack) and np.all(self.val <= self.hi + slack))


def _empty_solution(status, n, m, iterations, objective=math.nan):
    return LpSolution(
        status=status,
        values=np.full(n, np.nan),
        duals=np.full(m, np.nan),
        reduced_costs=np.full(n, np.nan),
        objective=objective,
        dual_objective=math.nan,
        iterations=iterations,
    )


def solve_arrays(arrays, lb=None, ub=None, tolerances=None, settings=None, warm_start=None):
    # Solves the LP relaxation of a dense snapshot, optionally with overridden bounds.
    # warm_start: basis of an earlier solve of the same rows; a failed restart falls back to a cold solve.
    # Решает ЛП-релаксацию плотного представления, при необходимости с новыми границами.
    tolerances = tolerances or DEFAULT_TOLERANCES
    settings = settings or DEFAULT_SIMPLEX
    lb = arrays.lb if lb is None else lb
    ub = arrays.ub if ub is None else ub
    m, n = arrays.A.shape
    if np.any(lb > ub + tolerances.feasibility):
        return _empty_solution(LpStatus.INFEASIBLE, n, m, 0)

    simplex = None
    if warm_start is not None and m:
        simplex = _Simplex.resume(arrays, lb, ub, tolerances, settings, warm_start)
        if simplex is not None:
            status = simplex.resume_solve(arrays.c)
            if status is not LpStatus.OPTIMAL or not simplex.primal_ok():
                logger.debug("Warm start ended with status %s; solving from scratch", status.value)
                simplex = None
    if simplex is None:
        simplex = _Simplex(arrays, lb, ub, tolerances, settings)
        status = simplex.solve(arrays.c)
    if status is LpStatus.UNBOUNDED:
        return _empty_solution(status, n, m, simplex.iterations, objective=-math.inf)
    if status is not LpStatus.OPTIMAL:
        if status is not LpStatus.INFEASIBLE:
            logger.warning("Simplex stopped with status %s after %d iterations", status.value, simplex.iterations)
        return _empty_solution(status, n, m, simplex.iterations)
    if not simplex.primal_ok():
        logger.warning("Simplex optimum violates bounds beyond tolerance; reporting numerical failure")
        return _empty_solution(LpStatus.NUMERICAL, n, m, simplex.iterations)

    x = simplex.val[:n].copy()
    y = simplex.cost[simplex.basis] @ simplex.Binv if m else np.zeros(0)
    d = arrays.c - (y @ arrays.A if m else 0.0)
    objective = float(arrays.c @ x) + arrays.constant

    opt = 10 * tolerances.optimality
    bound_terms = np.where(d > opt, lb, np.where(d < -opt, ub, 0.0))
    dual_feasible = np.all(np.isfinite(bound_terms))
    dual_feasible &= not np.any((arrays.senses == 0) & (y > 1e-6))
    dual_feasible &= not np.any((arrays.senses == 1) & (y < -1e-6))
    if dual_feasible:
        dual_objective = float(arrays.b @ y + np.dot(np.where(np.abs(d) > opt, d, 0.0), bound_terms)) + arrays.constant
    else:
        dual_objective = math.nan

    logger.debug("Simplex optimal: objective %.6f in %d iterations", objective, simplex.iterations)
    return LpSolution(
        status=LpStatus.OPTIMAL,
        values=x,
        duals=y,
        reduced_costs=d,
        objective=objective,
        dual_objective=dual_objective,
        iterations=simplex.iterations,
        warm_start=simplex.snapshot() if m else None,
    )


def solve_lp(program, tolerances=None, settings=None):
    # Solves the continuous relaxation of program (integrality ignored).
    # Решает непрерывную релаксацию задачи (целочисленность игнорируется).
    # Returns: LpSolution with per-row duals (>= rows have non-negative duals) and reduced costs.
    return solve_arrays(program.to_arrays(), tolerances=tolerances, settings=settings)
