# modules/benders.py
# Benders decomposition of the pair and qubit problems with per-scenario subproblems.
# Декомпозиция Бендерса для задач пар и кубитов с подзадачами по сценариям.

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from modules.errors import BendersError, SolverError
from modules.evaluation import PlanSolution, evaluate_cost
from modules.formulation import NETWORK, pair_requirement, solve_direct
from modules.lp_engine import LinearProgram, LpStatus, Sense, VarKind, solve_arrays
from modules.milp import solve_milp
from modules.settings import SolverSettings

logger = logging.getLogger(__name__)

DUAL_EPS = 1e-12
# step from the master point toward the core point when choosing cut duals
CORE_STEP = 1e-3
TRAJECTORY_COLUMNS = ["problem", "iteration", "lower", "upper", "upper_best", "gap"]


@dataclass(frozen=True)
class Cut:
    # estimate >= constant + sum(coefficients[symbol] * value[symbol])
    coefficients: dict
    constant: float
    iteration: int

    def __post_init__(self):
        if not math.isfinite(self.constant) or not all(math.isfinite(v) for v in self.coefficients.values()):
            raise BendersError(f"non-finite cut coefficient at iteration {self.iteration}")

    def rhs(self, values):
        return self.constant + math.fsum(coef * values.get(sym, 0.0) for sym, coef in self.coefficients.items())

    def is_satisfied(self, values, estimate, tolerance=1e-6):
        return estimate >= self.rhs(values) - tolerance * max(1.0, abs(estimate))


@dataclass
class BendersState:
    problem: str
    iteration: int = 0
    alpha: float = 0.0
    theta: float = 0.0
    lower_bound: float = -math.inf
    upper_bound: float = math.inf
    upper_bound_best: float = math.inf
    converged: bool = False
    cuts: list = field(default_factory=list)
    # one {symbol: dual} per iteration, summed over the subproblems
    duals: list = field(default_factory=list)
    fixed: dict = field(default_factory=dict)
    history: list = field(default_factory=list)

    @property
    def gap(self):
        return self.upper_bound_best - self.lower_bound

    def record(self, lower, upper, estimate):
        self.lower_bound = max(self.lower_bound, lower)
        self.upper_bound = upper
        improved = upper < self.upper_bound_best
        self.upper_bound_best = min(self.upper_bound_best, upper)
        if self.problem == "pairs":
            self.alpha = estimate
        else:
            self.theta = estimate
        self.history.append(
            {
                "problem": self.problem,
                "iteration": self.iteration,
                "lower": self.lower_bound,
                "upper": upper,
                "upper_best": self.upper_bound_best,
                "gap": self.gap,
            }
        )
        return improved


@dataclass(frozen=True)
class _SubResult:
    lp_value: float
    mip_value: float
    duals: dict
    values: dict
    # recourse value the cut takes at the master point
    anchor: float


@dataclass
class _Master:
    program: LinearProgram
    columns: dict
    estimate: int


# --- Subproblem helpers ---

def _fix(program, fix_rows, symbol, value):
    # Copy of a complicating variable pinned by an equality row; the row dual prices it.
    col = program.add_variable(f"fix_{'_'.join(str(p) for p in symbol)}", VarKind.CONTINUOUS, 0, math.inf)
    fix_rows[symbol] = program.add_constraint({col: 1}, Sense.EQ, value, name=f"fix({','.join(str(p) for p in symbol)})")
    return col


def _cut_duals(arrays, lp, fix_rows, settings, direction):
    # Duals of the fixing rows at a point moved slightly toward the core point.
    # Двойственные оценки в точке, слегка сдвинутой к опорной точке.
    # Returns: Tuple ({symbol: dual}, value of the cut at the master point).
    duals = {sym: float(lp.duals[row]) for sym, row in fix_rows.items()}
    if not direction:
        return duals, lp.objective
    shift = np.zeros(len(arrays.b))
    for sym, row in fix_rows.items():
        shift[row] = direction.get(sym, 0.0)
    if not np.any(shift):
        return duals, lp.objective
    moved = solve_arrays(
        replace(arrays, b=arrays.b + CORE_STEP * shift),
        tolerances=settings.tolerances,
        settings=settings.simplex,
        warm_start=lp.warm_start,
    )
    if not moved.is_optimal:
        return duals, lp.objective
    moved_duals = {sym: float(moved.duals[row]) for sym, row in fix_rows.items()}
    anchor = moved.objective - math.fsum(CORE_STEP * moved_duals[sym] * shift[row] for sym, row in fix_rows.items())
    # the cut must still touch the recourse value at the master point
    if anchor < lp.objective - settings.tolerances.feasibility * max(1.0, abs(lp.objective)):
        return duals, lp.objective
    return moved_duals, anchor


def _solve_subproblem(program, fix_rows, decisions, settings, label, scenario=None, direction=None):
    arrays = program.to_arrays()
    lp = solve_arrays(arrays, tolerances=settings.tolerances, settings=settings.simplex)
    if lp.status is LpStatus.INFEASIBLE:
        raise BendersError(f"{label} subproblem infeasible", scenario)
    if not lp.is_optimal:
        raise BendersError(f"{label} subproblem ended with status {lp.status.value}", scenario)
    integer = arrays.integer
    x = lp.values
    if np.all(np.abs(x[integer] - np.round(x[integer])) <= settings.tolerances.integrality):
        # integral relaxation: no branching needed
        x = x.copy()
        x[integer] = np.round(x[integer])
        mip_value = float(arrays.c @ x) + arrays.constant
    else:
        milp = solve_milp(program, node_limit=settings.node_limit, tolerances=settings.tolerances, settings=settings.simplex)
        if not milp.is_optimal:
            raise BendersError(f"{label} subproblem ended with status {milp.status.value}", scenario)
        x, mip_value = milp.values, milp.objective
    duals, anchor = _cut_duals(arrays, lp, fix_rows, settings, direction)
    values = {sym: float(x[col]) for sym, col in decisions.items()}
    return _SubResult(lp.objective, mip_value, duals, values, anchor)


def _run(executor, fn, items):
    if executor is None:
        return [fn(item) for item in items]
    return list(executor.map(fn, items))


# --- Entangled-pair problem ---

class _PairProblem:
    name = "pairs"

    def __init__(self, instance, scenario_space, routes, reserved_pairs, settings):
        self.instance = instance
        self.space = scenario_space
        self.topology = instance.topology
        self.routes = routes
        self.reserved_pairs = reserved_pairs
        self.settings = settings
        self.routed = sorted(key for key, v in routes.items() if v)
        self.k = {}
        for i, j, r in self.routed:
            link = self.topology.link(i, j)
            for s in scenario_space:
                k = pair_requirement(link, s.request_fidelity(r))
                if k is None:
                    raise BendersError(f"routed link {i}->{j} cannot meet the fidelity demand of {r}", s.id)
                self.k[(i, j, r, s.id)] = k
        self.by_fiber = {}
        for i, j, r in self.routed:
            self.by_fiber.setdefault(self.topology.link(i, j).fiber, []).append((i, j, r))
        if reserved_pairs is not None:
            for fiber, keys in self.by_fiber.items():
                if reserved_pairs * len(keys) > self.topology.fiber_capacity(fiber)[0]:
                    raise BendersError(f"forced reservation of {reserved_pairs} pairs exceeds fiber {fiber} capacity")

    @property
    def empty(self):
        return not self.routed

    def master(self):
        program = LinearProgram("pair_master")
        columns = {}
        objective = {}
        envelope = {}
        for i, j, r in self.routed:
            link = self.topology.link(i, j)
            cap = link.reserve_capacity
            u = program.add_variable(f"u({i},{j},{r})", VarKind.CONTINUOUS, 0, cap)
            envelope[(i, j, r)] = u
            price = self.instance.costs.pair(j, r)
            for s in self.space:
                ub = min(self.k[(i, j, r, s.id)], cap)
                if self.reserved_pairs is not None:
                    ub = min(ub, self.reserved_pairs)
                y = program.add_variable(f"y_eep({i},{j},{r},{s.id})", VarKind.INTEGER, 0, ub)
                columns[("y_eep", i, j, r, s.id)] = y
                program.add_constraint({y: 1, u: -1}, Sense.LE, 0, name=f"envelope({i},{j},{r},{s.id})")
                if s.probability * price.utilize:
                    objective[y] = s.probability * price.utilize

        for fiber, keys in self.by_fiber.items():
            rcap, ocap = self.topology.fiber_capacity(fiber)
            program.add_constraint({envelope[key]: 1 for key in keys}, Sense.LE, rcap, name=f"rep_cap({fiber})")
            for s in self.space:
                need = sum(self.k[(*key, s.id)] for key in keys) - ocap
                if need > 0:
                    terms = {columns[("y_eep", *key, s.id)]: 1 for key in keys}
                    program.add_constraint(terms, Sense.GE, need, name=f"oep_room({fiber},{s.id})")

        alpha = program.add_variable("alpha", VarKind.CONTINUOUS, 0, math.inf)
        objective[alpha] = 1.0
        program.set_objective(objective)
        return _Master(program, columns, alpha)

    def reservation(self, fixed, direction=None):
        # Reservation subproblem: reserve at least the pairs used in any scenario.
        # Подзадача резервирования: зарезервировать не меньше пар, чем используется в любом сценарии.
        program = LinearProgram("pair_reservation")
        fix_rows, decisions, objective = {}, {}, {}
        for i, j, r in self.routed:
            link = self.topology.link(i, j)
            node = self.topology.node(j)
            v = self.reserved_pairs
            lb, ub = (v, v) if v is not None else (0, link.reserve_capacity)
            y = program.add_variable(f"y_rep({i},{j},{r})", VarKind.INTEGER, lb, ub)
            decisions[("y_rep", i, j, r)] = y
            objective[y] = node.energy_cost + node.repeater_setup_cost + self.instance.costs.pair(j, r).reserve
            for s in self.space:
                symbol = ("y_eep", i, j, r, s.id)
                copy = _fix(program, fix_rows, symbol, fixed[symbol])
                program.add_constraint({copy: 1, y: -1}, Sense.LE, 0, name=f"use_rep({i},{j},{r},{s.id})")
        for fiber, keys in self.by_fiber.items():
            terms = {decisions[("y_rep", *key)]: 1 for key in keys}
            program.add_constraint(terms, Sense.LE, self.topology.fiber_capacity(fiber)[0], name=f"rep_cap({fiber})")
        program.set_objective(objective)
        return _solve_subproblem(program, fix_rows, decisions, self.settings, "pair reservation", direction=direction)

    def ondemand(self, fixed, scenario, direction=None):
        program = LinearProgram(f"pair_ondemand_{scenario.id}")
        fix_rows, decisions, objective = {}, {}, {}
        for i, j, r in self.routed:
            link = self.topology.link(i, j)
            symbol = ("y_eep", i, j, r, scenario.id)
            copy = _fix(program, fix_rows, symbol, fixed[symbol])
            y = program.add_variable(f"y_oep({i},{j},{r})", VarKind.INTEGER, 0, link.ondemand_capacity)
            decisions[("y_oep", i, j, r, scenario.id)] = y
            k = self.k[(i, j, r, scenario.id)]
            program.add_constraint({copy: 1, y: 1}, Sense.GE, k, name=f"fidelity({i},{j},{r})")
            objective[y] = scenario.probability * self.instance.costs.pair(j, r).ondemand
        for fiber, keys in self.by_fiber.items():
            terms = {decisions[("y_oep", *key, scenario.id)]: 1 for key in keys}
            program.add_constraint(terms, Sense.LE, self.topology.fiber_capacity(fiber)[1], name=f"oep_cap({fiber})")
        program.set_objective(objective)
        return _solve_subproblem(program, fix_rows, decisions, self.settings, "pair on-demand", scenario.id, direction)

    def subproblems(self, fixed, executor, direction=None):
        first = self.reservation(fixed, direction)
        return [first] + _run(executor, lambda s: self.ondemand(fixed, s, direction), list(self.space))

    def fragment(self, fixed, results):
        plan = PlanSolution()
        for r in self.instance.requests:
            for link in self.topology.links:
                key = (*link.key, r.id)
                plan.route[key] = 1 if self.routes.get(key, 0) else 0
                plan.pairs_reserved[key] = 0
                for s in self.space:
                    plan.pairs_utilized[(*key, s.id)] = 0
                    plan.pairs_ondemand[(*key, s.id)] = 0
        for (kind, *index), value in fixed.items():
            plan.pairs_utilized[tuple(index)] = int(round(value))
        for result in results:
            for (kind, *index), value in result.values.items():
                target = plan.pairs_reserved if kind == "y_rep" else plan.pairs_ondemand
                target[tuple(index)] = int(round(value))
        return plan


# --- Qubit problem ---

class _QubitProblem:
    name = "qubits"

    def __init__(self, instance, scenario_space, settings):
        self.instance = instance
        self.space = scenario_space
        self.settings = settings
        self.keys = instance.circuit_keys()
        self.machines = instance.machines()
        self.beta_max = {
            (r, c): max(s.qubits(r, c) for s in scenario_space) for r, c in self.keys
        }

    @property
    def empty(self):
        return not self.keys or not self.machines

    def master(self):
        program = LinearProgram("qubit_master")
        columns = {}
        objective = {}
        for r, c in self.keys:
            assign = {}
            for p, m in self.machines:
                a = program.add_variable(f"assign({r},{c},{p},{m.id})", VarKind.BINARY, 0, 1)
                assign[(p, m.id)] = a
                columns[("assign", r, c, p, m.id)] = a
            program.add_constraint({a: 1 for a in assign.values()}, Sense.EQ, 1, name=f"assign({r},{c})")
            for p, m in self.machines:
                a = assign[(p, m.id)]
                price = self.instance.costs.qubit(c, p)
                for s in self.space:
                    ub = min(m.qubit_capacity, s.qubits(r, c))
                    x = program.add_variable(f"x_uqt({c},{p},{m.id},{r},{s.id})", VarKind.INTEGER, 0, ub)
                    columns[("x_uqt", c, p, m.id, r, s.id)] = x
                    if ub > 0:
                        program.add_constraint({x: 1, a: -ub}, Sense.LE, 0, name=f"use_assigned({c},{p},{m.id},{r},{s.id})")
                    if s.probability * price.utilize:
                        objective[x] = s.probability * price.utilize
        theta = program.add_variable("theta", VarKind.CONTINUOUS, 0, math.inf)
        objective[theta] = 1.0
        program.set_objective(objective)
        return _Master(program, columns, theta)

    def reservation(self, fixed, direction=None):
        program = LinearProgram("qubit_reservation")
        fix_rows, decisions, objective = {}, {}, {}
        for r, c in self.keys:
            for p, m in self.machines:
                tag = f"{c},{p},{m.id},{r}"
                a = _fix(program, fix_rows, ("assign", r, c, p, m.id), fixed[("assign", r, c, p, m.id)])
                x = program.add_variable(f"x_rqt({tag})", VarKind.INTEGER, 0, m.qubit_capacity)
                decisions[("x_rqt", c, p, m.id, r)] = x
                objective[x] = self.instance.costs.qubit(c, p).reserve
                program.add_constraint({x: 1, a: -m.qubit_capacity}, Sense.LE, 0, name=f"qubit_cap({tag})")
                for s in self.space:
                    symbol = ("x_uqt", c, p, m.id, r, s.id)
                    u = _fix(program, fix_rows, symbol, fixed[symbol])
                    program.add_constraint({u: 1, x: -1}, Sense.LE, 0, name=f"use_qrt({tag},{s.id})")
        program.set_objective(objective)
        return _solve_subproblem(program, fix_rows, decisions, self.settings, "qubit reservation", direction=direction)

    def ondemand(self, fixed, scenario, direction=None):
        program = LinearProgram(f"qubit_ondemand_{scenario.id}")
        fix_rows, decisions, objective = {}, {}, {}
        p_s = scenario.probability
        for r, c in self.keys:
            beta = scenario.qubits(r, c)
            for p, m in self.machines:
                tag = f"{c},{p},{m.id},{r}"
                price = self.instance.costs.qubit(c, p)
                over = self.instance.execution_time(c, p, m.id, r) - scenario.wait(r, c)
                a = _fix(program, fix_rows, ("assign", r, c, p, m.id), fixed[("assign", r, c, p, m.id)])
                symbol = ("x_uqt", c, p, m.id, r, scenario.id)
                u = _fix(program, fix_rows, symbol, fixed[symbol])
                x = program.add_variable(f"x_oqt({tag})", VarKind.INTEGER, 0, self.beta_max[(r, c)])
                y = program.add_variable(f"y_owt({tag})", VarKind.CONTINUOUS, 0, math.inf)
                decisions[("x_oqt", c, p, m.id, r, scenario.id)] = x
                decisions[("y_owt", c, p, m.id, r, scenario.id)] = y
                if beta > 0:
                    program.add_constraint({u: 1, x: 1, a: -beta}, Sense.GE, 0, name=f"qubit_demand({tag})")
                if over > 0:
                    program.add_constraint({y: 1, a: -over}, Sense.GE, 0, name=f"overwait({tag})")
                objective[x] = p_s * price.ondemand
                objective[y] = p_s * price.overwait_penalty
        program.set_objective(objective)
        return _solve_subproblem(program, fix_rows, decisions, self.settings, "qubit on-demand", scenario.id, direction)

    def subproblems(self, fixed, executor, direction=None):
        first = self.reservation(fixed, direction)
        return [first] + _run(executor, lambda s: self.ondemand(fixed, s, direction), list(self.space))

    def fragment(self, fixed, results):
        plan = PlanSolution()
        for (kind, *index), value in fixed.items():
            if kind == "assign":
                if value > 0.5:
                    r, c, p, m = index
                    plan.assignment[(r, c)] = (p, m)
            else:
                plan.qubits_utilized[tuple(index)] = int(round(value))
        for result in results:
            for (kind, *index), value in result.values.items():
                if kind == "x_rqt":
                    plan.qubits_reserved[tuple(index)] = int(round(value))
                elif kind == "x_oqt":
                    plan.qubits_ondemand[tuple(index)] = int(round(value))
                else:
                    plan.overwait[tuple(index)] = max(0.0, value)
        return plan


# --- Loop ---

def _benders_loop(problem, epsilon, config, settings):
    # Step 1: master; Step 2: subproblems at the master point; Step 3: bound test; Step 4: cut.
    # Шаг 1: мастер-задача; шаг 2: подзадачи; шаг 3: проверка границ; шаг 4: отсечение.
    state = BendersState(problem.name)
    if problem.empty:
        state.iteration = 1
        state.record(0.0, 0.0, 0.0)
        state.converged = True
        return PlanSolution(), state

    master = problem.master()
    best = None
    core = None
    start = None
    executor = ThreadPoolExecutor(max_workers=config.workers) if config.workers > 1 else None
    try:
        while state.iteration < config.max_iterations:
            state.iteration += 1
            solution = solve_milp(
                master.program,
                node_limit=settings.node_limit,
                tolerances=settings.tolerances,
                settings=settings.simplex,
                start=start,
            )
            if not solution.is_optimal:
                raise BendersError(f"{problem.name} master ended with status {solution.status.value}")
            fixed = {sym: float(round(solution.values[col])) for sym, col in master.columns.items()}
            estimate = float(solution.values[master.estimate])
            state.fixed = fixed

            # core point: running midpoint of the master points seen so far
            if core is None:
                core = dict(fixed)
            else:
                core = {sym: 0.5 * (core[sym] + value) for sym, value in fixed.items()}
            direction = {sym: core[sym] - value for sym, value in fixed.items() if core[sym] != value}

            results = problem.subproblems(fixed, executor, direction)
            anchor = math.fsum(res.anchor for res in results)
            mip_value = math.fsum(res.mip_value for res in results)
            upper = solution.objective - estimate + mip_value
            if state.record(solution.best_bound, upper, estimate) or best is None:
                best = (fixed, results)

            duals = {}
            for res in results:
                for sym, value in res.duals.items():
                    duals[sym] = duals.get(sym, 0.0) + value
            state.duals.append(duals)
            logger.info(
                "Benders %s iteration %d: lower %.6f, upper %.6f, best upper %.6f",
                problem.name, state.iteration, state.lower_bound, upper, state.upper_bound_best,
            )
            if state.gap < epsilon:
                state.converged = True
                break

            coefficients = {sym: v for sym, v in duals.items() if abs(v) > DUAL_EPS}
            constant = anchor - math.fsum(v * fixed[sym] for sym, v in coefficients.items())
            cut = Cut(coefficients, constant, state.iteration)
            state.cuts.append(cut)
            terms = {master.estimate: 1.0}
            for sym, v in coefficients.items():
                terms[master.columns[sym]] = -v
            master.program.add_constraint(terms, Sense.GE, constant, name=f"cut({state.iteration})")

            # the last master point, lifted onto the new cut, seeds the next search
            start = solution.values.copy()
            for sym, col in master.columns.items():
                start[col] = fixed[sym]
            start[master.estimate] = max(estimate, cut.rhs(fixed))
    finally:
        if executor is not None:
            executor.shutdown()

    if not state.converged:
        logger.warning(
            "Benders %s stopped after %d iterations with gap %.6f", problem.name, state.iteration, state.gap
        )
    return problem.fragment(*best), state


def solve_pair_benders(instance, scenario_space, config, fixed_routes, reserved_pairs=None, settings=None):
    # Pair problem with routes fixed: utilization in the master, reservation and on-demand in subproblems.
    # Задача пар при фиксированных маршрутах.
    # Returns: Tuple (PlanSolution fragment, BendersState).
    settings = settings or SolverSettings()
    problem = _PairProblem(instance, scenario_space, fixed_routes, reserved_pairs, settings)
    return _benders_loop(problem, config.epsilon_pairs, config, settings)


def solve_qubit_benders(instance, scenario_space, config, settings=None):
    settings = settings or SolverSettings()
    problem = _QubitProblem(instance, scenario_space, settings)
    return _benders_loop(problem, config.epsilon_qubits, config, settings)


# --- Full decomposition ---

@dataclass
class DecompositionReport:
    route_solution: PlanSolution
    pair_state: BendersState
    qubit_state: BendersState

    @property
    def converged(self):
        return self.pair_state.converged and self.qubit_state.converged

    @property
    def trajectory(self):
        rows = self.pair_state.history + self.qubit_state.history
        return pd.DataFrame(rows, columns=TRAJECTORY_COLUMNS)


def run_decomposed(instance, scenario_space, config=None, settings=None, reserved_pairs=None, fixed_routes=None):
    # Routes from a network-level solve, then the pair and qubit problems independently.
    # Маршруты из решения сетевой части, затем независимые задачи пар и кубитов.
    # Returns: Tuple (PlanSolution, DecompositionReport).
    settings = settings or SolverSettings()
    config = config or settings.benders
    route_solution = None
    if fixed_routes is None:
        if instance.requests:
            route_solution, milp, _, _ = solve_direct(
                instance, scenario_space, parts=(NETWORK,), reserved_pairs=reserved_pairs, settings=settings
            )
            if route_solution is None:
                raise SolverError(f"route solve ended with status {milp.status.value}", milp.status)
            fixed_routes = route_solution.route
        else:
            fixed_routes = {}

    def pairs():
        return solve_pair_benders(instance, scenario_space, config, fixed_routes, reserved_pairs, settings)

    def qubits():
        return solve_qubit_benders(instance, scenario_space, config, settings)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=2) as pool:
            pair_future = pool.submit(pairs)
            qubit_future = pool.submit(qubits)
            (pair_plan, pair_state), (qubit_plan, qubit_state) = pair_future.result(), qubit_future.result()
    else:
        pair_plan, pair_state = pairs()
        qubit_plan, qubit_state = qubits()

    plan = pair_plan.merged(qubit_plan)
    plan.cost_breakdown = evaluate_cost(plan, instance, scenario_space)
    report = DecompositionReport(route_solution, pair_state, qubit_state)
    logger.info(
        "Decomposed plan: total %.6f (pairs %s after %d iterations, qubits %s after %d)",
        plan.cost_breakdown.total,
        "converged" if pair_state.converged else "not converged", pair_state.iteration,
        "converged" if qubit_state.converged else "not converged", qubit_state.iteration,
    )
    return plan, report
