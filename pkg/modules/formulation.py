# modules/formulation.py
# Deterministic-equivalent MILP of the two-stage provisioning problem and its baselines.
# Детерминированный эквивалент двухэтапной задачи резервирования и базовые модели.

import logging
import math
from collections import Counter
from dataclasses import dataclass, field

import networkx as nx

from modules.errors import InfeasibleModelError, SolutionError, SolverError
from modules.evaluation import PlanSolution, evaluate_cost
from modules.lp_engine import LinearProgram, Sense, VarKind
from modules.milp import MilpStatus, solve_milp
from modules.purification import min_pairs_for_target
from modules.scenarios import ScenarioSpace

logger = logging.getLogger(__name__)

NETWORK = "network"
QUBIT = "qubit"
ALL_PARTS = (NETWORK, QUBIT)
AUXILIARY = frozenset({"z", "assign"})
COST_CHECK_TOLERANCE = 1e-5


# --- Modes and variable map ---

@dataclass(frozen=True)
class ModelMode:
    kind: str = "stochastic"
    scenario: object = None

    def __post_init__(self):
        if self.kind not in ("stochastic", "expected_value", "perfect_information"):
            raise ValueError(f"unknown model mode {self.kind}")
        if (self.kind == "perfect_information") != (self.scenario is not None):
            raise ValueError("perfect_information mode carries exactly one scenario")

    @classmethod
    def stochastic(cls):
        return cls("stochastic")

    @classmethod
    def expected_value(cls):
        return cls("expected_value")

    @classmethod
    def perfect_information(cls, scenario):
        return cls("perfect_information", scenario)


def effective_space(scenario_space, mode):
    # Scenario space the model is actually built over.
    # Пространство сценариев, на котором фактически строится модель.
    if mode.kind == "expected_value":
        return ScenarioSpace.single(scenario_space.expected_scenario())
    if mode.kind == "perfect_information":
        return ScenarioSpace.single(mode.scenario)
    return scenario_space


class VariableMap:
    # Symbol tuples such as ("y_rep", i, j, r) <-> solver variable indices.
    # Символы вида ("y_rep", i, j, r) <-> индексы переменных решателя.

    def __init__(self, space=None, mode=None):
        self._index = {}
        self._symbol = {}
        self.space = space
        self.mode = mode

    def add(self, symbol, index):
        if symbol in self._index or index in self._symbol:
            raise ValueError(f"symbol {symbol} or index {index} already mapped")
        self._index[symbol] = index
        self._symbol[index] = symbol

    def index(self, symbol):
        return self._index[symbol]

    def get(self, symbol, default=None):
        return self._index.get(symbol, default)

    def symbol(self, index):
        return self._symbol[index]

    def items(self, kind=None):
        return [(s, i) for s, i in self._index.items() if kind is None or s[0] == kind]

    def __len__(self):
        return len(self._index)

    def __contains__(self, symbol):
        return symbol in self._index

    def counts(self):
        return Counter(s[0] for s in self._index)

    def decision_count(self):
        return sum(1 for s in self._index if s[0] not in AUXILIARY)


def _name(kind, *index):
    return f"{kind}({','.join(str(i) for i in index)})"


def pair_requirement(link, demand):
    # Minimum pairs on a link so purification meets max(demand, threshold); None if unreachable.
    # Минимальное число пар на канале для max(спрос, порог); None, если недостижимо.
    budget = link.reserve_capacity + link.ondemand_capacity
    if budget < 1:
        return None
    target = max(demand, link.fidelity_threshold)
    return min_pairs_for_target(link.base_fidelity, target, budget)


def requirement_table(instance, scenario_space):
    return {
        (link.source, link.target, r.id, s.id): pair_requirement(link, s.request_fidelity(r.id))
        for r in instance.requests
        for link in instance.topology.links
        for s in scenario_space
    }


# --- Model building ---

class _Builder:

    def __init__(self, instance, space, program, vmap):
        self.instance = instance
        self.space = space
        self.program = program
        self.vmap = vmap
        self.objective = {}

    def var(self, symbol, kind, lb, ub):
        index = self.program.add_variable(_name(*symbol), kind, lb, ub)
        self.vmap.add(symbol, index)
        return index

    def cost(self, index, coef):
        if coef:
            self.objective[index] = self.objective.get(index, 0.0) + coef

    def row(self, terms, sense, rhs, name):
        self.program.add_constraint(terms, sense, rhs, name=name)

    def network(self, check_paths, reserved_pairs):
        topo = self.instance.topology
        scenarios = self.space.scenarios
        ks = requirement_table(self.instance, self.space)
        z_by_fiber = {}
        oep_by_fiber = {}

        for r in self.instance.requests:
            allowed = set()
            blocking = []
            for link in topo.links:
                i, j = link.key
                if any(ks[(i, j, r.id, s.id)] is None for s in scenarios):
                    blocking.append(link.key)
                    continue
                if j == r.source or i == r.destination:
                    continue
                allowed.add(link.key)
            if check_paths and not nx.has_path(topo.to_graph(sorted(allowed)), r.source, r.destination):
                raise InfeasibleModelError(r.id, blocking)

            w = {}
            for link in topo.links:
                i, j = link.key
                cap = link.reserve_capacity
                node = topo.node(j)
                price = self.instance.costs.pair(j, r.id)
                w[link.key] = self.var(("w", i, j, r.id), VarKind.BINARY, 0, 1 if link.key in allowed else 0)
                y = self.var(("y_rep", i, j, r.id), VarKind.INTEGER, 0, cap)
                z = self.var(("z", i, j, r.id), VarKind.CONTINUOUS, 0, cap)
                tag = f"{i},{j},{r.id}"
                # z = w * y_rep
                self.row({z: 1, y: -1}, Sense.LE, 0, f"lin_y({tag})")
                self.row({z: 1, w[link.key]: -cap}, Sense.LE, 0, f"lin_w({tag})")
                self.row({z: 1, y: -1, w[link.key]: -cap}, Sense.GE, -cap, f"lin_yw({tag})")
                self.row({y: 1, w[link.key]: -cap}, Sense.LE, 0, f"rep_route({tag})")
                if reserved_pairs is not None:
                    self.row({y: 1, w[link.key]: -reserved_pairs}, Sense.EQ, 0, f"rep_forced({tag})")
                self.cost(z, node.energy_cost + node.repeater_setup_cost)
                self.cost(y, price.reserve)
                z_by_fiber.setdefault(link.fiber, []).append(z)

                for s in scenarios:
                    eep = self.var(("y_eep", i, j, r.id, s.id), VarKind.INTEGER, 0, cap)
                    oep = self.var(("y_oep", i, j, r.id, s.id), VarKind.INTEGER, 0, link.ondemand_capacity)
                    stag = f"{tag},{s.id}"
                    self.row({eep: 1, z: -1}, Sense.LE, 0, f"use_rep({stag})")
                    k = ks[(i, j, r.id, s.id)]
                    if k is not None and link.key in allowed:
                        self.row({eep: 1, oep: 1, w[link.key]: -k}, Sense.GE, 0, f"fidelity({stag})")
                    self.cost(eep, s.probability * price.utilize)
                    self.cost(oep, s.probability * price.ondemand)
                    oep_by_fiber.setdefault((link.fiber, s.id), []).append(oep)

            for node in topo.nodes:
                out = [w[key] for key in topo.outgoing(node.id)]
                inc = [w[key] for key in topo.incoming(node.id)]
                tag = f"{node.id},{r.id}"
                if node.id == r.source:
                    self.row({v: 1 for v in out}, Sense.EQ, 1, f"flow_src({tag})")
                elif node.id == r.destination:
                    self.row({v: 1 for v in inc}, Sense.EQ, 1, f"flow_dst({tag})")
                else:
                    if out or inc:
                        terms = {v: 1 for v in inc}
                        terms.update({v: -1 for v in out})
                        self.row(terms, Sense.EQ, 0, f"flow_mid({tag})")
                    if len(out) >= 2:
                        self.row({v: 1 for v in out}, Sense.LE, 1, f"flow_out({tag})")

        for fiber, keys in topo.fibers().items():
            rcap, ocap = topo.fiber_capacity(fiber)
            if z_by_fiber.get(fiber):
                self.row({v: 1 for v in z_by_fiber[fiber]}, Sense.LE, rcap, f"rep_cap({fiber})")
            for s in scenarios:
                columns = oep_by_fiber.get((fiber, s.id))
                if columns:
                    self.row({v: 1 for v in columns}, Sense.LE, ocap, f"oep_cap({fiber},{s.id})")

    def qubits(self):
        scenarios = self.space.scenarios
        machines = self.instance.machines()
        for r in self.instance.requests:
            for c in r.circuits:
                assign = {}
                for p, m in machines:
                    assign[(p, m.id)] = self.var(("assign", r.id, c, p, m.id), VarKind.BINARY, 0, 1)
                self.row({v: 1 for v in assign.values()}, Sense.EQ, 1, f"assign({r.id},{c})")
                beta_max = max((s.qubits(r.id, c) for s in scenarios), default=0)

                for p, m in machines:
                    cap = m.qubit_capacity
                    a = assign[(p, m.id)]
                    price = self.instance.costs.qubit(c, p)
                    exe = self.instance.execution_time(c, p, m.id, r.id)
                    tag = f"{c},{p},{m.id},{r.id}"
                    x_r = self.var(("x_rqt", c, p, m.id, r.id), VarKind.INTEGER, 0, cap)
                    self.row({x_r: 1, a: -cap}, Sense.LE, 0, f"qubit_cap({tag})")
                    self.cost(x_r, price.reserve)
                    for s in scenarios:
                        beta = s.qubits(r.id, c)
                        over = exe - s.wait(r.id, c)
                        stag = f"{tag},{s.id}"
                        x_u = self.var(("x_uqt", c, p, m.id, r.id, s.id), VarKind.INTEGER, 0, cap)
                        x_o = self.var(("x_oqt", c, p, m.id, r.id, s.id), VarKind.INTEGER, 0, beta_max)
                        y_w = self.var(("y_owt", c, p, m.id, r.id, s.id), VarKind.CONTINUOUS, 0, math.inf)
                        self.row({x_u: 1, x_r: -1}, Sense.LE, 0, f"use_qrt({stag})")
                        if beta > 0:
                            self.row({x_u: 1, x_o: 1, a: -beta}, Sense.GE, 0, f"qubit_demand({stag})")
                        if over > 0:
                            self.row({y_w: 1, a: -over}, Sense.GE, 0, f"overwait({stag})")
                        self.cost(x_u, s.probability * price.utilize)
                        self.cost(x_o, s.probability * price.ondemand)
                        self.cost(y_w, s.probability * price.overwait_penalty)


def _freeze_first_stage(program, vmap, solution):
    # Fixes routes, reservations and machine assignments through variable bounds.
    # Фиксирует маршруты, резервы и назначения машин через границы переменных.
    for (kind, *index), col in vmap.items():
        if kind == "w":
            value = solution.route.get(tuple(index), 0)
        elif kind == "y_rep":
            value = solution.pairs_reserved.get(tuple(index), 0)
        elif kind == "z":
            key = tuple(index)
            value = solution.route.get(key, 0) * solution.pairs_reserved.get(key, 0)
        elif kind == "x_rqt":
            value = solution.qubits_reserved.get(tuple(index), 0)
        elif kind == "assign":
            r, c, p, m = index
            if (r, c) not in solution.assignment:
                raise SolutionError(f"first stage has no machine assignment for {r}/{c}")
            value = 1 if solution.assignment[(r, c)] == (p, m) else 0
        else:
            continue
        program.set_bounds(col, value, value)


def build_model(instance, scenario_space, mode=None, parts=ALL_PARTS, first_stage=None, reserved_pairs=None):
    # Builds the deterministic-equivalent MILP over the mode's scenario space.
    # Строит детерминированный эквивалент СЦЛП на пространстве сценариев режима.
    # Returns: Tuple (LinearProgram, VariableMap).
    mode = mode or ModelMode.stochastic()
    space = effective_space(scenario_space, mode)
    program = LinearProgram(name=f"qcc_{mode.kind}")
    vmap = VariableMap(space, mode)
    builder = _Builder(instance, space, program, vmap)
    if NETWORK in parts:
        builder.network(check_paths=first_stage is None, reserved_pairs=reserved_pairs)
    if QUBIT in parts:
        builder.qubits()
    program.set_objective(builder.objective)
    if first_stage is not None:
        _freeze_first_stage(program, vmap, first_stage)
    logger.debug(
        "Built %s model: %d variables (%d decision), %d rows",
        mode.kind, program.num_variables, vmap.decision_count(), program.num_constraints,
    )
    return program, vmap


# --- Solution mapping ---

def _walk_route(instance, request, route):
    # Follows w = 1 links from the source; links off that path (disjoint cycles) are dropped.
    path = []
    current = request.source
    visited = {current}
    while current != request.destination:
        nxt = [key for key in instance.topology.outgoing(current) if route.get((*key, request.id), 0)]
        if not nxt:
            raise SolutionError(f"request {request.id}: route broken at node {current}")
        key = nxt[0]
        path.append(key)
        current = key[1]
        if current in visited:
            raise SolutionError(f"request {request.id}: route revisits node {current}")
        visited.add(current)
    return path


def extract_solution(milp_solution, variable_map, instance, scenario_space=None):
    # Maps an optimal MILP incumbent back to a PlanSolution and checks its cost.
    # Переводит оптимальное решение СЦЛП в PlanSolution и сверяет стоимость.
    if milp_solution.status is not MilpStatus.OPTIMAL:
        raise SolutionError(f"cannot extract a plan from status {milp_solution.status.value}")
    space = variable_map.space or scenario_space
    values = milp_solution.values
    plan = PlanSolution()
    targets = {
        "w": plan.route,
        "y_rep": plan.pairs_reserved,
        "y_eep": plan.pairs_utilized,
        "y_oep": plan.pairs_ondemand,
        "x_rqt": plan.qubits_reserved,
        "x_uqt": plan.qubits_utilized,
        "x_oqt": plan.qubits_ondemand,
    }
    for (kind, *index), col in variable_map.items():
        value = values[col]
        if kind in targets:
            targets[kind][tuple(index)] = int(round(value))
        elif kind == "y_owt":
            plan.overwait[tuple(index)] = max(0.0, float(value))
        elif kind == "assign" and value > 0.5:
            r, c, p, m = index
            plan.assignment[(r, c)] = (p, m)

    if plan.route:
        for r in instance.requests:
            path = set(_walk_route(instance, r, plan.route))
            for (i, j, req) in list(plan.route):
                if req == r.id and (i, j) not in path and plan.route[(i, j, req)]:
                    logger.debug("Dropping cycle link %s->%s of request %s", i, j, req)
                    plan.route[(i, j, req)] = 0

    breakdown = evaluate_cost(plan, instance, space)
    objective = milp_solution.objective
    if abs(breakdown.total - objective) > COST_CHECK_TOLERANCE * max(1.0, abs(objective)):
        raise SolutionError(f"plan cost {breakdown.total:.6f} disagrees with solver objective {objective:.6f}")
    plan.cost_breakdown = breakdown
    return plan


def solve_direct(instance, scenario_space, mode=None, parts=ALL_PARTS, first_stage=None,
                 reserved_pairs=None, gap_tolerance=None, settings=None):
    # Builds, solves and extracts in one call.
    # Returns: Tuple (PlanSolution or None, MilpSolution, LinearProgram, VariableMap).
    program, vmap = build_model(instance, scenario_space, mode, parts, first_stage, reserved_pairs)
    kwargs = {}
    if settings is not None:
        kwargs = {"node_limit": settings.node_limit, "tolerances": settings.tolerances, "settings": settings.simplex}
    milp = solve_milp(program, gap_tolerance=gap_tolerance, **kwargs)
    if milp.status is MilpStatus.OPTIMAL:
        return extract_solution(milp, vmap, instance, scenario_space), milp, program, vmap
    if milp.status is MilpStatus.NUMERICAL:
        raise SolverError("direct solve failed numerically", milp.status)
    return None, milp, program, vmap


# --- First-stage evaluation ---

@dataclass(frozen=True)
class FirstStageEvaluation:
    first_stage: float
    second_stage: float
    per_scenario: dict
    infeasible: list = field(default_factory=list)

    @property
    def feasible(self):
        return not self.infeasible

    @property
    def total(self):
        return self.first_stage + self.second_stage if self.feasible else math.inf


def _first_stage_only(solution):
    return PlanSolution(
        route=dict(solution.route),
        pairs_reserved=dict(solution.pairs_reserved),
        qubits_reserved=dict(solution.qubits_reserved),
        assignment=dict(solution.assignment),
    )


def evaluate_first_stage_against(solution, instance, scenario_space, gap_tolerance=None, settings=None):
    # Re-optimizes only second-stage decisions per scenario with the first stage frozen.
    # Переоптимизирует только решения второго этапа по каждому сценарию при фиксированном первом.
    frozen = _first_stage_only(solution)
    parts = tuple(p for p, present in ((NETWORK, bool(frozen.route)), (QUBIT, bool(frozen.assignment))) if present)
    first = evaluate_cost(frozen, instance, scenario_space).first_stage
    routed = [key for key, v in frozen.route.items() if v]

    per_scenario = {}
    infeasible = []
    for s in scenario_space:
        blocked = [
            (i, j, r)
            for (i, j, r) in routed
            if pair_requirement(instance.topology.link(i, j), s.request_fidelity(r)) is None
        ]
        if blocked:
            links = ", ".join(f"{i}->{j} ({r})" for i, j, r in blocked)
            infeasible.append((s.id, f"fidelity unreachable on routed links {links}"))
            continue
        single = ScenarioSpace.single(s)
        plan, milp, _, _ = solve_direct(
            instance, single, parts=parts, first_stage=frozen, gap_tolerance=gap_tolerance, settings=settings
        )
        if plan is None:
            infeasible.append((s.id, f"second stage {milp.status.value}: on-demand capacity exhausted"))
            continue
        per_scenario[s.id] = plan.cost_breakdown.second_stage

    if infeasible:
        for sid, reason in infeasible:
            logger.warning("Frozen first stage infeasible in scenario %s: %s", sid, reason)
        second = math.inf
    else:
        second = math.fsum(s.probability * per_scenario[s.id] for s in scenario_space)
    return FirstStageEvaluation(first, second, per_scenario, infeasible)
