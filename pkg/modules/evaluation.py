# modules/evaluation.py
# Plan solutions and their cost breakdown.
# Решения плана и разбивка их стоимости.

import math
from dataclasses import dataclass, field

from modules.errors import SolutionError

COMPONENTS = (
    "pair_reservation",
    "pair_utilization",
    "pair_ondemand",
    "qubit_reservation",
    "qubit_utilization",
    "qubit_ondemand",
    "overwait_penalty",
)


@dataclass(frozen=True)
class CostBreakdown:
    first_stage: float
    second_stage: float
    per_scenario: dict
    components: dict

    @property
    def total(self):
        return self.first_stage + self.second_stage


@dataclass
class PlanSolution:
    # Link keys are flat tuples: (i, j, request) and (i, j, request, scenario).
    # Qubit keys: (circuit, provider, machine, request) and (..., scenario).
    route: dict = field(default_factory=dict)
    pairs_reserved: dict = field(default_factory=dict)
    pairs_utilized: dict = field(default_factory=dict)
    pairs_ondemand: dict = field(default_factory=dict)
    qubits_reserved: dict = field(default_factory=dict)
    qubits_utilized: dict = field(default_factory=dict)
    qubits_ondemand: dict = field(default_factory=dict)
    overwait: dict = field(default_factory=dict)
    # (request, circuit) -> (provider, machine)
    assignment: dict = field(default_factory=dict)
    cost_breakdown: CostBreakdown = None

    def routed_links(self, request=None):
        return [
            (i, j, r) for (i, j, r), v in self.route.items() if v and (request is None or r == request)
        ]

    def merged(self, other):
        # Union of two fragments (network part + qubit part); other wins on key clashes.
        result = PlanSolution()
        for name in (
            "route", "pairs_reserved", "pairs_utilized", "pairs_ondemand",
            "qubits_reserved", "qubits_utilized", "qubits_ondemand", "overwait", "assignment",
        ):
            getattr(result, name).update(getattr(self, name))
            getattr(result, name).update(getattr(other, name))
        return result


def _check_keys(solution, instance, scenario_space):
    links = set(instance.topology.link_keys())
    requests = {r.id for r in instance.requests}
    scenarios = set(scenario_space.ids)
    machines = {(p, m.id) for p, m in instance.machines()}
    circuits = {(r.id, c) for r in instance.requests for c in r.circuits}

    for name in ("route", "pairs_reserved"):
        for (i, j, r) in getattr(solution, name):
            if (i, j) not in links or r not in requests:
                raise SolutionError(f"index mismatch in {name}: {(i, j, r)}")
    for name in ("pairs_utilized", "pairs_ondemand"):
        for (i, j, r, s) in getattr(solution, name):
            if (i, j) not in links or r not in requests or s not in scenarios:
                raise SolutionError(f"index mismatch in {name}: {(i, j, r, s)}")
    for (c, p, m, r) in solution.qubits_reserved:
        if (p, m) not in machines or (r, c) not in circuits:
            raise SolutionError(f"index mismatch in qubits_reserved: {(c, p, m, r)}")
    for name in ("qubits_utilized", "qubits_ondemand", "overwait"):
        for (c, p, m, r, s) in getattr(solution, name):
            if (p, m) not in machines or (r, c) not in circuits or s not in scenarios:
                raise SolutionError(f"index mismatch in {name}: {(c, p, m, r, s)}")


def evaluate_cost(solution, instance, scenario_space):
    # First stage: sum (E + S) * w * y_rep + R * y_rep over links, plus R_cq * x_rqt.
    # Second stage: probability-weighted utilization, on-demand and over-waiting costs.
    # Первый этап: затраты на резерв пар и кубитов. Второй этап: ожидаемые затраты использования,
    # покупки по требованию и штрафа за ожидание.
    _check_keys(solution, instance, scenario_space)
    topology = instance.topology
    costs = instance.costs
    parts = {name: 0.0 for name in COMPONENTS}

    first = []
    for (i, j, r), y in solution.pairs_reserved.items():
        if not y:
            continue
        node = topology.node(j)
        w = solution.route.get((i, j, r), 0)
        pair = costs.pair(j, r)
        term = (node.energy_cost + node.repeater_setup_cost) * w * y + pair.reserve * y
        first.append(term)
        parts["pair_reservation"] += term
    for (c, p, m, r), x in solution.qubits_reserved.items():
        term = costs.qubit(c, p).reserve * x
        first.append(term)
        parts["qubit_reservation"] += term

    per_scenario = {s.id: [] for s in scenario_space}
    probability = {s.id: s.probability for s in scenario_space}
    for (i, j, r, s), y in solution.pairs_utilized.items():
        term = costs.pair(j, r).utilize * y
        per_scenario[s].append(term)
        parts["pair_utilization"] += probability[s] * term
    for (i, j, r, s), y in solution.pairs_ondemand.items():
        term = costs.pair(j, r).ondemand * y
        per_scenario[s].append(term)
        parts["pair_ondemand"] += probability[s] * term
    for (c, p, m, r, s), x in solution.qubits_utilized.items():
        term = costs.qubit(c, p).utilize * x
        per_scenario[s].append(term)
        parts["qubit_utilization"] += probability[s] * term
    for (c, p, m, r, s), x in solution.qubits_ondemand.items():
        term = costs.qubit(c, p).ondemand * x
        per_scenario[s].append(term)
        parts["qubit_ondemand"] += probability[s] * term
    for (c, p, m, r, s), t in solution.overwait.items():
        term = costs.qubit(c, p).overwait_penalty * t
        per_scenario[s].append(term)
        parts["overwait_penalty"] += probability[s] * term

    scenario_totals = {s: math.fsum(terms) for s, terms in per_scenario.items()}
    second = math.fsum(probability[s] * v for s, v in scenario_totals.items())
    return CostBreakdown(
        first_stage=math.fsum(first),
        second_stage=second,
        per_scenario=scenario_totals,
        components=parts,
    )
