# modules/scenarios.py
# Scenario space: joint demand realizations (fidelity, qubits, waiting time) with probabilities.
# Пространство сценариев: совместные реализации спроса (точность, кубиты, ожидание) с вероятностями.

import itertools
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from modules.errors import InstanceError, ScenarioError

logger = logging.getLogger(__name__)

PROBABILITY_TOLERANCE = 1e-9
KINDS = ("fidelity", "qubits", "wait")


@dataclass(frozen=True)
class Scenario:
    id: str
    # request -> circuit -> value
    fidelity_demand: dict
    qubit_demand: dict
    wait_demand: dict
    probability: float

    def __post_init__(self):
        if self.probability < 0:
            raise ScenarioError(f"scenario {self.id}: negative probability")
        for r, circuits in self.fidelity_demand.items():
            for c, value in circuits.items():
                if not (0.0 < value <= 1.0):
                    raise ScenarioError(f"scenario {self.id}: fidelity demand {value} of {r}/{c} out of (0, 1]")
        for r, circuits in self.qubit_demand.items():
            for c, value in circuits.items():
                if value < 0 or int(value) != value:
                    raise ScenarioError(f"scenario {self.id}: qubit demand {value} of {r}/{c} must be a non-negative integer")
        for r, circuits in self.wait_demand.items():
            for c, value in circuits.items():
                if value < 0:
                    raise ScenarioError(f"scenario {self.id}: negative waiting time for {r}/{c}")

    def fidelity(self, request, circuit):
        return self.fidelity_demand[request][circuit]

    def qubits(self, request, circuit):
        return int(self.qubit_demand.get(request, {}).get(circuit, 0))

    def wait(self, request, circuit):
        return float(self.wait_demand.get(request, {}).get(circuit, 0.0))

    def request_fidelity(self, request):
        # Tightest circuit demand of the request; 0 when it has no circuits.
        # Самое строгое требование среди схем запроса; 0, если схем нет.
        values = self.fidelity_demand.get(request, {}).values()
        return max(values) if values else 0.0


@dataclass(frozen=True)
class ScenarioSpace:
    scenarios: tuple
    # (request, circuit) -> {"fidelity": (values, weights), "qubits": ..., "wait": ...}
    value_sets: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        if not self.scenarios:
            raise ScenarioError("scenario space is empty")
        ids = [s.id for s in self.scenarios]
        if len(set(ids)) != len(ids):
            raise ScenarioError("duplicate scenario id")
        total = math.fsum(s.probability for s in self.scenarios)
        if abs(total - 1.0) > PROBABILITY_TOLERANCE:
            raise ScenarioError(f"scenario probabilities sum to {total}, expected 1")

    def __len__(self):
        return len(self.scenarios)

    def __iter__(self):
        return iter(self.scenarios)

    @property
    def ids(self):
        return [s.id for s in self.scenarios]

    def probabilities(self):
        return np.array([s.probability for s in self.scenarios], dtype=float)

    def scenario(self, scenario_id):
        for s in self.scenarios:
            if s.id == scenario_id:
                return s
        raise KeyError(scenario_id)

    @classmethod
    def single(cls, scenario):
        # One-scenario space holding the scenario with probability 1.
        return cls((replace(scenario, probability=1.0),), {})

    def expected_scenario(self):
        # Probability-weighted mean demands; qubit means are rounded up.
        # Средневзвешенный спрос; среднее число кубитов округляется вверх.
        first = self.scenarios[0]
        fidelity, qubits, wait = {}, {}, {}
        for r, circuits in first.fidelity_demand.items():
            fidelity[r], qubits[r], wait[r] = {}, {}, {}
            for c in circuits:
                f = math.fsum(s.probability * s.fidelity(r, c) for s in self.scenarios)
                q = math.fsum(s.probability * s.qubits(r, c) for s in self.scenarios)
                e = math.fsum(s.probability * s.wait(r, c) for s in self.scenarios)
                fidelity[r][c] = min(1.0, f)
                qubits[r][c] = int(math.ceil(q - 1e-9))
                wait[r][c] = e
        return Scenario("mean", fidelity, qubits, wait, 1.0)

    def map_demands(self, fidelity=None, qubits=None, wait=None):
        # Same scenarios and probabilities with every demand of a kind replaced by a constant.
        # Те же сценарии и вероятности, но спрос выбранного вида заменён константой.
        def _const(table, value):
            if value is None:
                return table
            return {r: {c: value for c in circuits} for r, circuits in table.items()}

        scenarios = tuple(
            replace(
                s,
                fidelity_demand=_const(s.fidelity_demand, fidelity),
                qubit_demand=_const(s.qubit_demand, qubits),
                wait_demand=_const(s.wait_demand, wait),
            )
            for s in self.scenarios
        )
        value_sets = {}
        for key, sets in self.value_sets.items():
            updated = dict(sets)
            for kind, value in (("fidelity", fidelity), ("qubits", qubits), ("wait", wait)):
                if value is not None:
                    updated[kind] = ((value,), (1.0,))
            value_sets[key] = updated
        return ScenarioSpace(scenarios, value_sets)

    def restrict(self, request_ids):
        # Rebuilds the space over a subset of requests from the stored value sets.
        # Перестраивает пространство для части запросов по сохранённым множествам значений.
        keep = set(request_ids)
        keys = [k for k in self.value_sets if k[0] in keep]
        if not keys:
            raise ScenarioError("no value sets for the selected requests")
        values = {kind: {k: self.value_sets[k][kind][0] for k in keys} for kind in KINDS}
        weights = {(kind, *k): self.value_sets[k][kind][1] for k in keys for kind in KINDS}
        return build_scenario_space(values["fidelity"], values["qubits"], values["wait"], weights)


def _normalized(values, weights, label):
    values = tuple(values)
    if not values:
        raise ScenarioError(f"empty value set for {label}")
    if weights is None:
        w = np.full(len(values), 1.0 / len(values))
    else:
        w = np.asarray(list(weights), dtype=float)
        if w.shape != (len(values),):
            raise ScenarioError(f"weights for {label} do not match its values")
        if np.any(w < 0):
            raise ScenarioError(f"negative weight for {label}")
        if w.sum() <= 0:
            raise ScenarioError(f"all weights zero for {label}")
        w = w / w.sum()
    return values, tuple(float(x) for x in w)


def build_scenario_space(fidelity_values, qubit_values, wait_values, distribution="uniform"):
    # Cartesian product over requests of F x Q x E per circuit; probabilities are weight products.
    # Декартово произведение F x Q x E по схемам и запросам; вероятность равна произведению весов.
    #
    # distribution: "uniform" (or None) or a mapping (kind, request, circuit) -> weights,
    # kind in {"fidelity", "qubits", "wait"}; missing entries stay uniform.
    keys = list(fidelity_values)
    if set(keys) != set(qubit_values) or set(keys) != set(wait_values):
        raise ScenarioError("fidelity, qubit and wait value sets must cover the same (request, circuit) pairs")
    if not keys:
        raise ScenarioError("empty value set: no (request, circuit) pairs")
    weights = {} if distribution in (None, "uniform") else dict(distribution)

    value_sets = {}
    for key in keys:
        label = f"{key[0]}/{key[1]}"
        sets = {}
        for kind, table in (("fidelity", fidelity_values), ("qubits", qubit_values), ("wait", wait_values)):
            sets[kind] = _normalized(table[key], weights.get((kind, *key)), f"{kind} of {label}")
        for f in sets["fidelity"][0]:
            if not (0.0 < f <= 1.0):
                raise ScenarioError(f"fidelity demand {f} of {label} out of (0, 1]")
        for q in sets["qubits"][0]:
            if q < 0 or int(q) != q:
                raise ScenarioError(f"qubit demand {q} of {label} must be a non-negative integer")
        for e in sets["wait"][0]:
            if e < 0:
                raise ScenarioError(f"negative waiting time for {label}")
        value_sets[key] = sets

    requests = list(dict.fromkeys(k[0] for k in keys))
    per_request = []
    for r in requests:
        circuit_options = []
        for key in (k for k in keys if k[0] == r):
            sets = value_sets[key]
            options = [
                (key[1], f, int(q), e, wf * wq * we)
                for (f, wf), (q, wq), (e, we) in itertools.product(
                    zip(*sets["fidelity"]), zip(*sets["qubits"]), zip(*sets["wait"])
                )
            ]
            circuit_options.append(options)
        per_request.append(list(itertools.product(*circuit_options)))

    count = math.prod(len(options) for options in per_request)
    if count > 100000:
        logger.warning("Scenario space has %d scenarios; model size grows linearly with it", count)

    raw = []
    for combo in itertools.product(*per_request):
        fidelity, qubits, wait = {}, {}, {}
        weight = 1.0
        for r, choice in zip(requests, combo):
            fidelity[r], qubits[r], wait[r] = {}, {}, {}
            for circuit, f, q, e, w in choice:
                fidelity[r][circuit] = f
                qubits[r][circuit] = q
                wait[r][circuit] = e
                weight *= w
        raw.append((fidelity, qubits, wait, weight))

    total = math.fsum(item[3] for item in raw)
    scenarios = tuple(
        Scenario(f"s{index}", f, q, e, w / total) for index, (f, q, e, w) in enumerate(raw)
    )
    logger.debug("Built scenario space: %d requests, %d scenarios", len(requests), len(scenarios))
    return ScenarioSpace(scenarios, value_sets)


# --- Scenario file and sampling ---

def parse_scenarios(text):
    # Parses `values <request> <circuit> f=.. q=.. e=.. [fw=..] [qw=..] [ew=..]` lines.
    # Разбирает строки `values` файла сценариев.
    kind = "scenarios"
    values = {"fidelity": {}, "qubits": {}, "wait": {}}
    weights = {}
    fields = {"f": ("fidelity", float), "q": ("qubits", int), "e": ("wait", float)}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if tokens[0] != "values" or len(tokens) < 3:
            raise InstanceError("expected 'values <request> <circuit> f=.. q=.. e=..'", line_no, kind)
        key = (tokens[1], tokens[2])
        if key in values["fidelity"]:
            raise InstanceError(f"duplicate values line for {key[0]} {key[1]}", line_no, kind)
        seen = {}
        for tok in tokens[3:]:
            name, sep, raw_value = tok.partition("=")
            if not sep or not raw_value:
                raise InstanceError(f"expected key=value, got '{tok}'", line_no, kind)
            seen[name] = raw_value
        for short, (kind_name, cast) in fields.items():
            if short not in seen:
                raise InstanceError(f"missing field '{short}'", line_no, kind)
            try:
                values[kind_name][key] = tuple(cast(v) for v in seen[short].split(","))
                if short + "w" in seen:
                    weights[(kind_name, *key)] = tuple(float(v) for v in seen[short + "w"].split(","))
            except ValueError:
                raise InstanceError(f"field '{short}' has a malformed number", line_no, kind) from None
        unknown = set(seen) - {"f", "q", "e", "fw", "qw", "ew"}
        if unknown:
            raise InstanceError(f"unknown field(s) {', '.join(sorted(unknown))}", line_no, kind)
    return build_scenario_space(values["fidelity"], values["qubits"], values["wait"], weights or "uniform")


def sample_value_sets(requests, ranges, sizes, rng):
    # Draws per-(request, circuit) value sets from uniform demand ranges.
    # Случайно выбирает множества значений спроса из равномерных диапазонов.
    # sizes: request id -> (n_fidelity, n_qubits, n_wait); missing requests get one value each.
    f_lo, f_hi = ranges["fidelity"]
    q_lo, q_hi = ranges["qubits"]
    e_lo, e_hi = ranges["wait"]
    fidelity, qubits, wait = {}, {}, {}
    for r in requests:
        nf, nq, ne = sizes.get(r.id, (1, 1, 1))
        for c in r.circuits:
            key = (r.id, c)
            fidelity[key] = tuple(float(x) for x in np.round(rng.uniform(f_lo, f_hi, nf), 2).clip(0.01, 1.0))
            qubits[key] = tuple(int(x) for x in rng.integers(q_lo, q_hi, nq, endpoint=True))
            wait[key] = tuple(float(x) for x in np.round(rng.uniform(e_lo, e_hi, ne), 3))
    return fidelity, qubits, wait
