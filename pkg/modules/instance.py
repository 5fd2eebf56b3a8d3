# modules/instance.py
# Instance data: topology, providers, requests and prices, with text parsing and serialization.
# Данные экземпляра: топология, провайдеры, запросы и цены; разбор и сериализация текста.

import logging
import math
import re
from dataclasses import dataclass, field, replace

import networkx as nx

from modules.errors import InstanceError

logger = logging.getLogger(__name__)

WILDCARD = "*"
NAME_RE = re.compile(r"^[A-Za-z0-9_.]+$")


def _check_name(value, what, line=None, kind=None):
    if not NAME_RE.match(str(value)):
        raise InstanceError(f"invalid {what} id '{value}'", line, kind)


# --- Domain types ---

@dataclass(frozen=True)
class QuantumNode:
    id: str
    energy_cost: float = 0.0
    repeater_setup_cost: float = 0.0

    def __post_init__(self):
        _check_name(self.id, "node")
        if self.energy_cost < 0 or self.repeater_setup_cost < 0:
            raise InstanceError(f"node {self.id}: costs must be non-negative")


@dataclass(frozen=True)
class QuantumLink:
    # Directed link. Links on the same fiber share reservation and on-demand counters.
    # Направленный канал. Каналы одного волокна делят счётчики резерва и спроса.
    source: str
    target: str
    base_fidelity: float
    fidelity_threshold: float
    reserve_capacity: int
    ondemand_capacity: int
    fiber: str = ""

    def __post_init__(self):
        if not self.fiber:
            object.__setattr__(self, "fiber", f"{self.source}>{self.target}")
        if self.source == self.target:
            raise InstanceError(f"self-loop on node {self.source}")
        if not (0.0 < self.base_fidelity <= 1.0):
            raise InstanceError(
                f"link {self.source}->{self.target}: fidelity {self.base_fidelity} out of range (0, 1]"
            )
        if not (0.0 < self.fidelity_threshold <= 1.0):
            raise InstanceError(
                f"link {self.source}->{self.target}: fidelity threshold {self.fidelity_threshold} out of range (0, 1]"
            )
        if self.reserve_capacity < 0 or self.ondemand_capacity < 0:
            raise InstanceError(f"link {self.source}->{self.target}: capacities must be non-negative")

    @property
    def key(self):
        return (self.source, self.target)


@dataclass(frozen=True)
class NetworkTopology:
    nodes: tuple
    links: tuple
    _node_index: dict = field(init=False, repr=False, compare=False)
    _link_index: dict = field(init=False, repr=False, compare=False)
    _outgoing: dict = field(init=False, repr=False, compare=False)
    _incoming: dict = field(init=False, repr=False, compare=False)
    _fibers: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "links", tuple(self.links))

        node_index = {}
        for node in self.nodes:
            if node.id in node_index:
                raise InstanceError(f"duplicate node {node.id}")
            node_index[node.id] = node

        link_index = {}
        outgoing = {n: [] for n in node_index}
        incoming = {n: [] for n in node_index}
        fibers = {}
        for link in self.links:
            for end in link.key:
                if end not in node_index:
                    raise InstanceError(f"unknown node {end}")
            if link.key in link_index:
                raise InstanceError(f"duplicate link {link.source}->{link.target}")
            link_index[link.key] = link
            outgoing[link.source].append(link.key)
            incoming[link.target].append(link.key)
            fibers.setdefault(link.fiber, []).append(link.key)

        for fiber, keys in fibers.items():
            first = link_index[keys[0]]
            for key in keys[1:]:
                other = link_index[key]
                if (other.reserve_capacity, other.ondemand_capacity) != (
                    first.reserve_capacity,
                    first.ondemand_capacity,
                ):
                    raise InstanceError(f"fiber {fiber}: links disagree on capacities")

        object.__setattr__(self, "_node_index", node_index)
        object.__setattr__(self, "_link_index", link_index)
        object.__setattr__(self, "_outgoing", {n: tuple(v) for n, v in outgoing.items()})
        object.__setattr__(self, "_incoming", {n: tuple(v) for n, v in incoming.items()})
        object.__setattr__(self, "_fibers", {f: tuple(v) for f, v in fibers.items()})

    def node(self, node_id):
        return self._node_index[node_id]

    def has_node(self, node_id):
        return node_id in self._node_index

    def link(self, source, target):
        return self._link_index[(source, target)]

    def has_link(self, source, target):
        return (source, target) in self._link_index

    def link_keys(self):
        return [link.key for link in self.links]

    def outgoing(self, node_id):
        return self._outgoing[node_id]

    def incoming(self, node_id):
        return self._incoming[node_id]

    def fibers(self):
        return dict(self._fibers)

    def fiber_capacity(self, fiber):
        # (reserve capacity, on-demand capacity) of a fiber.
        link = self._link_index[self._fibers[fiber][0]]
        return link.reserve_capacity, link.ondemand_capacity

    def to_graph(self, link_keys=None):
        # Directed networkx view; optionally restricted to a subset of links.
        # Направленный граф networkx, при необходимости только по части каналов.
        graph = nx.DiGraph()
        graph.add_nodes_from(node.id for node in self.nodes)
        keys = self.link_keys() if link_keys is None else link_keys
        graph.add_edges_from(keys)
        return graph


@dataclass(frozen=True)
class Machine:
    id: str
    qubit_capacity: int
    # (request, circuit) -> seconds
    execution_time: dict = field(default_factory=dict)

    def __post_init__(self):
        _check_name(self.id, "machine")
        if self.qubit_capacity < 1:
            raise InstanceError(f"machine {self.id}: qubit capacity must be >= 1")
        for key, value in self.execution_time.items():
            if value < 0:
                raise InstanceError(f"machine {self.id}: negative execution time for {key}")


@dataclass(frozen=True)
class Provider:
    id: str
    machines: tuple

    def __post_init__(self):
        _check_name(self.id, "provider")
        object.__setattr__(self, "machines", tuple(self.machines))
        if not self.machines:
            raise InstanceError(f"provider {self.id}: at least one machine required")
        ids = [m.id for m in self.machines]
        if len(set(ids)) != len(ids):
            raise InstanceError(f"provider {self.id}: duplicate machine id")

    def machine(self, machine_id):
        for m in self.machines:
            if m.id == machine_id:
                return m
        raise KeyError(machine_id)


@dataclass(frozen=True)
class Request:
    id: str
    source: str
    destination: str
    circuits: tuple

    def __post_init__(self):
        _check_name(self.id, "request")
        object.__setattr__(self, "circuits", tuple(self.circuits))
        if self.source == self.destination:
            raise InstanceError(f"request {self.id}: source equals destination")
        if len(set(self.circuits)) != len(self.circuits):
            raise InstanceError(f"request {self.id}: duplicate circuit id")
        for c in self.circuits:
            _check_name(c, "circuit")


@dataclass(frozen=True)
class PairCost:
    reserve: float = 0.0
    utilize: float = 0.0
    ondemand: float = 0.0

    def __post_init__(self):
        if min(self.reserve, self.utilize, self.ondemand) < 0:
            raise InstanceError("pair costs must be non-negative")


@dataclass(frozen=True)
class QubitCost:
    reserve: float = 0.0
    utilize: float = 0.0
    ondemand: float = 0.0
    overwait_penalty: float = 0.0

    def __post_init__(self):
        if min(self.reserve, self.utilize, self.ondemand, self.overwait_penalty) < 0:
            raise InstanceError("qubit costs must be non-negative")


ZERO_PAIR_COST = PairCost()
ZERO_QUBIT_COST = QubitCost()


@dataclass(frozen=True)
class CostModel:
    # Prices keyed by (node, request) and (circuit, provider); "*" matches anything.
    # Цены по ключам (узел, запрос) и (схема, провайдер); "*" подходит для любого значения.
    pair_costs: dict = field(default_factory=dict)
    qubit_costs: dict = field(default_factory=dict)

    def pair(self, node, request):
        for key in ((node, request), (WILDCARD, request), (node, WILDCARD), (WILDCARD, WILDCARD)):
            if key in self.pair_costs:
                return self.pair_costs[key]
        return ZERO_PAIR_COST

    def qubit(self, circuit, provider):
        for key in ((circuit, provider), (WILDCARD, provider), (circuit, WILDCARD), (WILDCARD, WILDCARD)):
            if key in self.qubit_costs:
                return self.qubit_costs[key]
        return ZERO_QUBIT_COST

    def scaled(self, factor):
        return CostModel(
            pair_costs={
                k: PairCost(v.reserve * factor, v.utilize * factor, v.ondemand * factor)
                for k, v in self.pair_costs.items()
            },
            qubit_costs={
                k: QubitCost(
                    v.reserve * factor,
                    v.utilize * factor,
                    v.ondemand * factor,
                    v.overwait_penalty * factor,
                )
                for k, v in self.qubit_costs.items()
            },
        )

    def with_pair_field(self, name, value):
        # Sets one pair price field on every entry (adds a wildcard entry when empty).
        entries = dict(self.pair_costs) or {(WILDCARD, WILDCARD): ZERO_PAIR_COST}
        return replace(self, pair_costs={k: replace(v, **{name: value}) for k, v in entries.items()})

    def with_qubit_field(self, name, value):
        entries = dict(self.qubit_costs) or {(WILDCARD, WILDCARD): ZERO_QUBIT_COST}
        return replace(self, qubit_costs={k: replace(v, **{name: value}) for k, v in entries.items()})


@dataclass(frozen=True)
class Instance:
    topology: NetworkTopology
    costs: CostModel
    providers: tuple
    requests: tuple

    def __post_init__(self):
        object.__setattr__(self, "providers", tuple(self.providers))
        object.__setattr__(self, "requests", tuple(self.requests))
        validate_instance(self.topology, self.costs, self.providers, self.requests)

    def request(self, request_id):
        for r in self.requests:
            if r.id == request_id:
                return r
        raise KeyError(request_id)

    def machines(self):
        # Flat (provider id, machine) list in declaration order.
        return [(p.id, m) for p in self.providers for m in p.machines]

    def circuit_keys(self):
        return [(r.id, c) for r in self.requests for c in r.circuits]

    def execution_time(self, circuit, provider, machine, request):
        for p in self.providers:
            if p.id == provider:
                return float(p.machine(machine).execution_time.get((request, circuit), 0.0))
        raise KeyError(provider)

    def scaled(self, factor):
        # Every price multiplied by factor (node energy and setup costs included).
        nodes = tuple(
            replace(n, energy_cost=n.energy_cost * factor, repeater_setup_cost=n.repeater_setup_cost * factor)
            for n in self.topology.nodes
        )
        topology = NetworkTopology(nodes, self.topology.links)
        return Instance(topology, self.costs.scaled(factor), self.providers, self.requests)

    def with_requests(self, request_ids):
        # Subset of the requests; execution times and prices of dropped requests go with them.
        # Подмножество запросов; времена выполнения и цены удалённых запросов удаляются.
        wanted = set(request_ids)
        keep = tuple(r for r in self.requests if r.id in wanted)
        kept_ids = {r.id for r in keep}
        circuits = {c for r in keep for c in r.circuits}
        providers = tuple(
            replace(p, machines=tuple(
                replace(m, execution_time={k: v for k, v in m.execution_time.items() if k[0] in kept_ids})
                for m in p.machines
            ))
            for p in self.providers
        )
        costs = CostModel(
            pair_costs={k: v for k, v in self.costs.pair_costs.items() if k[1] in kept_ids or k[1] == WILDCARD},
            qubit_costs={k: v for k, v in self.costs.qubit_costs.items() if k[0] in circuits or k[0] == WILDCARD},
        )
        return Instance(self.topology, costs, providers, keep)

    def with_costs(self, costs):
        return replace(self, costs=costs)


def validate_instance(topology, costs, providers, requests):
    # Cross-object checks that single dataclasses cannot make.
    # Перекрёстные проверки между объектами экземпляра.
    request_ids = set()
    circuits = set()
    for r in requests:
        if r.id in request_ids:
            raise InstanceError(f"duplicate request {r.id}")
        request_ids.add(r.id)
        for end in (r.source, r.destination):
            if not topology.has_node(end):
                raise InstanceError(f"request {r.id}: unknown node {end}")
        circuits.update(r.circuits)

    provider_ids = set()
    for p in providers:
        if p.id in provider_ids:
            raise InstanceError(f"duplicate provider {p.id}")
        provider_ids.add(p.id)
        for m in p.machines:
            for (req, circuit) in m.execution_time:
                if req not in request_ids:
                    raise InstanceError(f"execution time references unknown request {req}")
                if circuit not in next(x for x in requests if x.id == req).circuits:
                    raise InstanceError(f"execution time references unknown circuit {circuit} of {req}")

    if circuits and not providers:
        raise InstanceError("requests need circuits executed but no provider is declared")

    for (node, req) in costs.pair_costs:
        if node != WILDCARD and not topology.has_node(node):
            raise InstanceError(f"pair cost references unknown node {node}")
        if req != WILDCARD and req not in request_ids:
            raise InstanceError(f"pair cost references unknown request {req}")
    for (circuit, provider) in costs.qubit_costs:
        if circuit != WILDCARD and circuit not in circuits:
            raise InstanceError(f"qubit cost references unknown circuit {circuit}")
        if provider != WILDCARD and provider not in provider_ids:
            raise InstanceError(f"qubit cost references unknown provider {provider}")


# --- Parsing ---

def _lines(text):
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield line_no, line.split()


def _fields(tokens, line_no, kind, required, optional=()):
    values = {}
    for tok in tokens:
        key, sep, value = tok.partition("=")
        if not sep or not key or not value:
            raise InstanceError(f"expected key=value, got '{tok}'", line_no, kind)
        if key in values:
            raise InstanceError(f"repeated field '{key}'", line_no, kind)
        if key not in required and key not in optional:
            raise InstanceError(f"unknown field '{key}'", line_no, kind)
        values[key] = value
    missing = [k for k in required if k not in values]
    if missing:
        raise InstanceError(f"missing field(s) {', '.join(missing)}", line_no, kind)
    return values


def _float(value, key, line_no, kind):
    try:
        result = float(value)
    except ValueError:
        raise InstanceError(f"field '{key}' is not a number: '{value}'", line_no, kind) from None
    if not math.isfinite(result):
        raise InstanceError(f"field '{key}' must be finite", line_no, kind)
    return result


def _int(value, key, line_no, kind):
    try:
        return int(value)
    except ValueError:
        raise InstanceError(f"field '{key}' is not an integer: '{value}'", line_no, kind) from None


def _positional(tokens, count, line_no, kind, usage):
    if len(tokens) < count:
        raise InstanceError(f"expected {usage}", line_no, kind)
    return tokens[:count], tokens[count:]


def parse_topology(text):
    # Parses `node` / `link` / `arc` lines into a NetworkTopology.
    # Разбирает строки `node` / `link` / `arc` в NetworkTopology.
    kind = "topology"
    nodes = []
    node_ids = set()
    pending = []
    for line_no, tokens in _lines(text):
        directive, rest = tokens[0], tokens[1:]
        if directive == "node":
            (node_id,), rest = _positional(rest, 1, line_no, kind, "node <id>")
            _check_name(node_id, "node", line_no, kind)
            values = _fields(rest, line_no, kind, required=(), optional=("ecc", "scs"))
            if node_id in node_ids:
                raise InstanceError(f"duplicate node {node_id}", line_no, kind)
            node_ids.add(node_id)
            ecc = _float(values.get("ecc", "0"), "ecc", line_no, kind)
            scs = _float(values.get("scs", "0"), "scs", line_no, kind)
            if ecc < 0 or scs < 0:
                raise InstanceError(f"node {node_id}: costs must be non-negative", line_no, kind)
            nodes.append(QuantumNode(node_id, ecc, scs))
        elif directive in ("link", "arc"):
            (i, j), rest = _positional(rest, 2, line_no, kind, f"{directive} <i> <j>")
            values = _fields(rest, line_no, kind, required=("f", "fts", "rcap", "ocap"))
            pending.append((line_no, directive, i, j, values))
        else:
            raise InstanceError(f"unknown directive '{directive}'", line_no, kind)

    links = []
    seen = set()
    for line_no, directive, i, j, values in pending:
        for end in (i, j):
            if end not in node_ids:
                raise InstanceError(f"unknown node {end}", line_no, kind)
        if i == j:
            raise InstanceError(f"self-loop on node {i}", line_no, kind)
        f = _float(values["f"], "f", line_no, kind)
        fts = _float(values["fts"], "fts", line_no, kind)
        if not (0.0 < f <= 1.0):
            raise InstanceError(f"fidelity {f} out of range (0, 1]", line_no, kind)
        if not (0.0 < fts <= 1.0):
            raise InstanceError(f"fidelity threshold {fts} out of range (0, 1]", line_no, kind)
        rcap = _int(values["rcap"], "rcap", line_no, kind)
        ocap = _int(values["ocap"], "ocap", line_no, kind)
        if rcap < 0 or ocap < 0:
            raise InstanceError("capacities must be non-negative", line_no, kind)
        if directive == "link":
            fiber = f"{i}-{j}"
            directed = [(i, j), (j, i)]
        else:
            fiber = f"{i}>{j}"
            directed = [(i, j)]
        for a, b in directed:
            if (a, b) in seen:
                raise InstanceError(f"duplicate link {a}->{b}", line_no, kind)
            seen.add((a, b))
            links.append(QuantumLink(a, b, f, fts, rcap, ocap, fiber))

    return NetworkTopology(tuple(nodes), tuple(links))


def parse_costs(text, topology=None, request_ids=None):
    # Parses `paircost` / `qubitcost` lines; "*" stands for any node, request, circuit or provider.
    # Разбирает строки `paircost` / `qubitcost`; "*" означает любое значение.
    kind = "costs"
    pair_costs = {}
    qubit_costs = {}
    for line_no, tokens in _lines(text):
        directive, rest = tokens[0], tokens[1:]
        if directive == "paircost":
            (node, req), rest = _positional(rest, 2, line_no, kind, "paircost <node> <request>")
            if node != WILDCARD and topology is not None and not topology.has_node(node):
                raise InstanceError(f"unknown node {node}", line_no, kind)
            if req != WILDCARD and request_ids is not None and req not in request_ids:
                raise InstanceError(f"unknown request {req}", line_no, kind)
            values = _fields(rest, line_no, kind, required=("r", "u", "o"))
            if (node, req) in pair_costs:
                raise InstanceError(f"duplicate paircost {node} {req}", line_no, kind)
            prices = [_float(values[k], k, line_no, kind) for k in ("r", "u", "o")]
            if min(prices) < 0:
                raise InstanceError("prices must be non-negative", line_no, kind)
            pair_costs[(node, req)] = PairCost(*prices)
        elif directive == "qubitcost":
            (circuit, provider), rest = _positional(rest, 2, line_no, kind, "qubitcost <circuit> <provider>")
            values = _fields(rest, line_no, kind, required=("r", "u", "o", "pwt"))
            if (circuit, provider) in qubit_costs:
                raise InstanceError(f"duplicate qubitcost {circuit} {provider}", line_no, kind)
            prices = [_float(values[k], k, line_no, kind) for k in ("r", "u", "o", "pwt")]
            if min(prices) < 0:
                raise InstanceError("prices must be non-negative", line_no, kind)
            qubit_costs[(circuit, provider)] = QubitCost(*prices)
        else:
            raise InstanceError(f"unknown directive '{directive}'", line_no, kind)
    return CostModel(pair_costs, qubit_costs)


def parse_requests(text, topology=None):
    # Parses `request` / `provider` / `exe` lines.
    # Разбирает строки `request` / `provider` / `exe`.
    # Returns: Tuple (providers, requests).
    kind = "requests"
    requests = []
    request_lines = {}
    provider_specs = []
    exe_lines = []
    for line_no, tokens in _lines(text):
        directive, rest = tokens[0], tokens[1:]
        if directive == "request":
            (req_id,), rest = _positional(rest, 1, line_no, kind, "request <id>")
            _check_name(req_id, "request", line_no, kind)
            values = _fields(rest, line_no, kind, required=("src", "dst"), optional=("circuits",))
            if req_id in request_lines:
                raise InstanceError(f"duplicate request {req_id}", line_no, kind)
            for end in (values["src"], values["dst"]):
                if topology is not None and not topology.has_node(end):
                    raise InstanceError(f"unknown node {end}", line_no, kind)
            if values["src"] == values["dst"]:
                raise InstanceError(f"request {req_id}: source equals destination", line_no, kind)
            circuits = tuple(c for c in values.get("circuits", "").split(",") if c)
            if len(set(circuits)) != len(circuits):
                raise InstanceError(f"request {req_id}: duplicate circuit id", line_no, kind)
            for c in circuits:
                _check_name(c, "circuit", line_no, kind)
            request_lines[req_id] = line_no
            requests.append(Request(req_id, values["src"], values["dst"], circuits))
        elif directive == "provider":
            (prov_id,), rest = _positional(rest, 1, line_no, kind, "provider <id>")
            _check_name(prov_id, "provider", line_no, kind)
            values = _fields(rest, line_no, kind, required=("machines",))
            machines = []
            for item in values["machines"].split(","):
                m_id, sep, cap = item.partition(":")
                if not sep:
                    raise InstanceError(f"expected <machine>:<capacity>, got '{item}'", line_no, kind)
                _check_name(m_id, "machine", line_no, kind)
                capacity = _int(cap, "machines", line_no, kind)
                if capacity < 1:
                    raise InstanceError(f"machine {m_id}: qubit capacity must be >= 1", line_no, kind)
                if m_id in (m for m, _ in machines):
                    raise InstanceError(f"duplicate machine {m_id}", line_no, kind)
                machines.append((m_id, capacity))
            if any(p[0] == prov_id for p in provider_specs):
                raise InstanceError(f"duplicate provider {prov_id}", line_no, kind)
            provider_specs.append((prov_id, machines))
        elif directive == "exe":
            (circuit, prov_id, m_id, req_id), rest = _positional(
                rest, 4, line_no, kind, "exe <circuit> <provider> <machine> <request>"
            )
            values = _fields(rest, line_no, kind, required=("t",))
            seconds = _float(values["t"], "t", line_no, kind)
            if seconds < 0:
                raise InstanceError("execution time must be non-negative", line_no, kind)
            exe_lines.append((line_no, circuit, prov_id, m_id, req_id, seconds))
        else:
            raise InstanceError(f"unknown directive '{directive}'", line_no, kind)

    by_request = {r.id: r for r in requests}
    times = {}
    for line_no, circuit, prov_id, m_id, req_id, seconds in exe_lines:
        spec = next((p for p in provider_specs if p[0] == prov_id), None)
        if spec is None:
            raise InstanceError(f"unknown provider {prov_id}", line_no, kind)
        if m_id not in (m for m, _ in spec[1]):
            raise InstanceError(f"unknown machine {m_id} of provider {prov_id}", line_no, kind)
        if req_id not in by_request:
            raise InstanceError(f"unknown request {req_id}", line_no, kind)
        if circuit not in by_request[req_id].circuits:
            raise InstanceError(f"unknown circuit {circuit} of request {req_id}", line_no, kind)
        key = (prov_id, m_id)
        if (req_id, circuit) in times.setdefault(key, {}):
            raise InstanceError(f"duplicate exe {circuit} {prov_id} {m_id} {req_id}", line_no, kind)
        times[key][(req_id, circuit)] = seconds

    providers = tuple(
        Provider(p_id, tuple(Machine(m_id, cap, times.get((p_id, m_id), {})) for m_id, cap in machines))
        for p_id, machines in provider_specs
    )
    return providers, tuple(requests)


def parse_instance(topology_text, costs_text, requests_text):
    # Parses and validates the three instance texts.
    # Разбирает и проверяет три текстовых файла экземпляра.
    # Returns: Tuple (topology, costs, providers, requests).
    topology = parse_topology(topology_text)
    providers, requests = parse_requests(requests_text, topology)
    costs = parse_costs(costs_text, topology, {r.id for r in requests})
    instance = Instance(topology, costs, providers, requests)
    logger.debug(
        "Parsed instance: %d nodes, %d links, %d requests, %d providers",
        len(topology.nodes), len(topology.links), len(requests), len(providers),
    )
    return instance.topology, instance.costs, instance.providers, instance.requests


def load_instance(topology_text, costs_text, requests_text):
    return Instance(*parse_instance(topology_text, costs_text, requests_text))


# --- Serialization ---

def serialize_instance(topology, costs, providers, requests):
    # Inverse of parse_instance; floats use repr so re-parsing is exact.
    # Обратная операция к parse_instance; числа пишутся через repr для точного разбора.
    # Returns: Tuple (topology_text, costs_text, requests_text).
    topo = []
    for node in topology.nodes:
        topo.append(f"node {node.id} ecc={node.energy_cost!r} scs={node.repeater_setup_cost!r}")
    for link in topology.links:
        s, t = link.key
        if link.fiber == f"{t}-{s}" and topology.has_link(t, s):
            continue
        if link.fiber == f"{s}-{t}" and topology.has_link(t, s):
            directive = "link"
        else:
            directive = "arc"
        topo.append(
            f"{directive} {s} {t} f={link.base_fidelity!r} fts={link.fidelity_threshold!r} "
            f"rcap={link.reserve_capacity} ocap={link.ondemand_capacity}"
        )

    cost_lines = []
    for (node, req), c in costs.pair_costs.items():
        cost_lines.append(f"paircost {node} {req} r={c.reserve!r} u={c.utilize!r} o={c.ondemand!r}")
    for (circuit, provider), c in costs.qubit_costs.items():
        cost_lines.append(
            f"qubitcost {circuit} {provider} r={c.reserve!r} u={c.utilize!r} "
            f"o={c.ondemand!r} pwt={c.overwait_penalty!r}"
        )

    req_lines = []
    for p in providers:
        machines = ",".join(f"{m.id}:{m.qubit_capacity}" for m in p.machines)
        req_lines.append(f"provider {p.id} machines={machines}")
    for r in requests:
        line = f"request {r.id} src={r.source} dst={r.destination}"
        if r.circuits:
            line += f" circuits={','.join(r.circuits)}"
        req_lines.append(line)
    for p in providers:
        for m in p.machines:
            for (req, circuit), seconds in m.execution_time.items():
                req_lines.append(f"exe {circuit} {p.id} {m.id} {req} t={seconds!r}")

    return (
        "\n".join(topo) + "\n",
        "\n".join(cost_lines) + "\n",
        "\n".join(req_lines) + "\n",
    )
