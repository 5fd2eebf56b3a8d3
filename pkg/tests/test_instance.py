# tests/test_instance.py

import pytest

from modules.errors import InstanceError
from modules.experiments import run_preset_defaults
from modules.instance import (
    WILDCARD,
    CostModel,
    Instance,
    Machine,
    NetworkTopology,
    PairCost,
    Provider,
    QuantumLink,
    QuantumNode,
    QubitCost,
    Request,
    parse_costs,
    parse_instance,
    parse_requests,
    parse_topology,
    serialize_instance,
)


def test_parse_topology(topology_text):
    topo = parse_topology(topology_text)
    assert [n.id for n in topo.nodes] == ["1", "2", "3"]
    assert topo.link_keys() == [("1", "2"), ("2", "1"), ("2", "3")]
    assert topo.link("1", "2").fiber == topo.link("2", "1").fiber == "1-2"
    assert topo.link("2", "3").fiber == "2>3"
    assert not topo.has_link("3", "2")
    assert topo.node("1").repeater_setup_cost == 151
    assert topo.fiber_capacity("1-2") == (9, 60)


def test_unknown_node_reports_line():
    text = "node 1\nnode 2\n\nlink 1 99 f=0.9 fts=0.8 rcap=9 ocap=60\n"
    with pytest.raises(InstanceError) as info:
        parse_topology(text)
    assert info.value.line == 4
    assert "99" in str(info.value)
    assert "line 4" in str(info.value)


@pytest.mark.parametrize("line, message", [
    ("link 1 2 f=1.3 fts=0.8 rcap=9 ocap=60", "out of range"),
    ("link 1 2 f=0.9 fts=0.8 rcap=-1 ocap=60", "non-negative"),
    ("link 1 2 f=0.9 fts=0.8 rcap=9", "missing"),
    ("link 1 2 f=0.9 fts=0.8 rcap=9 ocap=60 x=1", "unknown field"),
    ("link 1 1 f=0.9 fts=0.8 rcap=9 ocap=60", "self-loop"),
    ("wire 1 2", "unknown directive"),
])
def test_topology_errors(line, message):
    with pytest.raises(InstanceError, match=message) as info:
        parse_topology(f"node 1\nnode 2\n{line}\n")
    assert info.value.line == 3


def test_duplicate_link_rejected():
    text = "node 1\nnode 2\nlink 1 2 f=0.9 fts=0.8 rcap=9 ocap=60\narc 2 1 f=0.9 fts=0.8 rcap=9 ocap=60\n"
    with pytest.raises(InstanceError, match="duplicate link"):
        parse_topology(text)


def test_parse_costs_wildcards(topology_text, costs_text):
    costs = parse_costs(costs_text, parse_topology(topology_text), {"r1"})
    assert costs.pair("3", "r1") == PairCost(12.0, 1.0, 250.0)
    assert costs.pair("2", "r1") == PairCost(10.0, 1.0, 200.0)
    assert costs.qubit("c1", "p1") == QubitCost(1.68, 0.1, 7.0, 10.0)


def test_missing_price_is_zero():
    costs = CostModel({("2", "r1"): PairCost(1.0, 2.0, 3.0)}, {})
    assert costs.pair("3", "r1") == PairCost()
    assert costs.qubit("c1", "p1") == QubitCost()


def test_costs_reject_unknown_request(topology_text):
    with pytest.raises(InstanceError, match="unknown request"):
        parse_costs("paircost 1 r9 r=1 u=1 o=1\n", parse_topology(topology_text), {"r1"})


def test_parse_requests(topology_text, requests_text):
    providers, requests = parse_requests(requests_text, parse_topology(topology_text))
    assert [r.id for r in requests] == ["r1"]
    assert requests[0].circuits == ("c1",)
    machine = providers[0].machine("m2")
    assert machine.qubit_capacity == 20
    assert machine.execution_time == {("r1", "c1"): 0.004}


def test_requests_unknown_node_reports_line(topology_text):
    with pytest.raises(InstanceError) as info:
        parse_requests("provider p1 machines=m1:30\nrequest r1 src=1 dst=99\n", parse_topology(topology_text))
    assert info.value.line == 2


def test_exe_for_unknown_machine(topology_text):
    text = "provider p1 machines=m1:30\nrequest r1 src=1 dst=3 circuits=c1\nexe c1 p1 m7 r1 t=0.1\n"
    with pytest.raises(InstanceError, match="unknown machine") as info:
        parse_requests(text, parse_topology(topology_text))
    assert info.value.line == 3


def test_circuits_without_provider_rejected(topology_text):
    with pytest.raises(InstanceError, match="no provider"):
        parse_instance(topology_text, "", "request r1 src=1 dst=3 circuits=c1\n")


def test_round_trip(topology_text, costs_text, requests_text):
    parsed = parse_instance(topology_text, costs_text, requests_text)
    again = parse_instance(*serialize_instance(*parsed))
    assert again == parsed


def test_link_validation():
    with pytest.raises(InstanceError):
        QuantumLink("a", "b", 0.0, 0.8, 1, 1)
    with pytest.raises(InstanceError, match="disagree"):
        NetworkTopology(
            [QuantumNode("a"), QuantumNode("b")],
            [QuantumLink("a", "b", 0.9, 0.8, 9, 60, fiber="x"), QuantumLink("b", "a", 0.9, 0.8, 8, 60, fiber="x")],
        )


def test_scaled_and_field_overrides(path3):
    scaled = path3.scaled(2.0)
    assert scaled.topology.node("2").energy_cost == 10.0
    assert scaled.costs.pair("2", "r1").ondemand == 400.0
    cheaper = path3.costs.with_pair_field("reserve", 3.0)
    assert cheaper.pair("3", "r1").reserve == 3.0
    assert cheaper.pair("3", "r1").ondemand == 200.0


def test_with_requests_keeps_order():
    inst = run_preset_defaults()
    assert [r.id for r in inst.with_requests(["r3", "r1"]).requests] == ["r1", "r3"]


def test_with_requests_drops_references_to_removed_requests():
    topo = NetworkTopology([QuantumNode("a"), QuantumNode("b")], [QuantumLink("a", "b", 0.9, 0.8, 9, 60)])
    times = {("r1", "c1"): 0.005, ("r2", "c2"): 0.007}
    inst = Instance(
        topo,
        CostModel(
            {("b", "r2"): PairCost(3.0, 1.0, 9.0), (WILDCARD, WILDCARD): PairCost(10.0, 1.0, 200.0)},
            {("c2", "p1"): QubitCost(2.0, 0.1, 7.0, 10.0), ("c1", WILDCARD): QubitCost(1.0, 0.1, 7.0, 10.0)},
        ),
        (Provider("p1", (Machine("m1", 30, times),)),),
        (Request("r1", "a", "b", ("c1",)), Request("r2", "a", "b", ("c2",))),
    )

    only_r1 = inst.with_requests(["r1"])
    assert [r.id for r in only_r1.requests] == ["r1"]
    assert only_r1.execution_time("c1", "p1", "m1", "r1") == 0.005
    assert dict(only_r1.providers[0].machines[0].execution_time) == {("r1", "c1"): 0.005}
    assert set(only_r1.costs.pair_costs) == {(WILDCARD, WILDCARD)}
    assert set(only_r1.costs.qubit_costs) == {("c1", WILDCARD)}
    assert inst.with_requests(["r2"]).costs.pair("b", "r2").reserve == 3.0


def test_with_requests_on_preset_subsets():
    inst = run_preset_defaults()
    first = inst.with_requests(["r1"])
    assert first.circuit_keys() == [("r1", c) for c in inst.request("r1").circuits]
    assert all(key[0] == "r1" for _, m in first.machines() for key in m.execution_time)


def test_preset_shape():
    inst = run_preset_defaults()
    topo = inst.topology
    assert len(topo.nodes) == 14
    assert len(topo.links) == 42
    assert len(topo.fibers()) == 21
    assert {m.qubit_capacity for _, m in inst.machines()} == {30}
    assert all(link.ondemand_capacity == 60 for link in topo.links)
    assert all(link.fidelity_threshold == 0.8 for link in topo.links)
    assert inst.costs.pair("1", "r1").ondemand == 200.0
    assert topo.link("3", "2").base_fidelity == 0.55


def test_instance_rejects_unknown_request_in_exe():
    with pytest.raises(InstanceError, match="unknown request"):
        Instance(
            NetworkTopology([QuantumNode("a"), QuantumNode("b")], []),
            CostModel({(WILDCARD, WILDCARD): PairCost()}, {}),
            (Provider("p1", (Machine("m1", 4, {("r9", "c1"): 0.1}),)),),
            (Request("r1", "a", "b", ("c1",)),),
        )
