# tests/test_evaluation.py

import pytest

from modules.errors import SolutionError
from modules.evaluation import COMPONENTS, PlanSolution, evaluate_cost
from modules.formulation import solve_direct


def test_reserved_pairs_on_routed_link(path3, path3_space):
    plan = PlanSolution(route={("1", "2", "r1"): 1}, pairs_reserved={("1", "2", "r1"): 9})
    breakdown = evaluate_cost(plan, path3, path3_space)
    assert breakdown.first_stage == pytest.approx(1494.0)
    assert breakdown.second_stage == 0.0
    assert breakdown.components["pair_reservation"] == pytest.approx(1494.0)


def test_unrouted_reservation_pays_price_only(path3, path3_space):
    plan = PlanSolution(route={("1", "2", "r1"): 0}, pairs_reserved={("1", "2", "r1"): 9})
    assert evaluate_cost(plan, path3, path3_space).first_stage == pytest.approx(90.0)


def test_qubit_reservation(path3, path3_space):
    plan = PlanSolution(qubits_reserved={("c1", "p1", "m1", "r1"): 10})
    assert evaluate_cost(plan, path3, path3_space).first_stage == pytest.approx(16.8)


def test_second_stage_is_probability_weighted(path3, path3_space):
    s0, s1 = path3_space.ids
    plan = PlanSolution(
        pairs_utilized={("1", "2", "r1", s0): 4, ("1", "2", "r1", s1): 2},
        pairs_ondemand={("1", "2", "r1", s1): 1},
        qubits_ondemand={("c1", "p1", "m1", "r1", s0): 2},
        overwait={("c1", "p1", "m1", "r1", s1): 0.5},
    )
    breakdown = evaluate_cost(plan, path3, path3_space)
    assert breakdown.per_scenario[s0] == pytest.approx(4.0 + 14.0)
    assert breakdown.per_scenario[s1] == pytest.approx(2.0 + 200.0 + 5.0)
    assert breakdown.second_stage == pytest.approx(0.5 * 18.0 + 0.5 * 207.0)
    assert breakdown.total == pytest.approx(breakdown.second_stage)
    assert sum(breakdown.components.values()) == pytest.approx(breakdown.total)
    assert set(breakdown.components) == set(COMPONENTS)


@pytest.mark.parametrize("plan", [
    PlanSolution(route={("1", "3", "r1"): 1}),
    PlanSolution(pairs_utilized={("1", "2", "r1", "s9"): 1}),
    PlanSolution(qubits_reserved={("c1", "p1", "m9", "r1"): 1}),
    PlanSolution(overwait={("c2", "p1", "m1", "r1", "s0"): 1.0}),
])
def test_index_mismatch(plan, path3, path3_space):
    with pytest.raises(SolutionError, match="index mismatch"):
        evaluate_cost(plan, path3, path3_space)


def test_merged_prefers_other():
    left = PlanSolution(route={("1", "2", "r1"): 1}, assignment={("r1", "c1"): ("p1", "m1")})
    right = PlanSolution(assignment={("r1", "c1"): ("p1", "m2")})
    merged = left.merged(right)
    assert merged.route == {("1", "2", "r1"): 1}
    assert merged.assignment == {("r1", "c1"): ("p1", "m2")}
    assert merged.routed_links("r1") == [("1", "2", "r1")]


@pytest.mark.parametrize("factor", [0.5, 2.5, 10.0])
def test_costs_scale_with_prices(path3, path3_space, factor):
    plan, _, _, _ = solve_direct(path3, path3_space)
    base = evaluate_cost(plan, path3, path3_space)
    scaled = evaluate_cost(plan, path3.scaled(factor), path3_space)
    assert scaled.total == pytest.approx(factor * base.total)
    assert scaled.first_stage == pytest.approx(factor * base.first_stage)
    for name in COMPONENTS:
        assert scaled.components[name] == pytest.approx(factor * base.components[name])
    for s, value in base.per_scenario.items():
        assert scaled.per_scenario[s] == pytest.approx(factor * value)
