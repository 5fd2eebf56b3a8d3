# tests/test_benders.py

import math
from dataclasses import replace

import pytest

from modules.benders import (
    TRAJECTORY_COLUMNS,
    BendersState,
    Cut,
    run_decomposed,
    solve_pair_benders,
    solve_qubit_benders,
)
from modules.errors import BendersError
from modules.experiments import preset_scenario_space, run_preset_defaults
from modules.formulation import NETWORK, QUBIT, solve_direct
from modules.settings import BendersConfig, SolverSettings
from tests.factories import random_tiny_instance, single_request_space, two_node_instance

TOLERANCE = 0.1


def _pair_point(route_solution):
    values = {("y_eep", *key): float(v) for key, v in route_solution.pairs_utilized.items()}
    parts = route_solution.cost_breakdown.components
    return values, parts["pair_reservation"] + parts["pair_ondemand"]


def _qubit_point(instance, plan):
    values = {("x_uqt", *key): float(v) for key, v in plan.qubits_utilized.items()}
    for r, c in instance.circuit_keys():
        for p, m in instance.machines():
            values[("assign", r, c, p, m.id)] = 1.0 if plan.assignment[(r, c)] == (p, m.id) else 0.0
    parts = plan.cost_breakdown.components
    return values, parts["qubit_reservation"] + parts["qubit_ondemand"] + parts["overwait_penalty"]


def test_agrees_with_direct_solve(path3, path3_space):
    direct, _, _, _ = solve_direct(path3, path3_space)
    plan, report = run_decomposed(path3, path3_space)
    assert report.converged
    assert plan.cost_breakdown.total == pytest.approx(direct.cost_breakdown.total, abs=TOLERANCE)
    assert plan.cost_breakdown.total >= direct.cost_breakdown.total - 1e-6
    assert plan.routed_links() == direct.routed_links()


@pytest.mark.parametrize("seed", range(20))
def test_agrees_on_random_instances(seed):
    instance, space = random_tiny_instance(seed)
    direct, _, _, _ = solve_direct(instance, space)
    plan, report = run_decomposed(instance, space)
    assert report.converged
    assert abs(plan.cost_breakdown.total - direct.cost_breakdown.total) <= TOLERANCE


@pytest.mark.parametrize("seed", range(20))
def test_cuts_never_exceed_true_recourse(seed):
    instance, space = random_tiny_instance(seed)
    settings = SolverSettings()
    routes, _, _, _ = solve_direct(instance, space, parts=(NETWORK,))
    _, pair_state = solve_pair_benders(instance, space, settings.benders, routes.route, settings=settings)
    values, recourse = _pair_point(routes)
    assert pair_state.cuts or pair_state.iteration == 1
    for cut in pair_state.cuts:
        assert cut.is_satisfied(values, recourse)

    qubits, _, _, _ = solve_direct(instance, space, parts=(QUBIT,))
    _, qubit_state = solve_qubit_benders(instance, space, settings.benders, settings=settings)
    values, recourse = _qubit_point(instance, qubits)
    for cut in qubit_state.cuts:
        assert cut.is_satisfied(values, recourse)


def test_bounds_are_monotone(path3, path3_space):
    _, report = run_decomposed(path3, path3_space)
    for state in (report.pair_state, report.qubit_state):
        lowers = [row["lower"] for row in state.history]
        bests = [row["upper_best"] for row in state.history]
        assert lowers == sorted(lowers)
        assert bests == sorted(bests, reverse=True)
        assert all(lo <= best + 1e-6 for lo, best in zip(lowers, bests))
        assert state.gap < 0.05


def test_problem_without_circuits_is_trivial():
    instance = two_node_instance()
    space = single_request_space(fidelity=(0.95, 0.99), qubits=(0,))
    plan, report = run_decomposed(instance, space)
    state = report.qubit_state
    assert (state.iteration, state.lower_bound, state.upper_bound, state.converged) == (1, 0.0, 0.0, True)
    assert plan.qubits_reserved == {}
    assert report.pair_state.converged


def test_single_scenario(path3):
    space = single_request_space(fidelity=(0.9,), qubits=(12,), wait=(0.004,))
    direct, _, _, _ = solve_direct(path3, space)
    plan, report = run_decomposed(path3, space)
    assert report.converged
    assert plan.cost_breakdown.total == pytest.approx(direct.cost_breakdown.total, abs=TOLERANCE)


def test_workers_do_not_change_the_result(path3, path3_space):
    settings = SolverSettings()
    parallel = replace(settings, benders=replace(settings.benders, workers=3))
    plan, report = run_decomposed(path3, path3_space, settings=settings)
    threaded, threaded_report = run_decomposed(path3, path3_space, settings=parallel)
    assert threaded.cost_breakdown.total == plan.cost_breakdown.total
    assert threaded_report.trajectory.equals(report.trajectory)


def test_iteration_limit_reports_not_converged(path3, path3_space):
    config = BendersConfig(max_iterations=1)
    plan, report = run_decomposed(path3, path3_space, config=config)
    assert not report.converged
    assert report.pair_state.iteration == 1
    assert plan.cost_breakdown is not None


def test_forced_reservation(path3, path3_space):
    plan, report = run_decomposed(path3, path3_space, reserved_pairs=2)
    assert report.converged
    assert plan.pairs_reserved[("1", "2", "r1")] == 2
    assert plan.pairs_reserved[("2", "3", "r1")] == 2


def test_forced_reservation_over_capacity(path3, path3_space):
    settings = SolverSettings()
    routes, _, _, _ = solve_direct(path3, path3_space, parts=(NETWORK,))
    with pytest.raises(BendersError, match="capacity"):
        solve_pair_benders(path3, path3_space, settings.benders, routes.route, reserved_pairs=10)


def test_trajectory_frame(path3, path3_space):
    _, report = run_decomposed(path3, path3_space)
    frame = report.trajectory
    assert list(frame.columns) == TRAJECTORY_COLUMNS
    assert set(frame["problem"]) == {"pairs", "qubits"}
    assert len(frame) == report.pair_state.iteration + report.qubit_state.iteration


def test_cut_helpers():
    cut = Cut({("y_eep", "1", "2", "r1", "s0"): -200.0}, 400.0, 1)
    point = {("y_eep", "1", "2", "r1", "s0"): 1.0}
    assert cut.rhs(point) == 200.0
    assert cut.is_satisfied(point, 200.0)
    assert not cut.is_satisfied(point, 150.0)
    with pytest.raises(BendersError):
        Cut({}, math.nan, 2)


def test_state_record():
    state = BendersState("qubits")
    assert state.record(1.0, 10.0, 0.5)
    assert not state.record(0.5, 12.0, 0.7)
    assert state.lower_bound == 1.0
    assert state.upper_bound == 12.0
    assert state.upper_bound_best == 10.0
    assert state.theta == 0.7
    assert state.gap == 9.0


def _stage_cost(plan, names):
    return sum(plan.cost_breakdown.components[name] for name in names)


@pytest.mark.slow
def test_preset_converges_with_valid_cuts():
    instance = run_preset_defaults()
    space = preset_scenario_space(instance)
    settings = SolverSettings()
    plan, report = run_decomposed(instance, space, settings=settings)
    assert report.converged
    assert report.pair_state.iteration < settings.benders.max_iterations

    routes = report.route_solution
    values, recourse = _pair_point(routes)
    for cut in report.pair_state.cuts:
        assert cut.is_satisfied(values, recourse)
    pair_names = ("pair_reservation", "pair_utilization", "pair_ondemand")
    assert _stage_cost(plan, pair_names) == pytest.approx(_stage_cost(routes, pair_names), abs=TOLERANCE)

    qubits, _, _, _ = solve_direct(instance, space, parts=(QUBIT,), settings=settings)
    values, recourse = _qubit_point(instance, qubits)
    for cut in report.qubit_state.cuts:
        assert cut.is_satisfied(values, recourse)
    qubit_names = ("qubit_reservation", "qubit_utilization", "qubit_ondemand", "overwait_penalty")
    assert _stage_cost(plan, qubit_names) == pytest.approx(_stage_cost(qubits, qubit_names), abs=TOLERANCE)


def test_pair_bound_matches_direct_pair_cost(path3, path3_space):
    settings = SolverSettings()
    routes, _, _, _ = solve_direct(path3, path3_space, parts=(NETWORK,))
    _, state = solve_pair_benders(path3, path3_space, settings.benders, routes.route, settings=settings)
    assert state.converged
    values, recourse = _pair_point(routes)
    assert state.upper_bound_best == pytest.approx(recourse + routes.cost_breakdown.components["pair_utilization"], abs=TOLERANCE)
    for cut in state.cuts:
        assert cut.is_satisfied(values, recourse)
