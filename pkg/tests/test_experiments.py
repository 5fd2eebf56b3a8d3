# tests/test_experiments.py

import math

import pandas as pd
import pytest

from modules.experiments import (
    COMPARE_COLUMNS,
    CSV_COLUMNS,
    ExperimentSpec,
    apply_point,
    compare_models,
    parse_range,
    preset_scenario_space,
    run_mode,
    run_preset_defaults,
    sweep,
)
from modules.instance import PairCost
from tests.factories import path_instance, random_tiny_instance, single_request_space, two_node_instance


@pytest.fixture
def uncertain_link():
    # k = 2 or 3 pairs with equal probability; utilization is free.
    instance = two_node_instance(f=0.9, circuits=("c1",))
    space = single_request_space(fidelity=(0.95, 0.99), qubits=(0,))
    return instance, space


@pytest.mark.parametrize("text, expected", [
    ("0:5:1", (0.0, 1.0, 2.0, 3.0, 4.0, 5.0)),
    ("0.8:0.9:0.05", (0.8, 0.85, 0.9)),
    ("3", (3.0,)),
    ("1,2,4", (1.0, 2.0, 4.0)),
])
def test_parse_range(text, expected):
    assert parse_range(text) == pytest.approx(expected)


@pytest.mark.parametrize("text", ["5:1:1", "1:2:0", "a", "1:2"])
def test_parse_range_rejects(text):
    with pytest.raises(ValueError, match="invalid range"):
        parse_range(text)


@pytest.mark.parametrize("kwargs", [
    {"variable": "colour", "values": (1.0,)},
    {"variable": "fidelity-demand", "values": ()},
    {"variable": "fidelity-demand", "values": (0.9,), "modes": ("lp",)},
    {"variable": "fidelity-demand", "values": (0.9,), "variable2": "fidelity-demand", "values2": (0.9,)},
    {"variable": "fidelity-demand", "values": (0.9,), "variable2": "waiting-time"},
])
def test_spec_validation(kwargs):
    with pytest.raises(ValueError):
        ExperimentSpec(**kwargs)


def test_spec_points_grid():
    spec = ExperimentSpec("fidelity-demand", (0.8, 0.9), variable2="waiting-time", values2=(0.001, 0.002, 0.003))
    assert len(spec.points()) == 6
    assert spec.points()[1] == (0.8, 0.002)


def test_apply_point(path3, path3_space):
    _, _, forced = apply_point(path3, path3_space, "reserved-pairs", 2.0)
    assert forced == 2
    _, space, _ = apply_point(path3, path3_space, "fidelity-demand", 0.95)
    assert {s.fidelity("r1", "c1") for s in space} == {0.95}
    _, space, _ = apply_point(path3, path3_space, "waiting-time", 0.02)
    assert {s.wait("r1", "c1") for s in space} == {0.02}
    inst, _, _ = apply_point(path3, path3_space, "reservation-price", 4.0)
    assert inst.costs.pair("2", "r1").reserve == 4.0
    inst, _, _ = apply_point(path3, path3_space, "penalty-price", 0.0)
    assert inst.costs.qubit("c1", "p1").overwait_penalty == 0.0
    inst, space, forced = apply_point(path3, path3_space, "request-count", 1, reserved_pairs=3)
    assert [r.id for r in inst.requests] == ["r1"]
    assert forced == 3


def test_reserved_pairs_trend(uncertain_link):
    instance, space = uncertain_link
    frame = sweep(ExperimentSpec("reserved-pairs", parse_range("0:5:1")), instance, space)
    assert list(frame.columns) == CSV_COLUMNS
    assert (frame["status"] == "optimal").all()
    assert frame["total"].tolist() == pytest.approx([500.0, 310.0, 120.0, 30.0, 40.0, 50.0])
    second = frame["second_stage"].tolist()
    assert all(a >= b - 1e-9 for a, b in zip(second, second[1:]))
    assert second[3:] == pytest.approx([0.0, 0.0, 0.0])
    best = int(frame["total"].idxmin())
    assert 0 < best < len(frame) - 1


def test_fidelity_demand_trend():
    instance = two_node_instance(f=0.55, rcap=9, pair=PairCost(10.0, 1.0, 200.0), circuits=("c1",))
    space = single_request_space(fidelity=(0.8,), qubits=(0,))
    frame = sweep(ExperimentSpec("fidelity-demand", parse_range("0.80:0.90:0.01")), instance, space)
    pairs = [7, 8, 8, 8, 9, 9, 10, 10, 10, 11, 11]
    assert frame["max_link_utilized"].tolist() == [min(k, 9) for k in pairs]
    assert frame["pairs_ondemand"].tolist() == pytest.approx([max(0, k - 9) for k in pairs])
    assert (frame.loc[frame["pairs_ondemand"] > 0, "max_link_utilized"] == 9).all()
    totals = frame["total"].tolist()
    assert all(a <= b + 1e-9 for a, b in zip(totals, totals[1:]))


def test_two_variable_sweep_fills_value2(uncertain_link):
    instance, space = uncertain_link
    spec = ExperimentSpec("reserved-pairs", (2.0, 3.0), variable2="reservation-price", values2=(5.0, 10.0))
    frame = sweep(spec, instance, space)
    assert len(frame) == 4
    assert frame["value2"].tolist() == [5.0, 10.0, 5.0, 10.0]
    assert frame.loc[3, "first_stage"] == pytest.approx(30.0)
    assert frame.loc[2, "first_stage"] == pytest.approx(15.0)


def test_price_scale_sweep_is_linear(uncertain_link):
    instance, space = uncertain_link
    frame = sweep(ExperimentSpec("price-scale", (0.0, 1.0, 2.0)), instance, space)
    assert frame["status"].tolist() == ["invalid", "optimal", "optimal"]
    assert frame["total"].tolist()[1:] == pytest.approx([30.0, 60.0])
    assert frame.loc[2, "pairs_reserved"] == frame.loc[1, "pairs_reserved"]


def test_invalid_points_are_marked(path3, path3_space):
    frame = sweep(ExperimentSpec("request-count", (1.0, 4.0)), path3, path3_space)
    assert frame["status"].tolist() == ["optimal", "invalid"]
    assert math.isnan(frame.loc[1, "total"])


def test_sweep_is_deterministic_across_workers(uncertain_link):
    instance, space = uncertain_link
    spec = ExperimentSpec("reserved-pairs", parse_range("0:4:1"), modes=("sp", "ev"))
    threaded = ExperimentSpec("reserved-pairs", parse_range("0:4:1"), modes=("sp", "ev"), workers=3)
    pd.testing.assert_frame_equal(sweep(spec, instance, space), sweep(threaded, instance, space))


def test_compare_ordering(uncertain_link):
    instance, space = uncertain_link
    frame = compare_models(instance, space)
    assert list(frame.columns[: len(COMPARE_COLUMNS)]) == COMPARE_COLUMNS
    totals = dict(zip(frame["mode"], frame["total"]))
    assert totals == pytest.approx({"sp": 30.0, "ev": 120.0, "det": 25.0})
    assert frame["ordering_holds"].all()
    savings = dict(zip(frame["mode"], frame["savings_vs_ev"]))
    assert savings["ev"] == 0.0
    assert savings["sp"] == pytest.approx(0.75)


@pytest.mark.parametrize("seed", range(20))
def test_compare_ordering_on_random_instances(seed):
    instance, space = random_tiny_instance(seed)
    frame = compare_models(instance, space)
    assert frame["ordering_holds"].all()
    totals = dict(zip(frame["mode"], frame["total"]))
    assert math.isfinite(totals["sp"])


def test_expected_value_scored_on_scenarios(uncertain_link):
    instance, space = uncertain_link
    row, plan, scored = run_mode(instance, space, "ev")
    assert plan.pairs_reserved[("a", "b", "r1")] == 2
    assert row["first_stage"] == pytest.approx(20.0)
    assert row["second_stage"] == pytest.approx(100.0)
    assert scored.feasible


def test_expected_value_infeasible_in_scenarios():
    instance = two_node_instance(ocap=0, circuits=("c1",))
    space = single_request_space(fidelity=(0.95, 0.99), qubits=(0,))
    row, _, _ = run_mode(instance, space, "ev")
    assert row["status"] == "infeasible_in_scenarios"
    assert row["total"] == math.inf


def test_benders_mode(path3, path3_space):
    row, plan, report = run_mode(path3, path3_space, "benders")
    assert row["status"] == "optimal"
    assert row["total"] == pytest.approx(351.84, abs=0.1)
    assert report.converged


def test_infeasible_mode_row():
    row, plan, _ = run_mode(path_instance(f=0.5), single_request_space(fidelity=(0.9,)), "sp")
    assert row["status"] == "infeasible"
    assert plan is None
    assert math.isnan(row["total"])


def test_unknown_mode(path3, path3_space):
    with pytest.raises(ValueError):
        run_mode(path3, path3_space, "robust")


def test_preset_execution_times():
    instance = run_preset_defaults()
    assert instance.execution_time("qft14", "p1", "m1", "r1") == pytest.approx(5.88e-3)
    assert instance.execution_time("qft14", "p3", "m2", "r3") == pytest.approx(5.88e-3 * 0.7)
    fast = run_preset_defaults(gate_times={"H": 1.0, "CROT": 0.0, "SWAP": 0.0})
    assert fast.execution_time("qft5", "p1", "m1", "r2") == pytest.approx(5.0)


@pytest.mark.slow
def test_preset_compare_single_request():
    instance = run_preset_defaults()
    instance = instance.with_requests(["r2"])
    space = preset_scenario_space(instance)
    frame = compare_models(instance, space)
    assert frame["ordering_holds"].all()
    assert (frame["status"].isin(["optimal", "infeasible_in_scenarios"])).all()


@pytest.mark.slow
def test_preset_sweep_reserved_pairs():
    spec = ExperimentSpec("reserved-pairs", (0.0, 3.0), variable2="request-count", values2=(1.0,))
    frame = sweep(spec)
    assert (frame["status"] == "optimal").all()
    assert frame.loc[1, "second_stage"] <= frame.loc[0, "second_stage"] + 1e-6
