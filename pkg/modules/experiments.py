# modules/experiments.py
# Preset instance, parameter sweeps and the stochastic / expected-value / deterministic comparison.
# Пресет экземпляра, перебор параметров и сравнение стохастической, средней и детерминированной моделей.

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import pandas as pd

from modules.benders import run_decomposed
from modules.errors import BendersError, InfeasibleModelError, PlannerError, ScenarioError
from modules.formulation import ModelMode, evaluate_first_stage_against, solve_direct
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
)
from modules.qft import profile_for_number
from modules.scenarios import build_scenario_space, sample_value_sets
from modules.settings import SolverSettings
from utils import load_preset

logger = logging.getLogger(__name__)

MODES = ("sp", "ev", "det", "benders")
SWEEP_VARIABLES = (
    "reserved-pairs",
    "fidelity-demand",
    "reservation-price",
    "penalty-price",
    "waiting-time",
    "request-count",
    "price-scale",
)
CSV_COLUMNS = [
    "point", "value", "value2", "mode", "status",
    "first_stage", "second_stage", "total",
    "routed_links", "pairs_reserved", "pairs_utilized", "pairs_ondemand", "max_link_utilized",
    "qubits_reserved", "qubits_utilized", "qubits_ondemand", "overwait_penalty",
]
COMPARE_COLUMNS = ["mode", "status", "first_stage", "second_stage", "total", "savings_vs_ev", "ordering_holds"]
ORDERING_TOLERANCE = 1e-5


# --- Preset ---

def run_preset_defaults(preset="nsfnet", gate_times=None):
    # Builds the bundled NSFNET instance; machine times come from QFT gate counts times a speed factor.
    # Строит встроенный экземпляр NSFNET; время выполнения = оценка по вентилям QFT * коэффициент скорости.
    data = load_preset(preset)
    ecc, scs = data["node_costs"]["ecc"], data["node_costs"]["scs"]
    nodes = [QuantumNode(n, ecc, scs) for n in data["nodes"]]

    defaults = data["link_defaults"]
    overrides = {tuple(o["link"]): o for o in data.get("link_overrides", [])}
    links = []
    for i, j in data["links"]:
        params = dict(defaults)
        params.update({k: v for k, v in overrides.get((i, j), {}).items() if k != "link"})
        for a, b in ((i, j), (j, i)):
            links.append(
                QuantumLink(a, b, params["f"], params["fts"], params["rcap"], params["ocap"], fiber=f"{i}-{j}")
            )
    topology = NetworkTopology(nodes, links)

    pc, qc = data["pair_costs"], data["qubit_costs"]
    costs = CostModel(
        pair_costs={(WILDCARD, WILDCARD): PairCost(pc["r"], pc["u"], pc["o"])},
        qubit_costs={(WILDCARD, WILDCARD): QubitCost(qc["r"], qc["u"], qc["o"], qc["pwt"])},
    )

    requests = [Request(r["id"], r["src"], r["dst"], tuple(r["circuits"])) for r in data["requests"]]
    base_time = {
        circuit: profile_for_number(number, gate_times).estimated_time
        for circuit, number in data["circuits"].items()
    }
    providers = []
    for p_id, machines in data["providers"].items():
        built = []
        for m_id, spec in machines.items():
            times = {(r.id, c): base_time[c] * spec["speed"] for r in requests for c in r.circuits}
            built.append(Machine(m_id, int(spec["capacity"]), times))
        providers.append(Provider(p_id, tuple(built)))
    return Instance(topology, costs, tuple(providers), tuple(requests))


def preset_scenario_space(instance, preset="nsfnet", seed=1):
    # Seeded value sets drawn from the preset demand ranges.
    # Множества значений спроса, выбранные из диапазонов пресета с заданным зерном.
    data = load_preset(preset)
    rng = np.random.default_rng(seed)
    sizes = {r: tuple(v) for r, v in data.get("scenario_sizes", {}).items()}
    fidelity, qubits, wait = sample_value_sets(instance.requests, data["demand_ranges"], sizes, rng)
    return build_scenario_space(fidelity, qubits, wait)


# --- Sweep specification ---

def parse_range(text):
    # "A:B:STEP" (inclusive), "A" or "a,b,c".
    # Диапазон "A:B:STEP" (включительно), одно значение или список через запятую.
    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (float(p) for p in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return tuple(round(start + k * step, 10) for k in range(count))
        return tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise ValueError(f"invalid range '{text}': expected A:B:STEP with STEP > 0 and A <= B") from None


@dataclass(frozen=True)
class ExperimentSpec:
    variable: str
    values: tuple
    modes: tuple = ("sp",)
    variable2: str = None
    values2: tuple = ()
    preset: str = "nsfnet"
    seed: int = 1
    workers: int = 1

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ValueError(f"unknown sweep variable '{self.variable}'")
        if not self.values:
            raise ValueError("sweep range is empty")
        if not self.modes:
            raise ValueError("no modes selected")
        unknown = [m for m in self.modes if m not in MODES]
        if unknown:
            raise ValueError(f"unknown mode(s) {', '.join(unknown)}")
        if self.variable2 is not None:
            if self.variable2 not in SWEEP_VARIABLES or self.variable2 == self.variable:
                raise ValueError(f"invalid second sweep variable '{self.variable2}'")
            if not self.values2:
                raise ValueError("second sweep range is empty")

    def points(self):
        if self.variable2 is None:
            return [(v, None) for v in self.values]
        return [(v, v2) for v in self.values for v2 in self.values2]


def apply_point(instance, scenario_space, variable, value, reserved_pairs=None):
    # Returns: Tuple (instance, scenario space, forced reserved pairs or None).
    if variable == "reserved-pairs":
        return instance, scenario_space, int(round(value))
    if variable == "fidelity-demand":
        return instance, scenario_space.map_demands(fidelity=value), reserved_pairs
    if variable == "waiting-time":
        return instance, scenario_space.map_demands(wait=value), reserved_pairs
    if variable == "reservation-price":
        return instance.with_costs(instance.costs.with_pair_field("reserve", value)), scenario_space, reserved_pairs
    if variable == "penalty-price":
        costs = instance.costs.with_qubit_field("overwait_penalty", value)
        return instance.with_costs(costs), scenario_space, reserved_pairs
    if variable == "request-count":
        count = int(round(value))
        if not 1 <= count <= len(instance.requests):
            raise ScenarioError(f"request count {count} outside 1..{len(instance.requests)}")
        ids = [r.id for r in instance.requests[:count]]
        return instance.with_requests(ids), scenario_space.restrict(ids), reserved_pairs
    if variable == "price-scale":
        # every price and node cost times value; the optimal plan is unchanged, the costs scale with it
        if value <= 0:
            raise ScenarioError(f"price scale must be positive, got {value}")
        return instance.scaled(value), scenario_space, reserved_pairs
    raise ValueError(f"unknown sweep variable '{variable}'")


# --- Model runs ---

def summarize_plan(plan, probabilities):
    # Decision summaries; second-stage counts are probability-weighted.
    # Сводка решений; величины второго этапа взвешены вероятностями.
    routed = {key for key, v in plan.route.items() if v}

    def expected(table):
        return math.fsum(probabilities[key[-1]] * v for key, v in table.items())

    utilized = list(plan.pairs_utilized.values())
    return {
        "routed_links": len(routed),
        "pairs_reserved": sum(v for key, v in plan.pairs_reserved.items() if key in routed),
        "pairs_utilized": expected(plan.pairs_utilized),
        "pairs_ondemand": expected(plan.pairs_ondemand),
        "max_link_utilized": max(utilized, default=0),
        "qubits_reserved": sum(plan.qubits_reserved.values()),
        "qubits_utilized": expected(plan.qubits_utilized),
        "qubits_ondemand": expected(plan.qubits_ondemand),
        "overwait_penalty": plan.cost_breakdown.components["overwait_penalty"] if plan.cost_breakdown else 0.0,
    }


def _empty_row(status):
    row = {col: math.nan for col in CSV_COLUMNS[5:]}
    row["status"] = status
    return row


def _row(status, first, second, summary):
    row = {"status": status, "first_stage": first, "second_stage": second, "total": first + second}
    row.update(summary)
    return row


def run_mode(instance, scenario_space, mode, reserved_pairs=None, settings=None):
    # One model on one instance. Returns: Tuple (row dict, PlanSolution or None, extra).
    # extra: FirstStageEvaluation for ev, per-scenario plans for det, DecompositionReport for benders.
    settings = settings or SolverSettings()
    probabilities = {s.id: s.probability for s in scenario_space}
    try:
        if mode == "sp":
            plan, milp, _, _ = solve_direct(instance, scenario_space, reserved_pairs=reserved_pairs, settings=settings)
            if plan is None:
                return _empty_row(milp.status.value), None, None
            bd = plan.cost_breakdown
            return _row("optimal", bd.first_stage, bd.second_stage, summarize_plan(plan, probabilities)), plan, None

        if mode == "ev":
            plan, milp, _, vmap = solve_direct(
                instance, scenario_space, ModelMode.expected_value(), reserved_pairs=reserved_pairs, settings=settings
            )
            if plan is None:
                return _empty_row(milp.status.value), None, None
            scored = evaluate_first_stage_against(plan, instance, scenario_space, settings=settings)
            status = "optimal" if scored.feasible else "infeasible_in_scenarios"
            summary = summarize_plan(plan, {s.id: s.probability for s in vmap.space})
            return _row(status, scored.first_stage, scored.second_stage, summary), plan, scored

        if mode == "det":
            plans = {}
            first = second = 0.0
            summary = None
            for s in scenario_space:
                plan, milp, _, _ = solve_direct(
                    instance,
                    scenario_space,
                    ModelMode.perfect_information(s),
                    reserved_pairs=reserved_pairs,
                    settings=settings,
                )
                if plan is None:
                    return _empty_row(milp.status.value), None, plans
                plans[s.id] = plan
                first += s.probability * plan.cost_breakdown.first_stage
                second += s.probability * plan.cost_breakdown.second_stage
                part = summarize_plan(plan, {s.id: 1.0})
                if summary is None:
                    summary = {k: 0.0 for k in part}
                for k, v in part.items():
                    summary[k] = max(summary[k], v) if k == "max_link_utilized" else summary[k] + s.probability * v
            return _row("optimal", first, second, summary), None, plans

        if mode == "benders":
            plan, report = run_decomposed(instance, scenario_space, settings=settings, reserved_pairs=reserved_pairs)
            bd = plan.cost_breakdown
            status = "optimal" if report.converged else "not_converged"
            return _row(status, bd.first_stage, bd.second_stage, summarize_plan(plan, probabilities)), plan, report
    except InfeasibleModelError as e:
        logger.warning("Mode %s infeasible: %s", mode, e)
        return _empty_row("infeasible"), None, None
    except BendersError as e:
        logger.warning("Mode %s failed: %s", mode, e)
        return _empty_row("infeasible"), None, None
    raise ValueError(f"unknown mode '{mode}'")


# --- Sweep ---

def sweep(spec, instance=None, scenario_space=None, settings=None):
    # One row per sweep point per mode, in sweep order regardless of worker count.
    # Одна строка на точку и режим, в порядке перебора независимо от числа потоков.
    settings = settings or SolverSettings()
    if instance is None:
        instance = run_preset_defaults(spec.preset, settings.gate_times)
    if scenario_space is None:
        scenario_space = preset_scenario_space(instance, spec.preset, spec.seed)
    points = spec.points()

    def evaluate(indexed):
        index, (value, value2) = indexed
        rows = []
        try:
            inst, space, forced = apply_point(instance, scenario_space, spec.variable, value)
            if value2 is not None:
                inst, space, forced = apply_point(inst, space, spec.variable2, value2, forced)
        except PlannerError as e:
            logger.warning("Sweep point %d skipped: %s", index, e)
            for mode in spec.modes:
                rows.append({"point": index, "value": value, "value2": value2, "mode": mode, **_empty_row("invalid")})
            return rows
        for mode in spec.modes:
            row, _, _ = run_mode(inst, space, mode, forced, settings)
            rows.append({"point": index, "value": value, "value2": value2, "mode": mode, **row})
            logger.info("Sweep point %d (%s=%s) mode %s: %s", index, spec.variable, value, mode, row["status"])
        return rows

    indexed = list(enumerate(points))
    if spec.workers > 1:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            chunks = list(pool.map(evaluate, indexed))
    else:
        chunks = [evaluate(item) for item in indexed]
    frame = pd.DataFrame([row for chunk in chunks for row in chunk], columns=CSV_COLUMNS)
    return frame


# --- Model comparison ---

def compare_models(instance, scenario_space, settings=None):
    # Rows for sp, ev (first stage scored on every scenario) and det, with ordering check and savings.
    # Строки для sp, ev и det с проверкой порядка det <= sp <= ev и относительной экономией.
    settings = settings or SolverSettings()
    rows = []
    for mode in ("sp", "ev", "det"):
        row, _, _ = run_mode(instance, scenario_space, mode, settings=settings)
        rows.append({"mode": mode, **row})
    frame = pd.DataFrame(rows)
    totals = dict(zip(frame["mode"], frame["total"]))
    sp, ev, det = totals["sp"], totals["ev"], totals["det"]
    tol = ORDERING_TOLERANCE * max(1.0, abs(sp)) if math.isfinite(sp) else ORDERING_TOLERANCE
    holds = bool(det <= sp + tol and sp <= ev + tol)
    if not holds:
        logger.warning("Model ordering violated: det %.6f, sp %.6f, ev %.6f", det, sp, ev)

    def savings(total):
        if not math.isfinite(ev) or ev == 0 or not math.isfinite(total):
            return math.nan
        return (ev - total) / ev

    frame["savings_vs_ev"] = [savings(t) for t in frame["total"]]
    frame["ordering_holds"] = holds
    extra = [c for c in frame.columns if c not in COMPARE_COLUMNS]
    return frame[COMPARE_COLUMNS + extra]
