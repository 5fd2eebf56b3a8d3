# modules/milp.py
# Best-bound branch and bound over the simplex relaxation.
# Метод ветвей и границ с выбором узла по лучшей границе поверх симплекс-релаксации.

import heapq
import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from modules.lp_engine import DEFAULT_SIMPLEX, DEFAULT_TOLERANCES, LpStatus, solve_arrays

logger = logging.getLogger(__name__)

DEFAULT_NODE_LIMIT = 200000


class MilpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NODE_LIMIT = "node_limit"
    NUMERICAL = "numerical_error"


@dataclass(frozen=True)
class MilpSolution:
    status: MilpStatus
    values: np.ndarray
    objective: float
    best_bound: float
    node_count: int
    gap: float

    @property
    def is_optimal(self):
        return self.status is MilpStatus.OPTIMAL


def _relative_gap(incumbent, bound):
    if not math.isfinite(incumbent):
        return math.inf
    return max(0.0, incumbent - bound) / max(1.0, abs(incumbent))


def _checked_start(arrays, start, lb, ub, tolerances):
    # A caller-supplied point that satisfies bounds, rows and integrality, or None.
    x = np.asarray(start, dtype=float).copy()
    if x.shape != lb.shape or not np.all(np.isfinite(x)):
        return None
    feas = tolerances.feasibility
    integer = arrays.integer
    if np.any(np.abs(x[integer] - np.round(x[integer])) > tolerances.integrality):
        return None
    x[integer] = np.round(x[integer])
    if np.any(x < lb - feas) or np.any(x > ub + feas):
        return None
    if arrays.A.size:
        lhs = arrays.A @ x
        slack = feas * (1.0 + np.abs(arrays.b))
        senses = arrays.senses
        if np.any((senses == 0) & (lhs > arrays.b + slack)) or np.any((senses == 1) & (lhs < arrays.b - slack)):
            return None
        if np.any((senses == 2) & (np.abs(lhs - arrays.b) > slack)):
            return None
    return x


def solve_milp(program, gap_tolerance=None, node_limit=None, tolerances=None, settings=None, start=None):
    # Solves program to within gap_tolerance of the best bound.
    # start: optional feasible point used as the first incumbent.
    # Решает задачу с точностью gap_tolerance относительно лучшей границы.
    #
    # Branching: most fractional integer variable, lowest index on ties; down branch first.
    # Ветвление: самая дробная целочисленная переменная, при равенстве с меньшим индексом.
    tolerances = tolerances or DEFAULT_TOLERANCES
    settings = settings or DEFAULT_SIMPLEX
    gap_tolerance = tolerances.mip_gap if gap_tolerance is None else gap_tolerance
    node_limit = DEFAULT_NODE_LIMIT if node_limit is None else node_limit
    int_tol = tolerances.integrality

    arrays = program.to_arrays()
    integer = arrays.integer
    lb = arrays.lb.copy()
    ub = arrays.ub.copy()
    lb[integer] = np.ceil(lb[integer] - int_tol)
    ub[integer] = np.floor(ub[integer] + int_tol)
    incumbent = None
    incumbent_value = math.inf
    if start is not None:
        incumbent = _checked_start(arrays, start, lb, ub, tolerances)
        if incumbent is not None:
            incumbent_value = float(arrays.c @ incumbent) + arrays.constant
    node_count = 0
    sequence = 0
    # children restart the simplex from the basis of their parent
    heap = [(-math.inf, sequence, lb, ub, None)]
    status = None
    pruned_bound = math.inf

    def cutoff():
        if incumbent is None:
            return math.inf
        return incumbent_value - max(gap_tolerance * max(1.0, abs(incumbent_value)), 1e-9)

    while heap:
        bound, _, node_lb, node_ub, warm = heapq.heappop(heap)
        if bound >= cutoff():
            pruned_bound = min(pruned_bound, bound)
            continue
        if node_count >= node_limit:
            sequence += 1
            heapq.heappush(heap, (bound, sequence, node_lb, node_ub, warm))
            status = MilpStatus.NODE_LIMIT
            break

        relaxation = solve_arrays(arrays, node_lb, node_ub, tolerances, settings, warm_start=warm)
        node_count += 1
        if relaxation.status is LpStatus.INFEASIBLE:
            continue
        if relaxation.status is LpStatus.UNBOUNDED:
            if node_count == 1:
                return MilpSolution(MilpStatus.UNBOUNDED, None, -math.inf, -math.inf, node_count, math.inf)
            continue
        if relaxation.status is not LpStatus.OPTIMAL:
            if node_count == 1:
                return MilpSolution(MilpStatus.NUMERICAL, None, math.nan, math.nan, node_count, math.inf)
            logger.warning("Dropping node %d: relaxation status %s", node_count, relaxation.status.value)
            continue
        if relaxation.objective >= cutoff():
            pruned_bound = min(pruned_bound, relaxation.objective)
            continue

        x = relaxation.values
        frac = np.abs(x - np.round(x))
        frac[~integer] = 0.0
        if not np.any(frac > int_tol):
            candidate = x.copy()
            candidate[integer] = np.round(candidate[integer])
            value = float(arrays.c @ candidate) + arrays.constant
            if value < incumbent_value:
                incumbent, incumbent_value = candidate, value
                logger.debug("New incumbent %.6f at node %d", value, node_count)
            continue

        j = int(np.argmax(frac))
        down_ub = node_ub.copy()
        down_ub[j] = math.floor(x[j])
        up_lb = node_lb.copy()
        up_lb[j] = math.ceil(x[j])
        sequence += 1
        heapq.heappush(heap, (relaxation.objective, sequence, node_lb, down_ub, relaxation.warm_start))
        sequence += 1
        heapq.heappush(heap, (relaxation.objective, sequence, up_lb, node_ub, relaxation.warm_start))

    if incumbent is None:
        if status is MilpStatus.NODE_LIMIT:
            logger.warning("Node limit %d reached without an incumbent", node_limit)
            return MilpSolution(MilpStatus.NODE_LIMIT, None, math.nan, heap[0][0], node_count, math.inf)
        return MilpSolution(MilpStatus.INFEASIBLE, None, math.nan, math.nan, node_count, math.inf)

    if status is MilpStatus.NODE_LIMIT:
        best_bound = min(min(item[0] for item in heap), incumbent_value)
        logger.warning("Node limit %d reached; returning best incumbent", node_limit)
    else:
        best_bound = min(incumbent_value, pruned_bound)
        status = MilpStatus.OPTIMAL
    gap = _relative_gap(incumbent_value, best_bound)
    logger.debug("Branch and bound finished: %s, objective %.6f, %d nodes", status.value, incumbent_value, node_count)
    return MilpSolution(status, incumbent, incumbent_value, best_bound, node_count, gap)
