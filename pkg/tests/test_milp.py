# tests/test_milp.py

import math

import numpy as np
import pytest

from modules.lp_engine import LinearProgram, Sense, VarKind
from modules.milp import MilpStatus, solve_milp
from tests.enumeration import lattice_minimum


def random_integer_program(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 4))
    m = int(rng.integers(1, 4))
    program = LinearProgram(f"int_{seed}")
    cols = []
    for j in range(n):
        lo = int(rng.integers(-2, 1))
        kind = VarKind.BINARY if rng.random() < 0.25 else VarKind.INTEGER
        hi = 1 if kind is VarKind.BINARY else lo + int(rng.integers(1, 5))
        cols.append(program.add_variable(f"x{j}", kind, max(lo, 0) if kind is VarKind.BINARY else lo, hi))
    kinds = (Sense.LE, Sense.GE, Sense.EQ)
    for _ in range(m):
        coefs = rng.integers(-3, 4, n)
        sense = kinds[int(rng.choice(3, p=[0.45, 0.45, 0.1]))]
        rhs = float(rng.integers(-3, 6)) + (0.5 if rng.random() < 0.3 else 0.0)
        program.add_constraint(dict(zip(cols, coefs)), sense, rhs)
    program.set_objective(dict(zip(cols, rng.integers(-4, 5, n))), constant=float(rng.integers(0, 3)))
    return program


@pytest.mark.parametrize("seed", range(200))
def test_matches_lattice_enumeration(seed):
    program = random_integer_program(seed)
    expected = lattice_minimum(program.to_arrays())
    solution = solve_milp(program)
    if math.isinf(expected):
        assert solution.status is MilpStatus.INFEASIBLE
        return
    assert solution.status is MilpStatus.OPTIMAL
    assert solution.objective == pytest.approx(expected, abs=1e-6)
    assert np.allclose(solution.values, np.round(solution.values))
    assert solution.gap <= 1e-6 + 1e-12


def test_rounds_up_single_row():
    program = LinearProgram()
    x = program.add_variable("x", VarKind.INTEGER, 0, 10)
    program.add_constraint({x: 2}, Sense.GE, 3)
    program.set_objective({x: 1})
    solution = solve_milp(program)
    assert solution.is_optimal
    assert solution.values[x] == 2
    assert solution.objective == 2


def test_integral_root_needs_one_node():
    program = LinearProgram()
    x = program.add_variable("x", VarKind.INTEGER, 0, 10)
    program.add_constraint({x: 1}, Sense.GE, 3)
    program.set_objective({x: 1})
    assert solve_milp(program).node_count == 1


def test_mixed_integer():
    program = LinearProgram()
    x = program.add_variable("x", VarKind.INTEGER, 0, 5)
    y = program.add_variable("y", VarKind.CONTINUOUS, 0, 5)
    program.add_constraint({x: 1, y: 1}, Sense.GE, 2.5)
    program.set_objective({x: 1, y: 1.5})
    solution = solve_milp(program)
    assert solution.values[x] == 2
    assert solution.values[y] == pytest.approx(0.5)
    assert solution.objective == pytest.approx(2.75)


def test_infeasible_integer_program():
    program = LinearProgram()
    x = program.add_variable("x", VarKind.INTEGER, 0, 10)
    program.add_constraint({x: 2}, Sense.EQ, 3)
    program.set_objective({x: 1})
    solution = solve_milp(program)
    assert solution.status is MilpStatus.INFEASIBLE
    assert solution.values is None


def test_unbounded_root():
    program = LinearProgram()
    x = program.add_variable("x", VarKind.INTEGER)
    program.set_objective({x: -1})
    assert solve_milp(program).status is MilpStatus.UNBOUNDED


def test_node_limit_keeps_bound():
    program = LinearProgram()
    cols = [program.add_variable(f"x{j}", VarKind.INTEGER, 0, 3) for j in range(3)]
    program.add_constraint({c: 2 for c in cols}, Sense.GE, 5)
    program.set_objective({c: 1 for c in cols})
    solution = solve_milp(program, node_limit=1)
    assert solution.status is MilpStatus.NODE_LIMIT
    assert solution.best_bound == pytest.approx(2.5)


def test_gap_tolerance_accepts_near_optimal():
    program = LinearProgram()
    x = program.add_variable("x", VarKind.INTEGER, 0, 100)
    program.add_constraint({x: 3}, Sense.GE, 10)
    program.set_objective({x: 1})
    solution = solve_milp(program, gap_tolerance=0.5)
    assert solution.is_optimal
    assert solution.objective <= 4 * 1.5


@pytest.mark.parametrize("seed", range(40))
def test_start_point_does_not_change_optimum(seed):
    program = random_integer_program(seed)
    cold = solve_milp(program)
    if not cold.is_optimal:
        return
    seeded = solve_milp(program, start=cold.values)
    assert seeded.is_optimal
    assert seeded.objective == pytest.approx(cold.objective, abs=1e-6)


def test_infeasible_start_point_is_ignored():
    program = LinearProgram()
    x = program.add_variable("x", VarKind.INTEGER, 0, 10)
    y = program.add_variable("y", VarKind.INTEGER, 0, 10)
    program.add_constraint({x: 1, y: 1}, Sense.GE, 7)
    program.set_objective({x: 2, y: 3})
    for start in ([0.0, 0.0], [3.5, 4.0], [20.0, 0.0], [1.0]):
        solution = solve_milp(program, start=start)
        assert solution.objective == pytest.approx(14.0)
        assert solution.values[x] == 7


def test_start_point_prunes_the_search():
    program = LinearProgram()
    cols = [program.add_variable(f"x{j}", VarKind.INTEGER, 0, 4) for j in range(4)]
    program.add_constraint({c: 2 for c in cols}, Sense.GE, 7)
    program.set_objective({c: 1 for c in cols})
    cold = solve_milp(program)
    seeded = solve_milp(program, start=[4.0, 0.0, 0.0, 0.0])
    assert seeded.objective == pytest.approx(cold.objective) == pytest.approx(4.0)
    assert seeded.node_count <= cold.node_count
