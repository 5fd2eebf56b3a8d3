# tests/test_lp_writer.py

import math

from modules.formulation import build_model
from modules.lp_engine import LinearProgram, Sense, VarKind
from modules.lp_writer import format_lp, write_lp


def small_program():
    program = LinearProgram("small")
    x = program.add_variable("x", VarKind.INTEGER, 0, 4)
    b = program.add_variable("b", VarKind.BINARY)
    f = program.add_variable("free", VarKind.CONTINUOUS, -math.inf, math.inf)
    y = program.add_variable("y-1", VarKind.CONTINUOUS, 2, math.inf)
    program.add_constraint({x: 1, b: -3.5, f: 1}, Sense.GE, 1, name="cover")
    program.add_constraint({y: 1, f: -1}, Sense.EQ, 0, name="link:1")
    program.set_objective({x: 2, y: 1, b: -1}, constant=3)
    return program


def test_sections_and_rows():
    text = format_lp(small_program())
    lines = text.splitlines()
    assert lines[0] == "\\* small *\\"
    assert lines[1] == "Minimize"
    assert lines[2] == " obj: 2 x - b + y_1 + 3"
    assert " cover: x - 3.5 b + free >= 1" in lines
    assert " link_1: - free + y_1 = 0" in lines
    assert " 0 <= x <= 4" in lines
    assert " free free" in lines
    assert " y_1 >= 2" in lines
    assert lines[-1] == "End"
    assert lines.index("Generals") < lines.index("Binaries")
    assert " b" in lines


def test_names_starting_with_digit_are_prefixed():
    program = LinearProgram()
    x = program.add_variable("1x")
    program.set_objective({x: 1})
    assert " obj: _1x" in format_lp(program).splitlines()


def test_long_rows_wrap(path3, path3_space):
    program, _ = build_model(path3, path3_space)
    text = format_lp(program)
    assert max(len(line) for line in text.splitlines()) <= 200
    assert "Subject To" in text
    assert "rep_cap(1>2)" not in text


def test_write_lp(tmp_path, path3, path3_space):
    program, _ = build_model(path3, path3_space)
    path = write_lp(program, tmp_path / "model.lp")
    assert (tmp_path / "model.lp").read_text(encoding="utf-8") == format_lp(program)
    assert path == tmp_path / "model.lp"
