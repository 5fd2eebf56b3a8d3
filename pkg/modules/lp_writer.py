# modules/lp_writer.py
# Writes a LinearProgram in the CPLEX LP text format for cross-checking with external solvers.
# Запись LinearProgram в текстовом формате CPLEX LP для сверки с внешними решателями.

import math
import re

from modules.lp_engine import Sense, VarKind

_BAD_CHARS = re.compile(r"[\s:+\-*^<>=\[\]]")
MAX_LINE = 200


def _clean(name):
    cleaned = _BAD_CHARS.sub("_", name)
    if cleaned[:1].isdigit() or cleaned[:1] in (".", "e", "E"):
        cleaned = "_" + cleaned
    return cleaned


def _number(value):
    return repr(float(value)) if value != int(value) else str(int(value))


def _expression(terms, names):
    parts = []
    for index in sorted(terms):
        coef = terms[index]
        sign = "-" if coef < 0 else "+"
        magnitude = abs(coef)
        body = names[index] if magnitude == 1 else f"{_number(magnitude)} {names[index]}"
        parts.append(f"{sign} {body}")
    if not parts:
        return "0 " + names[0] if names else "0"
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def _wrap(prefix, text):
    # Splits long rows at term boundaries.
    lines = []
    current = prefix
    for token in text.split(" "):
        if len(current) + len(token) + 1 > MAX_LINE and current.strip():
            lines.append(current.rstrip())
            current = "   "
        current += token + " "
    lines.append(current.rstrip())
    return lines


def format_lp(program):
    # Returns the program as LP-format text.
    # Возвращает задачу в виде текста формата LP.
    names = [_clean(v.name) for v in program.variables]
    out = [f"\\* {program.name} *\\", "Minimize"]
    objective = _expression(program.objective, names)
    if program.objective_constant:
        objective += f" + {_number(program.objective_constant)}"
    out.extend(_wrap(" obj: ", objective))

    out.append("Subject To")
    for row in program.constraints:
        symbol = {Sense.LE: "<=", Sense.GE: ">=", Sense.EQ: "="}[row.sense]
        out.extend(_wrap(f" {_clean(row.name)}: ", f"{_expression(row.terms, names)} {symbol} {_number(row.rhs)}"))

    out.append("Bounds")
    for name, var in zip(names, program.variables):
        if var.kind is VarKind.BINARY and var.lb == 0 and var.ub == 1:
            continue
        lb, ub = var.lb, var.ub
        if lb == ub:
            out.append(f" {name} = {_number(lb)}")
        elif math.isinf(lb) and math.isinf(ub):
            out.append(f" {name} free")
        elif math.isinf(lb):
            out.append(f" -inf <= {name} <= {_number(ub)}")
        elif math.isinf(ub):
            if lb != 0:
                out.append(f" {name} >= {_number(lb)}")
        else:
            out.append(f" {_number(lb)} <= {name} <= {_number(ub)}")

    generals = [n for n, v in zip(names, program.variables) if v.kind is VarKind.INTEGER]
    binaries = [n for n, v in zip(names, program.variables) if v.kind is VarKind.BINARY]
    if generals:
        out.append("Generals")
        out.extend(_wrap(" ", " ".join(generals)))
    if binaries:
        out.append("Binaries")
        out.extend(_wrap(" ", " ".join(binaries)))
    out.append("End")
    return "\n".join(out) + "\n"


def write_lp(program, path):
    with open(path, "w", encoding="utf-8") as f:
        f.write(format_lp(program))
    return path
