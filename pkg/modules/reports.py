# modules/reports.py
# CSV and Excel output of plans, sweeps and decomposition trajectories.
# Вывод планов, результатов перебора и траекторий декомпозиции в CSV и Excel.

import logging

import pandas as pd

from modules.evaluation import COMPONENTS

logger = logging.getLogger(__name__)

LINE_TERMINATOR = "\n"

LINK_COLUMNS = ["source", "target", "request"]
QUBIT_COLUMNS = ["circuit", "provider", "machine", "request"]


def schema_line(kind, version, **fields):
    # First line of every CSV: "# schema: <kind> v<version> key=value ...".
    parts = [f"# schema: {kind} v{version}"]
    parts.extend(f"{k}={v}" for k, v in fields.items() if v is not None)
    return " ".join(parts) + LINE_TERMINATOR


def write_csv(frame, path, kind, version=1, float_format="%.6f", **fields):
    # Writes the schema comment line followed by the frame.
    # Записывает строку-комментарий со схемой, затем таблицу.
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(schema_line(kind, version, columns=",".join(frame.columns), **fields))
        frame.to_csv(f, index=False, float_format=float_format, lineterminator=LINE_TERMINATOR)
    logger.info("Wrote %d rows to %s", len(frame), path)
    return path


def read_csv(path):
    # Reads a CSV written by write_csv (the schema line is skipped as a comment).
    return pd.read_csv(path, comment="#")


# --- Plan tables ---

def _table(mapping, columns, value="value", scenario=False):
    cols = columns + (["scenario"] if scenario else []) + [value]
    rows = [(*key, v) for key, v in sorted(mapping.items())]
    return pd.DataFrame(rows, columns=cols)


def plan_frames(plan):
    # One frame per decision family plus the cost sheet.
    # Отдельная таблица для каждого семейства решений и лист стоимости.
    frames = {
        "routes": _table({k: v for k, v in plan.route.items() if v}, LINK_COLUMNS, "w"),
        "pairs_reserved": _table(plan.pairs_reserved, LINK_COLUMNS, "y_rep"),
        "pairs_utilized": _table(plan.pairs_utilized, LINK_COLUMNS, "y_eep", scenario=True),
        "pairs_ondemand": _table(plan.pairs_ondemand, LINK_COLUMNS, "y_oep", scenario=True),
        "qubits_reserved": _table(plan.qubits_reserved, QUBIT_COLUMNS, "x_rqt"),
        "qubits_utilized": _table(plan.qubits_utilized, QUBIT_COLUMNS, "x_uqt", scenario=True),
        "qubits_ondemand": _table(plan.qubits_ondemand, QUBIT_COLUMNS, "x_oqt", scenario=True),
        "overwait": _table(plan.overwait, QUBIT_COLUMNS, "y_owt", scenario=True),
        "assignment": pd.DataFrame(
            [(r, c, p, m) for (r, c), (p, m) in sorted(plan.assignment.items())],
            columns=["request", "circuit", "provider", "machine"],
        ),
    }
    bd = plan.cost_breakdown
    if bd is not None:
        rows = [("first_stage", bd.first_stage), ("second_stage", bd.second_stage), ("total", bd.total)]
        rows += [(name, bd.components[name]) for name in COMPONENTS]
        rows += [(f"scenario:{sid}", value) for sid, value in bd.per_scenario.items()]
        frames["costs"] = pd.DataFrame(rows, columns=["item", "cost"])
    return frames


def write_plan_xlsx(plan, path):
    # Excel workbook, one sheet per frame.
    # Книга Excel, по листу на таблицу.
    with pd.ExcelWriter(path, engine="openpyxl") as writer:
        for sheet, frame in plan_frames(plan).items():
            frame.to_excel(writer, sheet_name=sheet[:31], index=False)
    logger.info("Wrote plan workbook %s", path)
    return path


def write_trajectory(report, path, version=1, float_format="%.6f"):
    return write_csv(report.trajectory, path, "benders-trajectory", version, float_format)
