# main.py
# Entry point for the quantum cloud provisioning planner (command line).
# Точка входа для планировщика ресурсов квантового облака (командная строка).

import argparse
import logging
import math
import sys
from dataclasses import replace

import pandas as pd

from modules.data_loader import load_instance_files, load_scenario_file
from modules.errors import InfeasibleModelError, PlannerError
from modules.experiments import (
    CSV_COLUMNS,
    MODES,
    SWEEP_VARIABLES,
    ExperimentSpec,
    compare_models,
    parse_range,
    preset_scenario_space,
    run_mode,
    run_preset_defaults,
    sweep,
)
from modules.formulation import ModelMode, build_model
from modules.lp_writer import write_lp
from modules.purification import min_pairs_for_target, purification_chain
from modules.reports import write_csv, write_plan_xlsx, write_trajectory
from modules.settings import load_settings
from modules.ui_strings import get_translations
from utils import PRESET_FILES, configure_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
SOLVED_STATUSES = ("optimal", "not_converged")


class _Parser(argparse.ArgumentParser):
    # Usage errors exit with code 1 instead of argparse's 2 (2 means "infeasible" here).
    # Ошибки использования завершаются с кодом 1 (код 2 означает "нет решения").
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --- Parser ---

def build_parser(STR):
    parser = _Parser(prog="qcc-planner", description=STR["description"])
    parser.add_argument("--lang", default="EN", help="EN or PL")
    parser.add_argument("--config", default=None, help="solver settings JSON (default: solver_config.json)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    plan = sub.add_parser("plan", help=STR["cmd_plan"], description=STR["cmd_plan"])
    plan.add_argument("--topology")
    plan.add_argument("--costs")
    plan.add_argument("--requests")
    plan.add_argument("--preset", default="nsfnet", choices=sorted(PRESET_FILES))
    plan.add_argument("--scenarios")
    plan.add_argument("--mode", default="sp", choices=MODES)
    plan.add_argument("--reserved-pairs", type=int, default=None)
    plan.add_argument("--epsilon", type=float, default=None)
    plan.add_argument("--seed", type=int, default=None)
    plan.add_argument("--workers", type=int, default=None)
    plan.add_argument("--out", required=True)
    plan.add_argument("--emit-lp", default=None)
    plan.add_argument("--xlsx", default=None)
    plan.add_argument("--bounds-out", default=None)

    sw = sub.add_parser("sweep", help=STR["cmd_sweep"], description=STR["cmd_sweep"])
    sw.add_argument("--preset", default="nsfnet", choices=sorted(PRESET_FILES))
    sw.add_argument("--var", required=True, choices=SWEEP_VARIABLES)
    sw.add_argument("--range", required=True)
    sw.add_argument("--var2", default=None, choices=SWEEP_VARIABLES)
    sw.add_argument("--range2", default=None)
    sw.add_argument("--modes", default="sp")
    sw.add_argument("--seed", type=int, default=None)
    sw.add_argument("--workers", type=int, default=None)
    sw.add_argument("--out", required=True)

    cmp_ = sub.add_parser("compare", help=STR["cmd_compare"], description=STR["cmd_compare"])
    cmp_.add_argument("--preset", default="nsfnet", choices=sorted(PRESET_FILES))
    cmp_.add_argument("--requests", type=int, default=None, help="use the first N preset requests")
    cmp_.add_argument("--seed", type=int, default=None)
    cmp_.add_argument("--out", required=True)

    pur = sub.add_parser("purify", help=STR["cmd_purify"], description=STR["cmd_purify"])
    pur.add_argument("--base", type=float, required=True)
    pur.add_argument("--target", type=float, required=True)
    pur.add_argument("--max-pairs", type=int, default=None)
    return parser


def _lang_from_argv(argv):
    for i, token in enumerate(argv):
        if token == "--lang" and i + 1 < len(argv):
            return argv[i + 1]
        if token.startswith("--lang="):
            return token.split("=", 1)[1]
    return "EN"


# --- Commands ---

def _load(args, settings, seed):
    files = (args.topology, args.costs, args.requests)
    if any(files):
        if not all(files):
            raise ValueError("--topology, --costs and --requests must be given together")
        instance = load_instance_files(*files)
    else:
        instance = run_preset_defaults(args.preset, settings.gate_times)
    if args.scenarios:
        space = load_scenario_file(args.scenarios, instance)
    else:
        space = preset_scenario_space(instance, args.preset, seed)
    return instance, space


def cmd_plan(args, settings, STR):
    seed = settings.seed if args.seed is None else args.seed
    benders = settings.benders
    if args.epsilon is not None:
        benders = replace(benders, epsilon_pairs=args.epsilon, epsilon_qubits=args.epsilon)
    if args.workers is not None:
        benders = replace(benders, workers=args.workers)
    settings = replace(settings, benders=benders)
    instance, space = _load(args, settings, seed)

    if args.emit_lp:
        mode = ModelMode.expected_value() if args.mode == "ev" else ModelMode.stochastic()
        program, _ = build_model(instance, space, mode, reserved_pairs=args.reserved_pairs)
        write_lp(program, args.emit_lp)
        print(STR["lp_written"].format(path=args.emit_lp))

    row, plan, extra = run_mode(instance, space, args.mode, args.reserved_pairs, settings)
    frame = pd.DataFrame([{"point": 0, "value": math.nan, "value2": math.nan, "mode": args.mode, **row}],
                         columns=CSV_COLUMNS)
    write_csv(frame, args.out, "plan", settings.schema_version, settings.float_format, mode=args.mode, seed=seed)

    if args.xlsx and plan is not None:
        write_plan_xlsx(plan, args.xlsx)
        print(STR["xlsx_written"].format(path=args.xlsx))
    if args.bounds_out and args.mode == "benders" and extra is not None:
        write_trajectory(extra, args.bounds_out, settings.schema_version, settings.float_format)
        print(STR["bounds_written"].format(path=args.bounds_out))
    if row["status"] == "not_converged":
        print(STR["not_converged"], file=sys.stderr)

    print(STR["plan_done"].format(path=args.out, status=row["status"], total=row["total"]))
    return EXIT_OK if row["status"] in SOLVED_STATUSES else EXIT_INFEASIBLE


def cmd_sweep(args, settings, STR):
    if (args.var2 is None) != (args.range2 is None):
        raise ValueError("--var2 and --range2 must be given together")
    seed = settings.seed if args.seed is None else args.seed
    spec = ExperimentSpec(
        variable=args.var,
        values=parse_range(args.range),
        modes=tuple(m.strip() for m in args.modes.split(",") if m.strip()),
        variable2=args.var2,
        values2=parse_range(args.range2) if args.range2 else (),
        preset=args.preset,
        seed=seed,
        workers=settings.workers if args.workers is None else args.workers,
    )
    frame = sweep(spec, settings=settings)
    write_csv(
        frame, args.out, "sweep", settings.schema_version, settings.float_format,
        var=args.var, var2=args.var2, preset=args.preset, seed=seed,
    )
    print(STR["sweep_done"].format(path=args.out, rows=len(frame)))
    return EXIT_OK


def cmd_compare(args, settings, STR):
    seed = settings.seed if args.seed is None else args.seed
    instance = run_preset_defaults(args.preset, settings.gate_times)
    if args.requests is not None:
        if not 1 <= args.requests <= len(instance.requests):
            raise ValueError(f"--requests must be between 1 and {len(instance.requests)}")
        instance = instance.with_requests([r.id for r in instance.requests[: args.requests]])
    space = preset_scenario_space(instance, args.preset, seed)
    frame = compare_models(instance, space, settings)
    write_csv(frame, args.out, "compare", settings.schema_version, settings.float_format, preset=args.preset, seed=seed)
    holds = bool(frame["ordering_holds"].iloc[0])
    print(STR["compare_done"].format(path=args.out, holds=STR["holds"] if holds else STR["violated"]))
    sp_status = frame.loc[frame["mode"] == "sp", "status"].iloc[0]
    return EXIT_OK if sp_status in SOLVED_STATUSES else EXIT_INFEASIBLE


def cmd_purify(args, settings, STR):
    max_pairs = settings.max_pairs if args.max_pairs is None else args.max_pairs
    pairs = min_pairs_for_target(args.base, args.target, max_pairs, settings.purification_slack)
    if pairs is None:
        print(STR["purify_unreachable"].format(target=args.target, base=args.base, max_pairs=max_pairs))
        return EXIT_INFEASIBLE
    chain = purification_chain(args.base, pairs)
    print(STR["purify_result"].format(pairs=chain.pair_count))
    print(f"{chain.achieved:.6f}")
    print(STR["purify_rounds"].format(rounds=chain.rounds))
    return EXIT_OK


COMMANDS = {"plan": cmd_plan, "sweep": cmd_sweep, "compare": cmd_compare, "purify": cmd_purify}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    configure_logging()
    STR = get_translations(_lang_from_argv(argv))
    args = build_parser(STR).parse_args(argv)
    try:
        settings = load_settings(args.config)
        return COMMANDS[args.command](args, settings, STR)
    except InfeasibleModelError as e:
        print(STR["infeasible"].format(error=e), file=sys.stderr)
        return EXIT_INFEASIBLE
    except (PlannerError, ValueError, KeyError, OSError) as e:
        logger.debug("Command %s failed", args.command, exc_info=True)
        print(STR["error"].format(error=e), file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
