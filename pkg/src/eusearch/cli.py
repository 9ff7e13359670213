"""Command-line front end.

Subcommands: solve, minimin, accuracy, fit, select, experiment, summarize.
Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from .exact import bfs_optimal, idastar, instance_of_depth
from .experiment import (
    ExperimentConfig,
    config_from_dict,
    load_experiment_config,
    read_report_csv,
    run_experiment,
    summarize,
    summary_csv_text,
    summary_table,
    to_user_units,
)
from .minimin import ResourceLimits, decision_accuracy, minimin_run
from .perfmodel import fit_empirical, fit_markov, load_model, save_model
from .puzzle import ProblemInstance, goal_state, parse_state
from .seeds import subseed
from .selector import select_lookahead
from .utility import default_utility_model, joint_utility, load_utility_config


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _parse_levels(text: str) -> tuple[int, ...]:
    levels: set[int] = set()
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-", 1)
            levels.update(range(int(lo), int(hi) + 1))
        elif part:
            levels.add(int(part))
    if not levels:
        raise ValueError(f"no levels in {text!r}")
    return tuple(sorted(levels))


def _instance_from_args(args) -> ProblemInstance:
    initial = parse_state(args.instance)
    goal = parse_state(args.goal) if args.goal else goal_state(initial.width)
    return ProblemInstance(initial, goal)


def _limits_from_args(args) -> ResourceLimits:
    return ResourceLimits(max_moves=args.max_moves, node_budget=args.node_budget)


def _utility_from_args(args):
    if getattr(args, "utility", None):
        return load_utility_config(args.utility)
    return default_utility_model()


def cmd_solve(args) -> int:
    instance = _instance_from_args(args)
    solver = bfs_optimal if args.algorithm == "bfs" else idastar
    result = solver(instance, node_budget=args.node_budget)
    print(f"length {result.length}")
    print(f"nodes_generated {result.nodes_generated}")
    print(f"peak_stored {result.peak_stored}")
    print(f"path {result.path.letters or '-'}")
    return 0


def cmd_minimin(args) -> int:
    instance = _instance_from_args(args)
    outcome = minimin_run(instance, args.lookahead, _limits_from_args(args))
    print(f"path_length {int(outcome.path_length)}")
    print(f"time_units {int(outcome.time_units)}")
    print(f"space_units {int(outcome.space_units)}")
    print(f"solved {1 if outcome.solved else 0}")
    if args.utility or args.score:
        model = _utility_from_args(args)
        converted = to_user_units(outcome, args.gens_per_minute, args.nodes_per_megabyte)
        print(f"utility {joint_utility(converted, model)!r}")
    return 0


def cmd_accuracy(args) -> int:
    levels = _parse_levels(args.levels)
    goal = goal_state(args.width)
    states = [
        instance_of_depth(
            args.depth, args.width, subseed(args.seed, "acc", i), attempts=args.attempts
        ).initial
        for i in range(args.samples)
    ]
    cache: dict = {}
    print("level,accuracy,n")
    for level in levels:
        p = decision_accuracy(level, states, goal, dstar_cache=cache)
        print(f"{level},{p!r},{len(states)}")
    return 0


def cmd_fit(args) -> int:
    levels = _parse_levels(args.levels)
    limits = _limits_from_args(args)
    depths = tuple(int(d) for d in args.depths.split(","))
    suites = {
        d: [
            instance_of_depth(
                d, args.width, subseed(args.seed, "train", d, i), attempts=args.attempts
            )
            for i in range(args.train_per_depth)
        ]
        for d in depths
    }
    if args.kind == "markov":
        training = [inst for d in depths for inst in suites[d]]
        model = fit_markov(
            training, levels, limits=limits, seed=args.seed, max_len=limits.max_moves
        )
    else:
        model = fit_empirical(
            suites, levels, limits=limits, sample_meta={"seed": args.seed}
        )
    save_model(model, args.out)
    print(f"wrote {args.kind} model to {args.out}")
    return 0


def cmd_select(args) -> int:
    levels = _parse_levels(args.levels)
    model = load_model(args.model)
    utility = _utility_from_args(args)
    report = select_lookahead(
        args.depth,
        model,
        utility,
        levels,
        samples=args.samples,
        seed=args.seed,
        extrapolate=args.extrapolate,
        convert=lambda o: to_user_units(
            o, args.gens_per_minute, args.nodes_per_megabyte
        ),
    )
    print(f"chosen_level {report.chosen_level}")
    print(f"model {report.model_id}")
    print(f"utility {report.utility_id}")
    print("level,expected_utility")
    for level in sorted(report.eu_by_level):
        print(f"{level},{report.eu_by_level[level]!r}")
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write("level,expected_utility,chosen\n")
            for level in sorted(report.eu_by_level):
                chosen = 1 if level == report.chosen_level else 0
                fh.write(f"{level},{report.eu_by_level[level]!r},{chosen}\n")
    return 0


def cmd_experiment(args) -> int:
    if args.config:
        cfg = load_experiment_config(args.config)
    else:
        cfg = ExperimentConfig()
    overrides = {}
    if args.depths:
        overrides["depths"] = tuple(int(d) for d in args.depths.split(","))
    if args.instances is not None:
        overrides["instances_per_depth"] = args.instances
    if args.levels:
        overrides["levels"] = _parse_levels(args.levels)
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.model_kind:
        overrides["model_kind"] = args.model_kind
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.utility:
        overrides["utility_config"] = args.utility
    if args.width is not None:
        overrides["width"] = args.width
    if args.train_per_depth is not None:
        overrides["train_instances_per_depth"] = args.train_per_depth
    if args.accuracy_states is not None:
        overrides["accuracy_states_per_level"] = args.accuracy_states
    if args.predict_samples is not None:
        overrides["predict_samples"] = args.predict_samples
    if args.gens_per_minute is not None:
        overrides["gens_per_minute"] = args.gens_per_minute
    if args.nodes_per_megabyte is not None:
        overrides["nodes_per_megabyte"] = args.nodes_per_megabyte
    if args.gen_attempts is not None:
        overrides["gen_attempts"] = args.gen_attempts
    if args.max_moves is not None or args.node_budget is not None:
        base = cfg.limits
        overrides["limits"] = {
            "max_moves": args.max_moves if args.max_moves is not None else base.max_moves,
            "node_budget": args.node_budget
            if args.node_budget is not None
            else base.node_budget,
        }
    if overrides:
        cfg = config_from_dict({**_cfg_dict(cfg), **overrides})
    progress = (lambda msg: print(msg, file=sys.stderr)) if not args.quiet else None
    report = run_experiment(cfg, csv_path=args.out, progress=progress)
    summary = summarize(report)
    print(summary_table(summary))
    if args.summary_csv:
        with open(args.summary_csv, "w", encoding="utf-8") as fh:
            fh.write(summary_csv_text(summary))
    return 0


def _cfg_dict(cfg: ExperimentConfig) -> dict:
    from .experiment import config_to_dict

    return config_to_dict(cfg)


def cmd_summarize(args) -> int:
    report = read_report_csv(args.report)
    summary = summarize(report)
    print(summary_table(summary))
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(summary_csv_text(summary))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="eusearch",
        description="Tile-puzzle search with expected-utility lookahead selection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_limits(p):
        p.add_argument("--max-moves", type=int, default=100)
        p.add_argument("--node-budget", type=int, default=200_000)

    p = sub.add_parser("solve", help="exact shortest-path solve")
    p.add_argument("--instance", required=True, help="row-major tiles, 0 = blank")
    p.add_argument("--goal", default=None)
    p.add_argument("--algorithm", choices=("idastar", "bfs"), default="idastar")
    p.add_argument("--node-budget", type=int, default=50_000_000)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("minimin", help="on-line lookahead run")
    p.add_argument("--instance", required=True)
    p.add_argument("--goal", default=None)
    p.add_argument("--lookahead", type=int, required=True)
    add_limits(p)
    p.add_argument("--score", action="store_true", help="also print joint utility")
    p.add_argument("--utility", default=None, help="utility config YAML")
    p.add_argument("--gens-per-minute", type=float, default=20_000.0)
    p.add_argument("--nodes-per-megabyte", type=float, default=10_000.0)
    p.set_defaults(func=cmd_minimin)

    p = sub.add_parser("accuracy", help="estimate per-level decision accuracy")
    p.add_argument("--levels", default="1-4")
    p.add_argument("--depth", type=int, default=10)
    p.add_argument("--width", type=int, default=3)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--attempts", type=int, default=2000)
    p.set_defaults(func=cmd_accuracy)

    p = sub.add_parser("fit", help="fit a performance model and save it")
    p.add_argument("--kind", choices=("markov", "empirical"), default="markov")
    p.add_argument("--depths", default="4,8,12,16,20")
    p.add_argument("--train-per-depth", type=int, default=20)
    p.add_argument("--levels", default="1-12")
    p.add_argument("--width", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--attempts", type=int, default=2000)
    add_limits(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("select", help="select the best lookahead level")
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--model", required=True, help="model YAML from `fit`")
    p.add_argument("--levels", default="1-12")
    p.add_argument("--utility", default=None)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--extrapolate", action="store_true")
    p.add_argument("--gens-per-minute", type=float, default=20_000.0)
    p.add_argument("--nodes-per-megabyte", type=float, default=10_000.0)
    p.add_argument("--csv", default=None)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("experiment", help="run the full selection experiment")
    p.add_argument("--config", default=None, help="experiment config YAML")
    p.add_argument("--depths", default=None)
    p.add_argument("--instances", type=int, default=None)
    p.add_argument("--levels", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--model-kind", choices=("markov", "empirical"), default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--utility", default=None)
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--train-per-depth", type=int, default=None)
    p.add_argument("--accuracy-states", type=int, default=None)
    p.add_argument("--predict-samples", type=int, default=None)
    p.add_argument("--gens-per-minute", type=float, default=None)
    p.add_argument("--nodes-per-megabyte", type=float, default=None)
    p.add_argument("--gen-attempts", type=int, default=None)
    p.add_argument("--max-moves", type=int, default=None)
    p.add_argument("--node-budget", type=int, default=None)
    p.add_argument("--out", default=None, help="write per-run rows CSV here")
    p.add_argument("--summary-csv", default=None)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("summarize", help="summary statistics from a report CSV")
    p.add_argument("--report", required=True)
    p.add_argument("--csv", default=None)
    p.set_defaults(func=cmd_summarize)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits for usage errors and --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except BrokenPipeError:
        return 0
    except Exception as exc:  # runtime failures exit 2 with one diagnostic line
        print(f"eusearch: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
