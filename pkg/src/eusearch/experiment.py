"""Experiment harness: verified-depth suites, per-depth model fits, selection,
full minimin sweeps, CSV reports, and summary statistics.

Everything is deterministic under the master seed: per-task seeds derive from
it via ``seeds.subseed`` so any subset (one depth, one instance) can be rerun
independently, and reports are byte-identical across reruns and worker counts.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

from .exact import instance_of_depth
from .minimin import Outcome, ResourceLimits, minimin_run
from .perfmodel import EmpiricalTable, MarkovParams, fit_empirical, fit_markov
from .puzzle import ProblemInstance
from .seeds import subseed
from .selector import select_lookahead
from .utility import UtilityModel, default_utility_model, joint_utility, load_utility_config

# Published reference results for side-by-side comparison in summaries.
REFERENCE_STATS: Mapping[str, float] = {
    "fraction_highest": 0.883,
    "within_one": 0.954,
    "max_level_error": 3,
    "mean_utility_gap": 0.001,
}

REPORT_COLUMNS = (
    "depth",
    "instance_id",
    "seed",
    "level",
    "chosen",
    "path_length",
    "time_units",
    "space_units",
    "solved",
    "utility",
)


class IncompleteReport(Exception):
    """The report is missing (instance, level) cells required for summary."""


def to_user_units(
    outcome: Outcome, gens_per_minute: float, nodes_per_megabyte: float
) -> Outcome:
    """Convert raw node counts to the utility model's minutes/megabytes."""
    return replace(
        outcome,
        time_units=outcome.time_units / gens_per_minute,
        space_units=outcome.space_units / nodes_per_megabyte,
    )


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of one experiment; defaults are the desk-scale protocol."""

    width: int = 3
    depths: tuple[int, ...] = (4, 8, 12, 16, 20)
    instances_per_depth: int = 100
    levels: tuple[int, ...] = tuple(range(1, 13))
    seed: int = 0
    limits: ResourceLimits = ResourceLimits(max_moves=100, node_budget=200_000)
    model_kind: str = "markov"
    gens_per_minute: float = 20_000.0
    nodes_per_megabyte: float = 10_000.0
    train_instances_per_depth: int = 40
    accuracy_states_per_level: int = 400
    predict_samples: int = 8000
    gen_attempts: int = 2000
    workers: int = 1
    utility_config: str | None = None

    def __post_init__(self) -> None:
        if self.instances_per_depth <= 0 or self.train_instances_per_depth <= 0:
            raise ValueError("instance counts must be positive")
        if not self.depths or not self.levels:
            raise ValueError("depths and levels must be nonempty")
        if self.model_kind not in ("markov", "empirical"):
            raise ValueError(f"unknown model kind {self.model_kind!r}")
        max_reachable = 31 if self.width == 3 else (6 if self.width == 2 else 80)
        for d in self.depths:
            if d < 0 or d > max_reachable:
                raise ValueError(f"depth {d} not achievable at width {self.width}")

    def utility_model(self) -> UtilityModel:
        if self.utility_config:
            return load_utility_config(self.utility_config)
        return default_utility_model()


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return {
        "width": cfg.width,
        "depths": list(cfg.depths),
        "instances_per_depth": cfg.instances_per_depth,
        "levels": list(cfg.levels),
        "seed": cfg.seed,
        "limits": {
            "max_moves": cfg.limits.max_moves,
            "node_budget": cfg.limits.node_budget,
        },
        "model_kind": cfg.model_kind,
        "gens_per_minute": cfg.gens_per_minute,
        "nodes_per_megabyte": cfg.nodes_per_megabyte,
        "train_instances_per_depth": cfg.train_instances_per_depth,
        "accuracy_states_per_level": cfg.accuracy_states_per_level,
        "predict_samples": cfg.predict_samples,
        "gen_attempts": cfg.gen_attempts,
        "workers": cfg.workers,
        "utility_config": cfg.utility_config,
    }


def config_from_dict(data: Mapping) -> ExperimentConfig:
    kwargs = dict(data)
    if "limits" in kwargs and isinstance(kwargs["limits"], Mapping):
        kwargs["limits"] = ResourceLimits(**kwargs["limits"])
    for key in ("depths", "levels"):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    return ExperimentConfig(**kwargs)


def load_experiment_config(path: str) -> ExperimentConfig:
    import yaml

    with open(path, "r", encoding="utf-8") as fh:
        return config_from_dict(yaml.safe_load(fh))


@dataclass(frozen=True)
class ReportRow:
    depth: int
    instance_id: int
    seed: int
    level: int
    chosen: int
    outcome: Outcome
    utility: float


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    rows: list[ReportRow] = field(default_factory=list)
    selections: dict[int, "SelectionInfo"] = field(default_factory=dict)


@dataclass(frozen=True)
class SelectionInfo:
    depth: int
    chosen_level: int
    eu_by_level: Mapping[int, float]


def _run_instance(
    task: tuple[ProblemInstance, tuple[int, ...], ResourceLimits]
) -> list[Outcome]:
    instance, levels, limits = task
    return [minimin_run(instance, level, limits) for level in levels]


def _fit_model(
    cfg: ExperimentConfig,
    depth: int,
    training: Sequence[ProblemInstance],
) -> MarkovParams | EmpiricalTable:
    if cfg.model_kind == "markov":
        return fit_markov(
            training,
            cfg.levels,
            limits=cfg.limits,
            max_states_per_level=cfg.accuracy_states_per_level,
            seed=subseed(cfg.seed, "fit", depth),
            max_len=cfg.limits.max_moves,
        )
    return fit_empirical(
        {depth: list(training)},
        cfg.levels,
        limits=cfg.limits,
        sample_meta={"depth": depth, "seed": cfg.seed},
    )


def run_experiment(
    cfg: ExperimentConfig,
    csv_path: str | None = None,
    progress: Callable[[str], None] | None = None,
) -> ExperimentReport:
    """Execute the full protocol; flushes rows to ``csv_path`` as they are made.

    Per depth: generate verified instances, fit the performance model on a
    separate training suite, select one lookahead level by expected utility,
    then run Minimin at every configured level on every instance and score
    the actual outcomes with the utility model.
    """
    say = progress or (lambda msg: None)
    utility = cfg.utility_model()
    report = ExperimentReport(config=cfg)
    sink = open(csv_path, "w", newline="", encoding="utf-8") if csv_path else None
    writer = None
    if sink is not None:
        writer = csv.writer(sink, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        sink.flush()
    try:
        for depth in cfg.depths:
            say(f"depth {depth}: generating training suite")
            training = [
                instance_of_depth(
                    depth,
                    cfg.width,
                    subseed(cfg.seed, "train", depth, i),
                    attempts=cfg.gen_attempts,
                )
                for i in range(cfg.train_instances_per_depth)
            ]
            say(f"depth {depth}: fitting {cfg.model_kind} model")
            model = _fit_model(cfg, depth, training)
            selection = select_lookahead(
                depth,
                model,
                utility,
                cfg.levels,
                samples=cfg.predict_samples,
                seed=subseed(cfg.seed, "predict", depth),
                convert=lambda o: to_user_units(
                    o, cfg.gens_per_minute, cfg.nodes_per_megabyte
                ),
            )
            chosen = selection.chosen_level
            report.selections[depth] = SelectionInfo(
                depth=depth, chosen_level=chosen, eu_by_level=selection.eu_by_level
            )
            say(f"depth {depth}: selected level {chosen}; running instances")
            seeds = [
                subseed(cfg.seed, "inst", depth, i)
                for i in range(cfg.instances_per_depth)
            ]
            instances = [
                instance_of_depth(depth, cfg.width, s, attempts=cfg.gen_attempts)
                for s in seeds
            ]
            tasks = [(inst, cfg.levels, cfg.limits) for inst in instances]
            if cfg.workers > 1:
                with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                    all_outcomes = list(pool.map(_run_instance, tasks, chunksize=4))
            else:
                all_outcomes = [_run_instance(t) for t in tasks]
            for i, outcomes in enumerate(all_outcomes):
                for level, outcome in zip(cfg.levels, outcomes):
                    scored = joint_utility(
                        to_user_units(
                            outcome, cfg.gens_per_minute, cfg.nodes_per_megabyte
                        ),
                        utility,
                    )
                    row = ReportRow(
                        depth=depth,
                        instance_id=i,
                        seed=seeds[i],
                        level=level,
                        chosen=chosen,
                        outcome=outcome,
                        utility=scored,
                    )
                    report.rows.append(row)
                    if writer is not None:
                        writer.writerow(_row_to_csv(row))
                if sink is not None:
                    sink.flush()
    finally:
        if sink is not None:
            sink.close()
    return report


def _row_to_csv(row: ReportRow) -> list:
    o = row.outcome
    return [
        row.depth,
        row.instance_id,
        row.seed,
        row.level,
        row.chosen,
        _num(o.path_length),
        _num(o.time_units),
        _num(o.space_units),
        1 if o.solved else 0,
        repr(row.utility),
    ]


def _num(x: float):
    return int(x) if float(x).is_integer() else repr(float(x))


def write_report_csv(report: ExperimentReport, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for row in report.rows:
            writer.writerow(_row_to_csv(row))


def report_csv_text(report: ExperimentReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for row in report.rows:
        writer.writerow(_row_to_csv(row))
    return buf.getvalue()


def read_report_csv(path: str, config: ExperimentConfig | None = None) -> ExperimentReport:
    """Rebuild a report from its CSV; summary statistics need nothing else."""
    rows: list[ReportRow] = []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            outcome = Outcome(
                path_length=float(rec["path_length"]),
                time_units=float(rec["time_units"]),
                space_units=float(rec["space_units"]),
                solved=rec["solved"] in ("1", "True", "true"),
            )
            rows.append(
                ReportRow(
                    depth=int(rec["depth"]),
                    instance_id=int(rec["instance_id"]),
                    seed=int(rec["seed"]),
                    level=int(rec["level"]),
                    chosen=int(rec["chosen"]),
                    outcome=outcome,
                    utility=float(rec["utility"]),
                )
            )
    cfg = config or ExperimentConfig(
        depths=tuple(sorted({r.depth for r in rows})),
        levels=tuple(sorted({r.level for r in rows})),
    )
    return ExperimentReport(config=cfg, rows=rows)


@dataclass(frozen=True)
class DepthSummary:
    depth: int
    n_instances: int
    chosen_level: int
    fraction_highest: float
    within_one: float
    max_level_error: int
    mean_utility_gap: float
    mean_chosen_utility: float
    best_fixed_level: int
    best_fixed_mean_utility: float


@dataclass(frozen=True)
class Summary:
    n_instances: int
    fraction_highest: float
    within_one: float
    max_level_error: int
    mean_utility_gap: float
    per_depth: tuple[DepthSummary, ...]


def summarize(report: ExperimentReport) -> Summary:
    """Compute the headline statistics from a complete report.

    Per instance, the empirically best level is any level tying the maximum
    actual utility (ties resolve in the selector's favor); the utility gap is
    relative to that maximum.
    """
    if not report.rows:
        raise IncompleteReport("report has no rows")
    levels = tuple(sorted(report.config.levels))
    by_instance: dict[tuple[int, int], dict[int, ReportRow]] = {}
    for row in report.rows:
        by_instance.setdefault((row.depth, row.instance_id), {})[row.level] = row

    highest = 0
    within = 0
    max_err = 0
    gaps: list[float] = []
    per_depth_acc: dict[int, list[tuple[bool, bool, int, float, float, int]]] = {}
    level_utils: dict[tuple[int, int], list[float]] = {}

    for (depth, instance_id), cells in sorted(by_instance.items()):
        missing = [l for l in levels if l not in cells]
        if missing:
            raise IncompleteReport(
                f"instance ({depth}, {instance_id}) missing levels {missing}"
            )
        chosen_set = {row.chosen for row in cells.values()}
        if len(chosen_set) != 1:
            raise IncompleteReport(
                f"instance ({depth}, {instance_id}) has conflicting chosen levels"
            )
        chosen = chosen_set.pop()
        if chosen not in cells:
            raise IncompleteReport(
                f"instance ({depth}, {instance_id}) lacks its chosen level {chosen}"
            )
        utilities = {l: cells[l].utility for l in levels}
        best_u = max(utilities.values())
        best_levels = [l for l, u in utilities.items() if u == best_u]
        chosen_u = utilities[chosen]
        is_highest = chosen_u == best_u
        err = min(abs(chosen - b) for b in best_levels)
        gap = 0.0 if best_u <= 0.0 else (best_u - chosen_u) / best_u
        highest += is_highest
        within += err <= 1
        max_err = max(max_err, err)
        gaps.append(gap)
        per_depth_acc.setdefault(depth, []).append(
            (is_highest, err <= 1, err, gap, chosen_u, chosen)
        )
        for l in levels:
            level_utils.setdefault((depth, l), []).append(utilities[l])

    n = len(by_instance)
    per_depth: list[DepthSummary] = []
    for depth in sorted(per_depth_acc):
        entries = per_depth_acc[depth]
        dn = len(entries)
        chosen_level = entries[0][5]
        means = {
            l: sum(level_utils[(depth, l)]) / dn for l in levels
        }
        best_fixed = max(means, key=lambda l: (means[l], -l))
        per_depth.append(
            DepthSummary(
                depth=depth,
                n_instances=dn,
                chosen_level=chosen_level,
                fraction_highest=sum(e[0] for e in entries) / dn,
                within_one=sum(e[1] for e in entries) / dn,
                max_level_error=max(e[2] for e in entries),
                mean_utility_gap=sum(e[3] for e in entries) / dn,
                mean_chosen_utility=sum(e[4] for e in entries) / dn,
                best_fixed_level=best_fixed,
                best_fixed_mean_utility=means[best_fixed],
            )
        )

    return Summary(
        n_instances=n,
        fraction_highest=highest / n,
        within_one=within / n,
        max_level_error=max_err,
        mean_utility_gap=sum(gaps) / n,
        per_depth=tuple(per_depth),
    )


def summary_table(summary: Summary) -> str:
    """Human-readable summary with the published reference values alongside."""
    lines = []
    lines.append(
        f"{'statistic':<28}{'this run':>12}{'reference':>12}"
    )
    rows = [
        ("fraction highest utility", summary.fraction_highest, REFERENCE_STATS["fraction_highest"]),
        ("within one level of best", summary.within_one, REFERENCE_STATS["within_one"]),
        ("max level error", summary.max_level_error, REFERENCE_STATS["max_level_error"]),
        ("mean relative utility gap", summary.mean_utility_gap, REFERENCE_STATS["mean_utility_gap"]),
    ]
    for name, ours, ref in rows:
        if isinstance(ours, float):
            lines.append(f"{name:<28}{ours:>12.4f}{ref:>12.4f}")
        else:
            lines.append(f"{name:<28}{ours:>12d}{ref:>12d}")
    lines.append("")
    lines.append(
        f"{'depth':>6}{'n':>5}{'chosen':>8}{'frac-high':>11}{'within1':>9}"
        f"{'maxerr':>8}{'gap':>10}{'mean-u':>9}{'best-l':>8}{'best-u':>9}"
    )
    for d in summary.per_depth:
        lines.append(
            f"{d.depth:>6}{d.n_instances:>5}{d.chosen_level:>8}"
            f"{d.fraction_highest:>11.3f}{d.within_one:>9.3f}{d.max_level_error:>8}"
            f"{d.mean_utility_gap:>10.4f}{d.mean_chosen_utility:>9.4f}"
            f"{d.best_fixed_level:>8}{d.best_fixed_mean_utility:>9.4f}"
        )
    return "\n".join(lines)


def summary_csv_text(summary: Summary) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        [
            "scope",
            "depth",
            "n_instances",
            "chosen_level",
            "fraction_highest",
            "within_one",
            "max_level_error",
            "mean_utility_gap",
            "mean_chosen_utility",
            "best_fixed_level",
            "best_fixed_mean_utility",
        ]
    )
    writer.writerow(
        [
            "overall",
            "",
            summary.n_instances,
            "",
            repr(summary.fraction_highest),
            repr(summary.within_one),
            summary.max_level_error,
            repr(summary.mean_utility_gap),
            "",
            "",
            "",
        ]
    )
    for d in summary.per_depth:
        writer.writerow(
            [
                "depth",
                d.depth,
                d.n_instances,
                d.chosen_level,
                repr(d.fraction_highest),
                repr(d.within_one),
                d.max_level_error,
                repr(d.mean_utility_gap),
                repr(d.mean_chosen_utility),
                d.best_fixed_level,
                repr(d.best_fixed_mean_utility),
            ]
        )
    return buf.getvalue()
