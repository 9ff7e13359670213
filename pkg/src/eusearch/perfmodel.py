"""Performance models: predict a lottery over outcomes for (depth, lookahead).

Two interchangeable predictors:

* ``MarkovParams`` — distance-to-goal modeled as a biased random walk whose
  step-down probability is the measured per-decision accuracy p_l; per-move
  computation comes from an effective branching factor per level.
* ``EmpiricalTable`` — measured outcomes per (depth, level) cell, with linear
  interpolation across depth buckets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .minimin import (
    EmptySample,
    Outcome,
    ResourceLimits,
    check_level,
    decision_accuracy,
    minimin_run,
    minimin_trace,
)
from .puzzle import ProblemInstance, State
from .seeds import subseed

DEFAULT_MAX_LEN = 1000
_ACCURACY_FLOOR = 0.501


class MissingAccuracy(Exception):
    """The Markov model has no accuracy estimate for the requested level."""


class OutOfRange(Exception):
    """A depth query fell outside the empirical table with extrapolation disabled."""


@dataclass(frozen=True)
class MarkovParams:
    """Biased-random-walk parameters fitted per lookahead level.

    ``accuracy[l]`` is the probability a level-l decision reduces true
    distance (in (0.5, 1], nondecreasing in l); ``branching[l]`` is the
    effective branching factor, so one decision generates about
    sum(b^i for i in 1..l) nodes.  Walks are truncated at ``max_len`` moves.
    """

    accuracy: Mapping[int, float]
    branching: Mapping[int, float]
    max_len: int = DEFAULT_MAX_LEN
    sample_sizes: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.accuracy:
            raise ValueError("accuracy map must not be empty")
        for level, p in self.accuracy.items():
            check_level(level)
            if not 0.5 < p <= 1.0:
                raise ValueError(f"accuracy p_{level}={p} outside (0.5, 1]")
        for level in sorted(self.accuracy):
            if level not in self.branching:
                raise ValueError(f"branching factor missing for level {level}")
            if self.branching[level] <= 1.0:
                raise ValueError("effective branching must exceed 1")
        levels = sorted(self.accuracy)
        for a, b in zip(levels, levels[1:]):
            if self.accuracy[b] < self.accuracy[a] - 1e-12:
                raise ValueError("accuracy must be nondecreasing in level")
        if self.max_len <= 0:
            raise ValueError("max_len must be positive")

    @property
    def levels(self) -> tuple[int, ...]:
        return tuple(sorted(self.accuracy))


def nodes_per_decision(params: MarkovParams, level: int) -> float:
    """Predicted node generations for one level-``level`` decision."""
    b = params.branching[level]
    # Geometric sum b + b^2 + ... + b^level.
    return b * (b**level - 1.0) / (b - 1.0)


def markov_predict(
    params: MarkovParams,
    d: int,
    level: int,
    samples: int = 10_000,
    seed: int = 0,
) -> "Lottery":
    """Simulate the distance walk from depth ``d`` and return an outcome lottery.

    Per move the remaining distance drops by 1 with probability p_level, else
    rises by 1; absorption at 0 ends the walk.  Walks still alive at
    ``max_len`` become unsolved outcomes.  Deterministic given ``seed``; one
    uniform draw is consumed per (sample, step) so runs with different p are
    coupled sample-by-sample under the same seed.
    """
    from .utility import Lottery

    if d < 1:
        raise ValueError("depth must be >= 1")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if level not in params.accuracy:
        raise MissingAccuracy(f"no accuracy estimate for level {level}")
    p = params.accuracy[level]
    rng = np.random.default_rng(seed)
    dist = np.full(samples, d, dtype=np.int64)
    lengths = np.zeros(samples, dtype=np.int64)
    active = np.ones(samples, dtype=bool)
    for step in range(1, params.max_len + 1):
        if not active.any():
            break
        # One full row of draws per step keeps walks with different p coupled
        # sample-by-sample under the same seed.
        draws = rng.random(samples)
        moves = np.where(draws < p, -1, 1)
        dist[active] += moves[active]
        absorbed = active & (dist == 0)
        lengths[absorbed] = step
        active &= ~absorbed
    npd = nodes_per_decision(params, level)
    entries: list[tuple[Outcome, float]] = []
    solved = ~active
    if solved.any():
        unique, counts = np.unique(lengths[solved], return_counts=True)
        for length, count in zip(unique.tolist(), counts.tolist()):
            outcome = Outcome(
                path_length=float(length),
                time_units=float(length) * npd,
                space_units=float(level + 1) + float(length + 1),
                solved=True,
            )
            entries.append((outcome, count / samples))
    truncated = int(active.sum())
    if truncated:
        outcome = Outcome(
            path_length=float(params.max_len),
            time_units=float(params.max_len) * npd,
            space_units=float(level + 1) + float(params.max_len + 1),
            solved=False,
        )
        entries.append((outcome, truncated / samples))
    return Lottery.of(entries)


def _solve_branching(mean_nodes: float, level: int) -> float:
    """Invert sum(b^i, i=1..level) = mean_nodes for b; clamp to > 1."""
    if mean_nodes <= level:
        return 1.0 + 1e-9

    def total(b: float) -> float:
        return b * (b**level - 1.0) / (b - 1.0)

    lo, hi = 1.0 + 1e-9, 4.0
    while total(hi) < mean_nodes:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if total(mid) < mean_nodes:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _isotonic(values: Sequence[float], weights: Sequence[float]) -> list[float]:
    """Weighted pool-adjacent-violators: nondecreasing fit to ``values``."""
    blocks: list[list[float]] = []  # [mean, weight, count]
    for v, w in zip(values, weights):
        blocks.append([v, w, 1])
        while len(blocks) > 1 and blocks[-2][0] > blocks[-1][0]:
            m2, w2, c2 = blocks.pop()
            m1, w1, c1 = blocks.pop()
            blocks.append([(m1 * w1 + m2 * w2) / (w1 + w2), w1 + w2, c1 + c2])
    out: list[float] = []
    for mean, _, count in blocks:
        out.extend([mean] * count)
    return out


def fit_markov(
    training: Sequence[ProblemInstance],
    levels: Sequence[int],
    limits: ResourceLimits = ResourceLimits(),
    max_states_per_level: int = 150,
    seed: int = 0,
    max_len: int = DEFAULT_MAX_LEN,
) -> MarkovParams:
    """Estimate per-level accuracy and branching from instrumented runs.

    For each level, Minimin runs over the training instances supply both the
    mean nodes-per-decision (inverted to an effective branching factor) and a
    state sample along the executed trajectories, which is scored by
    ``decision_accuracy``.  Accuracies are made nondecreasing in the level by
    isotonic adjustment, then clamped into (0.5, 1].
    """
    if not training:
        raise EmptySample("fit_markov needs at least one training instance")
    goals = {inst.goal.tiles for inst in training}
    if len(goals) != 1:
        raise ValueError("training instances must share a goal")
    goal = training[0].goal
    levels = sorted(set(check_level(l) for l in levels))
    rng = np.random.default_rng(subseed(seed, "fit-markov"))
    dstar_cache: dict[tuple[int, ...], int] = {}

    raw_acc: list[float] = []
    sizes: dict[int, int] = {}
    branching: dict[int, float] = {}
    for level in levels:
        pool: list[State] = []
        total_nodes = 0.0
        total_decisions = 0
        for inst in training:
            outcome, states = minimin_trace(inst, level, limits)
            pool.extend(states)
            total_nodes += outcome.time_units
            total_decisions += len(states)
        if not pool:
            raise EmptySample(f"no decisions observed at level {level}")
        if len(pool) > max_states_per_level:
            idx = rng.choice(len(pool), size=max_states_per_level, replace=False)
            pool = [pool[i] for i in sorted(idx.tolist())]
        acc = decision_accuracy(level, pool, goal, dstar_cache=dstar_cache)
        raw_acc.append(acc)
        sizes[level] = len(pool)
        branching[level] = _solve_branching(total_nodes / total_decisions, level)

    adjusted = _isotonic(raw_acc, [sizes[l] for l in levels])
    accuracy = {
        l: min(1.0, max(_ACCURACY_FLOOR, a)) for l, a in zip(levels, adjusted)
    }
    return MarkovParams(
        accuracy=accuracy,
        branching=branching,
        max_len=max_len,
        sample_sizes=sizes,
    )


@dataclass(frozen=True)
class EmpiricalTable:
    """Measured outcomes per (depth, level) cell."""

    cells: Mapping[tuple[int, int], tuple[Outcome, ...]]
    sample_meta: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for key, outcomes in self.cells.items():
            if not outcomes:
                raise ValueError(f"empirical cell {key} is empty")

    @property
    def levels(self) -> tuple[int, ...]:
        return tuple(sorted({l for _, l in self.cells}))

    def depths_for(self, level: int) -> tuple[int, ...]:
        return tuple(sorted({d for d, l in self.cells if l == level}))


def fit_empirical(
    suite: Mapping[int, Sequence[ProblemInstance]],
    levels: Sequence[int],
    limits: ResourceLimits = ResourceLimits(),
    sample_meta: Mapping[str, object] | None = None,
) -> EmpiricalTable:
    """Run Minimin over every (instance, level) pair and tabulate the outcomes."""
    if not suite:
        raise EmptySample("fit_empirical needs a nonempty suite")
    levels = sorted(set(check_level(l) for l in levels))
    cells: dict[tuple[int, int], tuple[Outcome, ...]] = {}
    for depth in sorted(suite):
        instances = suite[depth]
        if not instances:
            raise EmptySample(f"suite depth {depth} has no instances")
        for level in levels:
            outcomes = tuple(minimin_run(inst, level, limits) for inst in instances)
            cells[(depth, level)] = outcomes
    return EmpiricalTable(cells=cells, sample_meta=dict(sample_meta or {}))


def predict(
    model: MarkovParams | EmpiricalTable,
    d: int,
    level: int,
    samples: int = 10_000,
    seed: int = 0,
    extrapolate: bool = False,
) -> "Lottery":
    """Unified prediction interface over both model kinds."""
    from .utility import Lottery

    if isinstance(model, MarkovParams):
        return markov_predict(model, d, level, samples=samples, seed=seed)

    if level not in model.levels:
        raise MissingAccuracy(f"empirical table has no level {level}")
    depths = model.depths_for(level)
    if d in depths:
        return Lottery.uniform(list(model.cells[(d, level)]))
    lower = [b for b in depths if b < d]
    upper = [b for b in depths if b > d]
    if not lower or not upper:
        if not extrapolate:
            raise OutOfRange(
                f"depth {d} outside empirical buckets {depths} for level {level}"
            )
        bucket = depths[0] if not lower else depths[-1]
        return Lottery.uniform(list(model.cells[(bucket, level)]))
    b1, b2 = lower[-1], upper[0]
    w = (b2 - d) / (b2 - b1)
    entries: list[tuple[Outcome, float]] = []
    cell1 = model.cells[(b1, level)]
    cell2 = model.cells[(b2, level)]
    entries.extend((o, w / len(cell1)) for o in cell1)
    entries.extend((o, (1.0 - w) / len(cell2)) for o in cell2)
    return Lottery.of(entries)


# --- serialization ----------------------------------------------------------


def _outcome_to_dict(o: Outcome) -> dict:
    data = {
        "path_length": o.path_length,
        "time_units": o.time_units,
        "space_units": o.space_units,
        "solved": o.solved,
    }
    if o.extra:
        data["extra"] = dict(o.extra)
    return data


def _outcome_from_dict(data: Mapping) -> Outcome:
    return Outcome(
        path_length=data["path_length"],
        time_units=data["time_units"],
        space_units=data["space_units"],
        solved=bool(data.get("solved", True)),
        extra=tuple(sorted(dict(data.get("extra", {})).items())),
    )


def model_to_dict(model: MarkovParams | EmpiricalTable) -> dict:
    if isinstance(model, MarkovParams):
        return {
            "kind": "markov",
            "accuracy": {int(l): float(p) for l, p in sorted(model.accuracy.items())},
            "branching": {
                int(l): float(b) for l, b in sorted(model.branching.items())
            },
            "max_len": model.max_len,
            "sample_sizes": {
                int(l): int(n) for l, n in sorted(model.sample_sizes.items())
            },
        }
    return {
        "kind": "empirical",
        "sample_meta": dict(model.sample_meta),
        "cells": [
            {
                "depth": d,
                "level": l,
                "outcomes": [_outcome_to_dict(o) for o in outcomes],
            }
            for (d, l), outcomes in sorted(model.cells.items())
        ],
    }


def model_from_dict(data: Mapping) -> MarkovParams | EmpiricalTable:
    kind = data.get("kind")
    if kind == "markov":
        return MarkovParams(
            accuracy={int(l): float(p) for l, p in data["accuracy"].items()},
            branching={int(l): float(b) for l, b in data["branching"].items()},
            max_len=int(data.get("max_len", DEFAULT_MAX_LEN)),
            sample_sizes={
                int(l): int(n) for l, n in data.get("sample_sizes", {}).items()
            },
        )
    if kind == "empirical":
        cells = {
            (int(cell["depth"]), int(cell["level"])): tuple(
                _outcome_from_dict(o) for o in cell["outcomes"]
            )
            for cell in data["cells"]
        }
        return EmpiricalTable(cells=cells, sample_meta=dict(data.get("sample_meta", {})))
    raise ValueError(f"unknown model kind {kind!r}")


def save_model(model: MarkovParams | EmpiricalTable, path: str) -> None:
    """Write a model to a YAML file for reuse across CLI invocations."""
    import yaml

    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(model_to_dict(model), fh, sort_keys=False)


def load_model(path: str) -> MarkovParams | EmpiricalTable:
    import yaml

    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(yaml.safe_load(fh))
