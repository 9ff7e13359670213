"""On-line Minimin search: fixed-depth lookahead with full resource accounting.

Each decision runs a depth-limited, full-width lookahead (depth-first,
pruning the inverse of the arc just taken), scores frontier leaves with
f = g + manhattan, backs the minimum up to the root, and commits to one
move.  Runs record node generations (time), peak stored nodes (space), and
executed moves.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .exact import idastar
from .puzzle import (
    _INVERSE,
    Op,
    ProblemInstance,
    SearchContext,
    State,
    dist_table,
    moves_table,
)

MAX_LOOKAHEAD = 24


class EmptySample(Exception):
    """An accuracy estimate was requested over an empty state sample."""


@dataclass(frozen=True)
class ResourceLimits:
    """Caps on executed moves and total node generations for one run."""

    max_moves: int = 100
    node_budget: int = 200_000

    def __post_init__(self) -> None:
        if self.max_moves <= 0 or self.node_budget <= 0:
            raise ValueError("resource limits must be positive")


@dataclass(frozen=True)
class Outcome:
    """The attribute tuple of one run: moves, computation, peak space.

    ``time_units`` counts node generations and ``space_units`` peak stored
    nodes for real runs; converted outcomes (minutes, megabytes) use the same
    fields.  ``extra`` holds optional additional attributes (e.g. monetary
    cost) as a name -> value mapping.
    """

    path_length: float
    time_units: float
    space_units: float
    solved: bool = True
    extra: tuple[tuple[str, float], ...] = ()

    def __post_init__(self) -> None:
        if isinstance(self.extra, dict):
            object.__setattr__(self, "extra", tuple(sorted(self.extra.items())))
        if self.path_length < 0 or self.time_units < 0 or self.space_units < 0:
            raise ValueError("outcome attributes must be nonnegative")

    def extra_value(self, name: str) -> float | None:
        for key, value in self.extra:
            if key == name:
                return value
        return None


def check_level(level: int, maximum: int = MAX_LOOKAHEAD) -> int:
    if not 1 <= level <= maximum:
        raise ValueError(f"lookahead level must be in 1..{maximum}, got {level}")
    return level


def _ranked_decisions(
    tiles: tuple[int, ...],
    blank: int,
    goal: tuple[int, ...],
    width: int,
    level: int,
) -> tuple[list[tuple[int, int, tuple[int, ...], int]], int, int]:
    """All first moves ranked by backed-up f (ties by op order).

    Returns (ranked entries (value, op, child tiles, child blank),
    nodes generated, peak lookahead stack depth).
    """
    table = moves_table(width)
    dists = dist_table(width, goal)
    nodes = 0
    peak = 1

    def descend(
        t: tuple[int, ...], b: int, hval: int, g: int, left: int, last_op: int
    ) -> int:
        nonlocal nodes, peak
        if hval == 0:
            return g  # goal inside the tree caps this branch
        if left == 0:
            return g + hval
        best = 1 << 30
        for op, j in table[b]:
            if op == _INVERSE[last_op]:
                continue
            nodes += 1
            child = list(t)
            child[b], child[j] = child[j], child[b]
            moved = t[j]
            child_h = hval + dists[moved][b] - dists[moved][j]
            if g + 2 > peak:
                peak = g + 2
            value = descend(tuple(child), j, child_h, g + 1, left - 1, op)
            if value < best:
                best = value
        return best

    h0 = sum(dists[t][i] for i, t in enumerate(tiles) if t)
    ranked: list[tuple[int, int, tuple[int, ...], int]] = []
    for op, j in table[blank]:
        nodes += 1
        child = list(tiles)
        child[blank], child[j] = child[j], child[blank]
        moved = tiles[j]
        child_h = h0 + dists[moved][blank] - dists[moved][j]
        if peak < 2:
            peak = 2
        value = descend(tuple(child), j, child_h, 1, level - 1, op)
        ranked.append((value, op, tuple(child), j))
    ranked.sort(key=lambda e: (e[0], e[1]))
    return ranked, nodes, peak


def minimin_decide(
    s: State,
    goal: State,
    level: int,
    ctx: SearchContext | None = None,
) -> tuple[Op, int, int]:
    """One Minimin decision: depth-``level`` lookahead from ``s``.

    Returns (chosen operator, backed-up f value, nodes generated by this
    decision).  Ties between first moves break by Up < Down < Left < Right.
    """
    check_level(level)
    if s.width != goal.width:
        raise ValueError("state and goal have different widths")
    if s.tiles == goal.tiles:
        raise ValueError("state is already the goal; no decision to make")
    ranked, nodes, peak = _ranked_decisions(s.tiles, s.blank, goal.tiles, s.width, level)
    if ctx is not None:
        ctx.generated += nodes
        ctx.note_stored(peak)
    value, op, _, _ = ranked[0]
    return Op(op), value, nodes


def _run_loop(
    p: ProblemInstance,
    level: int,
    limits: ResourceLimits,
    record: list[State] | None = None,
) -> Outcome:
    goal = p.goal.tiles
    width = p.width
    tiles = p.initial.tiles
    blank = p.initial.blank
    visits: dict[tuple[int, ...], int] = {tiles: 1}
    moves = 0
    total_nodes = 0
    peak_space = 0
    while tiles != goal:
        if moves >= limits.max_moves or total_nodes >= limits.node_budget:
            return Outcome(
                path_length=limits.max_moves,
                time_units=total_nodes,
                space_units=peak_space,
                solved=False,
            )
        if record is not None:
            record.append(State(tiles, width))
        ranked, nodes, stack_peak = _ranked_decisions(tiles, blank, goal, width, level)
        total_nodes += nodes
        chosen = None
        for entry in ranked:
            if visits.get(entry[2], 0) < 2:
                chosen = entry
                break
        if chosen is None:
            chosen = ranked[0]
        _, _, tiles, blank = chosen
        visits[tiles] = visits.get(tiles, 0) + 1
        moves += 1
        stored = stack_peak + len(visits)
        if stored > peak_space:
            peak_space = stored
    return Outcome(
        path_length=moves,
        time_units=total_nodes,
        space_units=peak_space,
        solved=True,
    )


def minimin_run(
    p: ProblemInstance,
    level: int,
    limits: ResourceLimits = ResourceLimits(),
) -> Outcome:
    """Iterate decide/act until the goal or a resource limit.

    Loop avoidance: entering a state already executed twice is overridden by
    the next-best first move.  Unsolved runs are outcomes (path_length pinned
    to the move cap), not errors; they score zero utility downstream.
    """
    check_level(level)
    return _run_loop(p, level, limits)


def minimin_trace(
    p: ProblemInstance,
    level: int,
    limits: ResourceLimits = ResourceLimits(),
) -> tuple[Outcome, list[State]]:
    """Like ``minimin_run`` but also returns the states where decisions were made."""
    check_level(level)
    record: list[State] = []
    outcome = _run_loop(p, level, limits, record)
    return outcome, record


def decision_accuracy(
    level: int,
    sample: Sequence[State],
    goal: State,
    dstar_cache: dict[tuple[int, ...], int] | None = None,
) -> float:
    """Fraction of sampled states whose chosen move strictly reduces true distance.

    True distances come from ``idastar``; pass a shared ``dstar_cache`` to
    amortize repeated solves across calls.
    """
    if not sample:
        raise EmptySample("decision_accuracy needs at least one state")
    check_level(level)
    cache = dstar_cache if dstar_cache is not None else {}

    def dstar(s: State) -> int:
        hit = cache.get(s.tiles)
        if hit is None:
            hit = idastar(ProblemInstance(s, goal)).length
            cache[s.tiles] = hit
        return hit

    hits = 0
    for s in sample:
        if s.tiles == goal.tiles:
            raise ValueError("sample contains the goal state; no decision exists")
        before = dstar(s)
        ranked, _, _ = _ranked_decisions(s.tiles, s.blank, goal.tiles, s.width, level)
        _, _, succ_tiles, _ = ranked[0]
        after = dstar(State(succ_tiles, s.width))
        if after == before - 1:
            hits += 1
    return hits / len(sample)
