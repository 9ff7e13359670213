"""Exact shortest-path solvers and verified-depth instance generation.

``bfs_optimal`` is the brute-force oracle; ``idastar`` is the working exact
solver (memory-linear, deterministic Up < Down < Left < Right expansion
order).  ``instance_of_depth`` rejection-samples random walks until the
verified optimal depth matches the target exactly.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable

from .puzzle import (
    _INVERSE,
    Op,
    ProblemInstance,
    SolutionPath,
    State,
    dist_table,
    goal_state,
    manhattan,
    moves_table,
    random_walk,
)
from .seeds import subseed

DEFAULT_NODE_BUDGET = 50_000_000


class BudgetExhausted(Exception):
    """The node-generation budget ran out before the goal was found."""


class GenerationFailed(Exception):
    """No instance of the requested depth was found within the attempt limit."""


@dataclass(frozen=True)
class ExactResult:
    """A provably shortest path plus the search effort that produced it."""

    path: SolutionPath
    nodes_generated: int
    peak_stored: int

    @property
    def length(self) -> int:
        return self.path.length


def bfs_optimal(p: ProblemInstance, node_budget: int = DEFAULT_NODE_BUDGET) -> ExactResult:
    """Breadth-first search with duplicate detection; exact but memory-hungry.

    Intended for width <= 3 or shallow 4x4 instances.
    """
    start = p.initial.tiles
    goal = p.goal.tiles
    if start == goal:
        return ExactResult(SolutionPath(()), 0, 1)
    table = moves_table(p.width)
    visited: dict[tuple[int, ...], tuple[tuple[int, ...] | None, int]] = {
        start: (None, -1)
    }
    frontier: deque[tuple[tuple[int, ...], int]] = deque([(start, start.index(0))])
    generated = 0
    while frontier:
        tiles, blank = frontier.popleft()
        for op, j in table[blank]:
            generated += 1
            if generated > node_budget:
                raise BudgetExhausted(
                    f"bfs exceeded node budget of {node_budget}"
                )
            child = list(tiles)
            child[blank], child[j] = child[j], child[blank]
            child_t = tuple(child)
            if child_t in visited:
                continue
            visited[child_t] = (tiles, op)
            if child_t == goal:
                return ExactResult(
                    _reconstruct(visited, child_t), generated, len(visited)
                )
            frontier.append((child_t, j))
    raise BudgetExhausted("state space exhausted without reaching the goal")


def _reconstruct(
    visited: dict[tuple[int, ...], tuple[tuple[int, ...] | None, int]],
    end: tuple[int, ...],
) -> SolutionPath:
    ops: list[Op] = []
    cur: tuple[int, ...] | None = end
    while cur is not None:
        parent, op = visited[cur]
        if parent is None:
            break
        ops.append(Op(op))
        cur = parent
    ops.reverse()
    return SolutionPath(tuple(ops))


def idastar(
    p: ProblemInstance,
    h: Callable[[State, State], int] = manhattan,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> ExactResult:
    """Iterative-deepening A* with an admissible heuristic; returns a shortest path.

    Uses incremental Manhattan updates when ``h`` is the default heuristic;
    any other admissible ``h`` is evaluated per generated node.
    """
    start = p.initial.tiles
    goal = p.goal.tiles
    if start == goal:
        return ExactResult(SolutionPath(()), 0, 1)

    width = p.width
    table = moves_table(width)
    fast = h is manhattan
    dists = dist_table(width, goal) if fast else None

    def h_of(tiles: tuple[int, ...]) -> int:
        if fast:
            return sum(dists[t][i] for i, t in enumerate(tiles) if t)
        return h(State(tiles, width), p.goal)

    generated = 0
    peak_depth = 0
    path_ops: list[int] = []
    found = False
    INF = float("inf")

    def dfs(tiles: tuple[int, ...], blank: int, g: int, hval: int, bound: int, last_op: int) -> float:
        nonlocal generated, peak_depth, found
        f = g + hval
        if f > bound:
            return f
        if tiles == goal:
            found = True
            return f
        next_bound = INF
        for op, j in table[blank]:
            if last_op >= 0 and op == _INVERSE[last_op]:
                continue
            generated += 1
            if generated > node_budget:
                raise BudgetExhausted(f"idastar exceeded node budget of {node_budget}")
            child = list(tiles)
            child[blank], child[j] = child[j], child[blank]
            child_t = tuple(child)
            if fast:
                moved = tiles[j]
                child_h = hval + dists[moved][blank] - dists[moved][j]
            else:
                child_h = h_of(child_t)
            if g + 1 > peak_depth:
                peak_depth = g + 1
            path_ops.append(op)
            t = dfs(child_t, j, g + 1, child_h, bound, op)
            if found:
                return t
            path_ops.pop()
            if t < next_bound:
                next_bound = t
        return next_bound

    bound = h_of(start)
    blank0 = start.index(0)
    while True:
        t = dfs(start, blank0, 0, h_of(start), bound, -1)
        if found:
            return ExactResult(
                SolutionPath(tuple(Op(o) for o in path_ops)),
                generated,
                peak_depth + 1,
            )
        if t == INF:
            raise BudgetExhausted("no solution within any bound (unreachable goal?)")
        bound = int(t)


def instance_of_depth(
    d: int,
    width: int = 3,
    seed: int = 0,
    attempts: int = 500,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> ProblemInstance:
    """Generate an instance whose verified optimal depth is exactly ``d``.

    Rejection-samples seeded random walks of length ``d`` (walks backtrack, so
    the walked distance is only an upper bound) and verifies each candidate
    with ``idastar`` until one matches.
    """
    if d < 0:
        raise ValueError("depth must be >= 0")
    goal = goal_state(width)
    if d == 0:
        return ProblemInstance(goal, goal)
    for k in range(attempts):
        s = random_walk(goal, d, subseed(seed, "walk", k))
        if s.tiles == goal.tiles:
            continue
        if manhattan(s, goal) > d:
            continue
        candidate = ProblemInstance(s, goal)
        result = idastar(candidate, node_budget=node_budget)
        if result.length == d:
            return candidate
    raise GenerationFailed(
        f"no depth-{d} instance found in {attempts} attempts (width {width}, seed {seed})"
    )
