"""Sliding-tile puzzle domain: states, operators, heuristic, instance generation.

States are row-major tile permutations with 0 as the blank.  Operators move
the blank (Up/Down/Left/Right); all moves cost 1, so path cost equals path
length.  The 3x3 (Eight) and 4x4 (Fifteen) boards are the shipped domains;
the 2x2 board is supported for exhaustive testing.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import IntEnum
from functools import lru_cache
from math import isqrt
from typing import Iterable, Sequence


class IllegalMove(Exception):
    """An operator was applied to a state that does not admit it."""


class Op(IntEnum):
    """Movement of the blank.  Enum order is the deterministic tie-break order."""

    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3

    @property
    def letter(self) -> str:
        return "UDLR"[self]

    @property
    def inverse(self) -> "Op":
        return Op(_INVERSE[self])

    @classmethod
    def from_letter(cls, letter: str) -> "Op":
        idx = "UDLR".find(letter.upper())
        if idx < 0:
            raise ValueError(f"unknown operator letter {letter!r}")
        return cls(idx)


_INVERSE = (1, 0, 3, 2)
_ROW_DELTA = (-1, 1, 0, 0)
_COL_DELTA = (0, 0, -1, 1)


@lru_cache(maxsize=None)
def moves_table(width: int) -> tuple[tuple[tuple[int, int], ...], ...]:
    """Per blank index: the legal (op, new blank index) pairs, in op order."""
    table = []
    for idx in range(width * width):
        r, c = divmod(idx, width)
        entries = []
        for op in range(4):
            nr, nc = r + _ROW_DELTA[op], c + _COL_DELTA[op]
            if 0 <= nr < width and 0 <= nc < width:
                entries.append((op, nr * width + nc))
        table.append(tuple(entries))
    return tuple(table)


@dataclass(frozen=True)
class State:
    """A board configuration: row-major tiles, 0 for the blank."""

    tiles: tuple[int, ...]
    width: int

    def __post_init__(self) -> None:
        n = self.width * self.width
        if self.width < 2:
            raise ValueError(f"width must be >= 2, got {self.width}")
        if len(self.tiles) != n or sorted(self.tiles) != list(range(n)):
            raise ValueError(
                f"tiles must be a permutation of 0..{n - 1}, got {self.tiles!r}"
            )

    @property
    def blank(self) -> int:
        return self.tiles.index(0)

    def __str__(self) -> str:
        return format_state(self)


def make_state(tiles: Sequence[int]) -> State:
    """Build a State from a flat tile sequence; width inferred from length."""
    width = isqrt(len(tiles))
    if width * width != len(tiles):
        raise ValueError(f"tile count {len(tiles)} is not a perfect square")
    return State(tuple(int(t) for t in tiles), width)


def goal_state(width: int) -> State:
    """The default goal: tiles in ascending order with the blank last."""
    return State(tuple(range(1, width * width)) + (0,), width)


def parse_state(text: str) -> State:
    """Parse the text format: row-major space-separated labels, 0 = blank.

    Width is implied by the token count.  Rejects non-permutations.
    """
    tokens = text.split()
    if not tokens:
        raise ValueError("empty state text")
    try:
        tiles = [int(t) for t in tokens]
    except ValueError:
        raise ValueError(f"non-integer token in state text: {text!r}") from None
    return make_state(tiles)


def format_state(s: State) -> str:
    return " ".join(str(t) for t in s.tiles)


def legal_ops(s: State) -> tuple[Op, ...]:
    """The operators applicable in ``s`` (2, 3, or 4 of them), in op order."""
    return tuple(Op(op) for op, _ in moves_table(s.width)[s.blank])


@dataclass
class SearchContext:
    """Per-search mutable counters; confine one context to one search."""

    generated: int = 0
    peak_stored: int = 0

    def note_stored(self, count: int) -> None:
        if count > self.peak_stored:
            self.peak_stored = count


def apply_op(s: State, op: Op, ctx: SearchContext | None = None) -> State:
    """Apply a blank move; raises IllegalMove if the blank cannot go there."""
    blank = s.blank
    for o, j in moves_table(s.width)[blank]:
        if o == op:
            tiles = list(s.tiles)
            tiles[blank], tiles[j] = tiles[j], tiles[blank]
            if ctx is not None:
                ctx.generated += 1
            return State(tuple(tiles), s.width)
    raise IllegalMove(f"operator {Op(op).name} not legal in state {s}")


@lru_cache(maxsize=128)
def dist_table(width: int, goal_tiles: tuple[int, ...]) -> tuple[tuple[int, ...], ...]:
    """table[tile][index] = |row delta| + |col delta| from index to tile's goal cell."""
    n = width * width
    pos_of = {t: i for i, t in enumerate(goal_tiles)}
    table = []
    for tile in range(n):
        gr, gc = divmod(pos_of[tile], width)
        row = []
        for idx in range(n):
            r, c = divmod(idx, width)
            row.append(abs(r - gr) + abs(c - gc))
        table.append(tuple(row))
    return tuple(table)


def manhattan(s: State, goal: State) -> int:
    """Sum over non-blank tiles of grid distance to their goal cells."""
    if s.width != goal.width:
        raise ValueError("states have different widths")
    table = dist_table(s.width, goal.tiles)
    total = 0
    for idx, tile in enumerate(s.tiles):
        if tile:
            total += table[tile][idx]
    return total


def permutation_parity(perm: Iterable[int]) -> int:
    """Parity (0 even / 1 odd) of a permutation given as an image list."""
    perm = list(perm)
    seen = [False] * len(perm)
    transpositions = 0
    for i in range(len(perm)):
        if seen[i]:
            continue
        j = i
        length = 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        transpositions += length - 1
    return transpositions & 1


def is_reachable(a: State, b: State) -> bool:
    """Whether ``b`` is reachable from ``a`` by blank moves.

    Each move is one transposition and moves the blank one grid step, so the
    permutation parity between the states must equal the parity of the grid
    distance between their blanks.
    """
    if a.width != b.width:
        raise ValueError("states have different widths")
    pos_in_b = {t: i for i, t in enumerate(b.tiles)}
    perm = [pos_in_b[t] for t in a.tiles]
    ar, ac = divmod(a.blank, a.width)
    br, bc = divmod(b.blank, b.width)
    blank_dist = abs(ar - br) + abs(ac - bc)
    return permutation_parity(perm) == (blank_dist & 1)


@dataclass(frozen=True)
class ProblemInstance:
    """An initial state plus its goal; both must be in the same parity class."""

    initial: State
    goal: State

    def __post_init__(self) -> None:
        if self.initial.width != self.goal.width:
            raise ValueError("initial and goal have different widths")
        if not is_reachable(self.initial, self.goal):
            raise ValueError("initial state is not reachable from the goal")

    @property
    def width(self) -> int:
        return self.initial.width


@dataclass(frozen=True)
class SolutionPath:
    """An ordered operator sequence; length equals cost under unit move costs."""

    moves: tuple[Op, ...]

    @property
    def length(self) -> int:
        return len(self.moves)

    @property
    def letters(self) -> str:
        return "".join(op.letter for op in self.moves)


def replay(start: State, moves: Iterable[Op]) -> State:
    """Apply a move sequence from ``start``; raises IllegalMove on a bad step."""
    s = start
    for op in moves:
        s = apply_op(s, op)
    return s


def random_walk(goal: State, steps: int, seed: int) -> State:
    """Scramble by a seeded random walk that never immediately backtracks.

    The result's true optimal depth is at most ``steps`` and has the same
    parity as ``steps``.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    rng = random.Random(seed)
    table = moves_table(goal.width)
    tiles = list(goal.tiles)
    blank = goal.blank
    last_op: int | None = None
    for _ in range(steps):
        options = [
            (op, j)
            for op, j in table[blank]
            if last_op is None or op != _INVERSE[last_op]
        ]
        op, j = rng.choice(options)
        tiles[blank], tiles[j] = tiles[j], tiles[blank]
        blank = j
        last_op = op
    return State(tuple(tiles), goal.width)
