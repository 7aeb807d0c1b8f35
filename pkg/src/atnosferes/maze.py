"""Bounded woods-style grid worlds with 8-neighbour perception."""

from __future__ import annotations

import enum
import functools
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Union

from .tokens import Cell, Direction

Position = tuple[int, int]

_CHARS = {".": Cell.EMPTY, "T": Cell.TREE, "F": Cell.FOOD}
_OFFSETS = [d.offset for d in Direction]


class MazeError(ValueError):
    pass


class Outcome(enum.Enum):
    MOVED = "moved"
    BLOCKED = "blocked"
    FOUND_FOOD = "found_food"


@dataclass(frozen=True)
class AgentState:
    position: Position
    steps: int = 0


class Maze:
    """Immutable grid; ``cells[y][x]`` with y growing southward.

    ``start_cells`` lists every empty cell in row-major order. Percepts are
    precomputed for all non-tree cells as 8-tuples of :class:`Cell` values
    indexed by :class:`Direction`.
    """

    def __init__(self, rows, name: str = ""):
        self.name = name
        self.cells = tuple(tuple(Cell(c) for c in row) for row in rows)
        self.height = len(self.cells)
        self.width = len(self.cells[0]) if self.cells else 0
        self._validate()
        self.food = frozenset(
            (x, y) for y, row in enumerate(self.cells) for x, c in enumerate(row) if c is Cell.FOOD
        )
        self.start_cells = tuple(
            (x, y) for y, row in enumerate(self.cells) for x, c in enumerate(row) if c is Cell.EMPTY
        )
        if not self.start_cells:
            raise MazeError("maze has no empty start cell")
        self._percepts = {
            pos: tuple(self.cells[pos[1] + dy][pos[0] + dx] for dx, dy in _OFFSETS)
            for pos in self.start_cells + tuple(sorted(self.food))
        }
        # plain-int copy for the trial loop
        self._int_percepts = {pos: tuple(int(c) for c in p) for pos, p in self._percepts.items()}

    def _validate(self) -> None:
        if self.height < 3 or any(len(r) != self.width for r in self.cells) or self.width < 3:
            raise MazeError("maze must be a rectangle of at least 3x3 cells")
        border = list(self.cells[0]) + list(self.cells[-1]) + [r[0] for r in self.cells] + [r[-1] for r in self.cells]
        if any(c is not Cell.TREE for c in border):
            raise MazeError("maze border must be all trees")
        if not any(Cell.FOOD in row for row in self.cells):
            raise MazeError("maze has no food")

    def __getitem__(self, pos: Position) -> Cell:
        return self.cells[pos[1]][pos[0]]

    def __repr__(self) -> str:
        return f"Maze({self.name or '?'}, {self.width}x{self.height}, NS={len(self.start_cells)})"

    def to_text(self) -> str:
        inv = {v: k for k, v in _CHARS.items()}
        return "\n".join("".join(inv[c] for c in row) for row in self.cells) + "\n"

    def percept(self, position: Position) -> tuple[Cell, ...]:
        try:
            return self._percepts[position]
        except KeyError:
            raise MazeError(f"{position} is not an open cell") from None

    def step(self, state: AgentState, direction: Direction) -> tuple[AgentState, Outcome]:
        dx, dy = _OFFSETS[direction]
        x, y = state.position
        target = (x + dx, y + dy)
        kind = self[target]
        if kind is Cell.TREE:
            return AgentState(state.position, state.steps + 1), Outcome.BLOCKED
        outcome = Outcome.FOUND_FOOD if kind is Cell.FOOD else Outcome.MOVED
        return AgentState(target, state.steps + 1), outcome

    def transformed(self, rotations: int = 0, mirror: bool = False) -> "Maze":
        rows = [list(r) for r in self.cells]
        if mirror:
            rows = [r[::-1] for r in rows]
        for _ in range(rotations % 4):
            rows = [list(r) for r in zip(*rows[::-1])]
        return Maze(rows, self.name)


def load_maze(text: str, name: str = "") -> Maze:
    """Parse an ASCII map (``.`` empty, ``T`` tree, ``F`` food).

    Lines starting with ``#`` are ignored; a ``# name=<id>`` header sets the
    maze name when none is given.
    """
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.rstrip()
        if line.startswith("#"):
            if not name and line[1:].strip().startswith("name="):
                name = line.split("=", 1)[1].strip()
            continue
        if not line:
            continue
        try:
            rows.append([_CHARS[ch] for ch in line])
        except KeyError as exc:
            raise MazeError(f"line {lineno}: unknown map character {exc.args[0]!r}") from None
    if not rows:
        raise MazeError("empty map")
    if any(len(r) != len(rows[0]) for r in rows):
        raise MazeError("ragged map rows")
    return Maze(rows, name)


def read_maze(path: Union[str, Path]) -> Maze:
    """Load a map file, or a bundled map by name (``e1``, ``e2``, ``markov7x5``)."""
    p = Path(path)
    if not p.exists() and not p.suffix:
        res = resources.files("atnosferes") / "maps" / f"{path}.txt"
        if res.is_file():
            return load_maze(res.read_text(), str(path))
    return load_maze(p.read_text(), p.stem)


def bundled_maps() -> list[str]:
    return sorted(
        f.name[:-4] for f in (resources.files("atnosferes") / "maps").iterdir() if f.name.endswith(".txt")
    )


def food_distances(maze: Maze) -> dict[Position, int]:
    """8-connected BFS distance from every reachable open cell to the nearest food."""
    dist = {f: 0 for f in maze.food}
    queue = deque(sorted(maze.food))
    while queue:
        x, y = queue.popleft()
        for dx, dy in _OFFSETS:
            n = (x + dx, y + dy)
            if n not in dist and maze[n] is Cell.EMPTY:
                dist[n] = dist[(x, y)] + 1
                queue.append(n)
    return dist


def oracle_mean_steps(maze: Maze) -> Fraction:
    """Mean shortest-path length to food over start cells (fully observable lower bound)."""
    dist = food_distances(maze)
    missing = [c for c in maze.start_cells if c not in dist]
    if missing:
        raise MazeError(f"food unreachable from {missing}")
    return Fraction(sum(dist[c] for c in maze.start_cells), len(maze.start_cells))


def belief_optimal_mean_steps(maze: Maze, horizon: int = 16) -> Fraction:
    """Best mean steps for an agent that only sees its 8 neighbours but remembers everything.

    The agent knows the map but not its start cell. It is solved exactly as
    a decision tree over belief sets (multisets of possible current cells,
    split by the percept observed after each move), restricted to policies
    that finish within ``horizon`` steps from every cell.
    """
    dist = food_distances(maze)
    if any(c not in dist for c in maze.start_cells):
        raise MazeError("food unreachable from some start cell")
    inf = float("inf")

    @functools.lru_cache(maxsize=None)
    def cost(belief: tuple[Position, ...], budget: int) -> float:
        if max(dist[c] for c in belief) > budget:
            return inf
        best = inf
        for dx, dy in _OFFSETS:
            groups: dict[tuple, list[Position]] = {}
            for x, y in belief:
                target = (x + dx, y + dy)
                kind = maze[target]
                if kind is Cell.FOOD:
                    continue
                if kind is Cell.TREE:
                    target = (x, y)
                groups.setdefault(maze.percept(target), []).append(target)
            total = len(belief)
            for group in groups.values():
                if total >= best:
                    break
                total += cost(tuple(sorted(group)), budget - 1)
            best = min(best, total)
        return best

    initial: dict[tuple, list[Position]] = {}
    for c in maze.start_cells:
        initial.setdefault(maze.percept(c), []).append(c)
    total = sum(cost(tuple(g), horizon) for g in initial.values())
    if total == inf:
        raise MazeError(f"no policy reaches food from every cell within {horizon} steps")
    return Fraction(int(total), len(maze.start_cells))


def aliased_groups(maze: Maze) -> list[list[Position]]:
    """Groups of start cells sharing one percept (only groups of size > 1)."""
    groups: dict[tuple, list[Position]] = {}
    for c in maze.start_cells:
        groups.setdefault(maze.percept(c), []).append(c)
    return [g for g in groups.values() if len(g) > 1]
