"""Running an ATN as the controller of an agent in a maze."""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass
from typing import Callable, Optional

from .builder import END, START, Atn, Edge
from .maze import Maze, Position
from .tokens import Cell, Direction

_OFFSETS = [d.offset for d in Direction]
_N_ACTIONS = len(_OFFSETS)


class EdgeChoice(enum.Enum):
    FIRST = "first"
    RANDOM = "random"


class DefaultAction(enum.Enum):
    RANDOM = "random"
    FINISH = "finish"


@dataclass(frozen=True)
class RunPolicy:
    edge_choice: EdgeChoice = EdgeChoice.FIRST
    default_action: DefaultAction = DefaultAction.RANDOM
    step_cap: int = 100

    def __post_init__(self):
        if self.step_cap < 1:
            raise ValueError("step_cap must be >= 1")


@dataclass(frozen=True)
class TrialResult:
    steps: int
    found_food: bool
    failed: bool = False
    reached_end: bool = False


def _satisfied(conditions, percept) -> bool:
    for d, kind in conditions:
        if percept[d] != kind:
            return False
    return True


def eligible_edges(atn: Atn, node: int, percept) -> list[Edge]:
    """Out-edges of ``node`` with no condition or all conditions true, in creation order."""
    return [e for e in atn.out_edges(node) if _satisfied(e.conditions, percept)]


# compiled edge: (conditions, last action index or -1, destination, edge index)
_Compiled = tuple[tuple, int, int, int]


def _compile(atn: Atn) -> list[list[_Compiled]]:
    out: list[list[_Compiled]] = [[] for _ in range(atn.node_count)]
    for i, e in enumerate(atn.edges):
        action = int(e.actions[-1]) if e.actions else -1
        out[e.src].append((tuple((int(d), int(k)) for d, k in e.conditions), action, e.dst, i))
    return out


def _percept_string(percept) -> str:
    return "".join(Cell(k).word[0] for k in percept)


def _trial(
    compiled: list[list[_Compiled]],
    maze: Maze,
    start: Position,
    policy: RunPolicy,
    rng: random.Random,
    trace: Optional[Callable[[str], None]] = None,
) -> TrialResult:
    cells = maze.cells
    percepts = maze._int_percepts
    cap = policy.step_cap
    first = policy.edge_choice is EdgeChoice.FIRST
    finish = policy.default_action is DefaultAction.FINISH
    node = START
    x, y = start
    for step in range(1, cap + 1):
        percept = percepts[(x, y)]
        chosen = None
        if first:
            for edge in compiled[node]:
                if _satisfied(edge[0], percept):
                    chosen = edge
                    break
        else:
            eligible = [e for e in compiled[node] if _satisfied(e[0], percept)]
            if eligible:
                chosen = eligible[int(rng.random() * len(eligible))]
        if chosen is None:
            if finish:
                if trace:
                    trace(f"{node} {_percept_string(percept)} DEFAULT FAIL {x},{y}")
                return TrialResult(cap, False, failed=True)
            action = int(rng.random() * _N_ACTIONS)
            dst = node
        else:
            action = chosen[1] if chosen[1] >= 0 else int(rng.random() * _N_ACTIONS)
            dst = chosen[2]
        dx, dy = _OFFSETS[action]
        kind = cells[y + dy][x + dx]
        if kind is not Cell.TREE:
            x, y = x + dx, y + dy
        if trace:
            label = "DEFAULT" if chosen is None else str(chosen[3])
            trace(f"{node} {_percept_string(percept)} {label} {Direction(action).name} {x},{y}")
        if kind is Cell.FOOD:
            return TrialResult(step, True)
        node = dst
        if node == END:
            return TrialResult(cap, False, reached_end=True)
    return TrialResult(cap, False)


def run_trial(
    atn: Atn,
    maze: Maze,
    start: Position,
    policy: RunPolicy,
    rng: random.Random,
    trace: Optional[Callable[[str], None]] = None,
) -> TrialResult:
    """One episode from ``start``; ``trace`` receives one line per step if given."""
    if start not in maze.start_cells:
        raise ValueError(f"{start} is not a start cell")
    return _trial(_compile(atn), maze, start, policy, rng, trace)


def trial_steps(atn: Atn, maze: Maze, policy: RunPolicy, rng: random.Random) -> list[int]:
    """Steps counted for each start cell (step cap when food is not found)."""
    compiled = _compile(atn)
    out = []
    for start in maze.start_cells:
        res = _trial(compiled, maze, start, policy, rng)
        out.append(res.steps if res.found_food else policy.step_cap)
    return out


def evaluate(atn: Atn, maze: Maze, policy: RunPolicy, rng: random.Random) -> float:
    """Mean steps to food over one trial per start cell (lower is better)."""
    steps = trial_steps(atn, maze, policy, rng)
    return sum(steps) / len(steps)
