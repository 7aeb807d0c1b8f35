import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from atnosferes.builder import END, START, Atn, BuildConfig, Edge, interpret
from atnosferes.maze import food_distances, load_maze, oracle_mean_steps, read_maze
from atnosferes.runtime import (
    DefaultAction,
    EdgeChoice,
    RunPolicy,
    eligible_edges,
    evaluate,
    run_trial,
    trial_steps,
)
from atnosferes.tokens import Cell, Direction as D, build_genetic_code, integer_genome, translate

FIRST_FINISH = RunPolicy(EdgeChoice.FIRST, DefaultAction.FINISH, 100)
FIRST_RANDOM = RunPolicy(EdgeChoice.FIRST, DefaultAction.RANDOM, 100)


def atn_with(*edges):
    atn = Atn(node_count=max([1] + [max(e.src, e.dst) for e in edges]) + 1)
    for e in edges:
        atn.add_edge(e)
    return atn


def reactive_atn(maze):
    """Start self-loops, one per start cell, matching its full percept with a shortest-path move."""
    dist = food_distances(maze)
    atn = Atn()
    for x, y in maze.start_cells:
        for d in D:
            dx, dy = d.offset
            if dist.get((x + dx, y + dy), 99) == dist[(x, y)] - 1:
                break
        atn.add_edge(Edge(START, START, tuple(zip(D, maze.percept((x, y)))), (d,)))
    return atn


class FixedRng:
    def __init__(self, *values):
        self.values = list(values)

    def random(self):
        return self.values.pop(0)


def test_eligibility():
    percept = [Cell.TREE] * 8
    percept[D.N] = Cell.FOOD
    percept[D.E] = Cell.EMPTY
    free = Edge(START, START, (), (D.N,))
    both = Edge(START, START, ((D.N, Cell.FOOD), (D.E, Cell.EMPTY)), (D.N,))
    wrong = Edge(START, START, ((D.N, Cell.TREE),), (D.N,))
    atn = atn_with(wrong, free, both, Edge(2, START, (), ()))
    assert eligible_edges(atn, START, percept) == [free, both]
    assert eligible_edges(atn, 2, percept) == [atn.edges[3]]


def test_walk_east_corridor():
    maze = load_maze("TTTTTT\nT...FT\nTTTTTT")
    atn = atn_with(Edge(START, START, (), (D.E,)))
    res = run_trial(atn, maze, (1, 1), FIRST_FINISH, random.Random(0))
    assert (res.steps, res.found_food, res.failed) == (3, True, False)


def test_finish_fails_without_edges():
    maze = load_maze("TTTTTT\nT...FT\nTTTTTT")
    res = run_trial(Atn(), maze, (1, 1), FIRST_FINISH, random.Random(0))
    assert res.failed and res.steps == 100 and not res.found_food
    assert evaluate(Atn(), maze, FIRST_FINISH, random.Random(0)) == 100


def test_random_default_one_step_probability():
    maze = load_maze("TTTT\nT.FT\nTTTT")
    policy = RunPolicy(EdgeChoice.FIRST, DefaultAction.RANDOM, 1)
    found = [run_trial(Atn(), maze, (1, 1), policy, FixedRng((i + 0.5) / 8)).found_food for i in range(8)]
    assert sum(found) == 1 and found[D.E]


def test_last_action_is_performed():
    maze = load_maze("TTTTTT\nT...FT\nTTTTTT")
    atn = atn_with(Edge(START, START, (), (D.W, D.N, D.E)))
    assert run_trial(atn, maze, (2, 1), FIRST_FINISH, random.Random(0)).steps == 2


def test_empty_action_edge_moves_randomly():
    maze = load_maze("TTTT\nT.FT\nTTTT")
    atn = atn_with(Edge(START, 2, (), ()))
    policy = RunPolicy(EdgeChoice.FIRST, DefaultAction.FINISH, 1)
    res = run_trial(atn, maze, (1, 1), policy, FixedRng((D.E + 0.5) / 8))
    assert res.found_food


def test_reaching_end_halts():
    maze = load_maze("TTTTTT\nT...FT\nTTTTTT")
    atn = atn_with(Edge(START, END, (), (D.E,)), Edge(END, END, (), (D.E,)))
    res = run_trial(atn, maze, (1, 1), FIRST_FINISH, random.Random(0))
    assert res.reached_end and res.steps == 100 and not res.found_food
    # food found on the move into End still counts
    assert run_trial(atn, maze, (3, 1), FIRST_FINISH, random.Random(0)).found_food


def test_random_edge_choice():
    maze = load_maze("TTTTT\nT..FT\nTTTTT")
    atn = atn_with(Edge(START, START, (), (D.W,)), Edge(START, START, (), (D.E,)))
    policy = RunPolicy(EdgeChoice.RANDOM, DefaultAction.FINISH, 5)
    assert run_trial(atn, maze, (2, 1), policy, FixedRng(0.75)).steps == 1
    assert run_trial(atn, maze, (2, 1), policy, FixedRng(0.25, 0.75, 0.75)).steps == 3


def test_trace_lines():
    maze = load_maze("TTTTTT\nT...FT\nTTTTTT")
    lines = []
    run_trial(atn_with(Edge(START, START, (), (D.E,))), maze, (1, 1), FIRST_FINISH, random.Random(0), lines.append)
    assert lines[0] == "0 tttetttt 0 E 2,1"
    assert len(lines) == 3
    lines.clear()
    run_trial(Atn(), maze, (1, 1), FIRST_FINISH, random.Random(0), lines.append)
    assert lines == ["0 tttetttt DEFAULT FAIL 1,1"]


@pytest.mark.parametrize("text", ["TTTTT\nT..FT\nTTTTT", "markov7x5"])
def test_reactive_controller_matches_oracle(text):
    maze = read_maze(text) if "\n" not in text else load_maze(text)
    if "\n" not in text and len(maze.start_cells) != len({maze.percept(c) for c in maze.start_cells}):
        pytest.skip("aliased maze")
    atn = reactive_atn(maze)
    assert evaluate(atn, maze, FIRST_FINISH, random.Random(0)) == float(oracle_mean_steps(maze))


def test_policy_validation():
    with pytest.raises(ValueError):
        RunPolicy(step_cap=0)
    maze = load_maze("TTTTTT\nT...FT\nTTTTTT")
    with pytest.raises(ValueError):
        run_trial(Atn(), maze, (4, 1), FIRST_FINISH, random.Random(0))


genomes = st.lists(st.integers(0, 63), min_size=1, max_size=200)


@settings(max_examples=150, deadline=None)
@given(genomes, st.booleans(), st.integers(0, 2**32))
def test_evaluate_bounds(codons, typed, seed):
    maze = read_maze("markov7x5")
    atn = interpret(translate(integer_genome(codons), build_genetic_code(typed)), BuildConfig(True, typed))
    for policy in (FIRST_FINISH, FIRST_RANDOM):
        steps = trial_steps(atn, maze, policy, random.Random(seed))
        assert all(1 <= s <= policy.step_cap for s in steps)
        assert np.mean(steps) >= float(oracle_mean_steps(maze))


@settings(max_examples=100, deadline=None)
@given(genomes)
def test_deterministic_policy_repeatable(codons):
    maze = read_maze("e1")
    atn = interpret(translate(integer_genome(codons), build_genetic_code(True)), BuildConfig(True, True))
    # with no empty-action edges the Finish/First policy uses no randomness
    atn.edges[:] = [e for e in atn.edges if e.actions]
    atn._out = None
    a = evaluate(atn, maze, FIRST_FINISH, random.Random(1))
    b = evaluate(atn, maze, FIRST_FINISH, random.Random(2))
    assert a == b
