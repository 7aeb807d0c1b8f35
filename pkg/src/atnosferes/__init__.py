"""Evolving augmented transition networks as agent controllers for woods mazes."""

from .builder import Atn, BuildConfig, Edge, filter_contradictions, interpret, to_dot
from .evolution import EvolutionConfig, RunRecord, run_evolution, selection_weights
from .maze import Maze, belief_optimal_mean_steps, load_maze, oracle_mean_steps, read_maze
from .runtime import DefaultAction, EdgeChoice, RunPolicy, evaluate, run_trial
from .tokens import Encoding, GeneticCode, Genome, build_genetic_code, random_genome, translate

__version__ = "0.1.0"
