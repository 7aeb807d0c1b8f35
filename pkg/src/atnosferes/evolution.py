"""Generational GA: truncation + exponential rank selection, 2-point crossover, mutation.

Fitness is mean steps to food, so lower is better. Every generation keeps
the ``n`` best individuals, breeds ``P - n`` offspring from them and
re-evaluates the survivors, folding each new evaluation into a running
mean.
"""

from __future__ import annotations

import dataclasses
import enum
import math
import random
import statistics
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional

import numpy as np

from .builder import Atn, BuildConfig, interpret
from .maze import Maze, read_maze
from .runtime import DefaultAction, EdgeChoice, RunPolicy, evaluate
from .tokens import (
    CODE_SIZE,
    CODON_BITS,
    Encoding,
    GeneticCode,
    Genome,
    build_genetic_code,
    load_genetic_code,
    random_genome,
    translate,
)


class MutationKind(enum.Enum):
    BITFLIP = "bitflip"
    UNIFORM = "uniform"


_ENCODING_FOR = {MutationKind.BITFLIP: Encoding.BITSTRING, MutationKind.UNIFORM: Encoding.INTEGER}


@dataclass
class EvolutionConfig:
    """Everything needed to replay one run.

    Defaults: P=300, n=60, c=0.5**(1/60), 1% uniform mutation, node/label
    stack ops, contradiction filtering and the Finish default action.
    """

    maze: str = "markov7x5"
    population_size: int = 300
    truncation_size: int = 60
    decay: float = 0.5 ** (1 / 60)
    mutation: MutationKind = MutationKind.UNIFORM
    mutation_rate: float = 0.01
    add_delete_rate: float = 0.0
    genome_length: int = 300
    encoding: Optional[Encoding] = None
    typed_stack_ops: bool = True
    no_contradiction: bool = True
    edge_choice: EdgeChoice = EdgeChoice.FIRST
    default_action: DefaultAction = DefaultAction.FINISH
    step_cap: int = 100
    generations: int = 100
    seed: int = 0
    stop_fitness: Optional[float] = None
    genetic_code: Optional[str] = None

    def __post_init__(self):
        for name, kind in _ENUM_FIELDS.items():
            value = getattr(self, name)
            if value is not None and not isinstance(value, kind):
                setattr(self, name, kind(value))
        if self.encoding is None:
            self.encoding = _ENCODING_FOR[self.mutation]
        if _ENCODING_FOR[self.mutation] is not self.encoding:
            raise ValueError(f"{self.mutation.value} mutation needs a {_ENCODING_FOR[self.mutation].value} genome")
        if not 1 <= self.truncation_size < self.population_size:
            raise ValueError("need 1 <= truncation_size < population_size")
        if (self.population_size - self.truncation_size) % 2:
            raise ValueError("population_size - truncation_size must be even")
        if not 0 < self.decay < 1:
            raise ValueError("decay must be in (0, 1)")
        for rate in (self.mutation_rate, self.add_delete_rate):
            if not 0 <= rate <= 1:
                raise ValueError("rates must be in [0, 1]")
        if self.genome_length < 1 or self.generations < 0:
            raise ValueError("genome_length must be positive and generations non-negative")

    @property
    def build(self) -> BuildConfig:
        return BuildConfig(self.no_contradiction, self.typed_stack_ops)

    @property
    def policy(self) -> RunPolicy:
        return RunPolicy(self.edge_choice, self.default_action, self.step_cap)

    def replace(self, **changes) -> "EvolutionConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        out = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            out[f.name] = value.value if isinstance(value, enum.Enum) else value
        return out

    def dumps(self) -> str:
        return "".join(f"{k}={'' if v is None else v}\n" for k, v in self.to_dict().items())

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "EvolutionConfig":
        kwargs = {}
        known = {f.name for f in dataclasses.fields(cls)}
        for key, raw in values.items():
            if key not in known:
                raise ValueError(f"unknown config key {key!r}")
            kwargs[key] = _parse_value(key, raw)
        return cls(**kwargs)

    @classmethod
    def loads(cls, text: str) -> "EvolutionConfig":
        return cls.from_mapping(parse_key_values(text))


_ENUM_FIELDS = {
    "mutation": MutationKind,
    "encoding": Encoding,
    "edge_choice": EdgeChoice,
    "default_action": DefaultAction,
}
_INT_FIELDS = {"population_size", "truncation_size", "genome_length", "step_cap", "generations", "seed"}
_FLOAT_FIELDS = {"decay", "mutation_rate", "add_delete_rate"}
_BOOL_FIELDS = {"typed_stack_ops", "no_contradiction"}
_OPTIONAL_FIELDS = {"encoding", "stop_fitness", "genetic_code"}


def _parse_value(key: str, raw: Any) -> Any:
    if not isinstance(raw, str):
        return raw
    raw = raw.strip()
    if key in _OPTIONAL_FIELDS and raw in ("", "None", "none"):
        return None
    if key in _INT_FIELDS:
        return int(raw)
    if key in _FLOAT_FIELDS or key == "stop_fitness":
        return float(raw)
    if key in _BOOL_FIELDS:
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{key}: not a boolean: {raw!r}")
    if key in _ENUM_FIELDS:
        return _ENUM_FIELDS[key](raw.lower())
    return raw


def parse_key_values(text: str) -> dict[str, str]:
    """``key=value`` lines; blank lines and ``#`` comments are skipped."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"line {lineno}: expected key=value, got {raw!r}")
        out[key.strip()] = value.strip()
    return out


def derive_seed(seed: int, *key: int) -> int:
    """Independent 63-bit seed for the sub-stream identified by ``key``."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


# ---------------------------------------------------------------- operators


def selection_weights(n: int, c: float) -> np.ndarray:
    """Probabilities b*c**i for ranks i = 0..n-1 (best first), summing to one."""
    if n < 1 or not 0 < c < 1:
        raise ValueError("need n >= 1 and 0 < c < 1")
    b = (1 - c) / (1 - c**n)
    return b * c ** np.arange(n)


def _check_pair(a: Genome, b: Genome) -> None:
    if a.encoding is not b.encoding:
        raise ValueError("crossover between different encodings")
    if len(a) != len(b):
        raise ValueError(f"crossover between genomes of length {len(a)} and {len(b)}")


def two_point_crossover(
    a: Genome,
    b: Genome,
    rng: np.random.Generator,
    cuts: Optional[tuple[int, int]] = None,
) -> tuple[Genome, Genome]:
    """Swap the token segment ``[cut1, cut2)`` between two equal-length genomes.

    Cut points are token boundaries in ``0..L``; pass ``cuts`` to fix them.
    """
    _check_pair(a, b)
    if cuts is None:
        cuts = tuple(sorted(rng.integers(0, len(a) + 1, size=2).tolist()))
    return _exchange(a, b, *cuts)


def _exchange(a: Genome, b: Genome, lo: int, hi: int) -> tuple[Genome, Genome]:
    if not 0 <= lo <= hi:
        raise ValueError(f"bad cut points {lo}, {hi}")
    width = CODON_BITS if a.encoding is Encoding.BITSTRING else 1
    lo, hi = lo * width, hi * width
    pa, pb = a.payload.copy(), b.payload.copy()
    pa[lo:hi], pb[lo:hi] = b.payload[lo:hi], a.payload[lo:hi]
    return Genome(a.encoding, pa), Genome(b.encoding, pb)


def _variable_crossover(a: Genome, b: Genome, rng: np.random.Generator) -> tuple[Genome, Genome]:
    # genomes may differ in length once insert/delete mutation is on
    if a.encoding is not b.encoding:
        raise ValueError("crossover between different encodings")
    lo, hi = sorted(rng.integers(0, min(len(a), len(b)) + 1, size=2).tolist())
    return _exchange(a, b, lo, hi)


def mutate(
    genome: Genome,
    kind: MutationKind,
    rate: float,
    rng: np.random.Generator,
    add_delete_rate: float = 0.0,
) -> Genome:
    """Apply point mutation, then (optionally) one codon insertion/deletion.

    Bit-flip flips each bit with probability ``rate``; uniform redraws each
    codon with probability ``rate`` from all 64 values (possibly the same one).
    """
    if _ENCODING_FOR[kind] is not genome.encoding:
        raise ValueError(f"{kind.value} mutation cannot act on a {genome.encoding.value} genome")
    payload = genome.payload.copy()
    if rate > 0:
        hit = rng.random(payload.size) < rate
        if kind is MutationKind.BITFLIP:
            payload[hit] ^= 1
        else:
            payload[hit] = rng.integers(0, CODE_SIZE, size=int(hit.sum()))
    if add_delete_rate > 0 and rng.random() < add_delete_rate:
        width = CODON_BITS if genome.encoding is Encoding.BITSTRING else 1
        length = payload.size // width
        if rng.random() < 0.5 or length <= 1:
            pos = int(rng.integers(0, length + 1)) * width
            if width == 1:
                codon = rng.integers(0, CODE_SIZE, size=1)
            else:
                codon = rng.integers(0, 2, size=width)
            payload = np.concatenate([payload[:pos], codon.astype(np.uint8), payload[pos:]])
        else:
            pos = int(rng.integers(0, length)) * width
            payload = np.concatenate([payload[:pos], payload[pos + width:]])
    return Genome(genome.encoding, payload)


# -------------------------------------------------------------- population


@dataclass
class Individual:
    genome: Genome
    eval_count: int = 0
    fitness_sum: float = 0.0

    @property
    def mean_fitness(self) -> float:
        if not self.eval_count:
            raise ValueError("individual has not been evaluated")
        return self.fitness_sum / self.eval_count

    def record(self, fitness: float) -> None:
        self.eval_count += 1
        self.fitness_sum += fitness


class EvalContext:
    """What an evaluation needs besides the genome; built once per run."""

    def __init__(self, config: EvolutionConfig, maze: Optional[Maze] = None, code: Optional[GeneticCode] = None):
        self.config = config
        self._maze = maze
        if code is None:
            if config.genetic_code:
                code = load_genetic_code(config.genetic_code, config.typed_stack_ops)
            else:
                code = build_genetic_code(config.typed_stack_ops)
        self.code = code
        self.build = config.build
        self.policy = config.policy

    @property
    def maze(self) -> Maze:
        if self._maze is None:
            self._maze = read_maze(self.config.maze)
        return self._maze

    def phenotype(self, genome: Genome) -> Atn:
        return interpret(translate(genome, self.code), self.build)

    def evaluate(self, genome: Genome, seed: int) -> float:
        return evaluate(self.phenotype(genome), self.maze, self.policy, random.Random(seed))


def _evaluate_all(population: list[Individual], ctx: EvalContext, generation: int) -> None:
    seed = ctx.config.seed
    for i, ind in enumerate(population):
        ind.record(ctx.evaluate(ind.genome, derive_seed(seed, 1, generation, i)))


def rank(population: list[Individual]) -> list[Individual]:
    """Sorted best first; ties keep population order."""
    return sorted(population, key=lambda ind: ind.mean_fitness)


def run_generation(
    population: list[Individual],
    ctx: EvalContext,
    rng: np.random.Generator,
    generation: int,
) -> list[Individual]:
    """Produce and evaluate generation ``generation`` (>= 1) from the previous one."""
    cfg = ctx.config
    parents = rank(population)[: cfg.truncation_size]
    weights = selection_weights(cfg.truncation_size, cfg.decay)
    pairs = rng.choice(cfg.truncation_size, size=((cfg.population_size - cfg.truncation_size) // 2, 2), p=weights)
    crossover = _variable_crossover if cfg.add_delete_rate > 0 else two_point_crossover
    offspring = []
    for i, j in pairs.tolist():
        for child in crossover(parents[i].genome, parents[j].genome, rng):
            offspring.append(Individual(mutate(child, cfg.mutation, cfg.mutation_rate, rng, cfg.add_delete_rate)))
    new = parents + offspring
    _evaluate_all(new, ctx, generation)
    return new


@dataclass
class GenerationStats:
    generation: int
    best: float
    mean: float
    median: float


@dataclass
class RunRecord:
    config: EvolutionConfig
    history: list[GenerationStats] = field(default_factory=list)
    champion: Optional[Genome] = None
    champion_fitness: float = math.nan
    champion_evals: int = 0
    labels: dict[str, str] = field(default_factory=dict)

    @property
    def final_fitness(self) -> float:
        return self.champion_fitness

    @property
    def best_per_generation(self) -> list[float]:
        return [h.best for h in self.history]

    def __eq__(self, other) -> bool:
        if not isinstance(other, RunRecord):
            return NotImplemented
        return (
            self.config == other.config
            and self.history == other.history
            and self.champion == other.champion
            and self.champion_fitness == other.champion_fitness
            and self.champion_evals == other.champion_evals
        )


def _stats(population: list[Individual], generation: int) -> GenerationStats:
    values = [ind.mean_fitness for ind in population]
    return GenerationStats(generation, min(values), statistics.fmean(values), statistics.median(values))


def run_evolution(
    config: EvolutionConfig,
    maze: Optional[Maze] = None,
    code: Optional[GeneticCode] = None,
    progress=None,
) -> RunRecord:
    """One complete run, fully determined by ``config`` (including its seed).

    Stops early once the best mean fitness is <= ``config.stop_fitness``.
    ``progress`` is called with each :class:`GenerationStats`.
    """
    ctx = EvalContext(config, maze, code)
    rng = np.random.default_rng(derive_seed(config.seed, 0))
    population = [
        Individual(random_genome(config.encoding, config.genome_length, rng)) for _ in range(config.population_size)
    ]
    _evaluate_all(population, ctx, 0)
    record = RunRecord(config)
    record.history.append(_stats(population, 0))
    if progress:
        progress(record.history[-1])
    for gen in range(1, config.generations + 1):
        if config.stop_fitness is not None and record.history[-1].best <= config.stop_fitness:
            break
        population = run_generation(population, ctx, rng, gen)
        record.history.append(_stats(population, gen))
        if progress:
            progress(record.history[-1])
    best = rank(population)[0]
    record.champion = best.genome
    record.champion_fitness = best.mean_fitness
    record.champion_evals = best.eval_count
    return record
