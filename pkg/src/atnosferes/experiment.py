"""Batch driver: ablation grid, run-record files and champion export."""

from __future__ import annotations

import csv
import io
import itertools
import logging
import os
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Optional, Sequence, Union

import numpy as np

from .builder import to_dot
from .evolution import (
    EvalContext,
    EvolutionConfig,
    GenerationStats,
    MutationKind,
    RunRecord,
    derive_seed,
    parse_key_values,
    run_evolution,
)
from .maze import Maze, food_distances
from .runtime import DefaultAction, trial_steps
from .stats import FACTORS
from .tokens import Encoding, Genome, bitstring_genome, integer_genome

log = logging.getLogger(__name__)

PathLike = Union[str, Path]


def worker_count() -> int:
    """Process count for batches, from ``ATNO_WORKERS`` (default 1)."""
    return max(1, int(os.environ.get("ATNO_WORKERS", "1")))


# ------------------------------------------------------------------- grid


def apply_levels(config: EvolutionConfig, levels: Mapping[str, str]) -> EvolutionConfig:
    """Set the four ablation switches of ``config`` from factor levels."""
    changes = {}
    for factor, level in levels.items():
        if level not in FACTORS[factor][0]:
            raise ValueError(f"unknown level {level!r} for {factor}")
        if factor == "mutation":
            kind = MutationKind(level)
            changes["mutation"] = kind
            changes["encoding"] = Encoding.INTEGER if kind is MutationKind.UNIFORM else Encoding.BITSTRING
        elif factor == "stack_ops":
            changes["typed_stack_ops"] = level == "nodelabel"
        elif factor == "contradiction":
            changes["no_contradiction"] = level == "nocontradiction"
        elif factor == "default_action":
            changes["default_action"] = DefaultAction(level)
    return config.replace(**changes)


def cell_name(levels: Mapping[str, str]) -> str:
    return "/".join(levels[f] for f in FACTORS)


def _cell_code(levels: Mapping[str, str]) -> int:
    # stable across grid restrictions so any cell replays on its own
    return sum(FACTORS[f][0].index(levels[f]) << i for i, f in enumerate(FACTORS))


@dataclass
class AblationGrid:
    """Levels to run for each factor; the full grid has 16 cells."""

    levels: dict[str, tuple[str, ...]] = field(default_factory=lambda: {f: lv for f, (lv, _) in FACTORS.items()})
    runs_per_cell: int = 50

    @classmethod
    def restricted(cls, runs_per_cell: int = 50, **fixed: str) -> "AblationGrid":
        grid = cls(runs_per_cell=runs_per_cell)
        for factor, level in fixed.items():
            if level not in FACTORS[factor][0]:
                raise ValueError(f"unknown level {level!r} for {factor}")
            grid.levels[factor] = (level,)
        return grid

    def cells(self) -> Iterator[dict[str, str]]:
        names = list(FACTORS)
        for combo in itertools.product(*(self.levels[f] for f in names)):
            yield dict(zip(names, combo))

    def __len__(self) -> int:
        return int(np.prod([len(v) for v in self.levels.values()]))


def cell_configs(
    base: EvolutionConfig, levels: Mapping[str, str], runs: int, master_seed: int
) -> list[EvolutionConfig]:
    code = _cell_code(levels)
    cfg = apply_levels(base, levels)
    return [cfg.replace(seed=derive_seed(master_seed, 2, code, run)) for run in range(runs)]


def _run_labelled(args) -> RunRecord:
    config, labels = args
    record = run_evolution(config)
    record.labels = dict(labels)
    return record


def run_batch(jobs: Sequence[tuple[EvolutionConfig, Mapping[str, str]]], workers: Optional[int] = None) -> list[RunRecord]:
    workers = workers or worker_count()
    if workers == 1:
        return [_run_labelled(job) for job in jobs]
    with ProcessPoolExecutor(workers) as pool:
        return list(pool.map(_run_labelled, jobs))


def run_grid(
    base: EvolutionConfig,
    grid: AblationGrid,
    master_seed: Optional[int] = None,
    workers: Optional[int] = None,
) -> list[RunRecord]:
    """All runs of every grid cell; cell order, then run order."""
    master = base.seed if master_seed is None else master_seed
    jobs = []
    for levels in grid.cells():
        for run, cfg in enumerate(cell_configs(base, levels, grid.runs_per_cell, master)):
            jobs.append((cfg, {"cell": cell_name(levels), "run": str(run)}))
    log.info("grid: %d cells x %d runs", len(grid), grid.runs_per_cell)
    return run_batch(jobs, workers)


# ----------------------------------------------------------- record files


def genome_to_text(genome: Genome) -> str:
    return " ".join(str(c) for c in genome.codons().tolist())


def dumps_record(record: RunRecord, graph_path: str = "") -> str:
    out = io.StringIO()
    out.write("[config]\n")
    out.write(record.config.dumps())
    if record.labels:
        out.write("[labels]\n")
        out.write("".join(f"{k}={v}\n" for k, v in record.labels.items()))
    out.write("[generations]\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["generation", "best", "mean", "median"])
    for h in record.history:
        writer.writerow([h.generation, repr(h.best), repr(h.mean), repr(h.median)])
    out.write("[champion]\n")
    out.write(f"fitness={record.champion_fitness!r}\n")
    out.write(f"evals={record.champion_evals}\n")
    if record.champion is not None:
        out.write(f"encoding={record.champion.encoding.value}\n")
        out.write(f"genome={genome_to_text(record.champion)}\n")
    out.write(f"graph={graph_path}\n")
    return out.getvalue()


def loads_record(text: str) -> RunRecord:
    sections: dict[str, list[str]] = {}
    current = None
    for line in text.splitlines():
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1]
            sections[current] = []
        elif current is not None and stripped:
            sections[current].append(line)
    if "config" not in sections or "generations" not in sections:
        raise ValueError("not a run record")
    config = EvolutionConfig.loads("\n".join(sections["config"]))
    record = RunRecord(config, labels=parse_key_values("\n".join(sections.get("labels", []))))
    for row in csv.DictReader(sections["generations"]):
        record.history.append(
            GenerationStats(int(row["generation"]), float(row["best"]), float(row["mean"]), float(row["median"]))
        )
    champ = parse_key_values("\n".join(sections.get("champion", [])))
    record.champion_fitness = float(champ.get("fitness", "nan"))
    record.champion_evals = int(champ.get("evals", "0"))
    if champ.get("genome") is not None:
        codons = [int(c) for c in champ["genome"].split()]
        genome = integer_genome(codons)
        if Encoding(champ.get("encoding", "integer")) is Encoding.BITSTRING:
            genome = genome.to_bitstring()
        record.champion = genome
    return record


def write_record(record: RunRecord, path: PathLike, graph_path: str = "") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_record(record, graph_path))
    return path


def read_record(path: PathLike) -> RunRecord:
    return loads_record(Path(path).read_text())


def read_records(paths: Iterable[PathLike]) -> list[RunRecord]:
    """Records from files and from ``*.run`` files inside directories."""
    out = []
    for p in map(Path, paths):
        files = sorted(p.rglob("*.run")) if p.is_dir() else [p]
        out.extend(read_record(f) for f in files)
    return out


def record_filename(record: RunRecord) -> str:
    cell = record.labels.get("cell", "run").replace("/", "_")
    return f"{cell}_{record.labels.get('run', record.config.seed)}.run"


def read_genome(text: str) -> Genome:
    """Genome from a run record (its champion), a 0/1 string, or a list of codon indices."""
    text = text.strip()
    if text.startswith("[config]"):
        record = loads_record(text)
        if record.champion is None:
            raise ValueError("run record has no champion")
        return record.champion
    if text and set(text) <= set("01"):
        return bitstring_genome(text)
    return integer_genome(int(tok) for tok in text.replace(",", " ").split())


# ----------------------------------------------------------------- export


def policy_table(record: RunRecord, maze: Maze, seed: int = 0) -> list[dict]:
    """Steps from each start cell for the champion next to the shortest path."""
    ctx = EvalContext(record.config, maze)
    atn = ctx.phenotype(record.champion)
    steps = trial_steps(atn, maze, ctx.policy, random.Random(seed))
    dist = food_distances(maze)
    return [
        {"x": x, "y": y, "steps": s, "shortest": dist.get((x, y), -1), "excess": s - dist.get((x, y), 0)}
        for (x, y), s in zip(maze.start_cells, steps)
    ]


def export_champion(record: RunRecord, outdir: PathLike, maze: Optional[Maze] = None, stem: str = "champion", seed: int = 0) -> tuple[Path, Path]:
    """Write ``<stem>.dot`` and ``<stem>_policy.csv``; returns both paths."""
    if record.champion is None:
        raise ValueError("record has no champion")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    ctx = EvalContext(record.config, maze)
    dot_path = outdir / f"{stem}.dot"
    dot_path.write_text(to_dot(ctx.phenotype(record.champion), stem.replace("-", "_")))
    csv_path = outdir / f"{stem}_policy.csv"
    rows = policy_table(record, ctx.maze, seed)
    with csv_path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["x", "y", "steps", "shortest", "excess"])
        writer.writeheader()
        writer.writerows(rows)
    return dot_path, csv_path
