"""Command line: evolve, grid, stats, oracle, build, eval."""

from __future__ import annotations

import argparse
import logging
import random
import sys
from pathlib import Path

from .builder import BuildConfig, interpret, to_dot
from .evolution import EvalContext, EvolutionConfig, parse_key_values, run_evolution
from .experiment import (
    AblationGrid,
    export_champion,
    loads_record,
    read_genome,
    read_records,
    record_filename,
    run_grid,
    write_record,
)
from .maze import belief_optimal_mean_steps, oracle_mean_steps, read_maze
from .report import write_report
from .runtime import DefaultAction, EdgeChoice, RunPolicy, _compile, _trial
from .stats import FACTORS
from .tokens import build_genetic_code, load_genetic_code, translate

log = logging.getLogger("atnosferes")


def _load_config(path, overrides) -> EvolutionConfig:
    values = parse_key_values(Path(path).read_text()) if path else {}
    for item in overrides or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise SystemExit(f"--set expects key=value, got {item!r}")
        values[key.strip()] = value.strip()
    return EvolutionConfig.from_mapping(values)


def _progress(h):
    log.info("gen %d best %.4f mean %.3f median %.3f", h.generation, h.best, h.mean, h.median)


def cmd_evolve(args) -> int:
    config = _load_config(args.config, args.set)
    record = run_evolution(config, progress=_progress)
    out = Path(args.out)
    dot_path, csv_path = export_champion(record, out.parent, stem=out.stem + "_champion")
    write_record(record, out, graph_path=str(dot_path))
    print(f"final fitness {record.final_fitness:.4f} after {len(record.history) - 1} generations")
    print(f"record {out}\ngraph {dot_path}\npolicy {csv_path}")
    return 0


def cmd_grid(args) -> int:
    base = _load_config(args.config, args.set)
    fixed = {}
    for item in args.only or []:
        factor, _, level = item.partition("=")
        if factor not in FACTORS:
            raise SystemExit(f"unknown factor {factor!r}; choose from {', '.join(FACTORS)}")
        fixed[factor] = level
    grid = AblationGrid.restricted(args.runs, **fixed)
    records = run_grid(base, grid, master_seed=args.master_seed)
    outdir = Path(args.outdir)
    for rec in records:
        write_record(rec, outdir / record_filename(rec))
    print(f"{len(records)} records written to {outdir}")
    return 0


def cmd_stats(args) -> int:
    records = read_records(args.records)
    if not records:
        raise SystemExit("no run records found")
    written = write_report(
        records, args.outdir, plots=not args.no_plots, targets=args.target or (), ns=args.ns, reference=args.reference
    )
    for path in written:
        print(path)
    return 0


def cmd_oracle(args) -> int:
    maze = read_maze(args.map)
    bfs = oracle_mean_steps(maze)
    print(f"{maze.name}\tNS={len(maze.start_cells)}\tshortest_path_mean={float(bfs):.4f}\t({bfs})")
    if args.belief:
        opt = belief_optimal_mean_steps(maze, args.horizon)
        print(f"{maze.name}\tlimited_perception_optimum={float(opt):.4f}\t({opt})")
    return 0


def _code(args):
    if args.code:
        return load_genetic_code(args.code, args.typed)
    return build_genetic_code(args.typed)


def _phenotype(args):
    text = Path(args.genome).read_text()
    genome = read_genome(text)
    if text.lstrip().startswith("[config]"):
        # a run record carries its own build switches and genetic code
        ctx = EvalContext(loads_record(text).config)
        return ctx.phenotype(genome)
    return interpret(translate(genome, _code(args)), BuildConfig(args.no_contradiction, args.typed))


def cmd_build(args) -> int:
    atn = _phenotype(args)
    text = to_dot(atn, Path(args.genome).stem)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_eval(args) -> int:
    maze = read_maze(args.map)
    atn = _phenotype(args)
    policy = RunPolicy(EdgeChoice(args.edge_choice), DefaultAction(args.default_action), args.step_cap)
    rng = random.Random(args.seed)
    compiled = _compile(atn)
    total = 0
    for start in maze.start_cells:
        trace = print if args.trace else None
        if trace:
            print(f"# start {start[0]},{start[1]}")
        res = _trial(compiled, maze, start, policy, rng, trace)
        total += res.steps if res.found_food else policy.step_cap
    print(f"fitness {total / len(maze.start_cells):.6f}")
    return 0


def _policy_args(p):
    p.add_argument("--typed", action="store_true", help="node/label scoped swap/roll/unroll")
    p.add_argument("--no-contradiction", action="store_true")
    p.add_argument("--code", help="genetic code override file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="atnosferes", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="one evolutionary run")
    p.add_argument("config", nargs="?", help="key=value config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config field")
    p.add_argument("-o", "--out", default="run.run", help="run record path")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("grid", help="ablation batch")
    p.add_argument("config", nargs="?")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--runs", type=int, default=50, help="runs per cell")
    p.add_argument("--only", action="append", metavar="FACTOR=LEVEL", help="fix one factor")
    p.add_argument("--master-seed", type=int)
    p.add_argument("--outdir", default="runs")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("stats", help="t-tests, quartiles, convergence cost and box plots")
    p.add_argument("records", nargs="+", help="record files or directories")
    p.add_argument("--outdir", default="report")
    p.add_argument("--target", type=float, action="append", help="fitness to outperform (repeatable)")
    p.add_argument("--ns", type=int, help="start-cell count for NT")
    p.add_argument("--reference", type=float, help="horizontal reference line on plots")
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("oracle", help="shortest-path mean steps for a map")
    p.add_argument("map", help="map file or bundled name")
    p.add_argument("--belief", action="store_true", help="also solve the limited-perception optimum")
    p.add_argument("--horizon", type=int, default=16)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("build", help="genome file -> graphviz export")
    p.add_argument("genome")
    p.add_argument("-o", "--out")
    _policy_args(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("eval", help="genome + map -> fitness")
    p.add_argument("genome")
    p.add_argument("map")
    _policy_args(p)
    p.add_argument("--edge-choice", choices=[e.value for e in EdgeChoice], default="first")
    p.add_argument("--default-action", choices=[d.value for d in DefaultAction], default="finish")
    p.add_argument("--step-cap", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", action="store_true", help="print one line per step")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
