"""Statistics over batches of runs: factor t-tests, box-plot quartiles, convergence cost."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np
from scipy import stats as _sps

from .evolution import RunRecord


def _mutation(cfg) -> str:
    return cfg.mutation.value


def _stack_ops(cfg) -> str:
    return "nodelabel" if cfg.typed_stack_ops else "all"


def _contradiction(cfg) -> str:
    return "nocontradiction" if cfg.no_contradiction else "contradiction"


def _default_action(cfg) -> str:
    return cfg.default_action.value


# factor -> (levels, level of a config)
FACTORS: dict[str, tuple[tuple[str, str], Callable]] = {
    "mutation": (("uniform", "bitflip"), _mutation),
    "stack_ops": (("all", "nodelabel"), _stack_ops),
    "contradiction": (("contradiction", "nocontradiction"), _contradiction),
    "default_action": (("random", "finish"), _default_action),
}


def factor_level(record: RunRecord, factor: str) -> str:
    return FACTORS[factor][1](record.config)


@dataclass
class TTest:
    t: float
    df: float
    p: float


def welch_ttest(a: Sequence[float], b: Sequence[float]) -> TTest:
    """Two-sided unequal-variance t-test."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least 2 values")
    va, vb = a.var(ddof=1) / a.size, b.var(ddof=1) / b.size
    diff = a.mean() - b.mean()
    se2 = va + vb
    if se2 == 0:
        df = float(a.size + b.size - 2)
        if diff == 0:
            return TTest(0.0, df, 1.0)
        return TTest(math.copysign(math.inf, diff), df, 0.0)
    t = diff / math.sqrt(se2)
    denom = va**2 / (a.size - 1) + vb**2 / (b.size - 1)
    # squares of subnormal variances can underflow to zero
    df = se2**2 / denom if denom > 0 else float(a.size + b.size - 2)
    p = float(2 * _sps.t.sf(abs(t), df))
    return TTest(float(t), float(df), min(1.0, p))


@dataclass
class FactorTest:
    factor: str
    levels: tuple[str, str]
    means: tuple[float, float]
    counts: tuple[int, int]
    t: float
    df: float
    p: float


def _matches(record: RunRecord, given: Optional[Mapping[str, str]]) -> bool:
    return not given or all(factor_level(record, f) == lvl for f, lvl in given.items())


def factor_ttest(
    records: Iterable[RunRecord],
    factor: str,
    given: Optional[Mapping[str, str]] = None,
    levels: Optional[tuple[str, str]] = None,
) -> FactorTest:
    """Compare final fitness between the two levels of ``factor``.

    ``given`` restricts the records to fixed levels of other factors, e.g.
    ``{"mutation": "uniform"}``.
    """
    levels = levels or FACTORS[factor][0]
    groups: dict[str, list[float]] = {lvl: [] for lvl in levels}
    for rec in records:
        if _matches(rec, given):
            lvl = factor_level(rec, factor)
            if lvl in groups:
                groups[lvl].append(rec.final_fitness)
    a, b = groups[levels[0]], groups[levels[1]]
    if len(a) < 2 or len(b) < 2:
        raise ValueError(f"factor {factor}: need >= 2 runs per level, got {len(a)} and {len(b)}")
    res = welch_ttest(a, b)
    return FactorTest(factor, levels, (float(np.mean(a)), float(np.mean(b))), (len(a), len(b)), res.t, res.df, res.p)


@dataclass
class Quartiles:
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float
    count: int


def quartile_summary(values: Iterable[float]) -> Quartiles:
    """Five-number summary with linearly interpolated quantiles."""
    v = np.asarray(list(values), dtype=float)
    if v.size == 0:
        raise ValueError("quartile_summary of an empty sample")
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    return Quartiles(float(v.min()), float(q1), float(med), float(q3), float(v.max()), int(v.size))


@dataclass
class ConvergenceCost:
    target: float
    pr: float
    ng: Optional[float]
    ne: Optional[float]
    nt: Optional[float]

    @property
    def never(self) -> bool:
        return self.pr == 0


def first_crossing(best_per_generation: Sequence[float], target: float) -> Optional[int]:
    for gen, best in enumerate(best_per_generation):
        if best <= target:
            return gen
    return None


def convergence_cost(
    records: Sequence[RunRecord],
    target: float,
    ns: int,
    population_size: Optional[int] = None,
) -> ConvergenceCost:
    """Success rate, mean crossing generation, evaluations and elementary trials.

    PR is the percentage of runs whose best fitness ever reaches ``target``,
    NG their mean first-crossing generation, ``NE = P*NG*100/PR`` and
    ``NT = ns*NE``. When no run gets there the costs are ``None``.
    """
    if target <= 0:
        raise ValueError("target fitness must be positive")
    if not records:
        raise ValueError("no records")
    if population_size is None:
        population_size = records[0].config.population_size
    crossings = [first_crossing(r.best_per_generation, target) for r in records]
    hits = [g for g in crossings if g is not None]
    pr = 100.0 * len(hits) / len(records)
    if not hits:
        return ConvergenceCost(target, 0.0, None, None, None)
    ng = float(np.mean(hits))
    ne = population_size * ng * 100.0 / pr
    return ConvergenceCost(target, pr, ng, ne, ns * ne)
