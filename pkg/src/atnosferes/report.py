"""Statistics report over stored runs: CSV tables plus box-plot figures."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .evolution import RunRecord  # noqa: E402
from .stats import FACTORS, FactorTest, Quartiles, convergence_cost, factor_level, factor_ttest, quartile_summary  # noqa: E402

# (conditioning, label) pairs analysed by default: every factor alone, then
# given uniform mutation, then given uniform mutation and random default.
CONDITIONS = (
    ({}, "all runs"),
    ({"mutation": "uniform"}, "uniform"),
    ({"mutation": "uniform", "default_action": "random"}, "uniform+random"),
)


def factor_table(records: Sequence[RunRecord]) -> list[tuple[str, FactorTest]]:
    """Every factor test that has at least two runs per level."""
    rows = []
    for given, label in CONDITIONS:
        for factor in FACTORS:
            if factor in given:
                continue
            try:
                rows.append((label, factor_ttest(records, factor, given)))
            except ValueError:
                continue
    return rows


def group_quartiles(records: Iterable[RunRecord], factors: Sequence[str]) -> dict[str, Quartiles]:
    groups: dict[str, list[float]] = {}
    for rec in records:
        key = "/".join(factor_level(rec, f) for f in factors)
        groups.setdefault(key, []).append(rec.final_fitness)
    return {k: quartile_summary(v) for k, v in sorted(groups.items())}


def write_factor_csv(rows, path: Path) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["given", "factor", "level_a", "mean_a", "n_a", "level_b", "mean_b", "n_b", "t", "df", "p"])
        for label, ft in rows:
            w.writerow([label, ft.factor, ft.levels[0], ft.means[0], ft.counts[0],
                        ft.levels[1], ft.means[1], ft.counts[1], ft.t, ft.df, ft.p])


def write_quartile_csv(quartiles: dict[str, Quartiles], path: Path) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["group", "n", "min", "q1", "median", "q3", "max"])
        for key, q in quartiles.items():
            w.writerow([key, q.count, q.minimum, q.q1, q.median, q.q3, q.maximum])


def boxplot(quartiles: dict[str, Quartiles], path: Path, title: str = "", reference: Optional[float] = None) -> Path:
    """Boxes span Q1..Q3 with the median line; whiskers reach min and max."""
    fig, ax = plt.subplots(figsize=(1.6 + 1.2 * len(quartiles), 4))
    stats = [
        {"label": k.replace("/", "\n"), "med": q.median, "q1": q.q1, "q3": q.q3, "whislo": q.minimum, "whishi": q.maximum}
        for k, q in quartiles.items()
    ]
    ax.bxp(stats, showfliers=False)
    if reference is not None:
        ax.axhline(reference, ls=":", color="grey", lw=1)
    ax.set_ylabel("mean steps to food")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def write_report(
    records: Sequence[RunRecord],
    outdir,
    plots: bool = True,
    targets: Sequence[float] = (),
    ns: Optional[int] = None,
    reference: Optional[float] = None,
) -> list[Path]:
    """Write factor tests, per-cell quartiles, convergence costs and box plots."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []

    path = outdir / "factor_tests.csv"
    write_factor_csv(factor_table(records), path)
    written.append(path)

    cells = group_quartiles(records, list(FACTORS))
    path = outdir / "cell_quartiles.csv"
    write_quartile_csv(cells, path)
    written.append(path)

    by_mut_default = group_quartiles(records, ["mutation", "default_action"])
    path = outdir / "mutation_default_quartiles.csv"
    write_quartile_csv(by_mut_default, path)
    written.append(path)

    if targets:
        path = outdir / "convergence.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["target", "PR", "NG", "NE", "NT"])
            for target in targets:
                cost = convergence_cost(records, target, ns or 1)
                if cost.never:
                    w.writerow([target, 0, "never outperforms", "", ""])
                else:
                    w.writerow([target, cost.pr, cost.ng, cost.ne, cost.nt if ns else ""])
        written.append(path)

    if plots:
        name = records[0].config.maze if records else ""
        written.append(boxplot(by_mut_default, outdir / "boxplot_mutation_default.png", name, reference))
        written.append(boxplot(cells, outdir / "boxplot_cells.png", name, reference))
    return written
