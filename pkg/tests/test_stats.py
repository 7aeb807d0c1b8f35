import math

import pytest
from hypothesis import given, strategies as st

from atnosferes.evolution import EvolutionConfig, GenerationStats, RunRecord
from atnosferes.stats import (
    convergence_cost,
    factor_ttest,
    first_crossing,
    quartile_summary,
    welch_ttest,
)


def t_sf_df4(t):
    # closed-form survival function of Student's t with 4 degrees of freedom
    u = t / math.sqrt(t * t + 4)
    return 0.5 - u * (3 - u * u) / 4


def test_identical_samples():
    res = welch_ttest([1, 2, 3], [1, 2, 3])
    assert res.t == 0 and res.p == 1.0
    assert welch_ttest([5, 5], [5, 5]).p == 1.0


def test_constant_distinct_samples():
    res = welch_ttest([0, 0, 0, 0], [1, 1, 1, 1])
    assert res.p == pytest.approx(0, abs=1e-9)
    assert res.t < 0


def test_closed_form_reference():
    res = welch_ttest([1, 2, 3], [4, 5, 6])
    assert res.t == pytest.approx(-3 / math.sqrt(2 / 3), abs=1e-9)
    assert res.t == pytest.approx(-3.674234614, abs=1e-9)
    assert res.df == pytest.approx(4, abs=1e-9)
    assert res.p == pytest.approx(2 * t_sf_df4(abs(res.t)), abs=1e-9)


def test_t_df4_formula_sanity():
    assert t_sf_df4(0) == 0.5
    assert t_sf_df4(2.776445105) == pytest.approx(0.025, abs=1e-9)


samples = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=2, max_size=20)


@given(samples, samples)
def test_symmetry(a, b):
    ab, ba = welch_ttest(a, b), welch_ttest(b, a)
    assert ab.p == pytest.approx(ba.p, abs=1e-12)
    assert ab.t == pytest.approx(-ba.t, rel=1e-9, abs=1e-9) or math.isinf(ab.t)
    assert 0 <= ab.p <= 1


def test_too_few_samples():
    with pytest.raises(ValueError):
        welch_ttest([1], [1, 2])


def test_quartiles():
    q = quartile_summary([7])
    assert (q.minimum, q.q1, q.median, q.q3, q.maximum, q.count) == (7, 7, 7, 7, 7, 1)
    assert quartile_summary([1, 2, 3, 4]).median == 2.5
    q = quartile_summary(range(1, 101))
    assert q.q1 == pytest.approx(25.75, abs=1e-9)
    assert q.q3 == pytest.approx(75.25, abs=1e-9)
    with pytest.raises(ValueError):
        quartile_summary([])


@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=50))
def test_quartile_ordering(values):
    q = quartile_summary(values)
    assert q.minimum <= q.q1 <= q.median <= q.q3 <= q.maximum


def record(best, **cfg):
    history = [GenerationStats(i, b, b, b) for i, b in enumerate(best)]
    return RunRecord(EvolutionConfig(**cfg), history, champion_fitness=best[-1])


def test_first_crossing():
    assert first_crossing([9, 8, 5, 5], 5) == 2
    assert first_crossing([9, 8], 5) is None


def test_convergence_cost_hand_example():
    recs = [record([10.0] * 10 + [5.0]) for _ in range(4)]
    cost = convergence_cost(recs, 6.1, ns=18)
    assert (cost.pr, cost.ng, cost.ne, cost.nt) == (100.0, 10.0, 3000.0, 54000.0)
    half = convergence_cost(recs[:2] + [record([10.0] * 11)] * 2, 6.1, ns=18)
    assert half.pr == 50 and half.ne == 6000


def test_convergence_never():
    cost = convergence_cost([record([9.0, 8.0])], 6.1, ns=18)
    assert cost.never and cost.ne is None and cost.nt is None
    with pytest.raises(ValueError):
        convergence_cost([], 6.1, 18)


def test_nt_monotone_in_target():
    recs = [record([10, 8, 7, 6, 5, 4][: k + 2]) for k in range(5)]
    costs = [convergence_cost(recs, t, ns=10) for t in (7.5, 6.5, 5.5, 4.5)]
    nts = [c.nt for c in costs]
    assert all(a <= b for a, b in zip(nts, nts[1:]))


def test_factor_ttest_groups():
    recs = [record([v], mutation="uniform") for v in (3, 4, 5)]
    recs += [record([v], mutation="bitflip", encoding="bitstring") for v in (8, 9, 10)]
    res = factor_ttest(recs, "mutation")
    assert res.levels == ("uniform", "bitflip") and res.means == (4, 9) and res.counts == (3, 3)
    assert res.p < 0.01
    with pytest.raises(ValueError):
        factor_ttest(recs, "mutation", given={"default_action": "random"})
