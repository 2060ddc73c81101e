import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tiersim.classifier import PageTable
from tiersim.core import NS_PER_S, PageRecord, TierModel
from tiersim.migration import (DEMOTE, PROMOTE, LatencyEstimates, MigrationError, MigrationPlan,
                               MigrationRecord, batch_size, cost_benefit, execute_plan,
                               filter_candidates, plan_migrations)


def _table(scores, fast=(), prev=None, ages=None):
    t = PageTable(len(scores))
    t.score = np.array(scores, dtype=np.float64)
    t.prev_score = np.zeros(len(scores)) if prev is None else np.array(prev, dtype=np.float64)
    t.hot_age = np.full(len(scores), 5) if ages is None else np.array(ages)
    t.fast[list(fast)] = True
    return t


def test_filter_examples():
    t = _table([9.0, 8.0, 7.0, 6.0], fast=[3], prev=[1.0, 9.0, 1.0, 1.0], ages=[1, 5, 5, 5])
    # page 0 too young, page 1 cooling, page 3 already fast
    assert filter_candidates(np.array([0, 1, 2, 3]), t).tolist() == [2]


def test_filter_keeps_topk_order():
    t = _table([1.0, 3.0, 2.0])
    assert filter_candidates(np.array([1, 2, 0]), t).tolist() == [1, 2, 0]


def test_cost_benefit_examples():
    p, q = PageRecord(score=10.0, hot_age=3), PageRecord(score=2.0)
    assert (10 - 2) * 3 * 70 == 1680
    assert not cost_benefit(p, q, 70.0, 1000.0, 1000.0)
    assert (10 - 2) * 4 * 70 == 2240
    assert cost_benefit(PageRecord(score=10.0, hot_age=4), q, 70.0, 1000.0, 1000.0)
    assert not cost_benefit(PageRecord(score=2.0, hot_age=99), q, 70.0, 1e-9, 1e-9)


@pytest.mark.parametrize("bw,bs_max,expected", [(7.45e9, 256, 1), (0.0, 256, 256), (3.725e9, 8, 4),
                                                (1e12, 16, 1), (-5.0, 16, 16)])
def test_batch_size_examples(bw, bs_max, expected):
    assert batch_size(bw, 7.45e9, bs_max) == expected


def _admissible(cands, victims, score, age, dL, lp, ld, batch):
    """Every ordered choice of candidates paired with the victims taken coldest first."""
    out = []
    for r in range(0, min(len(cands), len(victims), batch) + 1):
        for chosen in itertools.combinations(range(len(cands)), r):
            if all((score[cands[c]] - score[victims[j]]) * age[cands[c]] * dL > lp + ld
                   for j, c in enumerate(chosen)):
                out.append(chosen)
    return out


def _oracle_plan(cands, victims, score, age, dL, lp, ld, batch):
    plans = _admissible(cands, victims, score, age, dL, lp, ld, batch)
    maximal = [p for p in plans if not any(len(o) == len(p) + 1 and o[:len(p)] == p for o in plans)]
    best = min(maximal)
    return [(cands[c], victims[j]) for j, c in enumerate(best)]


@given(n_c=st.integers(0, 4), n_v=st.integers(0, 4), batch=st.integers(1, 5),
       seed=st.integers(0, 10_000))
def test_plan_is_earliest_maximal_admissible(n_c, n_v, batch, seed):
    rng = np.random.default_rng(seed)
    n = n_c + n_v
    scores = np.round(rng.uniform(0, 10, n), 1)
    ages = rng.integers(2, 6, n)
    t = _table(scores, fast=range(n_c, n), ages=ages)
    cands = np.arange(n_c)[np.lexsort((np.arange(n_c), -scores[:n_c]))]
    topk = np.zeros(n, dtype=bool)
    topk[cands] = True
    victims = [v for v in sorted(range(n_c, n), key=lambda v: (scores[v], v))]
    plan = plan_migrations(cands, t, topk, fast_capacity=n_v, dL=1.0, l_prom=2.0, l_dem=3.0, batch=batch)
    assert plan.pairs == _oracle_plan(cands.tolist(), victims, scores, ages, 1.0, 2.0, 3.0, batch)


def test_free_space_gates_on_promotion_cost_alone():
    t = _table([3.0, 0.1], ages=[2, 2])
    topk = np.array([True, True])
    plan = plan_migrations(np.array([0, 1]), t, topk, fast_capacity=4, dL=1.0, l_prom=5.0, l_dem=1e9,
                           batch=8)
    assert plan.pairs == [(0, None)]


def test_no_victims_means_no_plan():
    t = _table([5.0, 4.0, 9.0], fast=[0, 1])
    topk = np.array([True, True, True])
    assert plan_migrations(np.array([2]), t, topk, fast_capacity=2, dL=100.0, l_prom=1.0, l_dem=1.0,
                           batch=8).pairs == []


def test_two_candidates_one_victim():
    t = _table([9.0, 8.0, 0.5], fast=[2])
    topk = np.array([True, True, False])
    plan = plan_migrations(np.array([0, 1]), t, topk, fast_capacity=1, dL=100.0, l_prom=1.0, l_dem=1.0,
                           batch=8)
    assert plan.pairs == [(0, 2)]


def test_batch_truncates():
    t = _table([9.0, 8.0, 7.0])
    topk = np.ones(3, dtype=bool)
    plan = plan_migrations(np.array([0, 1, 2]), t, topk, fast_capacity=8, dL=100.0, l_prom=1.0,
                           l_dem=1.0, batch=2)
    assert plan.promotions == [0, 1]


ZERO_OVERHEAD = TierModel(fast_capacity_pages=8, migration_overhead_ns=0.0)
SINGLE_NS = 2**21 / 7.45e9 * NS_PER_S


def test_single_migration_latency():
    assert SINGLE_NS == pytest.approx(281_500, rel=1e-3)
    t = _table([1.0, 1.0])
    recs = execute_plan(MigrationPlan([(0, None)], 1), t, ZERO_OVERHEAD, interval=3)
    assert len(recs) == 1
    r = recs[0]
    assert (r.interval, r.page, r.direction, r.identified_at) == (3, 0, PROMOTE, 3)
    assert r.observed_latency == pytest.approx(SINGLE_NS)
    assert t.fast[0]


def test_batch_of_four_shares_bandwidth():
    t = _table([1.0] * 4)
    recs = execute_plan(MigrationPlan([(p, None) for p in range(4)], 4), t, ZERO_OVERHEAD, interval=0)
    assert [r.observed_latency for r in recs] == pytest.approx([4 * SINGLE_NS] * 4)


def test_record_latency_must_be_positive():
    with pytest.raises(ValueError):
        MigrationRecord(0, 0, PROMOTE, 0.0, 0)


def test_empty_plan_leaves_estimates():
    est = LatencyEstimates(5.0, 6.0)
    assert execute_plan(MigrationPlan(), _table([1.0]), ZERO_OVERHEAD, 0, estimates=est) == []
    assert (est.l_prom, est.l_dem) == (5.0, 6.0)


def test_estimates_follow_ewma():
    est = LatencyEstimates(1000.0, 1000.0)
    t = _table([1.0, 0.0], fast=[1])
    execute_plan(MigrationPlan([(0, 1)], 1), t, ZERO_OVERHEAD, 0, estimates=est, cost_model="observed")
    observed = 2 * SINGLE_NS
    assert est.l_prom == pytest.approx(1000.0 + 0.3 * (observed - 1000.0))
    assert est.l_dem == pytest.approx(est.l_prom)
    assert t.fast.tolist() == [True, False]


def test_demote_runs_before_promote_at_capacity():
    tiers = TierModel(fast_capacity_pages=1)
    t = _table([1.0, 0.0], fast=[1])
    recs = execute_plan(MigrationPlan([(0, 1)], 1), t, tiers, 2)
    assert [r.direction for r in recs] == [DEMOTE, PROMOTE]


def test_stale_plan_is_rejected():
    t = _table([1.0, 1.0], fast=[0])
    with pytest.raises(MigrationError):
        execute_plan(MigrationPlan([(0, None)], 1), t, ZERO_OVERHEAD, 0)
    with pytest.raises(MigrationError):
        execute_plan(MigrationPlan([(1, 1)], 1), _table([1.0, 1.0]), ZERO_OVERHEAD, 0)


def test_equal_scores_never_migrate():
    t = _table([4.0] * 6, fast=[0, 1])
    topk = np.zeros(6, dtype=bool)
    topk[[2, 3]] = True
    plan = plan_migrations(np.array([2, 3]), t, topk, fast_capacity=2, dL=1e6, l_prom=1e-9, l_dem=1e-9,
                           batch=8)
    assert plan.pairs == []


@given(scores=st.lists(st.floats(0.1, 50.0), min_size=1, max_size=12), n_fast=st.integers(0, 6),
       batch=st.integers(1, 8))
def test_plan_is_prefix_of_gated_list_and_disjoint(scores, n_fast, batch):
    n = len(scores)
    n_fast = min(n_fast, n)
    t = _table(scores, fast=range(n - n_fast, n))
    slow = np.arange(n - n_fast)
    cands = slow[np.lexsort((slow, -t.score[slow]))]
    topk = np.zeros(n, dtype=bool)
    topk[cands] = True
    plan = plan_migrations(cands, t, topk, fast_capacity=n_fast, dL=1.0, l_prom=0.5, l_dem=0.5, batch=batch)
    proms, dems = plan.promotions, plan.demotions
    assert len(set(proms)) == len(proms) and len(set(dems)) == len(dems)
    assert not set(proms) & set(dems)
    assert len(plan.pairs) <= batch
    gated = [p for p in cands.tolist() if any(
        (t.score[p] - t.score[q]) * t.hot_age[p] > 1.0 for q in range(n - n_fast, n))]
    assert all(p in gated for p in proms)
    pos = [cands.tolist().index(p) for p in proms]
    assert pos == sorted(pos)
    execute_plan(plan, t, TierModel(fast_capacity_pages=max(1, n_fast)), 0)
    assert t.fast_occupancy == n_fast
