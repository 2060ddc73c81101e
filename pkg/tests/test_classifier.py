import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tiersim.classifier import (PageTable, rank_topk, rank_topk_scores, update_all, update_hot_age,
                                update_hot_age_all, update_page)
from tiersim.core import PageRecord

HIST = dict(beta_s=0.7, beta_l=0.1, w_s=0.3, w_l=0.7)


def test_first_update_from_zero():
    rec = update_page(PageRecord(accesses=10), 10, **HIST)
    assert rec.ewma_s == pytest.approx(7.0)
    assert rec.ewma_l == pytest.approx(1.0)
    assert rec.score == pytest.approx(2.8)
    assert rec.prev_score == 0.0 and rec.accesses == 0


def test_zero_input_decays_monotonically():
    rec = PageRecord(ewma_s=50.0, ewma_l=50.0, score=50.0)
    prev = rec
    for _ in range(100):
        rec = update_page(rec, 0, **HIST)
        assert rec.ewma_s < prev.ewma_s and rec.ewma_l < prev.ewma_l
        assert rec.prev_score == prev.score
        prev = rec
    assert rec.score < 1e-3


def test_constant_input_converges():
    rec = PageRecord()
    for _ in range(300):
        rec = update_page(rec, 6, **HIST)
    assert rec.ewma_s == pytest.approx(6.0) and rec.ewma_l == pytest.approx(6.0)
    assert rec.score == pytest.approx(6.0)


def _sort_oracle(scores: dict[int, float], k: int) -> list[int]:
    live = [p for p in scores if scores[p] > 0]
    return sorted(live, key=lambda p: (-scores[p], p))[:k]


def test_four_page_example_under_every_insertion_order():
    base = {0: 5.0, 1: 3.0, 2: 3.0, 3: 1.0}
    for perm in itertools.permutations(base):
        pages = {p: PageRecord(score=base[p]) for p in perm}
        assert rank_topk(pages, 2) == [0, 1] == _sort_oracle(base, 2)


def test_k_saturates_and_zero_k():
    pages = {p: PageRecord(score=s) for p, s in enumerate([1.0, 4.0, 2.0])}
    assert rank_topk(pages, 10) == [1, 2, 0]
    assert rank_topk(pages, 0) == []
    assert rank_topk({}, 3) == []


def test_zero_scores_never_rank():
    pages = {p: PageRecord(score=s) for p, s in enumerate([0.0, 2.0, 0.0])}
    assert rank_topk(pages, 3) == [1]


@given(scores=st.lists(st.sampled_from([0.0, 0.5, 1.0, 2.0, 3.5]) | st.floats(0.0, 100.0),
                       min_size=0, max_size=64),
       k=st.integers(0, 70))
def test_topk_matches_full_sort(scores, k):
    arr = np.array(scores, dtype=np.float64)
    got = rank_topk_scores(arr, k).tolist()
    assert got == _sort_oracle(dict(enumerate(scores)), k)


def test_hot_age_examples():
    pages = {1: PageRecord(), 2: PageRecord()}
    for _ in range(3):
        update_hot_age(pages, [1])
    assert pages[1].hot_age == 3 and pages[2].hot_age == 0
    update_hot_age(pages, [2])
    assert pages[1].hot_age == 0 and pages[2].hot_age == 1


@pytest.mark.parametrize("seed", range(5))
def test_hot_age_is_trailing_run(seed):
    rng = np.random.default_rng(seed)
    member_log = rng.random(50) < 0.6
    table = PageTable(3)
    for step, inside in enumerate(member_log):
        update_hot_age_all(table, np.array([0] if inside else [], dtype=np.int64))
        run = 0
        for m in member_log[: step + 1][::-1]:
            if not m:
                break
            run += 1
        assert table.hot_age[0] == run


@given(samples=st.lists(st.lists(st.integers(0, 50), min_size=4, max_size=4), min_size=1, max_size=15))
def test_vector_update_matches_scalar(samples):
    table = PageTable(4)
    recs = {p: PageRecord() for p in range(4)}
    for row in samples:
        update_all(table, np.array(row), **HIST)
        for p in range(4):
            recs[p] = update_page(recs[p], row[p], **HIST)
    for p in range(4):
        r = table.record(p)
        assert r.score == pytest.approx(recs[p].score)
        assert r.prev_score == pytest.approx(recs[p].prev_score)
        assert r.ewma_l == pytest.approx(recs[p].ewma_l)
