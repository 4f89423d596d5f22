import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netanomaly.metrics import average_precision, expected_hits_at, precision_recall_at, rank_table


def orders(scores):
    """All rankings consistent with descending scores (ties in every order)."""
    n = len(scores)
    seen = set()
    for perm in itertools.permutations(range(n)):
        if all(scores[perm[i]] >= scores[perm[i + 1]] for i in range(n - 1)) and perm not in seen:
            seen.add(perm)
            yield perm


def oracle(scores, truth, k=None):
    ap, hits = [], []
    a = sum(truth)
    for perm in orders(scores):
        rel = [truth[i] for i in perm]
        if k is not None:
            hits.append(sum(rel[:k]))
        if a:
            ap.append(sum(rel[i] * sum(rel[:i + 1]) / (i + 1) for i in range(len(rel))) / a)
    return (np.mean(ap) if ap else None), (np.mean(hits) if hits else None)


def test_perfect_ranking():
    truth = [1, 1, 0, 0, 0]
    scores = [5, 4, 3, 2, 1]
    assert precision_recall_at(scores, truth, 2) == (1.0, 1.0)
    assert average_precision(scores, truth) == 1.0


def test_all_tied():
    truth = [1, 0, 0, 1, 0, 0]
    for k in range(1, 7):
        assert precision_recall_at(np.zeros(6), truth, k)[0] == pytest.approx(2 / 6)


def test_tie_at_cutoff_hand_example():
    scores, truth = [3, 2, 2, 1, 0], [1, 0, 1, 0, 1]
    # top-2 holds the 3 and one of the tied 2s: expected hits 1.5
    assert expected_hits_at(scores, truth, 2) == pytest.approx(oracle(scores, truth, 2)[1]) == 1.5
    six = ([0.9, 0.8, 0.8, 0.5, 0.4, 0.4], [0, 1, 1, 0, 1, 0])
    assert average_precision(*six) == pytest.approx(oracle(*six)[0])


def test_reversed_ranking_recall_at_1():
    truth = [0, 0, 0, 1]
    assert precision_recall_at([4, 3, 2, 1], truth, 1)[1] == 0
    assert precision_recall_at([1, 2, 3, 4], truth, 1)[1] == 1


@given(st.integers(1, 7).flatmap(lambda n: st.tuples(
    st.lists(st.integers(0, 3), min_size=n, max_size=n),
    st.lists(st.integers(0, 1), min_size=n, max_size=n))))
@settings(max_examples=300, deadline=None)
def test_against_permutation_oracle(case):
    scores, truth = case
    n = len(scores)
    for k in range(1, n + 1):
        assert expected_hits_at(scores, truth, k) == pytest.approx(oracle(scores, truth, k)[1])
    if any(truth):
        assert average_precision(scores, truth) == pytest.approx(oracle(scores, truth)[0])


def test_random_ranking_ap_is_anomaly_fraction():
    rng = np.random.default_rng(0)
    truth = (rng.random(2000) < 0.05).astype(int)
    aps = [average_precision(rng.random(2000), truth) for _ in range(200)]
    assert np.mean(aps) == pytest.approx(truth.mean(), rel=0.15)


def test_errors_and_table():
    with pytest.raises(ValueError):
        average_precision([1, 2], [0, 0])
    with pytest.raises(ValueError):
        expected_hits_at([1, 2], [0, 1], 3)
    assert [r[0] for r in rank_table(np.arange(10), np.r_[np.zeros(9), 1])] == [1, 2, 4, 8]
