import itertools

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from thzqa.classify import (
    DEFAULT_POLARITY, ClusterResult, Polarity, QualityLabel, cluster_2means_1d, confusion,
    confusion_from_counts, orient_clusters, polarity_from_srocc, predict_labels, threshold_labels,
)

A, B = QualityLabel.ACCEPTABLE, QualityLabel.BAD

# truth rows (Acceptable, Bad) x predicted columns (Acceptable, Bad)
PUBLISHED_COUNTS = {
    "q": ((85, 15), (26, 55)),
    "score3": ((91, 9), (30, 51)),
    "s31": ((83, 17), (20, 61)),
    "sh1": ((97, 3), (26, 55)),
}


def brute_inertia(x):
    best = np.inf
    for mask in itertools.product([0, 1], repeat=len(x)):
        m = np.array(mask, bool)
        if m.all() or not m.any():
            continue
        a, b = x[m], x[~m]
        best = min(best, ((a - a.mean()) ** 2).sum() + ((b - b.mean()) ** 2).sum())
    return best


def test_threshold_labels():
    labels = threshold_labels({"a": 4.2, "b": 1.0, "c": 3.0, "d": 2.999})
    assert labels == {"a": A, "b": B, "c": A, "d": B}


def test_cluster_examples():
    res = cluster_2means_1d([0, 0.1, 0.9, 1.0])
    assert res.centroids == pytest.approx((0.05, 0.95), abs=1e-15)
    assert res.inertia == pytest.approx(0.01, abs=1e-15)
    assert list(res.assignments) == [0, 0, 1, 1]
    two = cluster_2means_1d([1, 0])
    assert two.centroids == (0, 1) and two.inertia == 0 and list(two.assignments) == [1, 0]


def test_cluster_degenerate():
    with pytest.raises(ValueError, match="degenerate"):
        cluster_2means_1d([0.3, 0.3, 0.3])


def test_cluster_matches_split_sweep_oracle():
    x = np.random.default_rng(0).random(50)
    s = np.sort(x)
    oracle = min(((s[:k] - s[:k].mean()) ** 2).sum() + ((s[k:] - s[k:].mean()) ** 2).sum()
                 for k in range(1, 50))
    assert cluster_2means_1d(x).inertia == pytest.approx(oracle, rel=1e-12)


def test_cluster_exhaustive_small():
    rng = np.random.default_rng(1)
    for _ in range(200):
        n = int(rng.integers(2, 11))
        x = np.round(rng.normal(size=n), int(rng.integers(0, 3)))
        if np.all(x == x[0]):
            continue
        assert cluster_2means_1d(x).inertia == pytest.approx(brute_inertia(x), rel=1e-9, abs=1e-12)


def test_cluster_split_semantics():
    x = np.array([5.0, 1.0, 1.2, 4.8, 5.1, 0.9])
    res = cluster_2means_1d(x)
    assert res.centroids[0] < res.centroids[1]
    assert all((v >= res.split_value) == bool(c) for v, c in zip(x, res.assignments))


def test_cluster_tie_prefers_smaller_split():
    # {0, 1, 2}: splitting after 0 or after 1 gives the same inertia
    res = cluster_2means_1d([2.0, 0.0, 1.0])
    assert res.split_value == 1.0
    assert res.inertia == 0.5


@given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=2, max_size=40),
       st.floats(0.1, 10), st.floats(-100, 100))
@settings(max_examples=80, deadline=None)
def test_cluster_affine_invariance(values, scale, shift):
    x = np.array(values)
    assume(np.ptp(x) > 1e-3)
    # keep the gap structure well above rounding so exact ties do not flip
    x = np.round(x, 1)
    assume(np.ptp(x) > 0)
    a = cluster_2means_1d(x)
    b = cluster_2means_1d(x * scale + shift)
    assert np.array_equal(a.assignments, b.assignments)
    assert b.centroids == pytest.approx(tuple(c * scale + shift for c in a.centroids), rel=1e-9, abs=1e-9)


def test_orientation():
    res = ClusterResult((0.1, 0.9), np.array([0, 1]), 0.0, 0.9)
    assert orient_clusters(res, Polarity.HIGHER_IS_BETTER) == {0: B, 1: A}
    assert orient_clusters(res, Polarity.LOWER_IS_BETTER) == {0: A, 1: B}
    for pol in Polarity:
        flipped = orient_clusters(res, pol.flipped())
        assert all(flipped[k] != v for k, v in orient_clusters(res, pol).items())
        assert pol.flipped().flipped() is pol
    assert predict_labels(res, Polarity.HIGHER_IS_BETTER) == [B, A]


def test_polarity_defaults_and_srocc():
    assert DEFAULT_POLARITY["avg_intensity"] is Polarity.LOWER_IS_BETTER
    assert DEFAULT_POLARITY["cpbd"] is Polarity.HIGHER_IS_BETTER
    assert polarity_from_srocc(-0.88) is Polarity.LOWER_IS_BETTER
    assert polarity_from_srocc(0.5) is Polarity.HIGHER_IS_BETTER


@pytest.mark.parametrize("name, overall", [("q", 77.35), ("score3", 78.45), ("s31", 79.56), ("sh1", 83.98)])
def test_published_counts_overall_accuracy(name, overall):
    assert round(confusion_from_counts(PUBLISHED_COUNTS[name]).overall_accuracy, 2) == overall


def test_published_counts_s31_row_from_labels():
    truth = [A] * 100 + [B] * 81
    predicted = [A] * 83 + [B] * 17 + [A] * 20 + [B] * 61
    rep = confusion(predicted, truth)
    assert rep.counts == ((83, 17), (20, 61))
    assert round(rep.overall_accuracy, 2) == 79.56
    assert round(rep.false_positive_rate, 2) == 24.69
    # arithmetic per-class accuracy (83/100), not 87.00
    assert rep.per_class_accuracy == pytest.approx((83.0, 75.308641975308), abs=1e-9)


def test_confusion_perfect_and_errors():
    rep = confusion([A, B, A], [A, B, A])
    assert rep.per_class_accuracy == (100.0, 100.0)
    assert rep.overall_accuracy == 100.0 and rep.false_positive_rate == 0.0
    with pytest.raises(ValueError):
        confusion([A], [A, B])


def test_planted_bimodal_perfect():
    rng = np.random.default_rng(2)
    good = rng.normal(0.2, 0.02, 60)
    bad = rng.normal(0.8, 0.02, 40)
    res = cluster_2means_1d(np.r_[good, bad])
    rep = confusion(predict_labels(res, Polarity.LOWER_IS_BETTER), [A] * 60 + [B] * 40)
    assert rep.overall_accuracy == 100.0


@given(st.lists(st.sampled_from([A, B]), min_size=1, max_size=60), st.data())
def test_confusion_identities(truth, data):
    predicted = data.draw(st.lists(st.sampled_from([A, B]), min_size=len(truth), max_size=len(truth)))
    rep = confusion(predicted, truth)
    (aa, ab), (ba, bb) = rep.counts
    assert aa + ab == truth.count(A) and ba + bb == truth.count(B)
    assert rep.overall_accuracy == pytest.approx(100 * (aa + bb) / len(truth))
    assert rep.n == len(truth)
