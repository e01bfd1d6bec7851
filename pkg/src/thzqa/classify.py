"""Two-class quality gate: MOS thresholding, optimal 1-D 2-means and confusion tables."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

MOS_THRESHOLD = 3.0


class QualityLabel(enum.Enum):
    ACCEPTABLE = "Acceptable"
    BAD = "Bad"

    @classmethod
    def parse(cls, text: str) -> "QualityLabel":
        key = text.strip().lower()
        for label in cls:
            if label.value.lower() == key:
                return label
        raise ValueError(f"unknown quality label {text!r}")


class Polarity(enum.Enum):
    HIGHER_IS_BETTER = "higher"
    LOWER_IS_BETTER = "lower"

    def flipped(self) -> "Polarity":
        if self is Polarity.HIGHER_IS_BETTER:
            return Polarity.LOWER_IS_BETTER
        return Polarity.HIGHER_IS_BETTER

    @classmethod
    def parse(cls, text: str) -> "Polarity":
        key = text.strip().lower().replace("-", "_")
        aliases = {"higher": cls.HIGHER_IS_BETTER, "higher_is_better": cls.HIGHER_IS_BETTER,
                   "higherisbetter": cls.HIGHER_IS_BETTER,
                   "lower": cls.LOWER_IS_BETTER, "lower_is_better": cls.LOWER_IS_BETTER,
                   "lowerisbetter": cls.LOWER_IS_BETTER}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown polarity {text!r}") from None


# Sharpness and intensity rise as THz images get noisier, so low values are good.
DEFAULT_POLARITY = {
    "avg_intensity": Polarity.LOWER_IS_BETTER,
    "fish": Polarity.LOWER_IS_BETTER,
    "fish_bb": Polarity.LOWER_IS_BETTER,
    "s3": Polarity.LOWER_IS_BETTER,
    "niqe": Polarity.LOWER_IS_BETTER,
    "cpbd": Polarity.HIGHER_IS_BETTER,
}


def polarity_from_srocc(rho: float) -> Polarity:
    return Polarity.HIGHER_IS_BETTER if rho >= 0 else Polarity.LOWER_IS_BETTER


def threshold_labels(mos: Mapping[str, float], threshold: float = MOS_THRESHOLD) -> dict[str, QualityLabel]:
    """MOS at or above the threshold is Acceptable, below it Bad."""
    return {k: QualityLabel.ACCEPTABLE if v >= threshold else QualityLabel.BAD
            for k, v in mos.items()}


@dataclass(frozen=True)
class ClusterResult:
    centroids: tuple[float, float]
    assignments: np.ndarray
    inertia: float
    split_value: float


def cluster_2means_1d(values: Sequence[float]) -> ClusterResult:
    """Globally optimal 2-means in one dimension.

    Optimal 1-D clusters are contiguous in sorted order, so every one of
    the n-1 split points is scored with prefix sums and the best kept
    (the smallest split wins ties).
    """
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("need at least two values")
    if np.all(x == x[0]):
        raise ValueError("degenerate: single cluster")
    s = np.sort(x)
    n = s.size
    centred = s - s.mean()
    k = np.arange(1, n)                       # size of the left cluster
    left_mean = np.cumsum(centred)[:-1] / k
    right_mean = -left_mean * k / (n - k)     # centred data sums to zero
    # total SS is fixed, so minimum inertia = maximum between-cluster SS
    between = k * (n - k) / n * (left_mean - right_mean) ** 2
    # a split between equal values would put equal points in different clusters
    between = np.where(s[1:] > s[:-1], between, -np.inf)
    best = int(np.argmax(between))
    left, right = s[: best + 1], s[best + 1:]
    split = float(right[0])
    assignments = (x >= split).astype(int)
    inertia = float(((left - left.mean()) ** 2).sum() + ((right - right.mean()) ** 2).sum())
    return ClusterResult((float(left.mean()), float(right.mean())), assignments, inertia, split)


def orient_clusters(result: ClusterResult, polarity: Polarity) -> dict[int, QualityLabel]:
    """Map cluster index to a quality label.

    Centroids are sorted, so cluster 0 is always the low one; ``result`` is
    accepted for symmetry with the clustering output.
    """
    if result.centroids[0] > result.centroids[1]:
        raise ValueError("centroids must be ascending")
    if polarity is Polarity.HIGHER_IS_BETTER:
        return {0: QualityLabel.BAD, 1: QualityLabel.ACCEPTABLE}
    return {0: QualityLabel.ACCEPTABLE, 1: QualityLabel.BAD}


def predict_labels(result: ClusterResult, polarity: Polarity) -> list[QualityLabel]:
    mapping = orient_clusters(result, polarity)
    return [mapping[int(c)] for c in result.assignments]


_ORDER = (QualityLabel.ACCEPTABLE, QualityLabel.BAD)


@dataclass(frozen=True)
class ConfusionReport:
    # rows: truth (Acceptable, Bad); columns: predicted (Acceptable, Bad)
    counts: tuple[tuple[int, int], tuple[int, int]]
    per_class_accuracy: tuple[float, float]
    overall_accuracy: float
    false_positive_rate: float
    n: int

    def to_dict(self) -> dict:
        return {
            "confusion": [list(r) for r in self.counts],
            "per_class_accuracy": list(self.per_class_accuracy),
            "overall_accuracy": self.overall_accuracy,
            "false_positive_rate": self.false_positive_rate,
            "n": self.n,
        }


def _pct(num: int, den: int) -> float:
    return 100.0 * num / den if den else float("nan")


def confusion_from_counts(counts) -> ConfusionReport:
    (aa, ab), (ba, bb) = ((int(v) for v in row) for row in counts)
    total = aa + ab + ba + bb
    if total < 1:
        raise ValueError("empty confusion table")
    return ConfusionReport(
        counts=((aa, ab), (ba, bb)),
        per_class_accuracy=(_pct(aa, aa + ab), _pct(bb, ba + bb)),
        overall_accuracy=_pct(aa + bb, total),
        false_positive_rate=_pct(ba, ba + bb),
        n=total,
    )


def confusion(predicted: Sequence[QualityLabel], truth: Sequence[QualityLabel]) -> ConfusionReport:
    if len(predicted) != len(truth):
        raise ValueError("length mismatch")
    if len(truth) < 1:
        raise ValueError("need at least one sample")
    counts = [[0, 0], [0, 0]]
    for p, t in zip(predicted, truth):
        counts[_ORDER.index(t)][_ORDER.index(p)] += 1
    return confusion_from_counts(counts)
