"""Opinion-unaware no-reference quality metrics."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from ..image import as_pixels
from .cpbd import cpbd, cpbd_detail
from .niqe import NiqeError, NiqeModel, niqe, niqe_fit
from .s3 import s3
from .wavelet import fish, fish_bb


class MetricId(enum.Enum):
    AVG_INTENSITY = "avg_intensity"
    FISH = "fish"
    FISH_BB = "fish_bb"
    S3 = "s3"
    CPBD = "cpbd"
    NIQE = "niqe"

    @property
    def order(self) -> int:
        return list(MetricId).index(self)

    @classmethod
    def parse(cls, name: str) -> "MetricId":
        key = name.strip().lower().replace("-", "_")
        key = _ALIASES.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown metric {name!r}") from None


_ALIASES = {
    "avg": "avg_intensity",
    "mean": "avg_intensity",
    "intensity": "avg_intensity",
    "fishbb": "fish_bb",
}


@dataclass(frozen=True)
class MetricScore:
    image_id: str
    metric: MetricId
    value: float
    flags: tuple[str, ...] = field(default=())


def avg_intensity(image) -> float:
    return float(np.mean(as_pixels(image)))


def parse_metrics(spec: str | Iterable[str]) -> list[MetricId]:
    names = spec.split(",") if isinstance(spec, str) else list(spec)
    ids = {MetricId.parse(n) for n in names if n.strip()}
    return sorted(ids, key=lambda m: m.order)


def score_all(image, metrics: Iterable[MetricId], niqe_model: NiqeModel | None = None,
              image_id: str = "") -> list[MetricScore]:
    """Score one image with each requested metric, ordered by MetricId."""
    wanted = sorted(set(metrics), key=lambda m: m.order)
    if MetricId.NIQE in wanted and niqe_model is None:
        raise ValueError("NIQE requested but no model provided")
    out = []
    for metric in wanted:
        flags: tuple[str, ...] = ()
        if metric is MetricId.AVG_INTENSITY:
            value = avg_intensity(image)
        elif metric is MetricId.FISH:
            value = fish(image)
        elif metric is MetricId.FISH_BB:
            value = fish_bb(image)
        elif metric is MetricId.S3:
            value = s3(image)
        elif metric is MetricId.CPBD:
            res = cpbd_detail(image)
            value = res.value
            if res.no_edges:
                flags = ("cpbd:no_edges",)
        else:
            value = niqe(image, niqe_model)
        out.append(MetricScore(image_id, metric, value, flags))
    return out


__all__ = [
    "MetricId", "MetricScore", "NiqeError", "NiqeModel", "avg_intensity", "cpbd",
    "cpbd_detail", "fish", "fish_bb", "niqe", "niqe_fit", "parse_metrics", "s3", "score_all",
]
