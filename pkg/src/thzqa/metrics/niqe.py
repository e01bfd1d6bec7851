"""NIQE: distance between an image's NSS feature Gaussian and a corpus model.

Features are computed on MSCN coefficients at two scales.  Per scale and
patch: GGD (shape, variance) of the coefficients and AGGD (shape, mean,
left variance, right variance) of the four neighbour products, giving 18
values; 36 over both scales.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.special import gamma as gamma_fn

from ..image import as_pixels
from ..jsonfmt import dumps_json

PATCH_SIZE = 96
SHARP_FRACTION = 0.75
SCALES = 2
WINDOW_RADIUS = 3
WINDOW_SIGMA = 7.0 / 6.0
STABILIZER = 1.0 / 255.0
MIN_PATCHES = 36
N_FEATURES = 18 * SCALES

_SHAPES = np.arange(0.2, 10.0 + 1e-9, 0.001)
_RHO = gamma_fn(2.0 / _SHAPES) ** 2 / (gamma_fn(1.0 / _SHAPES) * gamma_fn(3.0 / _SHAPES))


class NiqeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class NiqeModel:
    mean: np.ndarray
    cov: np.ndarray
    patch_size: int = PATCH_SIZE
    sharp_fraction: float = SHARP_FRACTION

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mean.shape != (N_FEATURES,) or cov.shape != (N_FEATURES, N_FEATURES):
            raise NiqeError("model must hold a 36-vector mean and a 36x36 covariance")
        if not np.allclose(cov, cov.T, atol=1e-10, rtol=0):
            raise NiqeError("covariance is not symmetric")
        if np.linalg.eigvalsh((cov + cov.T) / 2).min() < -1e-10:
            raise NiqeError("covariance is not positive semi-definite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    def to_json(self) -> str:
        return dumps_json({
            "patch_size": self.patch_size,
            "sharp_fraction": self.sharp_fraction,
            "mean": self.mean.tolist(),
            "cov": self.cov.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "NiqeModel":
        raw = json.loads(text)
        return cls(np.array(raw["mean"]), np.array(raw["cov"]),
                   int(raw.get("patch_size", PATCH_SIZE)),
                   float(raw.get("sharp_fraction", SHARP_FRACTION)))


def gaussian_window() -> np.ndarray:
    x = np.arange(-WINDOW_RADIUS, WINDOW_RADIUS + 1)
    w = np.exp(-0.5 * x**2 / WINDOW_SIGMA**2)
    return w / w.sum()


def mscn(px: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """MSCN coefficients and the local standard deviation map."""
    w = gaussian_window()

    def blur(a):
        return ndimage.correlate1d(ndimage.correlate1d(a, w, axis=0, mode="reflect"),
                                   w, axis=1, mode="reflect")

    mu = blur(px)
    sigma = np.sqrt(np.abs(blur(px * px) - mu * mu))
    return (px - mu) / (sigma + STABILIZER), sigma


def _match_shape(ratio: float) -> float:
    if not np.isfinite(ratio):
        return float(_SHAPES[-1])
    return float(_SHAPES[np.argmin(np.abs(_RHO - ratio))])


def fit_ggd(x: np.ndarray) -> tuple[float, float]:
    """Moment-matched (shape, variance) of a zero-mean generalized Gaussian."""
    x = np.ravel(x)
    var = float(np.mean(x * x))
    if var <= 0.0:
        return float(_SHAPES[-1]), 0.0
    ratio = float(np.mean(np.abs(x))) ** 2 / var
    return _match_shape(ratio), var


def fit_aggd(x: np.ndarray) -> tuple[float, float, float, float]:
    """Moment-matched (shape, mean, left variance, right variance) of an AGGD."""
    x = np.ravel(x)
    neg, pos = x[x < 0], x[x > 0]
    left_var = float(np.mean(neg * neg)) if neg.size else 0.0
    right_var = float(np.mean(pos * pos)) if pos.size else 0.0
    second = float(np.mean(x * x))
    if second <= 0.0:
        return float(_SHAPES[-1]), 0.0, 0.0, 0.0
    left_sd, right_sd = np.sqrt(left_var), np.sqrt(right_var)
    if right_sd > 0:
        g = left_sd / right_sd
        r_hat = float(np.mean(np.abs(x))) ** 2 / second
        ratio = r_hat * (g**3 + 1) * (g + 1) / (g**2 + 1) ** 2
    else:
        ratio = np.inf
    shape = _match_shape(ratio)
    scale = np.sqrt(gamma_fn(1.0 / shape) / gamma_fn(3.0 / shape))
    mean = (right_sd - left_sd) * scale * gamma_fn(2.0 / shape) / gamma_fn(1.0 / shape)
    return shape, float(mean), left_var, right_var


def _shifted_products(m: np.ndarray):
    yield m[:, :-1] * m[:, 1:]          # horizontal
    yield m[:-1, :] * m[1:, :]          # vertical
    yield m[:-1, :-1] * m[1:, 1:]       # main diagonal
    yield m[1:, :-1] * m[:-1, 1:]       # anti-diagonal


def patch_features(m: np.ndarray) -> np.ndarray:
    shape, var = fit_ggd(m)
    feats = [shape, var]
    for prod in _shifted_products(m):
        feats.extend(fit_aggd(prod))
    return np.array(feats)


def halve(px: np.ndarray) -> np.ndarray:
    """2x2 box downsampling (odd trailing row/column dropped)."""
    h, w = (px.shape[0] // 2) * 2, (px.shape[1] // 2) * 2
    p = px[:h, :w]
    return 0.25 * (p[0::2, 0::2] + p[1::2, 0::2] + p[0::2, 1::2] + p[1::2, 1::2])


def image_features(px: np.ndarray, patch_size: int = PATCH_SIZE) -> tuple[np.ndarray, np.ndarray]:
    """Per-patch 36-d features and per-patch sharpness (mean local std, scale 1)."""
    rows = px.shape[0] // patch_size
    cols = px.shape[1] // patch_size
    if rows < 1 or cols < 1:
        raise NiqeError(f"image smaller than one {patch_size}x{patch_size} patch")
    per_scale = []
    sharpness = None
    scaled = px[: rows * patch_size, : cols * patch_size]
    size = patch_size
    for _ in range(SCALES):
        m, sigma = mscn(scaled)
        feats = []
        sharp = []
        for i in range(rows):
            for j in range(cols):
                sl = (slice(i * size, (i + 1) * size), slice(j * size, (j + 1) * size))
                feats.append(patch_features(m[sl]))
                sharp.append(sigma[sl].mean())
        per_scale.append(np.array(feats))
        if sharpness is None:
            sharpness = np.array(sharp)
        scaled = halve(scaled)
        size //= 2
    return np.hstack(per_scale), sharpness


def niqe_fit(corpus, patch_size: int = PATCH_SIZE, sharp_fraction: float = SHARP_FRACTION) -> NiqeModel:
    """Fit the multivariate Gaussian over sharp patches of a pristine corpus."""
    if len(corpus) < 10:
        raise NiqeError("need at least 10 corpus images")
    kept = []
    for image in corpus:
        px = as_pixels(image)
        if px.shape[0] < 2 * patch_size or px.shape[1] < 2 * patch_size:
            raise NiqeError(f"corpus images must be at least {2 * patch_size}x{2 * patch_size}")
        feats, sharp = image_features(px, patch_size)
        kept.append(feats[sharp >= sharp_fraction * sharp.max()] if sharp.max() > 0 else feats[:0])
    feats = np.vstack(kept)
    if feats.shape[0] < MIN_PATCHES:
        raise NiqeError(f"too few qualifying patches ({feats.shape[0]} < {MIN_PATCHES})")
    return NiqeModel(feats.mean(axis=0), np.cov(feats, rowvar=False), patch_size, sharp_fraction)


def gaussian_distance(mean1, cov1, mean2, cov2) -> float:
    diff = np.asarray(mean1) - np.asarray(mean2)
    pooled = (np.asarray(cov1) + np.asarray(cov2)) / 2.0
    d2 = float(diff @ np.linalg.pinv(pooled, hermitian=True) @ diff)
    return float(np.sqrt(max(d2, 0.0)))


def niqe(image, model: NiqeModel) -> float:
    feats, _ = image_features(as_pixels(image), model.patch_size)
    mean = feats.mean(axis=0)
    cov = np.cov(feats, rowvar=False) if feats.shape[0] > 1 else np.zeros((N_FEATURES, N_FEATURES))
    return gaussian_distance(model.mean, model.cov, mean, cov)
