"""Spectral and spatial local sharpness (S3).

Two block maps are combined:

* spectral: slope of the orientation-summed magnitude spectrum of each
  Hann-windowed 32x32 block, passed through a sigmoid so that flat spectra
  (sharp content) approach 1;
* spatial: the largest 2x2 total variation inside each 8x8 block.

The pooled score is the mean of the top 1% of ``sqrt(s1) * sqrt(s2)``.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..image import as_pixels

SPECTRAL_BLOCK = 32
SPECTRAL_STEP = 16
SPATIAL_BLOCK = 8
FREQ_RANGE = (0.05, 0.45)
TAU1 = -3.0
TAU2 = 2.0
TOP_FRACTION = 0.01


def _radial_bins(size: int):
    f = np.fft.fftfreq(size)
    fy, fx = np.meshgrid(f, f, indexing="ij")
    radius = np.hypot(fx, fy)
    # integer radius in units of 1/size cycles/pixel
    bins = np.rint(radius * size).astype(int)
    keep_r = np.arange(bins.max() + 1) / size
    valid = (keep_r >= FREQ_RANGE[0]) & (keep_r <= FREQ_RANGE[1])
    return bins, keep_r, valid


_BINS, _BIN_FREQ, _BIN_VALID = _radial_bins(SPECTRAL_BLOCK)
# one-hot (pixel -> fitted radial bin) matrix: orientation sums as a matmul
_BIN_MATRIX = (_BINS.ravel()[:, None] == np.flatnonzero(_BIN_VALID)[None, :]).astype(float)
_HANN = np.outer(np.hanning(SPECTRAL_BLOCK), np.hanning(SPECTRAL_BLOCK))


def spectral_slopes(blocks: np.ndarray) -> np.ndarray:
    """Negative log-log slope of the radial magnitude profile per block.

    Returns NaN for blocks without any AC energy in the fitted band.
    """
    n = blocks.shape[0]
    centred = blocks - blocks.mean(axis=(1, 2), keepdims=True)
    mag = np.abs(np.fft.fft2(centred * _HANN))
    profile = mag.reshape(n, -1) @ _BIN_MATRIX
    logf = np.log(_BIN_FREQ[_BIN_VALID])
    slopes = np.full(n, np.nan)
    ok = np.all(profile > 1e-12, axis=1)
    if ok.any():
        logz = np.log(profile[ok])
        lf = logf - logf.mean()
        slope = (logz - logz.mean(axis=1, keepdims=True)) @ lf / (lf @ lf)
        slopes[ok] = -slope
    return slopes


def spectral_map(px: np.ndarray) -> np.ndarray:
    blocks = sliding_window_view(px, (SPECTRAL_BLOCK, SPECTRAL_BLOCK))
    blocks = blocks[::SPECTRAL_STEP, ::SPECTRAL_STEP]
    rows, cols = blocks.shape[:2]
    alpha = spectral_slopes(blocks.reshape(-1, SPECTRAL_BLOCK, SPECTRAL_BLOCK))
    with np.errstate(over="ignore"):
        s1 = 1.0 - 1.0 / (1.0 + np.exp(TAU1 * (alpha - TAU2)))
    s1 = np.where(np.isnan(alpha), 0.0, s1)
    return s1.reshape(rows, cols)


def spatial_map(px: np.ndarray) -> np.ndarray:
    """Max 2x2 total variation per 8x8 block, scaled into [0, 1]."""
    a, b = px[:-1, :-1], px[:-1, 1:]
    c, d = px[1:, :-1], px[1:, 1:]
    tv = (np.abs(a - b) + np.abs(a - c) + np.abs(a - d)
          + np.abs(b - c) + np.abs(b - d) + np.abs(c - d)) / 4.0
    rows = (px.shape[0] - 1) // SPATIAL_BLOCK
    cols = (px.shape[1] - 1) // SPATIAL_BLOCK
    tv = tv[: rows * SPATIAL_BLOCK, : cols * SPATIAL_BLOCK]
    tv = tv.reshape(rows, SPATIAL_BLOCK, cols, SPATIAL_BLOCK)
    return np.clip(tv.max(axis=(1, 3)), 0.0, 1.0)


def _nearest_index(centres_from: np.ndarray, first: float, step: float, count: int):
    idx = np.rint((centres_from - first) / step).astype(int)
    return np.clip(idx, 0, count - 1)


def sharpness_map(image) -> np.ndarray:
    """Combined S3 map on the 8x8 spatial grid."""
    px = as_pixels(image)
    if min(px.shape) < SPECTRAL_BLOCK:
        raise ValueError(f"image too small: s3 needs at least {SPECTRAL_BLOCK}x{SPECTRAL_BLOCK}")
    s1 = spectral_map(px)
    s2 = spatial_map(px)
    half = SPECTRAL_BLOCK / 2
    r_centres = np.arange(s2.shape[0]) * SPATIAL_BLOCK + SPATIAL_BLOCK / 2
    c_centres = np.arange(s2.shape[1]) * SPATIAL_BLOCK + SPATIAL_BLOCK / 2
    ri = _nearest_index(r_centres, half, SPECTRAL_STEP, s1.shape[0])
    ci = _nearest_index(c_centres, half, SPECTRAL_STEP, s1.shape[1])
    s1_up = s1[np.ix_(ri, ci)]
    return np.sqrt(s1_up) * np.sqrt(s2)


def s3(image) -> float:
    values = np.sort(sharpness_map(image).ravel())[::-1]
    k = max(1, int(round(TOP_FRACTION * values.size)))
    return float(np.clip(values[:k].mean(), 0.0, 1.0))
