"""Wavelet log-energy sharpness: global FISH and its block-based variant.

The image is decomposed with a 3-level separable Haar transform.  Each
level contributes a weighted log-energy of its LH/HL/HH detail subbands,
with finer levels weighted more heavily.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..image import as_pixels

LEVELS = 3
ALPHA = 0.8
BLOCK = 16
BLOCK_STEP = 8
TOP_FRACTION = 0.01

_SQRT2 = np.sqrt(2.0)


def _haar_axis(x: np.ndarray, axis: int) -> tuple[np.ndarray, np.ndarray]:
    """One analysis step along ``axis``; odd lengths get a symmetric extension."""
    x = np.moveaxis(x, axis, -1)
    if x.shape[-1] % 2:
        x = np.concatenate([x, x[..., -1:]], axis=-1)
    even, odd = x[..., 0::2], x[..., 1::2]
    lo = (even + odd) / _SQRT2
    hi = (even - odd) / _SQRT2
    return np.moveaxis(lo, -1, axis), np.moveaxis(hi, -1, axis)


def haar_dwt2(x: np.ndarray):
    """Single-level 2-D Haar DWT over the last two axes.

    Returns ``(LL, LH, HL, HH)`` where the first letter is the filter applied
    along rows (horizontal) and the second along columns.
    """
    lo_r, hi_r = _haar_axis(x, -1)
    ll, lh = _haar_axis(lo_r, -2)
    hl, hh = _haar_axis(hi_r, -2)
    return ll, lh, hl, hh


def _fish_batch(stack: np.ndarray) -> np.ndarray:
    """FISH for a stack of equally-sized images, shape (..., h, w)."""
    approx = stack
    total = np.zeros(stack.shape[:-2])
    for level in range(1, LEVELS + 1):
        approx, lh, hl, hh = haar_dwt2(approx)
        e_lh = np.log10(1.0 + np.mean(lh**2, axis=(-2, -1)))
        e_hl = np.log10(1.0 + np.mean(hl**2, axis=(-2, -1)))
        e_hh = np.log10(1.0 + np.mean(hh**2, axis=(-2, -1)))
        energy = (1.0 - ALPHA) * (e_lh + e_hl) / 2.0 + ALPHA * e_hh
        total = total + 2.0 ** (LEVELS - level) * energy
    return total


def fish(image) -> float:
    px = as_pixels(image)
    if min(px.shape) < 8:
        raise ValueError("image too small: fish needs at least 8x8")
    return float(_fish_batch(px))


def block_fish_map(image) -> np.ndarray:
    """FISH of every 16x16 block on an 8-pixel grid, shape (rows, cols)."""
    px = as_pixels(image)
    if min(px.shape) < BLOCK:
        raise ValueError(f"image too small: fish_bb needs at least {BLOCK}x{BLOCK}")
    blocks = sliding_window_view(px, (BLOCK, BLOCK))[::BLOCK_STEP, ::BLOCK_STEP]
    return _fish_batch(blocks)


def top_count(n: int) -> int:
    return max(1, int(round(TOP_FRACTION * n)))


def fish_bb(image) -> float:
    """Root-mean-square of the sharpest 1% of block FISH values."""
    values = np.sort(block_fish_map(image).ravel())[::-1]
    top = values[: top_count(values.size)]
    return float(np.sqrt(np.mean(top**2)))
