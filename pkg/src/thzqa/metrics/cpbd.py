"""Cumulative probability of blur detection (CPBD).

Vertical edges are found with a horizontal Sobel gradient, thinned to
horizontal local maxima, and each edge pixel's width is taken as the
distance between the intensity extrema bracketing it along the row.
The width is compared with a just-noticeable blur width that depends on
the local 64x64 contrast.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy import ndimage

from ..image import as_pixels

BETA = 3.6
P_JNB = 0.63
BLOCK = 64
CONTRAST_SPLIT = 50.0
WIDTH_LOW_CONTRAST = 5.0
WIDTH_HIGH_CONTRAST = 3.0
# edge candidates must reach this fraction of the strongest gradient
EDGE_FRACTION = 0.1
MIN_SIZE = 64


class CpbdResult(NamedTuple):
    value: float
    edge_count: int
    no_edges: bool


def blur_probability(width, jnb_width):
    return 1.0 - np.exp(-((np.asarray(width, dtype=float) / jnb_width) ** BETA))


def detect_edges(img255: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Boolean edge mask and the signed horizontal gradient."""
    gx = ndimage.sobel(img255, axis=1, mode="nearest")
    mag = np.abs(gx)
    peak = mag.max()
    if peak <= 1e-9:
        return np.zeros(mag.shape, dtype=bool), gx
    left = np.pad(mag, ((0, 0), (1, 0)))[:, :-1]
    right = np.pad(mag, ((0, 0), (0, 1)))[:, 1:]
    # ">=" on the left, ">" on the right keeps one pixel of a tied pair
    thin = (mag >= left) & (mag > right)
    return thin & (mag > EDGE_FRACTION * peak), gx


def _walk(img: np.ndarray, rows: np.ndarray, cols: np.ndarray, step: int, rising_mask: np.ndarray):
    """Advance each position along its row while the intensity stays strictly monotone.

    For rising edges the walk continues while values decrease going left
    (step -1) or increase going right (step +1); falling edges mirror this.
    """
    width = img.shape[1]
    pos = cols.copy()
    # +1 when the next sample should be larger than the current one
    want_up = np.where(rising_mask, step, -step)
    active = np.ones(pos.size, dtype=bool)
    while active.any():
        idx = np.flatnonzero(active)
        nxt = pos[idx] + step
        inside = (nxt >= 0) & (nxt < width)
        cur_v = img[rows[idx], pos[idx]]
        nxt_v = img[rows[idx], np.clip(nxt, 0, width - 1)]
        moves = inside & (np.sign(nxt_v - cur_v) == want_up[idx])
        pos[idx[moves]] = nxt[moves]
        active[idx[~moves]] = False
    return pos


def edge_widths(img255: np.ndarray, edges: np.ndarray, gx: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rows, cols = np.nonzero(edges)
    rising = gx[rows, cols] > 0
    left = _walk(img255, rows, cols, -1, rising)
    right = _walk(img255, rows, cols, +1, rising)
    return rows, cols, np.maximum(right - left, 1)


def block_contrast(img255: np.ndarray) -> np.ndarray:
    """Per-pixel max-min contrast of the enclosing 64x64 block (partial edge blocks included)."""
    h, w = img255.shape
    out = np.empty_like(img255)
    for r in range(0, h, BLOCK):
        for c in range(0, w, BLOCK):
            blk = img255[r:r + BLOCK, c:c + BLOCK]
            out[r:r + BLOCK, c:c + BLOCK] = blk.max() - blk.min()
    return out


def cpbd_detail(image) -> CpbdResult:
    px = as_pixels(image)
    if min(px.shape) < MIN_SIZE:
        raise ValueError(f"image too small: cpbd needs at least {MIN_SIZE}x{MIN_SIZE}")
    img255 = px * 255.0
    edges, gx = detect_edges(img255)
    if not edges.any():
        return CpbdResult(0.0, 0, True)
    rows, cols, widths = edge_widths(img255, edges, gx)
    contrast = block_contrast(img255)[rows, cols]
    jnb = np.where(contrast <= CONTRAST_SPLIT, WIDTH_LOW_CONTRAST, WIDTH_HIGH_CONTRAST)
    prob = blur_probability(widths, jnb)
    return CpbdResult(float(np.mean(prob <= P_JNB)), int(widths.size), False)


def cpbd(image) -> float:
    """Fraction of edge pixels whose blur is not detectable; 0 when no edges exist."""
    return cpbd_detail(image).value
