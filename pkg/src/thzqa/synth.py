"""Synthetic THz-style phantoms, ripple/speckle degradation and simulated observers.

Stands in for real THz security imagery: a bright body silhouette on a
dark background, optionally with a darker concealed object, degraded by
bright rectified sinusoidal ripples and speckle whose strength grows with
a severity ``lam`` in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import ndimage

from .evaluation import mos
from .image import GrayImage

DEFAULT_WIDTH = 127
DEFAULT_HEIGHT = 380
PANEL_SIZE = 15
DEFAULT_SEED = 7
EDGE_BLUR_SIGMA = 1.0
EDGE_BLUR_RADIUS = 2


@dataclass(frozen=True)
class Target:
    x: float
    y: float
    radius: float
    offset: float = -0.25


@dataclass(frozen=True)
class PhantomConfig:
    width: int = DEFAULT_WIDTH
    height: int = DEFAULT_HEIGHT
    center: tuple[float, float] = (63.0, 200.0)
    # half-axes (x, y) of the vertically elongated body
    axes: tuple[float, float] = (38.0, 150.0)
    # superellipse exponent; 2 is a plain ellipse, larger is boxier
    roundness: float = 2.5
    target: Optional[Target] = None
    background_level: float = 0.05
    body_level: float = 0.7
    # amplitude of the smooth seeded background shading
    background_texture: float = 0.01

    def __post_init__(self):
        if self.body_level <= self.background_level:
            raise ValueError("body level must exceed background level")
        if not (0 <= self.background_level <= 1 and 0 <= self.body_level <= 1):
            raise ValueError("levels must lie in [0, 1]")


@dataclass(frozen=True)
class DegradationConfig:
    severity: float = 0.0
    ripple_count: int = 4
    ripple_amplitude: float = 0.3
    ripple_frequency: tuple[float, float] = (3.0, 14.0)
    speckle_density: float = 0.08
    speckle_brightness: float = 0.8
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if not 0.0 <= self.severity <= 1.0:
            raise ValueError("severity must lie in [0, 1]")
        if self.ripple_count < 0:
            raise ValueError("ripple count must be non-negative")


@dataclass(frozen=True)
class SyntheticSample:
    image_id: str
    image: GrayImage = field(repr=False)
    severity: float
    mos: float
    scores: tuple[int, ...]


def body_mask(config: PhantomConfig) -> np.ndarray:
    yy, xx = np.mgrid[0:config.height, 0:config.width].astype(float)
    u = np.abs(xx - config.center[0]) / config.axes[0]
    v = np.abs(yy - config.center[1]) / config.axes[1]
    return u**config.roundness + v**config.roundness <= 1.0


def _inside_body(config: PhantomConfig, x: float, y: float) -> bool:
    u = abs(x - config.center[0]) / config.axes[0]
    v = abs(y - config.center[1]) / config.axes[1]
    return u**config.roundness + v**config.roundness <= 1.0


def _check_target(config: PhantomConfig) -> None:
    t = config.target
    angles = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    ring = [(t.x + t.radius * np.cos(a), t.y + t.radius * np.sin(a)) for a in angles]
    if not all(_inside_body(config, x, y) for x, y in [(t.x, t.y), *ring]):
        raise ValueError("target lies outside the silhouette")


def _soften(a: np.ndarray) -> np.ndarray:
    return ndimage.gaussian_filter(a, EDGE_BLUR_SIGMA, mode="nearest",
                                   truncate=EDGE_BLUR_RADIUS / EDGE_BLUR_SIGMA)


def generate_phantom(config: PhantomConfig = PhantomConfig(), seed: int = DEFAULT_SEED) -> GrayImage:
    if config.target is not None:
        _check_target(config)
    levels = np.where(body_mask(config), config.body_level, config.background_level)
    if config.target is not None:
        t = config.target
        yy, xx = np.mgrid[0:config.height, 0:config.width]
        disk = (xx - t.x) ** 2 + (yy - t.y) ** 2 <= t.radius**2
        levels = np.where(disk, levels + t.offset, levels)
    img = _soften(levels)
    if config.background_texture > 0:
        rng = np.random.default_rng(seed)
        field_ = ndimage.gaussian_filter(rng.standard_normal(img.shape), 12.0, mode="wrap")
        field_ /= max(np.abs(field_).max(), 1e-12)
        img = img + config.background_texture * field_
    return GrayImage(np.clip(img, 0.0, 1.0))


def ripple_field(shape: tuple[int, int], config: DegradationConfig) -> np.ndarray:
    """Unit-severity additive ripple pattern (non-negative)."""
    h, w = shape
    rng = np.random.default_rng([config.seed, 1])
    yy, xx = np.mgrid[0:h, 0:w].astype(float)
    out = np.zeros(shape)
    for _ in range(config.ripple_count):
        theta = rng.uniform(0, np.pi)
        phase = rng.uniform(0, 2 * np.pi)
        freq = rng.uniform(*config.ripple_frequency) / w
        amp = config.ripple_amplitude * rng.uniform(0.5, 1.0)
        wave = np.sin(2 * np.pi * freq * (xx * np.cos(theta) + yy * np.sin(theta)) + phase)
        out += amp * np.maximum(wave, 0.0)
    return out


def apply_degradation(image: GrayImage, config: DegradationConfig) -> GrayImage:
    lam = config.severity
    if lam == 0.0:
        return image
    px = image.pixels
    rng = np.random.default_rng([config.seed, 2])
    draw = rng.random(px.shape)
    brightness = config.speckle_brightness * rng.uniform(0.5, 1.0, px.shape)
    # same draws at every severity, so speckle sets are nested as lam grows
    speckle = np.where(draw < config.speckle_density * lam, brightness, 0.0)
    out = px + lam * ripple_field(px.shape, config) + speckle
    return GrayImage(np.clip(out, 0.0, 1.0))


def simulate_observers(severity: float, panel_size: int = PANEL_SIZE, seed: int = DEFAULT_SEED,
                       sigma: float = 0.5) -> list[int]:
    if not 0.0 <= severity <= 1.0:
        raise ValueError("severity must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, sigma, panel_size) if sigma > 0 else np.zeros(panel_size)
    raw = np.clip(5.0 - 4.0 * severity + noise, 1.0, 5.0)
    return [int(s) for s in np.rint(raw)]


def random_phantom_config(rng: np.random.Generator, base: PhantomConfig = PhantomConfig()) -> PhantomConfig:
    """Jitter body geometry and place an optional target inside it."""
    w, h = base.width, base.height
    cx = w / 2 + rng.uniform(-4, 4)
    cy = h * 0.53 + rng.uniform(-10, 10)
    ax = w * rng.uniform(0.27, 0.32)
    ay = h * rng.uniform(0.36, 0.42)
    cfg = replace(base, center=(cx, cy), axes=(ax, ay), target=None)
    if rng.random() < 0.8:
        radius = rng.uniform(5, 10)
        for _ in range(100):
            tx = cx + rng.uniform(-0.6, 0.6) * ax
            ty = cy + rng.uniform(-0.7, 0.7) * ay
            if _inside_body(cfg, tx, ty):
                candidate = replace(cfg, target=Target(tx, ty, radius, -rng.uniform(0.15, 0.35)))
                try:
                    _check_target(candidate)
                except ValueError:
                    continue
                return candidate
    return cfg


def generate_sample(index: int, seed: int = DEFAULT_SEED, severity: Optional[float] = None,
                    base: PhantomConfig = PhantomConfig(),
                    degradation: DegradationConfig = DegradationConfig()) -> SyntheticSample:
    """One sample whose randomness derives only from (seed, index)."""
    rng = np.random.default_rng([seed, index])
    lam = float(rng.beta(2.0, 2.0)) if severity is None else float(severity)
    sub = rng.integers(0, 2**63, size=3)
    cfg = random_phantom_config(rng, base)
    clean = generate_phantom(cfg, int(sub[0]))
    img = apply_degradation(clean, replace(degradation, severity=lam, seed=int(sub[1])))
    scores = simulate_observers(lam, PANEL_SIZE, int(sub[2]))
    return SyntheticSample(f"thz_{index:04d}", img, lam, mos(scores), tuple(scores))


def generate_dataset(count: int = 181, seed: int = DEFAULT_SEED) -> list[SyntheticSample]:
    if count < 1:
        raise ValueError("count must be at least 1")
    return [generate_sample(i, seed) for i in range(count)]


def severity_ladder(seed: int, levels=(0.0, 0.25, 0.5, 0.75, 1.0)) -> list[SyntheticSample]:
    """The same phantom and noise draws degraded at increasing severities."""
    return [generate_sample(0, seed, severity=lam) for lam in levels]


MANIFEST_PREFIX = ["image_id", "file", "severity", "mos"]


def manifest_rows(samples: list[SyntheticSample], suffix: str = ".pgm") -> list[list[str]]:
    """Manifest table (header first) with one row per sample."""
    n_obs = max(len(s.scores) for s in samples)
    header = MANIFEST_PREFIX + [f"s{i}" for i in range(1, n_obs + 1)]
    rows = [header]
    for s in samples:
        rows.append([s.image_id, s.image_id + suffix, repr(s.severity), repr(s.mos)]
                    + [str(v) for v in s.scores])
    return rows
