"""Grayscale images, THz image cubes, file I/O and the Z-axis projection.

All samples live in [0, 1].  Images are stored as read-only ``float64``
arrays of shape ``(height, width)``; cubes as ``(depth, height, width)``.
"""

from __future__ import annotations

import io
import re
import struct
from dataclasses import dataclass
from typing import BinaryIO, Union

import numpy as np
from PIL import Image


class ImageFormatError(ValueError):
    """Raised for malformed, truncated or unsupported image data."""


CUBE_MAGIC = b"THZCUBE1"
_CUBE_HEADER = struct.Struct("<8sIII")
# Guard against absurd headers before allocating.
MAX_CUBE_SAMPLES = 1 << 31


def _frozen(array: np.ndarray) -> np.ndarray:
    out = np.array(array, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class GrayImage:
    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise ValueError(f"expected a 2-D sample array, got shape {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        px = _frozen(px)
        if not np.all(np.isfinite(px)) or px.min() < 0.0 or px.max() > 1.0:
            raise ValueError("samples must be finite and within [0, 1]")
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def samples(self) -> np.ndarray:
        """Row-major flat view of the samples."""
        return self.pixels.ravel()

    @classmethod
    def from_samples(cls, width: int, height: int, samples) -> "GrayImage":
        flat = np.asarray(samples, dtype=np.float64)
        if flat.size != width * height:
            raise ValueError(f"expected {width * height} samples, got {flat.size}")
        return cls(flat.reshape(height, width))


@dataclass(frozen=True, eq=False)
class ImageCube:
    voxels: np.ndarray

    def __post_init__(self):
        vx = np.asarray(self.voxels)
        if vx.ndim != 3 or min(vx.shape) < 1:
            raise ValueError(f"expected a non-empty (depth, height, width) array, got {vx.shape}")
        vx = _frozen(vx)
        if not np.all(np.isfinite(vx)) or vx.min() < 0.0 or vx.max() > 1.0:
            raise ValueError("sample out of range")
        object.__setattr__(self, "voxels", vx)

    @property
    def width(self) -> int:
        return self.voxels.shape[2]

    @property
    def height(self) -> int:
        return self.voxels.shape[1]

    @property
    def depth(self) -> int:
        return self.voxels.shape[0]


def as_pixels(image: Union[GrayImage, np.ndarray]) -> np.ndarray:
    """Return the float64 sample array for an image or raw array."""
    if isinstance(image, GrayImage):
        return image.pixels
    return np.asarray(image, dtype=np.float64)


# --------------------------------------------------------------------------
# PGM / PNG

_PGM_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _read_bytes(source) -> bytes:
    if isinstance(source, (bytes, bytearray, memoryview)):
        return bytes(source)
    return source.read()


def _parse_pgm(data: bytes) -> GrayImage:
    magic = data[:2]
    pos = 2
    header = []
    for _ in range(3):
        m = _PGM_TOKEN.match(data, pos)
        if m is None:
            raise ImageFormatError("malformed header")
        header.append(m.group(1))
        pos = m.end()
    try:
        width, height, maxval = (int(tok) for tok in header)
    except ValueError:
        raise ImageFormatError("malformed header") from None
    if width < 1 or height < 1 or not 1 <= maxval <= 65535:
        raise ImageFormatError("malformed header")
    n = width * height

    if magic == b"P2":
        tokens = data[pos:].split()
        if len(tokens) < n:
            raise ImageFormatError("truncated payload")
        try:
            raw = np.array([int(t) for t in tokens[:n]], dtype=np.int64)
        except ValueError:
            raise ImageFormatError("malformed payload") from None
    else:
        # exactly one whitespace byte separates the header from binary data
        if pos >= len(data) or not data[pos:pos + 1].isspace():
            raise ImageFormatError("malformed header")
        pos += 1
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = n * dtype.itemsize
        if len(data) - pos < need:
            raise ImageFormatError("truncated payload")
        raw = np.frombuffer(data, dtype=dtype, count=n, offset=pos).astype(np.int64)
    if raw.max(initial=0) > maxval:
        raise ImageFormatError("sample exceeds maxval")
    return GrayImage(raw.reshape(height, width) / maxval)


def _parse_png(data: bytes) -> GrayImage:
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except Exception as exc:
        raise ImageFormatError(f"unreadable PNG: {exc}") from None
    if img.mode in ("L",):
        maxval = 255
    elif img.mode in ("I;16", "I;16B", "I"):
        maxval = 65535
    elif len(img.getbands()) > 1:
        raise ImageFormatError("multichannel input")
    else:
        raise ImageFormatError(f"unsupported PNG mode {img.mode!r}")
    raw = np.asarray(img, dtype=np.int64)
    return GrayImage(raw / maxval)


def load_image(source: Union[bytes, BinaryIO], format: str | None = None) -> GrayImage:
    """Decode a PGM (P2/P5) or 8/16-bit grayscale PNG into a GrayImage.

    ``format`` may be ``"pgm"`` or ``"png"``; by default it is sniffed from
    the magic bytes.
    """
    data = _read_bytes(source)
    fmt = (format or "").lower()
    if not fmt:
        if data[:2] in (b"P2", b"P5"):
            fmt = "pgm"
        elif data[:8] == b"\x89PNG\r\n\x1a\n":
            fmt = "png"
        else:
            raise ImageFormatError("malformed header")
    if fmt == "pgm":
        if data[:2] not in (b"P2", b"P5"):
            raise ImageFormatError("malformed header")
        return _parse_pgm(data)
    if fmt == "png":
        return _parse_png(data)
    raise ValueError(f"unknown format hint {format!r}")


def quantize(image: Union[GrayImage, np.ndarray], maxval: int) -> np.ndarray:
    return np.rint(as_pixels(image) * maxval).astype(np.int64)


def save_image(image: GrayImage, format: str = "pgm", maxval: int = 255) -> bytes:
    """Encode as binary PGM (P5) or grayscale PNG.

    ``maxval`` must be 255 or 65535 for PNG; PGM accepts any 1..65535.
    """
    if not 1 <= maxval <= 65535:
        raise ValueError("maxval must be within 1..65535")
    q = quantize(image, maxval)
    fmt = format.lower()
    if fmt in ("pgm", "pgm-p5", "p5"):
        dtype = ">u2" if maxval > 255 else "u1"
        header = b"P5\n%d %d\n%d\n" % (q.shape[1], q.shape[0], maxval)
        return header + q.astype(dtype).tobytes()
    if fmt == "png":
        if maxval == 255:
            img = Image.fromarray(q.astype(np.uint8), mode="L")
        elif maxval == 65535:
            img = Image.fromarray(q.astype(np.uint16))
        else:
            raise ValueError("PNG supports maxval 255 or 65535 only")
        buf = io.BytesIO()
        img.save(buf, format="PNG")
        return buf.getvalue()
    raise ValueError(f"unknown format {format!r}")


# --------------------------------------------------------------------------
# cube container


def load_cube(source: Union[bytes, BinaryIO]) -> ImageCube:
    data = _read_bytes(source)
    if len(data) < _CUBE_HEADER.size:
        raise ImageFormatError("bad magic" if data[:8] != CUBE_MAGIC else "truncated header")
    magic, width, height, depth = _CUBE_HEADER.unpack_from(data)
    if magic != CUBE_MAGIC:
        raise ImageFormatError("bad magic")
    n = width * height * depth
    if min(width, height, depth) < 1 or n > MAX_CUBE_SAMPLES:
        raise ImageFormatError("dim overflow")
    payload = memoryview(data)[_CUBE_HEADER.size:]
    if len(payload) < 4 * n:
        raise ImageFormatError("truncated payload")
    vox = np.frombuffer(payload, dtype="<f4", count=n).astype(np.float64)
    if not np.all(np.isfinite(vox)) or vox.min() < 0.0 or vox.max() > 1.0:
        raise ImageFormatError("sample out of range")
    return ImageCube(vox.reshape(depth, height, width))


def save_cube(cube: ImageCube) -> bytes:
    header = _CUBE_HEADER.pack(CUBE_MAGIC, cube.width, cube.height, cube.depth)
    return header + cube.voxels.astype("<f4").tobytes()


def max_intensity_projection(cube: ImageCube) -> GrayImage:
    """Collapse the Z axis by keeping the brightest sample at each (x, y)."""
    return GrayImage(cube.voxels.max(axis=0))
