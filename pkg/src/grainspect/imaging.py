"""Image loading, color band extraction, and window tiling.

Conventions used across the package:

* a color image is a float64 array of shape (height, width, 3) with
  channel values in [0, 1];
* a scalar band is a float64 array of shape (height, width) with finite
  values;
* pixel coordinates are (x, y) with x the column and y the row.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError

BANDS = ("red", "green", "saturation", "value", "gray")

# Short band codes used in feature descriptors and CLI flags.
BAND_CODES = {"r": "red", "g": "green", "s": "saturation", "v": "value"}


@dataclass(frozen=True)
class WindowGrid:
    """Axis-aligned, non-overlapping square tiling anchored at (0, 0).

    origins lists the top-left (x, y) corner of every window in row-major
    order. Partial border strips are discarded.
    """

    window_size: int
    origins: tuple[tuple[int, int], ...]

    def __len__(self):
        return len(self.origins)


def load_image(path) -> np.ndarray:
    """Load an 8-bit RGB raster (PNG or binary PPM) as floats in [0, 1]."""
    path = Path(path)
    try:
        head = path.open("rb").read(8)
    except OSError as exc:
        raise DataError(f"unreadable file: {path}: {exc}") from exc
    if head.startswith(b"\x89PNG"):
        return _load_png(path)
    if head.startswith(b"P6"):
        return _load_ppm(path)
    raise DataError(f"unsupported format: {path} (expected PNG or binary PPM)")


def _load_png(path: Path) -> np.ndarray:
    from PIL import Image

    try:
        with Image.open(path) as im:
            im = im.convert("RGB")
            arr = np.asarray(im, dtype=np.float64)
    except Exception as exc:
        raise DataError(f"unreadable file: {path}: {exc}") from exc
    if arr.size == 0:
        raise DataError(f"zero-sized image: {path}")
    return arr / 255.0


def _load_ppm(path: Path) -> np.ndarray:
    data = path.read_bytes()
    stream = io.BytesIO(data)

    def token():
        # Whitespace-separated header token; '#' starts a comment.
        tok = b""
        while True:
            c = stream.read(1)
            if not c:
                raise DataError(f"unreadable file: {path}: truncated header")
            if c == b"#":
                while c and c != b"\n":
                    c = stream.read(1)
                continue
            if c.isspace():
                if tok:
                    return tok
                continue
            tok += c

    magic = token()
    if magic != b"P6":
        raise DataError(f"unsupported format: {path}")
    try:
        width, height, maxval = int(token()), int(token()), int(token())
    except ValueError as exc:
        raise DataError(f"unreadable file: {path}: bad header") from exc
    if width <= 0 or height <= 0:
        raise DataError(f"zero-sized image: {path}")
    if maxval != 255:
        raise DataError(f"unsupported format: {path}: only 8-bit PPM is supported")
    raw = stream.read(width * height * 3)
    if len(raw) < width * height * 3:
        raise DataError(f"unreadable file: {path}: truncated pixel data")
    arr = np.frombuffer(raw, dtype=np.uint8).reshape(height, width, 3)
    return arr.astype(np.float64) / 255.0


def to_band(img: np.ndarray, band: str) -> np.ndarray:
    """Extract one scalar band from an RGB image.

    red/green are the raw channels; value = max(r, g, b); saturation is
    (value - min(r, g, b)) / value with 0 where value = 0; gray is the
    channel mean.
    """
    img = np.asarray(img, dtype=np.float64)
    if band == "red":
        return img[:, :, 0].copy()
    if band == "green":
        return img[:, :, 1].copy()
    if band == "value":
        return img.max(axis=2)
    if band == "saturation":
        value = img.max(axis=2)
        chroma = value - img.min(axis=2)
        return np.divide(chroma, value, out=np.zeros_like(value), where=value > 0)
    if band == "gray":
        return img.mean(axis=2)
    raise ValueError(f"unknown band {band!r}; expected one of {BANDS}")


def tile_windows(width: int, height: int, window_size: int) -> WindowGrid:
    """Tile a width x height image into non-overlapping square windows."""
    if window_size < 1:
        raise ValueError("window_size must be >= 1")
    nx = width // window_size
    ny = height // window_size
    origins = tuple(
        (ix * window_size, iy * window_size) for iy in range(ny) for ix in range(nx)
    )
    return WindowGrid(window_size=window_size, origins=origins)
