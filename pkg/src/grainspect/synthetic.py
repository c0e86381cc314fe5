"""Procedural wood-surface corpus for validation and demos.

Images are brownish boards with horizontal grain, fine sensor noise, and
occasional thin dark latewood dashes; injected defects are dry knots
(dark, sharp-edged ellipses), sound knots (milder, soft-edged), and
shakes (thin wavy dark streaks). Every defect is recorded as a padded
bounding-box annotation, so a generated directory is a regular dataset
manifest.
"""

from __future__ import annotations

import numpy as np

from dataclasses import dataclass
from pathlib import Path

from .dataset import DefectAnnotation

BOARD_RGB = np.array([0.58, 0.44, 0.30])
KNOT_RGB = np.array([0.30, 0.18, 0.10])
SHAKE_RGB = np.array([0.22, 0.14, 0.08])
ANNOTATION_PAD = 4


@dataclass(frozen=True)
class CorpusSpec:
    """Knobs of the procedural generator."""

    n_images: int = 200
    width: int = 180
    height: int = 120
    seed: int = 7
    clean_fraction: float = 0.2
    max_defects: int = 2
    dash_count: tuple[int, int] = (2, 6)
    window_size: int = 60


def _grain(rng: np.random.Generator, width: int, height: int) -> np.ndarray:
    """Low-contrast horizontal grain pattern plus fine noise, zero-mean."""
    y = np.arange(height)[:, None]
    x = np.arange(width)[None, :]
    pattern = np.zeros((height, width))
    for _ in range(3):
        freq = rng.uniform(0.05, 0.22)
        phase = rng.uniform(0, 2 * np.pi)
        wobble = rng.uniform(0.5, 2.0) * np.sin(
            2 * np.pi * x / rng.uniform(60, 160) + rng.uniform(0, 2 * np.pi)
        )
        pattern += rng.uniform(0.006, 0.012) * np.sin(
            2 * np.pi * freq * (y + wobble) + phase
        )
    pattern += rng.normal(0.0, 0.003, (height, width))
    return pattern


def _soft_ellipse(width, height, cx, cy, rx, ry, angle, edge):
    """Mask in [0, 1]: 1 inside the ellipse, sigmoid falloff of given width."""
    y = np.arange(height)[:, None] - cy
    x = np.arange(width)[None, :] - cx
    ca, sa = np.cos(angle), np.sin(angle)
    u = (x * ca + y * sa) / rx
    v = (-x * sa + y * ca) / ry
    r = np.sqrt(u * u + v * v)
    # distance-to-boundary approximation scaled back to pixels
    scale = (rx + ry) / 2.0
    return 1.0 / (1.0 + np.exp((r - 1.0) * scale / max(edge, 0.3)))


def _shake_mask(rng, width, height, cx, cy, length, thickness, angle):
    """Wavy thin streak mask in [0, 1]."""
    y = np.arange(height)[:, None] - cy
    x = np.arange(width)[None, :] - cx
    ca, sa = np.cos(angle), np.sin(angle)
    u = x * ca + y * sa
    v = -x * sa + y * ca
    wave = rng.uniform(2.0, 4.0) * np.sin(
        2 * np.pi * u / rng.uniform(30, 70) + rng.uniform(0, 2 * np.pi)
    )
    across = np.abs(v - wave)
    along = np.abs(u) - length / 2.0
    profile = 1.0 / (1.0 + np.exp((across - thickness / 2.0) / 0.6))
    taper = 1.0 / (1.0 + np.exp(along / 2.0))
    return profile * taper


def _mask_bbox(mask: np.ndarray, level: float = 0.25) -> tuple[int, int, int, int] | None:
    ys, xs = np.nonzero(mask >= level)
    if len(ys) == 0:
        return None
    return int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1


def _unambiguous(rect, width, height, window_size) -> bool:
    """True when every window either clears the 20% labeling overlap or
    misses the rectangle entirely.

    Placements in between would put defect support pixels into windows
    labeled clean, which says nothing about the detector; the real data
    this emulates has knots sized to the window grid for the same reason.
    """
    x0, y0, x1, y1 = rect
    threshold = window_size * window_size // 5
    for wy in range(0, height - window_size + 1, window_size):
        for wx in range(0, width - window_size + 1, window_size):
            ox = min(wx + window_size, x1) - max(wx, x0)
            oy = min(wy + window_size, y1) - max(wy, y0)
            overlap = ox * oy if (ox > 0 and oy > 0) else 0
            if 0 < overlap < threshold:
                return False
    return True


def generate_image(
    rng: np.random.Generator, spec: CorpusSpec, defective: bool
) -> tuple[np.ndarray, list[tuple[int, int, int, int, str]]]:
    """One board image plus its defect rectangles (x0, y0, x1, y1, class)."""
    width, height = spec.width, spec.height
    base = BOARD_RGB * rng.uniform(0.92, 1.08)
    img = np.clip(base[None, None, :] + _grain(rng, width, height)[:, :, None], 0.0, 1.0)

    # Latewood dashes: real texture that support regions should ignore at
    # the default minimum region size.
    for _ in range(rng.integers(spec.dash_count[0], spec.dash_count[1] + 1)):
        cx = rng.uniform(10, width - 10)
        cy = rng.uniform(6, height - 6)
        dash = _shake_mask(
            rng, width, height, cx, cy,
            length=rng.uniform(5, 9), thickness=rng.uniform(1.2, 1.8),
            angle=rng.uniform(-0.15, 0.15),
        )
        depth = rng.uniform(0.08, 0.13)
        img = img * (1 - depth * dash[:, :, None])

    annotations = []
    if defective:
        occupied = np.zeros((height, width), dtype=bool)
        n_defects = int(rng.integers(1, spec.max_defects + 1))
        for _ in range(n_defects):
            cls = rng.choice(["dry_knot", "sound_knot", "shake"], p=[0.45, 0.2, 0.35])
            for _attempt in range(60):
                if cls == "shake":
                    length = rng.uniform(42, 95)
                    thickness = rng.uniform(2.5, 4.0)
                    angle = rng.uniform(-0.35, 0.35)
                    margin = 12
                    cx = rng.uniform(length / 2 + margin, width - length / 2 - margin)
                    cy = rng.uniform(14, height - 14)
                    mask = _shake_mask(rng, width, height, cx, cy, length, thickness, angle)
                    color, depth = SHAKE_RGB, rng.uniform(0.75, 0.9)
                else:
                    rx = rng.uniform(15, 21)
                    ry = rx * rng.uniform(0.75, 1.0)
                    angle = rng.uniform(0, np.pi)
                    cx = rng.uniform(rx + 10, width - rx - 10)
                    cy = rng.uniform(ry + 8, height - ry - 8)
                    if cls == "dry_knot":
                        edge, depth = rng.uniform(0.8, 1.4), rng.uniform(0.8, 0.95)
                    else:
                        edge, depth = rng.uniform(2.0, 2.8), rng.uniform(0.6, 0.75)
                    mask = _soft_ellipse(width, height, cx, cy, rx, ry, angle, edge)
                    color = KNOT_RGB
                bbox = _mask_bbox(mask)
                if bbox is None:
                    continue
                x0, y0, x1, y1 = bbox
                padded = (
                    max(0, x0 - ANNOTATION_PAD),
                    max(0, y0 - ANNOTATION_PAD),
                    min(width, x1 + ANNOTATION_PAD),
                    min(height, y1 + ANNOTATION_PAD),
                )
                if not _unambiguous(padded, width, height, spec.window_size):
                    continue
                core = mask >= 0.25
                if (occupied & core).any():
                    continue
                occupied |= core
                alpha = (depth * mask)[:, :, None]
                img = img * (1 - alpha) + color[None, None, :] * alpha
                annotations.append((*padded, cls))
                break
    return np.clip(img, 0.0, 1.0), annotations


def generate_corpus(out_dir, spec: CorpusSpec = CorpusSpec()) -> list[DefectAnnotation]:
    """Write a manifest directory (images/ plus labels.txt); returns annotations."""
    from PIL import Image

    out_dir = Path(out_dir)
    images_dir = out_dir / "images"
    images_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)
    annotations = []
    lines = []
    n_clean = round(spec.n_images * spec.clean_fraction)
    for index in range(spec.n_images):
        image_id = f"board{index:04d}"
        defective = index >= n_clean
        img, rects = generate_image(rng, spec, defective)
        data = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
        Image.fromarray(data, mode="RGB").save(images_dir / f"{image_id}.png")
        for x0, y0, x1, y1, cls in rects:
            annotations.append(DefectAnnotation(image_id, x0, y0, x1, y1, cls))
            lines.append(f"{image_id} {x0} {y0} {x1} {y1} {cls}")
    header = "# image_id x0 y0 x1 y1 class\n"
    (out_dir / "labels.txt").write_text(header + "\n".join(lines) + "\n", encoding="utf-8")
    return annotations
