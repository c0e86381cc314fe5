"""Annotation ingestion, window labeling, train/test splitting, feature CSV.

Annotation format: one defect per line, ``image_id x0 y0 x1 y1 class``,
whitespace-separated, with ``#`` starting a comment. A dataset manifest
is a directory holding ``images/`` and a ``labels.txt`` in this format.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataError
from .features import FeatureVector, all_descriptors
from .imaging import WindowGrid

CLASSES = (
    "sound_knot",
    "dry_knot",
    "resin_pocket",
    "core_stripe",
    "split",
    "wane",
    "shake",
    "blue_stain",
    "brown_stain",
    "bark_pocket",
)
KNOT_CLASSES = ("sound_knot", "dry_knot")

DEFECTIVE = "defective"
NON_DEFECTIVE = "non_defective"
KNOT = "knot"
NON_KNOT = "non_knot"

# A window counts as defective when one annotation rectangle covers at
# least this fraction of it.
OVERLAP_FRACTION = 0.2


@dataclass(frozen=True)
class DefectAnnotation:
    """Expert-labeled defect rectangle on one image."""

    image_id: str
    x0: int
    y0: int
    x1: int
    y1: int
    cls: str


@dataclass(frozen=True)
class WindowLabel:
    """Hierarchical labels of one window.

    level2/level3 are empty strings for windows the level does not apply
    to (level2 needs a defective window, level3 a knot).
    """

    level1: str
    level2: str = ""
    level3: str = ""
    cls: str = ""


@dataclass
class Sample:
    """One window: identity, features, and hierarchical labels."""

    image_id: str
    origin: tuple[int, int]
    features: FeatureVector
    label: WindowLabel


@dataclass(frozen=True)
class SplitSpec:
    """Per-class training counts and the shuffle seed."""

    counts: dict[str, int] = field(default_factory=dict)
    seed: int = 42


def parse_labels(path) -> list[DefectAnnotation]:
    """Read annotations, reporting the line number of any malformed line."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"unreadable label file: {path}: {exc}") from exc
    annotations = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 6:
            raise DataError(f"{path}:{lineno}: expected 6 fields, got {len(parts)}")
        image_id, *coords, cls = parts
        try:
            x0, y0, x1, y1 = (int(c) for c in coords)
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: non-integer coordinate") from exc
        if x0 >= x1:
            raise DataError(f"{path}:{lineno}: x0 < x1 violated")
        if y0 >= y1:
            raise DataError(f"{path}:{lineno}: y0 < y1 violated")
        if cls not in CLASSES:
            raise DataError(f"{path}:{lineno}: unknown class {cls!r}")
        annotations.append(DefectAnnotation(image_id, x0, y0, x1, y1, cls))
    return annotations


def label_windows(grid: WindowGrid, annotations: list[DefectAnnotation]) -> list[WindowLabel]:
    """Label each window of the grid from overlapping annotation rectangles.

    A window is defective when some single rectangle covers at least 20%
    of it; its class is the rectangle with the largest overlap, earlier
    annotations winning exact ties. Knotness and dryness follow from the
    class.
    """
    size = grid.window_size
    window_area = size * size
    labels = []
    for x0, y0 in grid.origins:
        best_cls = ""
        best_overlap = 0
        for ann in annotations:
            ox = min(x0 + size, ann.x1) - max(x0, ann.x0)
            oy = min(y0 + size, ann.y1) - max(y0, ann.y0)
            overlap = ox * oy if (ox > 0 and oy > 0) else 0
            if overlap > best_overlap:
                best_overlap = overlap
                best_cls = ann.cls
        # Integer comparison of overlap >= OVERLAP_FRACTION * window_area.
        if best_overlap * 5 >= window_area:
            level2 = KNOT if best_cls in KNOT_CLASSES else NON_KNOT
            level3 = best_cls if best_cls in KNOT_CLASSES else ""
            labels.append(WindowLabel(DEFECTIVE, level2, level3, best_cls))
        else:
            labels.append(WindowLabel(NON_DEFECTIVE))
    return labels


def split(samples: list[Sample], spec: SplitSpec, label_of) -> tuple[list[Sample], list[Sample]]:
    """Deterministic per-class split: first spec.counts[c] shuffled samples
    of each class go to training, the rest to test.

    label_of maps a sample to its class at the level being trained.
    Classes without an entry in spec.counts contribute only test samples.
    """
    order = sorted(range(len(samples)), key=lambda i: (samples[i].image_id, samples[i].origin))
    random.Random(spec.seed).shuffle(order)
    taken = {cls: 0 for cls in spec.counts}
    train, test = [], []
    for i in order:
        sample = samples[i]
        cls = label_of(sample)
        want = spec.counts.get(cls, 0)
        if taken.get(cls, 0) < want:
            taken[cls] += 1
            train.append(sample)
        else:
            test.append(sample)
    for cls, want in spec.counts.items():
        if taken[cls] < want:
            raise DataError(
                f"split infeasible: class {cls!r} has {taken[cls]} samples, need {want}"
            )
    return train, test


# --- feature CSV -----------------------------------------------------------

_META_COLUMNS = ("image_id", "window_x", "window_y", "label1", "label2", "label3", "class")


def write_features_csv(samples: list[Sample], path, bands=None) -> None:
    """Write one row per window; missing features are empty cells."""
    descriptors = all_descriptors() if bands is None else all_descriptors(bands)
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(list(_META_COLUMNS) + descriptors)
        for s in samples:
            row = [
                s.image_id,
                s.origin[0],
                s.origin[1],
                s.label.level1,
                s.label.level2,
                s.label.level3,
                s.label.cls,
            ]
            row.extend(
                repr(s.features[d]) if d in s.features else "" for d in descriptors
            )
            writer.writerow(row)


def read_features_csv(path) -> list[Sample]:
    """Read a feature CSV produced by write_features_csv."""
    path = Path(path)
    try:
        handle = path.open(newline="")
    except OSError as exc:
        raise DataError(f"unreadable feature csv: {path}: {exc}") from exc
    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty feature csv") from None
        if header[: len(_META_COLUMNS)] != list(_META_COLUMNS):
            raise DataError(f"{path}: unexpected feature csv header")
        descriptors = header[len(_META_COLUMNS):]
        samples = []
        for row in reader:
            meta, values = row[: len(_META_COLUMNS)], row[len(_META_COLUMNS):]
            features = {
                d: float(v) for d, v in zip(descriptors, values) if v != ""
            }
            samples.append(
                Sample(
                    image_id=meta[0],
                    origin=(int(meta[1]), int(meta[2])),
                    features=features,
                    label=WindowLabel(meta[3], meta[4], meta[5], meta[6]),
                )
            )
    return samples


def load_manifest(manifest_dir) -> tuple[list[tuple[str, Path]], list[DefectAnnotation]]:
    """List (image_id, path) pairs and annotations of a dataset manifest.

    The manifest is a directory with an ``images/`` subdirectory and an
    optional ``labels.txt``. Image ids are file stems; ids must be unique.
    """
    manifest_dir = Path(manifest_dir)
    images_dir = manifest_dir / "images"
    if not images_dir.is_dir():
        raise DataError(f"manifest {manifest_dir} has no images/ directory")
    entries = []
    seen = set()
    for path in sorted(images_dir.iterdir()):
        if path.suffix.lower() not in (".png", ".ppm"):
            continue
        if path.stem in seen:
            raise DataError(f"duplicate image id {path.stem!r} in {images_dir}")
        seen.add(path.stem)
        entries.append((path.stem, path))
    if not entries:
        raise DataError(f"no PNG or PPM images found in {images_dir}")
    labels_path = manifest_dir / "labels.txt"
    annotations = parse_labels(labels_path) if labels_path.exists() else []
    return entries, annotations
