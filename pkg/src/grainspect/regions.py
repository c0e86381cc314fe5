"""Support region extraction from filter response maps.

A response map is normalized by its maximum magnitude, thresholded
(hysteresis for gradient magnitude, single threshold for LoG), and the
surviving pixels are grouped into 8-connected labeled regions; regions
below a minimum pixel count are discarded.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backend, filtering
from .curves import moore_trace

GMSR = "G"
LGSR = "L"
POLARITIES = ("both", "positive", "negative")

# A response whose peak is this far below the band scale is accumulation
# noise from a flat surface, not structure.
_RESPONSE_FLOOR = 1e-12


@dataclass
class SupportRegion:
    """One 8-connected pixel group from a thresholded response map."""

    id: int
    kind: str | None
    xs: np.ndarray  # column coordinates, int32
    ys: np.ndarray  # row coordinates, int32
    bbox: tuple[int, int, int, int]  # (x0, y0, x1, y1), exclusive max
    _perimeter: float | None = field(default=None, repr=False)

    @property
    def area(self) -> int:
        return len(self.xs)

    @property
    def pixels(self) -> set[tuple[int, int]]:
        return {(int(x), int(y)) for x, y in zip(self.xs, self.ys)}

    def local_mask(self) -> tuple[np.ndarray, tuple[int, int]]:
        """Binary mask cropped to the bounding box, plus its (x, y) origin."""
        x0, y0, x1, y1 = self.bbox
        mask = np.zeros((y1 - y0, x1 - x0), dtype=bool)
        mask[self.ys - y0, self.xs - x0] = True
        return mask, (x0, y0)

    @property
    def perimeter(self) -> float:
        """Boundary trace length, diagonal steps weighted sqrt(2)."""
        if self._perimeter is None:
            mask, _ = self.local_mask()
            _, self._perimeter = moore_trace(mask)
        return self._perimeter


@dataclass
class RegionSet:
    """Support regions extracted from one response map."""

    regions: list[SupportRegion]
    width: int
    height: int
    kind: str | None
    params: dict

    def __len__(self):
        return len(self.regions)

    def __iter__(self):
        return iter(self.regions)


def normalize_max(img: np.ndarray) -> np.ndarray:
    """Scale by the maximum magnitude; an all-zero map passes through."""
    img = np.asarray(img, dtype=np.float64)
    peak = np.abs(img).max() if img.size else 0.0
    if peak == 0.0:
        return img.copy()
    return img / peak


def hysteresis_threshold(img: np.ndarray, high: float, low: float) -> np.ndarray:
    """Pixels >= high, plus pixels >= low 8-connected to one through >= low."""
    if not 0.0 <= low <= high:
        raise ValueError(f"thresholds must satisfy 0 <= low <= high, got {low}, {high}")
    return backend.hysteresis_mask(np.asarray(img, dtype=np.float64), high, low)


def label_components(mask: np.ndarray, kind: str | None = None) -> RegionSet:
    """Group set pixels into 8-connected regions, ids in raster order."""
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    labels, count = backend.label_mask(mask)
    regions = []
    if count:
        ys, xs = np.nonzero(labels)
        ids = labels[ys, xs]
        order = np.argsort(ids, kind="stable")
        ys, xs, ids = ys[order], xs[order], ids[order]
        starts = np.searchsorted(ids, np.arange(1, count + 2))
        for rid in range(1, count + 1):
            lo, hi = starts[rid - 1], starts[rid]
            rxs = xs[lo:hi].astype(np.int32)
            rys = ys[lo:hi].astype(np.int32)
            bbox = (int(rxs.min()), int(rys.min()), int(rxs.max()) + 1, int(rys.max()) + 1)
            regions.append(SupportRegion(id=rid, kind=kind, xs=rxs, ys=rys, bbox=bbox))
    return RegionSet(regions=regions, width=w, height=h, kind=kind, params={})


def filter_regions(region_set: RegionSet, min_size: int) -> RegionSet:
    """Keep regions with area >= min_size; ids are preserved."""
    if min_size < 0:
        raise ValueError("min_size must be >= 0")
    kept = [r for r in region_set.regions if r.area >= min_size]
    params = dict(region_set.params, min_size=min_size)
    return RegionSet(
        regions=kept,
        width=region_set.width,
        height=region_set.height,
        kind=region_set.kind,
        params=params,
    )


def _flat_response(response: np.ndarray, band: np.ndarray) -> bool:
    scale = max(1.0, float(np.abs(band).max())) if band.size else 1.0
    return float(np.abs(response).max()) <= _RESPONSE_FLOOR * scale


def extract_gmsr(
    band: np.ndarray,
    tau_g: float = 2.0,
    high: float = 0.2,
    low: float = 0.15,
    min_size: int = 50,
) -> RegionSet:
    """Gradient-magnitude support regions of one scalar band."""
    band = np.asarray(band, dtype=np.float64)
    params = {"tau_g": tau_g, "high": high, "low": low, "min_size": min_size}
    response = filtering.gradient_magnitude(band, tau_g).magnitude
    if _flat_response(response, band):
        return RegionSet([], band.shape[1], band.shape[0], GMSR, params)
    mask = hysteresis_threshold(normalize_max(response), high, low)
    region_set = filter_regions(label_components(mask, kind=GMSR), min_size)
    region_set.params.update(params)
    return region_set


def extract_lgsr(
    band: np.ndarray,
    tau_l: float = 1.0,
    threshold: float = 0.2,
    min_size: int = 50,
    polarity: str = "both",
) -> RegionSet:
    """Laplacian-of-Gaussian support regions of one scalar band.

    polarity restricts the response to one sign before normalization:
    "positive", "negative", or "both" (threshold the magnitude).
    """
    if polarity not in POLARITIES:
        raise ValueError(f"polarity must be one of {POLARITIES}")
    band = np.asarray(band, dtype=np.float64)
    params = {
        "tau_l": tau_l,
        "threshold": threshold,
        "min_size": min_size,
        "polarity": polarity,
    }
    response = filtering.log_response(band, tau_l)
    if polarity == "positive":
        response = np.where(response > 0.0, response, 0.0)
    elif polarity == "negative":
        response = np.where(response < 0.0, response, 0.0)
    if _flat_response(response, band):
        return RegionSet([], band.shape[1], band.shape[0], LGSR, params)
    mask = np.abs(normalize_max(response)) >= threshold
    region_set = filter_regions(label_components(mask, kind=LGSR), min_size)
    region_set.params.update(params)
    return region_set
