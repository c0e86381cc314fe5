"""Window features: plain statistics, structural, and conditional statistics.

Every 60x60 window gets, per color band, plain sample statistics; per
support-region kind (G for gradient-based, L for LoG-based), structural
features of the dominant region plus the same statistics conditioned on
the union of region pixels inside the window.

Feature descriptors are strings like ``sigma(s)^G`` (conditional standard
deviation, saturation band, gradient regions), ``p10(g)`` (plain 10th
percentile of the green band) or ``dn(v)^L``. A feature vector is a plain
dict from descriptor to float; a missing feature is an absent key.
"""

from __future__ import annotations

import math

import numpy as np

from dataclasses import dataclass

from . import curves

PERCENTILES = (0.02, 0.2, 10.0, 60.0, 90.0)
STAT_NAMES = ("mean", "sigma", "skew", "kurt", "median") + tuple(
    f"p{p:g}" for p in PERCENTILES
)
STRUCT_NAMES = ("dn", "c", "k", "e")
KINDS = ("G", "L")
DEFAULT_BANDS = ("r", "g", "s", "v")

FeatureVector = dict[str, float]


@dataclass(frozen=True)
class StatFeatures:
    """Sample statistics of a pixel population."""

    mean: float
    std: float
    skewness: float
    kurtosis: float
    median: float
    percentiles: dict[float, float]

    def named(self) -> dict[str, float]:
        out = {
            "mean": self.mean,
            "sigma": self.std,
            "skew": self.skewness,
            "kurt": self.kurtosis,
            "median": self.median,
        }
        for p, v in self.percentiles.items():
            out[f"p{p:g}"] = v
        return out


@dataclass(frozen=True)
class StructFeatures:
    """Shape features of one support region.

    dn: endpoint distance of the extracted curve over its arc length.
    c: perimeter squared over 4*pi*area (1 for a circle, larger otherwise).
    k: median absolute curvature of the boundary model.
    e: major/minor axis ratio of the moment-fit ellipse (axes lam1 >= lam2).
    Entries are NaN when the underlying geometry is unavailable.
    """

    dn: float
    c: float
    k: float
    e: float
    lam1: float
    lam2: float

    def named(self) -> dict[str, float]:
        return {"dn": self.dn, "c": self.c, "k": self.k, "e": self.e}


def descriptor(name: str, band: str, kind: str | None = None) -> str:
    """Compose a feature descriptor like 'sigma(s)^G'."""
    base = f"{name}({band})"
    return f"{base}^{kind}" if kind else base


def all_descriptors(bands=DEFAULT_BANDS, kinds=KINDS) -> list[str]:
    """Canonical descriptor order used by the CSV format."""
    out = []
    for band in bands:
        out.extend(descriptor(n, band) for n in STAT_NAMES)
        for kind in kinds:
            out.extend(descriptor(n, band, kind) for n in STRUCT_NAMES)
            out.extend(descriptor(n, band, kind) for n in STAT_NAMES)
    return out


def percentile(values, p: float) -> float:
    """Nearest-rank percentile: element ceil(p/100 * N) of the sorted data.

    The rank is computed with a tiny negative guard so that mathematically
    exact boundaries (p*N/100 integral) do not round up through floating
    point, and is clamped to [1, N].
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        raise ValueError("percentile of an empty list")
    rank = math.ceil(p * values.size / 100.0 - 1e-9)
    rank = min(max(rank, 1), values.size)
    return float(np.sort(values)[rank - 1])


def lower_median(sorted_values: np.ndarray) -> float:
    """Lower-middle order statistic (index (N-1)//2 of sorted data)."""
    return float(sorted_values[(len(sorted_values) - 1) // 2])


def statistical_features(values) -> StatFeatures:
    """Mean, population std, skewness, excess kurtosis, median, percentiles.

    Moments use 1/N normalization; constant data takes the zero-variance
    convention skewness = kurtosis = 0.
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size < 2:
        raise ValueError("need at least 2 pixels for statistics")
    mean = float(values.mean())
    centered = values - mean
    m2 = float(np.mean(centered**2))
    std = math.sqrt(m2)
    if m2 == 0.0:
        skew = kurt = 0.0
    else:
        m3 = float(np.mean(centered**3))
        m4 = float(np.mean(centered**4))
        skew = m3 / m2**1.5
        kurt = m4 / m2**2 - 3.0
    ordered = np.sort(values)
    n = values.size
    pct = {}
    for p in PERCENTILES:
        rank = math.ceil(p * n / 100.0 - 1e-9)
        rank = min(max(rank, 1), n)
        pct[p] = float(ordered[rank - 1])
    return StatFeatures(
        mean=mean,
        std=std,
        skewness=skew,
        kurtosis=kurt,
        median=lower_median(ordered),
        percentiles=pct,
    )


def conditional_statistics(window: np.ndarray, mask: np.ndarray) -> StatFeatures | None:
    """Statistics restricted to masked pixels; None with fewer than 2 set.

    With an all-ones mask this reduces exactly to statistical_features of
    the whole window.
    """
    window = np.asarray(window, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != window.shape:
        raise ValueError("mask and window dimensions differ")
    selected = window[mask]
    if selected.size < 2:
        return None
    return statistical_features(selected)


def normalized_endpoint_distance(curve: curves.Curve) -> float:
    """Endpoint gap over arc length, clamped to [0, 1].

    Arc length comes from trapezoidal integration of the sampled speed.
    """
    if len(curve.samples) < 16:
        raise ValueError("curve must have at least 16 samples")
    speed = np.abs(curve.dsamples)
    arc = float(np.trapz(speed, dx=1.0 / (len(curve.samples) - 1)))
    if arc <= 0.0:
        raise ValueError("zero arc length")
    gap = abs(curve.end - curve.start)
    return min(gap / arc, 1.0)


def compactness(region) -> float:
    """Perimeter squared over 4*pi*area: 1 for a circle of any size."""
    perim = region.perimeter
    if perim <= 0.0:
        raise ValueError("degenerate perimeter")
    return perim**2 / (4.0 * math.pi * region.area)


def median_curvature(fb: curves.FourierBoundary) -> float:
    """Median absolute curvature over the uniform curvature samples."""
    _, kappa, valid = curves.curvature_profile(fb)
    if not valid.any():
        raise ValueError("all curvature samples degenerate")
    return lower_median(np.sort(np.abs(kappa[valid])))


def ellipse_axes_ratio(region) -> tuple[float, float, float]:
    """Moment-fit ellipse axes: returns (e, lam1, lam2) with e = lam1/lam2.

    Axis lengths are 4*sqrt of the coordinate-covariance eigenvalues (the
    full axes of the uniform-density equivalent ellipse). A collinear
    pixel set yields the marker (inf, lam1, 0).
    """
    if region.area < 3:
        raise ValueError("need at least 3 pixels for ellipse fit")
    coords = np.stack([region.xs, region.ys]).astype(np.float64)
    cov = np.cov(coords, bias=True)
    eigs = np.linalg.eigvalsh(cov)
    small, large = max(float(eigs[0]), 0.0), max(float(eigs[1]), 0.0)
    lam1 = 4.0 * math.sqrt(large)
    lam2 = 4.0 * math.sqrt(small)
    if lam2 == 0.0:
        return math.inf, lam1, 0.0
    return lam1 / lam2, lam1, lam2


def struct_features(region) -> StructFeatures:
    """Structural features of one region's full geometry.

    dn and k need the truncated Fourier boundary model and are NaN when
    the boundary is too short to fit one.
    """
    c = compactness(region)
    try:
        e, lam1, lam2 = ellipse_axes_ratio(region)
    except ValueError:
        e = lam1 = lam2 = math.nan
    dn = k = math.nan
    try:
        fb = curves.fourier_coefficients(curves.trace_boundary(region))
        k = median_curvature(fb)
        dn = normalized_endpoint_distance(curves.extract_curve(fb))
    except ValueError:
        pass
    return StructFeatures(dn=dn, c=c, k=k, e=e, lam1=lam1, lam2=lam2)


def window_features(
    origin: tuple[int, int],
    window_size: int,
    bands: dict[str, np.ndarray],
    gmsr: dict[str, object],
    lgsr: dict[str, object],
    struct_cache: dict | None = None,
) -> FeatureVector:
    """All features of one window across bands and region kinds.

    bands maps band codes to scalar images; gmsr/lgsr map band codes to
    the RegionSet extracted from that band. Structural features come from
    the dominant region (most pixels inside the window, ties to the lower
    id); conditional statistics use the union of all same-kind regions
    clipped to the window. Windows without a region of some kind get no
    features for that kind (missing keys). Non-finite structural values
    (e.g. the collinear ellipse marker) are also left missing.
    """
    x0, y0 = origin
    x1, y1 = x0 + window_size, y0 + window_size
    cache = struct_cache if struct_cache is not None else {}
    fv: FeatureVector = {}
    for band, image in bands.items():
        window = image[y0:y1, x0:x1]
        for name, value in statistical_features(window.ravel()).named().items():
            fv[descriptor(name, band)] = value
        for kind, by_band in (("G", gmsr), ("L", lgsr)):
            region_set = by_band.get(band)
            if region_set is None:
                continue
            overlaps = []
            for region in region_set:
                inside = (
                    (region.xs >= x0)
                    & (region.xs < x1)
                    & (region.ys >= y0)
                    & (region.ys < y1)
                )
                count = int(np.count_nonzero(inside))
                if count:
                    overlaps.append((count, region, inside))
            if not overlaps:
                continue
            _, dominant, _ = max(overlaps, key=lambda item: (item[0], -item[1].id))
            key = (kind, band, dominant.id)
            if key not in cache:
                cache[key] = struct_features(dominant)
            for name, value in cache[key].named().items():
                if math.isfinite(value):
                    fv[descriptor(name, band, kind)] = value
            mask = np.zeros((window_size, window_size), dtype=bool)
            for _, region, inside in overlaps:
                mask[region.ys[inside] - y0, region.xs[inside] - x0] = True
            stats = conditional_statistics(window, mask)
            if stats is not None:
                for name, value in stats.named().items():
                    fv[descriptor(name, band, kind)] = value
    return fv


def image_features(
    grid,
    bands: dict[str, np.ndarray],
    gmsr: dict[str, object],
    lgsr: dict[str, object],
) -> list[FeatureVector]:
    """Feature vectors for every window of one image, in grid order."""
    cache: dict = {}
    return [
        window_features(origin, grid.window_size, bands, gmsr, lgsr, cache)
        for origin in grid.origins
    ]
