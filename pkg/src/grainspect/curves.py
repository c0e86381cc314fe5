"""Boundary tracing, truncated Fourier boundary model, and curve extraction.

A support region's outer boundary is traced with the Moore neighborhood,
modeled as a truncated complex Fourier series, and split at the two
strongest curvature extrema; averaging the two arcs yields an open curve
that runs down the middle of the region.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Clockwise neighbor ring (dx, dy), y growing downward, starting West.
_RING = ((-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1))
_RING_INDEX = {off: i for i, off in enumerate(_RING)}

SPEED_EPS = 1e-9
CURVATURE_SAMPLES = 256


@dataclass(frozen=True)
class BoundarySequence:
    """Closed outer boundary as complex points x + jy, one per trace step.

    Consecutive points (cyclically) are 8-neighbors. The sequence is
    oriented so its enclosed area is positive in (x, y) coordinates,
    which keeps the boundary's energy in the non-negative harmonics of
    the truncated series.
    """

    points: np.ndarray

    @property
    def T(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class FourierBoundary:
    """Truncated Fourier model of a closed boundary: sum of B_n e^(j2pi n t/T)."""

    coefficients: np.ndarray  # complex, index n = 0..order
    T: int

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    def evaluate(self, t, derivative: int = 0):
        """Evaluate the series (or its analytic derivative) at real t."""
        t = np.asarray(t, dtype=np.float64)
        n = np.arange(len(self.coefficients))
        omega = 2.0 * np.pi * n / self.T
        factors = self.coefficients * (1j * omega) ** derivative
        phases = np.exp(1j * np.multiply.outer(t, omega))
        return phases @ factors


@dataclass(frozen=True)
class Curve:
    """Open curve s(t) from arc averaging, sampled on a uniform parameter.

    samples holds s at uniform steps of the normalized parameter in
    [0, 1]; dsamples holds ds/dt at the same points. a1 and a2 are the
    boundary parameters the curve was split at.
    """

    samples: np.ndarray
    dsamples: np.ndarray
    a1: float
    a2: float

    @property
    def start(self) -> complex:
        return complex(self.samples[0])

    @property
    def end(self) -> complex:
        return complex(self.samples[-1])


def moore_trace(mask: np.ndarray) -> tuple[np.ndarray, float]:
    """Trace the outer boundary of the foreground in an 8-connected mask.

    Returns (points, perimeter): points is an (n, 2) int array of (x, y)
    positions starting at the topmost-leftmost boundary pixel, and
    perimeter is the cyclic trace length with diagonal steps weighted
    sqrt(2). Interior holes are ignored. A single-pixel mask yields one
    point and perimeter 1.0.

    The mask must contain one 8-connected foreground component; a trace
    of a multi-component mask follows only the component holding the
    topmost-leftmost pixel.
    """
    mask = np.asarray(mask, dtype=bool)
    ys, xs = np.nonzero(mask)
    if len(ys) == 0:
        raise ValueError("cannot trace an empty mask")
    first = np.lexsort((xs, ys))[0]
    start = (int(xs[first]), int(ys[first]))
    h, w = mask.shape

    def scan(cur, back):
        # First foreground neighbor clockwise after the backtrack, plus
        # the position scanned immediately before it (the new backtrack).
        idx = _RING_INDEX[(back[0] - cur[0], back[1] - cur[1])]
        prev = back
        for k in range(1, 9):
            dx, dy = _RING[(idx + k) % 8]
            cand = (cur[0] + dx, cur[1] + dy)
            if 0 <= cand[1] < h and 0 <= cand[0] < w and mask[cand[1], cand[0]]:
                return cand, prev
            prev = cand
        return None, None

    # Walk (position, backtrack) states until one repeats; the repeating
    # cycle is the complete outer boundary regardless of spurs.
    seen: dict[tuple, int] = {}
    seq: list[tuple[int, int]] = []
    cur = start
    back = (start[0] - 1, start[1])
    cycle = None
    while True:
        key = (cur, back)
        if key in seen:
            cycle = seq[seen[key]:]
            break
        seen[key] = len(seq)
        seq.append(cur)
        nxt, nback = scan(cur, back)
        if nxt is None:
            cycle = [cur]
            break
        cur, back = nxt, nback

    points = np.array(cycle, dtype=np.int64)
    if len(points) == 1:
        return points, 1.0

    # Rotate so the topmost-leftmost pixel comes first.
    order = np.lexsort((points[:, 0], points[:, 1]))[0]
    points = np.roll(points, -order, axis=0)

    steps = np.diff(points, axis=0, append=points[:1])
    perimeter = float(np.hypot(steps[:, 0], steps[:, 1]).sum())

    # Orient for positive enclosed area (shoelace in x, y coordinates).
    x, y = points[:, 0], points[:, 1]
    area2 = int(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))
    if area2 < 0:
        points = np.concatenate([points[:1], points[:0:-1]])
    return points, perimeter


def trace_boundary(region) -> BoundarySequence:
    """Outer boundary of a support region in image coordinates."""
    local, (ox, oy) = region.local_mask()
    points, _ = moore_trace(local)
    complex_points = (points[:, 0] + ox) + 1j * (points[:, 1] + oy)
    return BoundarySequence(points=complex_points.astype(np.complex128))


def fourier_coefficients(boundary: BoundarySequence, order: int = 4) -> FourierBoundary:
    """Coefficients B_n = (1/T) sum b(t) e^(-j2pi n t/T) for n = 0..order."""
    T = boundary.T
    if T < 2 * order + 1:
        raise ValueError(f"boundary too short for order {order}: T={T}")
    b = np.asarray(boundary.points, dtype=np.complex128)
    t = np.arange(T)
    coeffs = np.empty(order + 1, dtype=np.complex128)
    for n in range(order + 1):
        coeffs[n] = np.sum(b * np.exp(-2j * np.pi * n * t / T)) / T
    return FourierBoundary(coefficients=coeffs, T=T)


def evaluate_boundary(fb: FourierBoundary, t):
    """Reconstructed boundary point(s) at real parameter t."""
    return fb.evaluate(t)


def curvature(fb: FourierBoundary, t):
    """Signed curvature of the reconstructed boundary at parameter t.

    Raises ValueError when the parametrization speed is degenerate at a
    scalar t; array inputs raise if any point is degenerate.
    """
    d1 = fb.evaluate(t, derivative=1)
    d2 = fb.evaluate(t, derivative=2)
    speed_sq = d1.real**2 + d1.imag**2
    if np.any(np.sqrt(speed_sq) <= SPEED_EPS):
        raise ValueError("degenerate (near-zero speed) parameter point")
    num = d1.real * d2.imag - d1.imag * d2.real
    return num / speed_sq**1.5


def curvature_profile(fb: FourierBoundary, n_samples: int = CURVATURE_SAMPLES):
    """Curvature at uniform parameters; degenerate samples are flagged.

    Returns (ts, kappa, valid); kappa is 0 where valid is False.
    """
    ts = np.arange(n_samples) * (fb.T / n_samples)
    d1 = fb.evaluate(ts, derivative=1)
    d2 = fb.evaluate(ts, derivative=2)
    speed_sq = d1.real**2 + d1.imag**2
    valid = np.sqrt(speed_sq) > SPEED_EPS
    num = d1.real * d2.imag - d1.imag * d2.real
    kappa = np.zeros(n_samples)
    np.divide(num, speed_sq**1.5, out=kappa, where=valid)
    return ts, kappa, valid


def _curvature_peaks(kappa_abs: np.ndarray, valid: np.ndarray) -> list[int]:
    # Circular local maxima of |K|; a plateau counts once at its first
    # sample, and invalid samples never qualify.
    mag = np.where(valid, kappa_abs, -np.inf)
    left = np.roll(mag, 1)
    right = np.roll(mag, -1)
    peaks = np.nonzero((mag > left) & (mag >= right) & valid)[0]
    return sorted(peaks, key=lambda i: (-mag[i], i))


def extract_curve(fb: FourierBoundary, n_samples: int = CURVATURE_SAMPLES) -> Curve:
    """Open curve from splitting the boundary at its two strongest
    curvature extrema and averaging the two arcs.

    The boundary is split at parameters a1 < a2, the arc from a2 back to
    a1 is reversed so both arcs run from b(a1) to b(a2), and the curve is
    their pointwise mean. Falls back to splitting at t = 0 and t = T/2
    when fewer than two extrema exist (a perfect circle).
    """
    if n_samples < 16:
        raise ValueError("n_samples must be >= 16")
    ts, kappa, valid = curvature_profile(fb, n_samples)
    peaks = _curvature_peaks(np.abs(kappa), valid)
    if len(peaks) >= 2:
        a1, a2 = sorted((ts[peaks[0]], ts[peaks[1]]))
    else:
        a1, a2 = 0.0, fb.T / 2.0
    span_u = a2 - a1
    span_l = fb.T - span_u
    s = np.linspace(0.0, 1.0, n_samples)
    t_upper = a1 + s * span_u
    t_lower = a1 + fb.T - s * span_l
    upper = fb.evaluate(t_upper)
    lower = fb.evaluate(t_lower)
    samples = 0.5 * (upper + lower)
    dsamples = 0.5 * (
        fb.evaluate(t_upper, derivative=1) * span_u
        - fb.evaluate(t_lower, derivative=1) * span_l
    )
    return Curve(samples=samples, dsamples=dsamples, a1=float(a1), a2=float(a2))
