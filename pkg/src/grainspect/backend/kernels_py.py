"""Pure-Python (numpy) implementations of the per-pixel hot loops.

Fallback used when the compiled extension is unavailable. The compiled
backend must reproduce these results bit-for-bit.

Convolution accumulates each output pixel on a per-pixel power-of-two
grid: every tap product is rounded once onto the grid (nearest-even) and
summed in 64-bit integers. Integer addition is exact, so the result does
not depend on the order the taps are visited. That makes the output
identical between backends, under any parallel split of the image, and
exactly covariant under 90-degree image rotations. The grid is chosen
from the largest tap magnitude, keeping the quantization error below
2**-34 relative to it.
"""

from collections import deque

import numpy as np

_NEIGHBORS8 = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))

# Tap count caps: 2**14 taps keeps the int64 accumulator overflow-free
# (|scaled tap| < 2**48, sum < 2**62).
MAX_KERNEL_SIDE = 127
_SHIFT_BASE = 48


def _grid_shift(max_abs):
    """Power-of-two shift placing max_abs just below 2**_SHIFT_BASE."""
    exp = np.frexp(max_abs)[1]
    return np.minimum(_SHIFT_BASE - exp, 1023).astype(np.int64)


def convolve_replicate(img, kernel):
    """True convolution (kernel flipped) with edge-replicated borders."""
    img = np.ascontiguousarray(img, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    kh, kw = kernel.shape
    if kh > MAX_KERNEL_SIDE or kw > MAX_KERNEL_SIDE:
        raise ValueError(f"kernel side must be <= {MAX_KERNEL_SIDE}")
    h, w = img.shape
    ry, rx = kh // 2, kw // 2
    flipped = kernel[::-1, ::-1]
    padded = np.pad(img, ((ry, ry), (rx, rx)), mode="edge")
    out = np.empty_like(img)
    n_taps = kh * kw
    # Process output rows in strips to bound the product-stack memory.
    strip = max(1, (1 << 22) // max(1, n_taps * w))
    prods = np.empty((n_taps, strip, w), dtype=np.float64)
    for y0 in range(0, h, strip):
        sh = min(strip, h - y0)
        stack = prods[:, :sh, :]
        t = 0
        for i in range(kh):
            for j in range(kw):
                np.multiply(flipped[i, j], padded[y0 + i : y0 + i + sh, j : j + w],
                            out=stack[t])
                t += 1
        shift = _grid_shift(np.abs(stack).max(axis=0))
        acc = np.zeros((sh, w), dtype=np.int64)
        for t in range(n_taps):
            acc += np.rint(np.ldexp(stack[t], shift)).astype(np.int64)
        out[y0 : y0 + sh] = np.ldexp(acc.astype(np.float64), -shift)
    return out


def hysteresis_mask(img, high, low):
    """Keep pixels >= high plus any >= low pixel 8-connected to one."""
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    keep = np.zeros((h, w), dtype=bool)
    queue = deque()
    for y in range(h):
        for x in range(w):
            if img[y, x] >= high:
                keep[y, x] = True
                queue.append((y, x))
    while queue:
        y, x = queue.popleft()
        for dy, dx in _NEIGHBORS8:
            ny, nx = y + dy, x + dx
            if 0 <= ny < h and 0 <= nx < w and not keep[ny, nx] and img[ny, nx] >= low:
                keep[ny, nx] = True
                queue.append((ny, nx))
    return keep


def label_mask(mask):
    """8-connected component labels, assigned in raster first-encounter order.

    Returns (labels, count) where labels is int32 with 0 for background and
    components numbered 1..count.
    """
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    labels = np.zeros((h, w), dtype=np.int32)
    current = 0
    queue = deque()
    for y in range(h):
        for x in range(w):
            if mask[y, x] and labels[y, x] == 0:
                current += 1
                labels[y, x] = current
                queue.append((y, x))
                while queue:
                    cy, cx = queue.popleft()
                    for dy, dx in _NEIGHBORS8:
                        ny, nx = cy + dy, cx + dx
                        if 0 <= ny < h and 0 <= nx < w and mask[ny, nx] and labels[ny, nx] == 0:
                            labels[ny, nx] = current
                            queue.append((ny, nx))
    return labels, current
