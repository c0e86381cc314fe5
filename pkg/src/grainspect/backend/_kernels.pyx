# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-pixel hot loops: convolution, hysteresis fill, labeling.

Behavioral contract: output is bit-identical to kernels_py. See that
module for the order-independent quantized accumulation scheme the
convolution uses.
"""

from libc.math cimport fabs, frexp, ldexp, llrint
from libc.stdlib cimport free, malloc

import numpy as np

cimport numpy as cnp

cnp.import_array()

DEF SHIFT_BASE = 48
DEF MAX_KERNEL_SIDE = 127


def convolve_replicate(img, kernel):
    """True convolution (kernel flipped) with edge-replicated borders."""
    cdef cnp.ndarray[double, ndim=2] image = np.ascontiguousarray(img, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2] kern = np.asarray(kernel, dtype=np.float64)
    cdef Py_ssize_t h = image.shape[0], w = image.shape[1]
    cdef Py_ssize_t kh = kern.shape[0], kw = kern.shape[1]
    if kh > MAX_KERNEL_SIDE or kw > MAX_KERNEL_SIDE:
        raise ValueError(f"kernel side must be <= {MAX_KERNEL_SIDE}")
    cdef Py_ssize_t ry = kh // 2, rx = kw // 2
    cdef cnp.ndarray[double, ndim=2] flipped = np.ascontiguousarray(kern[::-1, ::-1])
    cdef cnp.ndarray[double, ndim=2] padded = np.pad(
        image, ((ry, ry), (rx, rx)), mode="edge")
    cdef cnp.ndarray[double, ndim=2] out = np.empty((h, w), dtype=np.float64)
    cdef Py_ssize_t n_taps = kh * kw
    cdef double* buf = <double*> malloc(n_taps * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef Py_ssize_t y, x, i, j, t
    cdef double p, m, ap, scale
    cdef int e, shift
    cdef long long acc
    cdef const double* prow
    cdef const double* krow
    try:
        with nogil:
            for y in range(h):
                for x in range(w):
                    t = 0
                    m = 0.0
                    for i in range(kh):
                        prow = &padded[y + i, x]
                        krow = &flipped[i, 0]
                        for j in range(kw):
                            p = krow[j] * prow[j]
                            buf[t] = p
                            t += 1
                            ap = fabs(p)
                            if ap > m:
                                m = ap
                    frexp(m, &e)
                    shift = SHIFT_BASE - e
                    if shift > 1023:
                        shift = 1023
                    scale = ldexp(1.0, shift)
                    acc = 0
                    for t in range(n_taps):
                        acc += llrint(buf[t] * scale)
                    out[y, x] = ldexp(<double> acc, -shift)
    finally:
        free(buf)
    return out


def hysteresis_mask(img, double high, double low):
    """Keep pixels >= high plus any >= low pixel 8-connected to one."""
    cdef cnp.ndarray[double, ndim=2] image = np.ascontiguousarray(img, dtype=np.float64)
    cdef Py_ssize_t h = image.shape[0], w = image.shape[1]
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] keep = np.zeros((h, w), dtype=np.uint8)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] qy = np.empty(h * w, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] qx = np.empty(h * w, dtype=np.int64)
    cdef Py_ssize_t head = 0, tail = 0
    cdef Py_ssize_t y, x, ny, nx
    cdef int dy, dx
    with nogil:
        for y in range(h):
            for x in range(w):
                if image[y, x] >= high:
                    keep[y, x] = 1
                    qy[tail] = y
                    qx[tail] = x
                    tail += 1
        while head < tail:
            y = qy[head]
            x = qx[head]
            head += 1
            for dy in range(-1, 2):
                for dx in range(-1, 2):
                    if dy == 0 and dx == 0:
                        continue
                    ny = y + dy
                    nx = x + dx
                    if 0 <= ny < h and 0 <= nx < w and keep[ny, nx] == 0 \
                            and image[ny, nx] >= low:
                        keep[ny, nx] = 1
                        qy[tail] = ny
                        qx[tail] = nx
                        tail += 1
    return keep.view(bool)


def label_mask(mask):
    """8-connected labels in raster first-encounter order; returns (labels, count)."""
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] m = np.ascontiguousarray(
        np.asarray(mask, dtype=bool).view(np.uint8))
    cdef Py_ssize_t h = m.shape[0], w = m.shape[1]
    cdef cnp.ndarray[cnp.int32_t, ndim=2] labels = np.zeros((h, w), dtype=np.int32)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] qy = np.empty(h * w, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] qx = np.empty(h * w, dtype=np.int64)
    cdef Py_ssize_t head, tail
    cdef cnp.int32_t current = 0
    cdef Py_ssize_t y, x, cy, cx, ny, nx
    cdef int dy, dx
    with nogil:
        for y in range(h):
            for x in range(w):
                if m[y, x] != 0 and labels[y, x] == 0:
                    current += 1
                    labels[y, x] = current
                    head = 0
                    tail = 0
                    qy[tail] = y
                    qx[tail] = x
                    tail += 1
                    while head < tail:
                        cy = qy[head]
                        cx = qx[head]
                        head += 1
                        for dy in range(-1, 2):
                            for dx in range(-1, 2):
                                if dy == 0 and dx == 0:
                                    continue
                                ny = cy + dy
                                nx = cx + dx
                                if 0 <= ny < h and 0 <= nx < w and m[ny, nx] != 0 \
                                        and labels[ny, nx] == 0:
                                    labels[ny, nx] = current
                                    qy[tail] = ny
                                    qx[tail] = nx
                                    tail += 1
    return labels, int(current)
