"""Gaussian-derivative and Laplacian-of-Gaussian filtering.

Kernels are sampled at integer offsets in double precision and
mean-balanced so their weight sum vanishes; a leftover DC term would
otherwise produce false responses on flat surfaces. Convolution is
direct spatial-domain with edge replication, true convolution (the
kernel is flipped), delegated to the selected backend.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import backend


@dataclass(frozen=True)
class Kernel:
    """Square convolution kernel with the scale it was built from."""

    weights: np.ndarray
    scale: float

    @property
    def size(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class GradientField:
    """Smoothed gradient components and their pointwise magnitude."""

    gx: np.ndarray
    gy: np.ndarray
    magnitude: np.ndarray


def _odd_at_least(n: float) -> int:
    size = math.ceil(n)
    if size % 2 == 0:
        size += 1
    return size


def _balance(weights: np.ndarray) -> np.ndarray:
    # math.fsum gives the exactly rounded weight sum, so an odd-symmetric
    # kernel balances to a mean of exactly zero and keeps its symmetry.
    mean = math.fsum(weights.ravel()) / weights.size
    return weights - mean


def gaussian_gradient_kernels(tau_g: float) -> tuple[Kernel, Kernel]:
    """Build the x and y first-derivative-of-Gaussian kernel pair.

    Kernel side is the smallest odd integer >= 6*tau_g + 1 (13x13 at the
    default scale 2), truncating the Gaussian at three standard
    deviations. Truncation sheds a little of the first moment, so the
    sampled kernel is rescaled to report a unit slope on a unit ramp.
    The y kernel is exactly the transpose of the x kernel.
    """
    if tau_g <= 0:
        raise ValueError("tau_g must be positive")
    size = _odd_at_least(6.0 * tau_g + 1.0)
    half = size // 2
    offsets = np.arange(-half, half + 1, dtype=np.float64)
    envelope = np.exp(-(offsets**2) / (2.0 * tau_g**2))
    deriv = -offsets * envelope / (2.0 * math.pi * tau_g**4)
    gx = _balance(np.outer(envelope, deriv))
    # Convolving I(x, y) = x with gx yields -sum(x * w); calibrate it to 1.
    gain = -math.fsum((gx * offsets[None, :]).ravel())
    gx /= gain
    return Kernel(gx, tau_g), Kernel(gx.T.copy(), tau_g)


def log_kernel(tau_l: float) -> Kernel:
    """Build the Laplacian-of-Gaussian kernel.

    The mask is 23x23 at the reference scale 1 and grows as the smallest
    odd integer >= 23*tau_l for other scales.
    """
    if tau_l <= 0:
        raise ValueError("tau_l must be positive")
    size = 23 if tau_l == 1.0 else _odd_at_least(23.0 * tau_l)
    half = size // 2
    offsets = np.arange(-half, half + 1, dtype=np.float64)
    r2 = np.add.outer(offsets**2, offsets**2)
    weights = (r2 / (2.0 * tau_l**2) - 1.0) * np.exp(-r2 / (2.0 * tau_l**2))
    weights /= math.pi * tau_l**4
    return Kernel(_balance(weights), tau_l)


def convolve(img: np.ndarray, kernel: Kernel | np.ndarray) -> np.ndarray:
    """Convolve an image with a kernel; output has the input's size."""
    img = np.asarray(img, dtype=np.float64)
    weights = kernel.weights if isinstance(kernel, Kernel) else np.asarray(kernel)
    if weights.shape[0] > img.shape[0] or weights.shape[1] > img.shape[1]:
        raise ValueError(
            f"kernel {weights.shape} larger than image {img.shape}"
        )
    if not np.isfinite(img).all():
        raise ValueError("image contains non-finite values")
    return backend.convolve_replicate(img, weights)


def gradient_magnitude(img: np.ndarray, tau_g: float) -> GradientField:
    """Smoothed gradient components and magnitude sqrt(gx^2 + gy^2)."""
    kx, ky = gaussian_gradient_kernels(tau_g)
    gx = convolve(img, kx)
    gy = convolve(img, ky)
    return GradientField(gx=gx, gy=gy, magnitude=np.sqrt(gx * gx + gy * gy))


def log_response(img: np.ndarray, tau_l: float) -> np.ndarray:
    """Laplacian-of-Gaussian response map."""
    return convolve(img, log_kernel(tau_l))
