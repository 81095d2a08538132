"""Corruption operators: amplitude quantization and Gaussian smoothing.

Quantization stands in for lossy compression, smoothing for blur. Both
are deterministic given their parameter, so corrupting a seeded dataset
is itself deterministic.
"""

from __future__ import annotations

import numpy as np

from .types import SignalGrid


def quantize(grid: SignalGrid, levels: float) -> SignalGrid:
    """Map every value to round(v * levels) / levels; error <= 1/(2*levels)."""
    if levels <= 0:
        raise ValueError("levels must be > 0")
    return SignalGrid(np.round(grid.values * levels) / levels)


def smooth(grid: SignalGrid, sigma: float) -> SignalGrid:
    """Separable Gaussian convolution with mirrored edges; sigma=0 is identity.

    Kernel radius is ceil(3*sigma). Edges are mirrored half-sample style
    (edge value repeated), which preserves the grid mean exactly for the
    normalized kernel.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return grid
    kernel = gaussian_kernel(sigma)
    out = _convolve_rows(grid.values, kernel)
    out = _convolve_rows(out.T, kernel).T
    return SignalGrid(out)


def gaussian_kernel(sigma: float) -> np.ndarray:
    radius = int(np.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def _convolve_rows(a: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    radius = len(kernel) // 2
    padded = np.pad(a, ((0, 0), (radius, radius)), mode="symmetric")
    # window the padded rows so each output cell sees its full kernel support
    windows = np.lib.stride_tricks.sliding_window_view(padded, len(kernel), axis=1)
    return windows @ kernel[::-1]
