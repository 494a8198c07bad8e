"""Uniform cell grids and fast kernel convolution.

All spatial operators in the package live on uniform cell-centered grids.
Convolution against an even kernel is a symmetric Toeplitz matrix whose
entries are exact per-cell kernel masses (CDF differences); applying it is
done through a cached circulant embedding and real FFTs.
"""
from __future__ import annotations

import numpy as np
from scipy import fft as sfft

from .model import Kernel

__all__ = ["cell_nodes", "KernelConvolver", "CdfInterpolant", "default_cells"]


def default_cells(l: float) -> int:
    """Grid-resolution policy for a domain of length l: at least 40 cells
    per unit length, never fewer than 200 cells."""
    return max(200, int(np.ceil(40.0 * l - 1e-9)))


def cell_nodes(left: float, dx: float, n: int) -> np.ndarray:
    """Midpoints of n cells of width dx starting at `left`."""
    return left + (np.arange(n) + 0.5) * dx


class KernelConvolver:
    """(K u)_j = sum_m mass(|j-m| dx) u_m with exact cell masses.

    Approximates ∫ J(x_j - y) u(y) dy over the grid's span, treating u as
    piecewise constant per cell; the per-cell kernel masses are exact CDF
    differences, so row sums reproduce ∫ J(x_j - y) dy over the span exactly.
    """

    def __init__(self, kernel: Kernel, dx: float, n: int):
        if n < 1 or dx <= 0:
            raise ValueError("convolver needs n >= 1 cells of positive width")
        self.kernel = kernel
        self.dx = float(dx)
        self.n = int(n)
        offs = np.arange(self.n)
        col = np.asarray(
            kernel.cdf((offs + 0.5) * self.dx) - kernel.cdf((offs - 0.5) * self.dx)
        )
        self.column = col
        m = sfft.next_fast_len(2 * self.n)
        circ = np.zeros(m)
        circ[: self.n] = col
        circ[m - self.n + 1:] = col[1:][::-1]
        self._m = m
        self._kfft = sfft.rfft(circ)

    def apply(self, u: np.ndarray) -> np.ndarray:
        if u.shape[-1] != self.n:
            raise ValueError("vector length does not match the grid")
        buf = np.zeros(u.shape[:-1] + (self._m,))
        buf[..., : self.n] = u
        out = sfft.irfft(sfft.rfft(buf, axis=-1) * self._kfft, n=self._m, axis=-1)
        return out[..., : self.n]

    def dense(self) -> np.ndarray:
        idx = np.abs(np.subtract.outer(np.arange(self.n), np.arange(self.n)))
        return self.column[idx]

    def row_sums(self) -> np.ndarray:
        return self.apply(np.ones(self.n))


class CdfInterpolant:
    """Dense linear-interpolation table for a kernel CDF on [x_min, x_max].

    Used where the CDF must be evaluated at arguments that change every time
    step; static grid quantities always use the exact CDF instead.
    """

    def __init__(self, kernel: Kernel, x_max: float, step: float, x_min: float = 0.0):
        self.x = np.arange(x_min, x_max + 2 * step, step)
        self.y = np.asarray(kernel.cdf(self.x))
        self.top = float(kernel.mass)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.interp(x, self.x, self.y, left=float(self.y[0]), right=float(self.y[-1]))
