"""Radial convolution kernels with a singular-cell rule.

Every kernel ``k(|x-y|)`` that blows up at the origin is handled the same way:
off-diagonal cells use the point value ``h^3 k(|x-y|)``, the self cell ``y = x``
uses the exact integral of ``k`` over the ball of volume ``h^3`` (radius
``r_h = (3 h^3 / 4 pi)^{1/3}``). Convolutions over the grid are aperiodic
(zero-padded to ``2n`` per axis) so periodic images never enter.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.fft as sfft
from scipy.spatial.distance import cdist

from .grid import Grid


def equal_volume_radius(h: float) -> float:
    return (3.0 / (4.0 * np.pi)) ** (1.0 / 3.0) * h


def newton_cell_integral(h: float) -> float:
    """Integral of ``1/|y|`` over the equal-volume ball: ``2 pi r_h^2``."""
    return 2.0 * np.pi * equal_volume_radius(h) ** 2


def resolvent_cell_integral(h: float, kappa: float) -> float:
    """Integral of ``exp(-kappa |y|) / (4 pi |y|)`` over the equal-volume ball."""
    rh = equal_volume_radius(h)
    x = kappa * rh
    if x < 1e-6:
        return 0.5 * rh**2 * (1.0 - 2.0 * x / 3.0)
    return (1.0 - (1.0 + x) * np.exp(-x)) / kappa**2


def _offsets(n: int, h: float) -> np.ndarray:
    """Distances on the doubled lattice, offsets in ``[-n, n)`` per axis (FFT order)."""
    m = np.fft.fftfreq(2 * n, d=1.0 / (2 * n)) * h
    return np.sqrt(m[:, None, None] ** 2 + m[None, :, None] ** 2 + m[None, None, :] ** 2)


def kernel_values(kind: str, r: np.ndarray, h: float, param: float) -> np.ndarray:
    """Cell weights ``h^3 k(r)`` with the singular-cell value at ``r = 0``."""
    out = np.empty_like(r)
    nz = r > 0
    rr = r[nz]
    if kind == "newton":
        out[nz] = 1.0 / rr
        cell = newton_cell_integral(h)
    elif kind == "newton_ball":
        out[nz] = np.where(rr <= param, 1.0 / rr, 0.0)
        cell = newton_cell_integral(h)
    elif kind == "resolvent":
        out[nz] = np.exp(-param * rr) / (4.0 * np.pi * rr)
        cell = resolvent_cell_integral(h, param)
    else:
        raise ValueError(f"unknown kernel kind {kind!r}")
    out *= h**3
    out[~nz] = cell
    return out


@lru_cache(maxsize=4)
def _kernel_spectrum(n: int, L: float, kind: str, param: float) -> np.ndarray:
    h = L / n
    return sfft.rfftn(kernel_values(kind, _offsets(n, h), h, param))


def convolve(grid: Grid, values: np.ndarray, kind: str, param: float = 0.0) -> np.ndarray:
    """``(K * values)(x) = sum_y w(x - y) values(y)`` for real ``values`` on ``grid``.

    ``values`` may carry leading batch axes. The result has the same shape.
    """
    n = grid.n
    spec = _kernel_spectrum(n, float(grid.box_length), kind, float(param))
    vals = np.asarray(values, dtype=float)
    vh = sfft.rfftn(vals, s=(2 * n,) * 3, axes=(-3, -2, -1))
    full = sfft.irfftn(vh * spec, s=(2 * n,) * 3, axes=(-3, -2, -1))
    return full[..., :n, :n, :n]


class ResolventKernelSampler:
    """Free resolvent ``R_0(z)`` kernel ``exp(-sqrt(-z)|x-y|)/(4 pi |x-y|)`` for ``z <= 0``."""

    def __init__(self, grid: Grid, shift: float):
        if shift > 0:
            raise ValueError(f"resolvent shift must be <= 0, got {shift}")
        self.grid = grid
        self.shift = float(shift)
        self.kappa = float(np.sqrt(-shift))

    def apply(self, values: np.ndarray) -> np.ndarray:
        return convolve(self.grid, values, "resolvent", self.kappa)

    def dense(self, mask: np.ndarray | None = None) -> np.ndarray:
        """Explicit matrix of cell weights between the selected grid nodes."""
        g = self.grid
        idx = np.argwhere(np.ones(g.shape, bool) if mask is None else mask)
        pts = idx * g.spacing
        d = cdist(pts, pts)
        return kernel_values("resolvent", d, g.spacing, self.kappa)
