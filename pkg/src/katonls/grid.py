"""Periodic spectral discretization of R^3.

A :class:`Grid` is a cube ``[-L/2, L/2)^3`` with ``n`` points per axis. Fields
are complex arrays of shape ``(n, n, n)``; Fourier-side operators are diagonal
multipliers on the FFT lattice ``2*pi*k/L`` with ``k`` in ``{-n/2, ..., n/2-1}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft


class GridMismatchError(ValueError):
    """Raised when two objects that must share a grid do not."""


@dataclass(frozen=True)
class Grid:
    n: int
    box_length: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n % 2:
            raise ValueError(f"n must be even, got {self.n}")
        if self.n < 8:
            raise ValueError(f"n must be at least 8, got {self.n}")
        if not self.box_length > 0:
            raise ValueError(f"box length must be positive, got {self.box_length}")

    @property
    def spacing(self) -> float:
        return self.box_length / self.n

    @property
    def cell_volume(self) -> float:
        return self.spacing**3

    @property
    def volume(self) -> float:
        return self.box_length**3

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @cached_property
    def axis(self) -> np.ndarray:
        """Node coordinates along one axis; the origin is node ``n/2``."""
        return -0.5 * self.box_length + self.spacing * np.arange(self.n)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        return 2 * np.pi * sfft.fftfreq(self.n, d=self.spacing)

    def coordinates(self, center=(0.0, 0.0, 0.0)):
        """Broadcastable coordinate arrays ``(x, y, z)`` shifted by ``center``."""
        a = self.axis
        return (
            (a - center[0])[:, None, None],
            (a - center[1])[None, :, None],
            (a - center[2])[None, None, :],
        )

    def radius(self, center=(0.0, 0.0, 0.0)) -> np.ndarray:
        x, y, z = self.coordinates(center)
        return np.sqrt(x**2 + y**2 + z**2)

    @cached_property
    def k_squared(self) -> np.ndarray:
        k = self.wavenumbers
        return k[:, None, None] ** 2 + k[None, :, None] ** 2 + k[None, None, :] ** 2

    def boundary_mask(self) -> np.ndarray:
        """Nodes on the outer shell of the box (first or last index on any axis)."""
        edge = np.zeros(self.n, dtype=bool)
        edge[[0, -1]] = True
        return edge[:, None, None] | edge[None, :, None] | edge[None, None, :]


def make_grid(n: int, L: float) -> Grid:
    return Grid(int(n), float(L))


def forward(values: np.ndarray) -> np.ndarray:
    return sfft.fftn(values, axes=(-3, -2, -1))


def inverse(values: np.ndarray) -> np.ndarray:
    return sfft.ifftn(values, axes=(-3, -2, -1))


def fourier_upsample(values: np.ndarray, n: int) -> np.ndarray:
    """Trigonometric interpolation of a real periodic ``(m, m, m)`` array onto ``n >= m`` points per axis.

    Both lattices start at the same corner node; the Nyquist plane is dropped.
    """
    m = values.shape[-1]
    if n < m:
        raise ValueError("target grid is coarser than the source")
    vh = sfft.fftn(values)
    keep = np.r_[0 : m // 2, n - m // 2 + 1 : n]
    src = np.r_[0 : m // 2, m // 2 + 1 : m]
    out = np.zeros((n, n, n), dtype=complex)
    out[np.ix_(keep, keep, keep)] = vh[np.ix_(src, src, src)]
    return sfft.ifftn(out).real * (n / m) ** 3


@dataclass(frozen=True, eq=False)
class Field:
    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != self.grid.shape:
            raise ValueError(f"field shape {vals.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field contains NaN or Inf entries")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def _check(self, other: Field):
        if other.grid != self.grid:
            raise GridMismatchError("fields live on different grids")

    def __add__(self, other: Field) -> Field:
        self._check(other)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: Field) -> Field:
        self._check(other)
        return Field(self.grid, self.values - other.values)

    def __mul__(self, c) -> Field:
        return Field(self.grid, c * self.values)

    __rmul__ = __mul__

    def __neg__(self) -> Field:
        return Field(self.grid, -self.values)

    def inner(self, other: Field) -> complex:
        """Discrete ``L^2`` inner product ``h^3 sum f conj(g)``."""
        self._check(other)
        return complex(self.grid.cell_volume * np.vdot(other.values, self.values))

    @classmethod
    def zeros(cls, grid: Grid) -> Field:
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    @classmethod
    def from_function(cls, grid: Grid, func, center=(0.0, 0.0, 0.0)) -> Field:
        """Sample ``func(x, y, z)`` on the grid nodes."""
        x, y, z = grid.coordinates(center)
        return cls(grid, np.broadcast_to(func(x, y, z), grid.shape))


@dataclass(frozen=True, eq=False)
class SpectralMultiplier:
    grid: Grid
    symbol: np.ndarray = field(repr=False)

    def __post_init__(self):
        sym = np.broadcast_to(np.asarray(self.symbol), self.grid.shape)
        object.__setattr__(self, "symbol", sym)

    def __mul__(self, other: SpectralMultiplier) -> SpectralMultiplier:
        if other.grid != self.grid:
            raise GridMismatchError("multipliers live on different grids")
        return SpectralMultiplier(self.grid, self.symbol * other.symbol)

    @classmethod
    def laplacian(cls, grid: Grid) -> SpectralMultiplier:
        return cls(grid, -grid.k_squared)

    @classmethod
    def bessel(cls, grid: Grid, s: float, a: float = 0.0) -> SpectralMultiplier:
        """``(1 + a + |xi|^2)^{s/2}``."""
        return cls(grid, (1.0 + a + grid.k_squared) ** (0.5 * s))

    @classmethod
    def riesz(cls, grid: Grid, s: float) -> SpectralMultiplier:
        """``|xi|^s`` with the zero mode set to zero."""
        sym = np.zeros(grid.shape)
        nz = grid.k_squared > 0
        sym[nz] = grid.k_squared[nz] ** (0.5 * s)
        return cls(grid, sym)


def apply_multiplier(f: Field, m: SpectralMultiplier) -> Field:
    if f.grid != m.grid:
        raise GridMismatchError("field and multiplier live on different grids")
    return Field(f.grid, inverse(m.symbol * forward(f.values)))


def lp_norm(f: Field, p: float) -> float:
    """Riemann-sum ``L^p`` norm ``(h^3 sum |f|^p)^{1/p}``; ``p = inf`` is the max modulus."""
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    mod = np.abs(f.values)
    if np.isinf(p):
        return float(mod.max())
    if p == 2:
        return float(np.sqrt(f.grid.cell_volume * np.vdot(mod, mod).real))
    return float((f.grid.cell_volume * np.sum(mod**p)) ** (1.0 / p))


def spectral_l2_squared(f: Field) -> float:
    """``||f||_2^2`` computed on the Fourier side; equals ``lp_norm(f, 2)**2`` by Parseval."""
    fh = forward(f.values)
    return float(f.grid.cell_volume / f.grid.n**3 * np.vdot(fh, fh).real)


def gradient_norm_squared(f: Field) -> float:
    """``||grad f||_2^2`` via the spectral symbol ``|xi|^2``."""
    fh = forward(f.values)
    g = f.grid
    return float(g.cell_volume / g.n**3 * np.sum(g.k_squared * np.abs(fh) ** 2))


def sobolev_norm_standard(
    f: Field, s: float, r: float, a: float = 0.0, homogeneous: bool = False
) -> float:
    """``||(1+a-Delta)^{s/2} f||_{L^r}``, or ``|| |xi|^s f ||_{L^r}`` when homogeneous."""
    if not 0 <= s <= 2:
        raise ValueError(f"s must lie in [0, 2], got {s}")
    if not 1 < r < np.inf:
        raise ValueError(f"r must lie in (1, inf), got {r}")
    if a < 0:
        raise ValueError(f"shift a must be nonnegative, got {a}")
    if s == 0 and not homogeneous:
        return lp_norm(f, r)
    m = SpectralMultiplier.riesz(f.grid, s) if homogeneous else SpectralMultiplier.bessel(f.grid, s, a)
    return lp_norm(apply_multiplier(f, m), r)


def random_field(
    grid: Grid,
    rng: np.random.Generator,
    k_cut: float = 3.0,
    width: float | None = None,
    center_spread: float = 0.0,
) -> Field:
    """A pseudo-random, effectively band-limited, localized field.

    Complex Gaussian Fourier coefficients are drawn on modes with ``|xi| <= k_cut``
    and the result is multiplied by a Gaussian envelope of the given width so that
    the field decays well inside the box. Normalized to unit ``L^2`` norm.
    """
    if width is None:
        width = grid.box_length / 10
    coef = np.where(
        grid.k_squared <= k_cut**2,
        rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape),
        0.0,
    )
    carrier = inverse(coef)
    c = rng.uniform(-center_spread, center_spread, size=3) if center_spread > 0 else (0.0, 0.0, 0.0)
    env = np.exp(-grid.radius(c) ** 2 / (2 * width**2))
    vals = carrier * env
    f = Field(grid, vals)
    return f * (1.0 / lp_norm(f, 2))
