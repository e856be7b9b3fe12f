"""Time traces of evolving fields with their conserved quantities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Field, Grid, GridMismatchError, gradient_norm_squared, lp_norm
from .potentials import Potential
from .spectral import potential_energy

SIGNS = (-1, 0, 1)


def mass(f: Field) -> float:
    """``M = ||f||_2^2``."""
    return float(f.grid.cell_volume * np.sum(np.abs(f.values) ** 2))


def energy(V: Potential, f: Field, sign: int) -> float:
    """``E = int |grad f|^2/2 + V|f|^2/2 - sign |f|^4/4``."""
    if V.grid != f.grid:
        raise GridMismatchError("potential and field live on different grids")
    quartic = f.grid.cell_volume * np.sum(np.abs(f.values) ** 4)
    return float(0.5 * gradient_norm_squared(f) + 0.5 * potential_energy(V, f) - 0.25 * sign * quartic)


def h1_squared(f: Field) -> float:
    """Standard ``||f||_{H^1}^2 = ||grad f||^2 + ||f||^2``."""
    return gradient_norm_squared(f) + lp_norm(f, 2) ** 2


@dataclass(frozen=True, eq=False)
class EvolutionTrace:
    """Stored slices of a flow together with ``M``, ``E`` and ``||u||_{H^1}^2`` per slice.

    ``sign`` is +1 (focusing), -1 (defocusing) or 0 for a linear flow.
    """

    sign: int
    times: np.ndarray
    fields: tuple[Field, ...]
    mass: np.ndarray
    energy: np.ndarray
    sobolev_h1: np.ndarray
    potential: Potential
    dt: float

    def __post_init__(self):
        if self.sign not in SIGNS:
            raise ValueError(f"sign must be one of {SIGNS}, got {self.sign}")
        t = np.asarray(self.times, float)
        if t.size == 0:
            raise ValueError("a trace needs at least one slice")
        if t[0] != 0 or np.any(np.diff(t) <= 0):
            raise ValueError("times must start at 0 and increase strictly")
        if not len(self.fields) == t.size == len(self.mass) == len(self.energy) == len(self.sobolev_h1):
            raise ValueError("per-slice arrays have inconsistent lengths")
        for f in self.fields:
            if f.grid != self.potential.grid:
                raise GridMismatchError("trace fields and potential live on different grids")

    @classmethod
    def from_fields(cls, V: Potential, sign: int, times, fields, dt: float) -> EvolutionTrace:
        fields = tuple(fields)
        return cls(
            sign,
            np.asarray(times, float),
            fields,
            np.array([mass(f) for f in fields]),
            np.array([energy(V, f, sign) for f in fields]),
            np.array([h1_squared(f) for f in fields]),
            V,
            float(dt),
        )

    @property
    def grid(self) -> Grid:
        return self.potential.grid

    @property
    def final(self) -> Field:
        return self.fields[-1]

    def __len__(self) -> int:
        return len(self.fields)

    def sup_l2_distance(self, other: EvolutionTrace) -> float:
        """``max_t ||u(t) - v(t)||_2`` over shared slices."""
        if len(self) != len(other) or not np.allclose(self.times, other.times, rtol=0, atol=1e-12):
            raise ValueError("traces are defined on different slices")
        return max(lp_norm(a - b, 2) for a, b in zip(self.fields, other.fields))

    def summary_rows(self):
        """Rows ``(t, mass, energy, h1)``."""
        return list(zip(self.times.tolist(), self.mass.tolist(), self.energy.tolist(), self.sobolev_h1.tolist()))
