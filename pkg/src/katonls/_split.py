"""Strang splitting kernel shared by the heat and Schrodinger flows."""

from __future__ import annotations

import numpy as np

from .grid import forward, inverse


def strang(
    values: np.ndarray, kinetic_rate: np.ndarray, potential_factor: np.ndarray | None, dt: float, steps: int
) -> np.ndarray:
    """Apply ``(K P K)^steps`` with ``K = exp(kinetic_rate dt/2)`` on the Fourier side.

    ``potential_factor`` is the real-space factor ``P`` for one full step; ``None``
    means ``P = 1`` and the kinetic flow is applied exactly in one shot. Adjacent
    half kinetic factors are merged, so each step costs two FFTs.
    """
    if steps == 0:
        return values
    if potential_factor is None:
        return inverse(np.exp(kinetic_rate * (dt * steps)) * forward(values))
    half = np.exp(kinetic_rate * (0.5 * dt))
    full = half * half
    vh = half * forward(values)
    for k in range(steps):
        vh = forward(potential_factor * inverse(vh))
        vh *= full if k < steps - 1 else half
    return inverse(vh)
