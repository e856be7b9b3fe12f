"""Lanczos projections of the grid Hamiltonian for matrix-function products.

The Krylov basis is never stored: a first pass builds the tridiagonal matrix,
a second pass replays the same recurrence and accumulates the result. Memory
stays at a few grid-sized arrays whatever the Krylov dimension.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import eigh_tridiagonal


class KrylovError(RuntimeError):
    """The Krylov approximation did not settle within the dimension cap."""


class LanczosRecurrence:
    """Three-term Lanczos recurrence for a Hermitian ``matvec``.

    ``alpha`` and ``beta`` hold the tridiagonal entries generated so far;
    ``replay`` regenerates the basis vectors bit for bit.
    """

    def __init__(self, matvec, start: np.ndarray):
        self.matvec = matvec
        self.start = start
        self.norm0 = float(np.linalg.norm(start))
        self.alpha: list[float] = []
        self.beta: list[float] = []
        self.exhausted = self.norm0 == 0
        self._prev = np.zeros_like(start)
        self._cur = start / self.norm0 if self.norm0 > 0 else start

    @property
    def size(self) -> int:
        return len(self.alpha)

    def _step(self, prev, cur, b_prev):
        w = self.matvec(cur)
        if b_prev:
            w = w - b_prev * prev
        a = float(np.vdot(cur, w).real)
        w = w - a * cur
        return a, w

    def extend(self, m: int):
        while self.size < m and not self.exhausted:
            b_prev = self.beta[-1] if self.beta else 0.0
            a, w = self._step(self._prev, self._cur, b_prev)
            self.alpha.append(a)
            b = float(np.linalg.norm(w))
            if b <= 1e-13 * max(abs(a), 1.0):
                self.exhausted = True
                break
            self.beta.append(b)
            self._prev, self._cur = self._cur, w / b

    def ritz(self):
        m = self.size
        return eigh_tridiagonal(np.array(self.alpha), np.array(self.beta[: m - 1]))

    def replay(self, coeffs: np.ndarray) -> np.ndarray:
        """``norm0 * sum_j coeffs[j] q_j`` over the first ``len(coeffs)`` basis vectors."""
        prev = np.zeros_like(self.start)
        cur = self.start / self.norm0
        out = coeffs[0] * cur
        for j in range(1, coeffs.size):
            b_prev = self.beta[j - 2] if j >= 2 else 0.0
            _, w = self._step(prev, cur, b_prev)
            prev, cur = cur, w / self.beta[j - 1]
            out += coeffs[j] * cur
        return self.norm0 * out


def matrix_function(matvec, start: np.ndarray, scalar_fn, rtol: float = 1e-10, step: int = 8, max_dim: int = 600):
    """Approximate ``g(H) v`` where ``scalar_fn`` maps Ritz values to ``g`` values.

    The Krylov dimension grows in blocks of ``step`` until the projected
    coefficients change by less than ``rtol`` relative. Returns
    ``(result, recurrence)``.
    """
    rec = LanczosRecurrence(matvec, start)
    if rec.exhausted:
        return np.zeros_like(start), rec
    prev = None
    while True:
        rec.extend(rec.size + step)
        theta, S = rec.ritz()
        coeffs = S @ (scalar_fn(theta) * S[0])
        if prev is not None:
            pad = np.zeros_like(coeffs)
            pad[: prev.size] = prev
            if np.linalg.norm(coeffs - pad) <= rtol * np.linalg.norm(coeffs):
                break
        if rec.exhausted:
            break
        if rec.size >= max_dim:
            raise KrylovError(f"Lanczos did not converge within {max_dim} vectors")
        prev = coeffs
    return rec.replay(coeffs), rec
