"""The Schrodinger operator ``H = -Delta + V`` on the periodic grid.

Covers the quadratic form and its form constant, the Birman-Schwinger norm,
negative eigenpairs, a zero-energy resonance indicator, and the projection
onto the continuous spectrum.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
import scipy.linalg as sla
from scipy.sparse.linalg import LinearOperator, lobpcg, onenormest, svds

from .grid import Field, Grid, GridMismatchError, forward, fourier_upsample, gradient_norm_squared, inverse, make_grid
from .kernels import ResolventKernelSampler, convolve
from .potentials import Potential, evaluate

log = logging.getLogger(__name__)

FORM_BOUND = 0.5
BS_MAX_ITER = 500
BS_RTOL = 1e-8
BS_SEED = 20240601


class ConvergenceError(RuntimeError):
    """An iterative solver did not reach its tolerance."""


class ResonanceMemoryError(MemoryError):
    """The dense resonance matrix would exceed the configured size cap."""


def _check_grid(V: Potential, f: Field):
    if V.grid != f.grid:
        raise GridMismatchError("potential and field live on different grids")


def _h_apply(V: Potential, vals: np.ndarray) -> np.ndarray:
    g = V.grid
    return inverse(g.k_squared * forward(vals)) + V.values * vals


def apply_hamiltonian(V: Potential, f: Field) -> Field:
    """``-Delta f + V f`` with the spectral Laplacian."""
    _check_grid(V, f)
    return Field(f.grid, _h_apply(V, f.values))


def potential_energy(V: Potential, u: Field) -> float:
    """``int V |u|^2``."""
    _check_grid(V, u)
    return float(V.grid.cell_volume * np.sum(V.values * np.abs(u.values) ** 2))


def quadratic_form(V: Potential, u: Field) -> float:
    """``q(u, u) = ||grad u||^2 + int V |u|^2``."""
    _check_grid(V, u)
    return gradient_norm_squared(u) + potential_energy(V, u)


def form_bound_value(V: Potential, a: float) -> float:
    """``sup_x int |V(y)| exp(-sqrt(2a)|x-y|) / (4 pi |x-y|) dy``; the constant ``a`` works when this is <= 1/2."""
    if V.is_zero:
        return 0.0
    kappa = np.sqrt(2.0 * a)
    return float(convolve(V.grid, np.abs(V.values), "resolvent", kappa).max())


def find_form_constant(V: Potential, a_max: float = 1e6, rtol: float = 1e-3) -> float:
    """Smallest ``a`` (to ``rtol``) with ``form_bound_value(V, a) <= 1/2``.

    The returned value satisfies the bound while ``a/2`` violates it unless
    ``a = 0`` already works.
    """
    if form_bound_value(V, 0.0) <= FORM_BOUND:
        return 0.0
    hi = 1.0
    while form_bound_value(V, hi) > FORM_BOUND:
        hi *= 4.0
        if hi > a_max:
            raise ConvergenceError(f"no form constant below a_max = {a_max:g}")
    lo = hi / 4.0 if hi > 1.0 else 0.0
    if lo == 0.0:
        lo = 1e-8
        while form_bound_value(V, lo) <= FORM_BOUND:
            lo /= 4.0
    while hi / lo > 1.0 + rtol:
        mid = np.sqrt(lo * hi)
        if form_bound_value(V, mid) <= FORM_BOUND:
            hi = mid
        else:
            lo = mid
    return float(hi)


def birman_schwinger_norm(
    V: Potential, a: float, max_iter: int = BS_MAX_ITER, rtol: float = BS_RTOL, seed: int = BS_SEED
) -> float:
    """Norm of ``|V|^{1/2} R_0(-2a) |V|^{1/2}`` on ``L^2`` by power iteration."""
    if a < 0:
        raise ValueError(f"a must be nonnegative, got {a}")
    if V.is_zero:
        return 0.0
    w = np.sqrt(np.abs(V.values))
    sampler = ResolventKernelSampler(V.grid, -2.0 * a)
    rng = np.random.default_rng(seed)
    x = w * (1.0 + 0.1 * rng.random(w.shape))
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(max_iter):
        y = w * sampler.apply(w * x)
        new = float(np.vdot(x, y))
        ny = np.linalg.norm(y)
        if ny == 0:
            return 0.0
        x = y / ny
        if abs(new - est) <= rtol * abs(new):
            return new
        est = new
    raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations")


def box_eigenvalue_tolerance(V: Potential, factor: float = 4.0) -> float:
    """Threshold below which a negative eigenvalue counts as a genuine bound state.

    A periodic box gives any attractive potential a delocalized ground state at
    roughly ``int V / |box|``; eigenvalues above ``-factor * |int V_-| / |box|``
    are treated as such box artifacts. A floor of ``1e-6 (2 pi / L)^2`` covers
    the zero potential.
    """
    g = V.grid
    floor = 1e-6 * (2 * np.pi / g.box_length) ** 2
    neg = np.maximum(-V.values, 0.0).sum() * g.cell_volume
    return float(max(floor, factor * neg / g.volume))


WARM_START_MIN_N = 64
LOBPCG_ROUND = 25
LOBPCG_WARM_ROUND = 10


def _lobpcg_block(V: Potential, X0: np.ndarray, tol: float, maxiter: int):
    g = V.grid
    n, N = g.n, g.n**3
    shift = 1.0 + float(np.abs(V.values).max())

    k2 = g.k_squared[..., : n // 2 + 1]
    axes = (-3, -2, -1)

    def mv(X):
        k = X.shape[1] if X.ndim == 2 else 1
        Xs = X.T.reshape(k, n, n, n)
        out = sfft.irfftn(k2 * sfft.rfftn(Xs, axes=axes), s=g.shape, axes=axes) + V.values * Xs
        return out.reshape(k, N).T

    def precond(X):
        k = X.shape[1] if X.ndim == 2 else 1
        Xs = X.T.reshape(k, n, n, n)
        return sfft.irfftn(sfft.rfftn(Xs, axes=axes) / (k2 + shift), s=g.shape, axes=axes).reshape(k, N).T

    op = LinearOperator((N, N), matvec=mv, matmat=mv, dtype=float)
    pc = LinearOperator((N, N), matvec=precond, matmat=precond, dtype=float)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        lam, vec = lobpcg(op, X0, M=pc, largest=False, tol=tol, maxiter=maxiter)
    order = np.argsort(lam)
    return lam[order], vec[:, order]


def _residual(V: Potential, lam: float, x: np.ndarray) -> float:
    psi = x.reshape(V.grid.shape)
    return float(np.linalg.norm(_h_apply(V, psi).real - lam * psi) / np.linalg.norm(psi))


def _eigen_block(V: Potential, k: int, eig_tol: float, residual_tol: float, max_iter: int, seed: int):
    """Lowest ``k`` Ritz pairs, warm-started from the half-resolution problem on large grids.

    Iterates in rounds until every Ritz pair below ``-eig_tol`` meets ``residual_tol``.
    """
    g = V.grid
    if g.n >= WARM_START_MIN_N and g.n % 4 == 0:
        cg, cvals = _coarse_potential(V, g.n // 2)
        _, Xc = _eigen_block(Potential(cg, cvals), k, eig_tol, residual_tol, max_iter, seed)
        X = np.stack([fourier_upsample(x.reshape(cg.shape), g.n).ravel() for x in Xc.T], axis=1)
        step = LOBPCG_WARM_ROUND
    else:
        step = LOBPCG_ROUND
        rng = np.random.default_rng(seed)
        env = np.exp(-(g.radius() ** 2) / (2 * (g.box_length / 6) ** 2)).ravel()
        X = rng.standard_normal((g.n**3, k)) * env[:, None]
    done = 0
    while True:
        rounds = min(step, max_iter - done)
        lam, X = _lobpcg_block(V, X, 1e-8, rounds)
        done += rounds
        bad = [j for j in range(k) if lam[j] < -eig_tol and _residual(V, lam[j], X[:, j]) > 0.1 * residual_tol]
        if not bad or done >= max_iter:
            return lam, X


def bound_states(
    V: Potential,
    k_max: int = 4,
    eig_tol: float | None = None,
    residual_tol: float = 1e-6,
    max_iter: int = 200,
    seed: int = BS_SEED,
) -> list[tuple[float, Field]]:
    """Up to ``k_max`` eigenpairs of the grid operator with ``lambda < -eig_tol``.

    Eigenvectors are real and normalized in the discrete ``L^2`` norm.
    """
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    g = V.grid
    if eig_tol is None:
        eig_tol = box_eigenvalue_tolerance(V)
    if not np.any(V.values < 0):
        return []
    k = min(k_max + 2, g.n**3 // 4)
    lam, vec = _eigen_block(V, k, eig_tol, residual_tol, max_iter, seed)
    out = []
    for j in range(min(k_max, k)):
        if lam[j] >= -eig_tol:
            break
        psi = vec[:, j].reshape(g.shape)
        psi = psi / np.sqrt(g.cell_volume * np.sum(psi**2))
        if psi.flat[np.argmax(np.abs(psi))] < 0:
            psi = -psi
        res = _h_apply(V, psi).real - lam[j] * psi
        if np.sqrt(g.cell_volume * np.sum(res**2)) > residual_tol:
            raise ConvergenceError(f"eigenpair residual too large for lambda = {lam[j]:.6g}")
        out.append((float(lam[j]), Field(g, psi)))
    return out


def _coarse_potential(V: Potential, coarse_n: int) -> tuple[Grid, np.ndarray]:
    g = V.grid
    if coarse_n >= g.n:
        return g, V.values
    cg = make_grid(coarse_n, g.box_length)
    if V.spec is not None:
        return cg, evaluate(V.spec, cg)
    if g.n % coarse_n:
        raise ValueError("coarse lattice must divide the grid when the potential has no analytic spec")
    st = g.n // coarse_n
    return cg, V.values[::st, ::st, ::st]


def resonance_matrix(V: Potential, coarse_n: int = 24, support_tol: float = 1e-6, max_points: int = 8000):
    """Dense ``I + V R_0(0)`` restricted to nodes where ``|V|`` is non-negligible.

    Rows outside that support are identity rows and do not affect invertibility.
    """
    cg, vals = _coarse_potential(V, coarse_n)
    vmax = np.abs(vals).max()
    if vmax == 0:
        return np.eye(0)
    mask = np.abs(vals) > support_tol * vmax
    m = int(mask.sum())
    if m > max_points:
        raise ResonanceMemoryError(f"resonance matrix needs {m} points (cap {max_points})")
    K = ResolventKernelSampler(cg, 0.0).dense(mask)
    A = vals[mask][:, None] * K
    A[np.diag_indices_from(A)] += 1.0
    return A


def resonance_indicator(
    V: Potential, coarse_n: int = 24, norm: str = "l2", support_tol: float = 1e-6, max_points: int = 8000
) -> float:
    """Smallest singular value of ``I + V R_0(0)`` (``norm="l2"``), or ``1/||(I + V R_0(0))^{-1}||_1`` (``"l1"``).

    Small values flag a zero-energy resonance or eigenvalue.
    """
    A = resonance_matrix(V, coarse_n, support_tol, max_points)
    if A.size == 0:
        return 1.0
    m = A.shape[0]
    lu = sla.lu_factor(A)
    inv_op = LinearOperator(
        (m, m),
        matvec=lambda x: sla.lu_solve(lu, x),
        rmatvec=lambda x: sla.lu_solve(lu, x, trans=1),
        matmat=lambda X: sla.lu_solve(lu, X),
        rmatmat=lambda X: sla.lu_solve(lu, X, trans=1),
        dtype=float,
    )
    if norm == "l2":
        s = svds(inv_op, k=1, return_singular_vectors=False, random_state=BS_SEED, tol=1e-10)
        return float(1.0 / s[0])
    if norm == "l1":
        return float(1.0 / onenormest(inv_op))
    raise ValueError(f"unknown norm {norm!r}")


@dataclass
class SpectralData:
    form_constant: float
    eigenpairs: list[tuple[float, Field]] = field(repr=False)
    bs_norm: float
    resonance_sigma: float
    resonance_sigma_l1: float = float("nan")
    eig_tol: float = 0.0

    @property
    def count(self) -> int:
        return len(self.eigenpairs)

    @property
    def eigenvalues(self) -> list[float]:
        return [lam for lam, _ in self.eigenpairs]

    @property
    def grid(self) -> Grid | None:
        return self.eigenpairs[0][1].grid if self.eigenpairs else None

    def to_dict(self) -> dict:
        return {
            "a": self.form_constant,
            "J": self.count,
            "eigenvalues": self.eigenvalues,
            "bs_norm": self.bs_norm,
            "resonance_sigma": self.resonance_sigma,
            "resonance_sigma_l1": self.resonance_sigma_l1,
            "eig_tol": self.eig_tol,
        }

    @classmethod
    def empty(cls, a: float = 0.0) -> SpectralData:
        """No bound states; diagnostics left at their free values."""
        return cls(a, [], 0.0, 1.0, 1.0, 0.0)


def spectral_data(V: Potential, k_max: int = 4, resonance: bool = True, coarse_n: int = 24) -> SpectralData:
    a = find_form_constant(V)
    tol = box_eigenvalue_tolerance(V)
    pairs = bound_states(V, k_max, eig_tol=tol)
    sig = sig1 = float("nan")
    if resonance:
        sig = resonance_indicator(V, coarse_n, "l2")
        sig1 = resonance_indicator(V, coarse_n, "l1")
    return SpectralData(a, pairs, birman_schwinger_norm(V, a), sig, sig1, tol)


def continuous_projection(spec: SpectralData, f: Field) -> Field:
    """``P_c f = f - sum_j <f, psi_j> psi_j``."""
    out = f.values.copy()
    for _, psi in spec.eigenpairs:
        if psi.grid != f.grid:
            raise GridMismatchError("spectral data computed on a different grid")
        out -= f.inner(psi) * psi.values
    return Field(f.grid, out)
