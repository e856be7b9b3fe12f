"""The cubic NLS ``i u_t = H u - sign |u|^2 u`` with ``H = -Delta + V``.

``sign = +1`` is focusing, ``-1`` defocusing. Solutions are obtained either as
the fixed point of the Duhamel map, iterated on stored time slices, or by a
split-step integrator.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np

from .dispersive import Propagator, admissible_pairs, step_count
from .grid import Field, forward, inverse, lp_norm, sobolev_norm_standard
from .potentials import Potential
from .spectral import SpectralData, _check_grid, continuous_projection, quadratic_form
from .trace import EvolutionTrace, energy, mass

log = logging.getLogger(__name__)

BLOWUP_FACTOR = 1e6
DIVERGENCE_CAP = 1e6

__all__ = [
    "BlowUpError",
    "NonContractionError",
    "PicardConfig",
    "conservation_report",
    "duhamel_map",
    "energy",
    "evolve",
    "h1_bound_check",
    "mass",
    "monitored_norm",
    "nonlinearity",
    "picard_solve",
]


class NonContractionError(RuntimeError):
    """The Picard iteration failed to contract on the requested interval."""

    def __init__(self, message: str, ratios: list[float]):
        super().__init__(message)
        self.ratios = ratios


class BlowUpError(RuntimeError):
    """The split-step solution grew past the blow-up guard."""


def _check_sign(sign: int):
    if sign not in (-1, 1):
        raise ValueError(f"sign must be +1 (focusing) or -1 (defocusing), got {sign}")


def nonlinearity(f: Field, sign: int) -> Field:
    """``sign |f|^2 f``."""
    return Field(f.grid, sign * np.abs(f.values) ** 2 * f.values)


@dataclass(frozen=True)
class PicardConfig:
    """Interval ``[0, T]`` stored on ``n_t`` equally spaced slices.

    ``dt`` is the propagator substep (default: the largest step not above
    ``1e-3`` dividing the slice spacing). ``ball_radius = None`` means twice the
    monitored norm of the linear flow. The monitored norm is ``sup_t H^s`` and
    the ``L^q_t W^{s,r}`` norm of one interior admissible pair.
    """

    T: float
    n_t: int = 32
    tol: float = 1e-10
    max_iter: int = 50
    ball_radius: float | None = None
    s: float = 1.0
    dt: float | None = None

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")
        if self.n_t < 8:
            raise ValueError(f"n_t must be at least 8, got {self.n_t}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not 0 <= self.s < 1.5:
            raise ValueError(f"s must lie in [0, 3/2), got {self.s}")
        if self.ball_radius is not None and not self.ball_radius > 0:
            raise ValueError("ball_radius must be positive")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n_t)

    @property
    def slice_step(self) -> float:
        return self.T / (self.n_t - 1)

    @property
    def substep(self) -> float:
        if self.dt is not None:
            step_count(self.slice_step, self.dt)
            return self.dt
        return self.slice_step / math.ceil(self.slice_step / 1e-3 - 1e-9)

    def refined(self) -> PicardConfig:
        """Twice as many slice intervals and half the substep."""
        dt = None if self.dt is None else self.dt / 2
        return PicardConfig(self.T, 2 * self.n_t - 1, self.tol, self.max_iter, self.ball_radius, self.s, dt)

    def to_dict(self) -> dict:
        return asdict(self)


def _eigen_coeffs(spec: SpectralData | None, vals: np.ndarray, grid) -> np.ndarray:
    if spec is None or not spec.eigenpairs:
        return np.zeros(0, complex)
    return np.array([grid.cell_volume * np.vdot(psi.values, vals) for _, psi in spec.eigenpairs])


def duhamel_map(
    V: Potential,
    spec: SpectralData | None,
    u0: Field,
    trace_in: EvolutionTrace,
    cfg: PicardConfig,
    sign: int,
    eigen_sum: bool = True,
) -> EvolutionTrace:
    """``Phi(u)(t) = exp(-itH) u0 + i sign int_0^t exp(-i(t-s)H) |u|^2 u(s) ds`` on the slices of ``cfg``.

    The integrand is split as ``P_c N + sum_j <N, psi_j> psi_j``. The continuous
    part is carried by the propagator and the eigenmode part by the scalar
    factors ``exp(-i(t-s) lambda_j)``; both use the trapezoid rule on the slices.
    ``eigen_sum = False`` drops the projection split and propagates ``N`` whole.
    """
    _check_sign(sign)
    _check_grid(V, u0)
    times = cfg.times
    if len(trace_in) != times.size or not np.allclose(trace_in.times, times, rtol=0, atol=1e-12):
        raise ValueError("trace_in is not defined on the configured slices")
    g = u0.grid
    prop = Propagator(V, cfg.substep)
    dT = cfg.slice_step
    use_eig = eigen_sum and spec is not None and bool(spec.eigenpairs)
    lam = np.array(spec.eigenvalues) if use_eig else np.zeros(0)
    psis = [psi.values for _, psi in spec.eigenpairs] if use_eig else []
    phase = np.exp(-1j * dT * lam)

    def split(k):
        N = sign * np.abs(trace_in.fields[k].values) ** 2 * trace_in.fields[k].values
        if not use_eig:
            return N, np.zeros(0, complex)
        c = _eigen_coeffs(spec, N, g)
        return N - sum(cj * p for cj, p in zip(c, psis)), c

    linear = prop.at_times(u0, times)
    Nc, nc = split(0)
    Ic = np.zeros(g.shape, complex)
    ic = np.zeros(lam.size, complex)
    out = [linear[0]]
    for k in range(1, times.size):
        Nc_new, nc_new = split(k)
        Ic = prop(dT, Field(g, Ic + 0.5 * dT * Nc)).values + 0.5 * dT * Nc_new
        ic = phase * (ic + 0.5 * dT * nc) + 0.5 * dT * nc_new
        integral = Ic + sum(cj * p for cj, p in zip(ic, psis)) if use_eig else Ic
        out.append(Field(g, linear[k].values + 1j * integral))
        Nc, nc = Nc_new, nc_new
    return EvolutionTrace.from_fields(V, sign, times, out, prop.dt)


def monitored_norm(trace: EvolutionTrace, s: float, other: EvolutionTrace | None = None) -> float:
    """Finite proxy for the Strichartz norm of ``trace`` (or of ``trace - other``).

    ``max(sup_t ||u||_{H^s}, ||u||_{L^q_t W^{s,r}})`` for the interior admissible
    pair with ``r`` halfway along the admissible range.
    """
    pair = admissible_pairs(s, 2)[1]
    diffs = trace.fields if other is None else [a - b for a, b in zip(trace.fields, other.fields)]
    sup = max(sobolev_norm_standard(u, s, 2.0) for u in diffs)
    vals = np.array([sobolev_norm_standard(u, s, pair.r) for u in diffs])
    strich = float(np.trapezoid(vals**pair.q, trace.times) ** (1 / pair.q))
    return max(sup, strich)


def _blown(trace: EvolutionTrace) -> bool:
    return not all(np.isfinite(trace.mass))


def picard_solve(
    V: Potential, spec: SpectralData | None, u0: Field, cfg: PicardConfig, sign: int
) -> tuple[EvolutionTrace, list[float]]:
    """Iterate ``u <- Phi(u)`` from the linear flow until successive iterates differ by less than ``tol``.

    Distances are ``sup_t ||u_{k+1} - u_k||_{H^s}``. Returns the last iterate and
    the ratios ``d_{k+1}/d_k``. Raises :class:`NonContractionError` when a ratio
    reaches 1 after the first few steps, the iterate leaves the ball, or
    ``max_iter`` is exhausted.
    """
    _check_sign(sign)
    times = cfg.times
    linear = Propagator(V, cfg.substep).at_times(u0, times)
    u = EvolutionTrace.from_fields(V, sign, times, linear, cfg.substep)
    radius = cfg.ball_radius if cfg.ball_radius is not None else 2.0 * monitored_norm(u, cfg.s)
    ratios: list[float] = []
    prev = None
    for it in range(cfg.max_iter):
        try:
            new = duhamel_map(V, spec, u0, u, cfg, sign)
        except ValueError as exc:
            raise NonContractionError(f"iterate {it + 1} overflowed ({exc})", ratios) from exc
        d = max(sobolev_norm_standard(a - b, cfg.s, 2.0) for a, b in zip(new.fields, u.fields))
        if prev is not None and prev > 0:
            ratios.append(d / prev)
        log.debug("picard iteration %d: distance %.3e", it + 1, d)
        u = new
        if d < cfg.tol:
            return u, ratios
        size = monitored_norm(u, cfg.s)
        if radius > 0 and size > radius:
            raise NonContractionError(
                f"iterate {it + 1} left the ball: norm {size:.4g} > radius {radius:.4g}", ratios
            )
        if d > DIVERGENCE_CAP or len(ratios) >= 2 and ratios[-1] >= 1.0:
            raise NonContractionError(f"iteration {it + 1} stopped contracting (distance {d:.3g})", ratios)
        prev = d
    raise NonContractionError(f"no convergence to tol {cfg.tol:g} in {cfg.max_iter} iterations", ratios)


def _slice_steps(times: np.ndarray, dt: float) -> list[int]:
    return [step_count(b - a, dt) for a, b in zip(times[:-1], times[1:])]


def evolve(V: Potential, u0: Field, T: float, dt: float, sign: int, n_slices: int = 11) -> EvolutionTrace:
    """Split-step solution on ``[0, T]`` stored at ``n_slices`` equally spaced times.

    Each step is ``K(dt/2) P(dt) K(dt/2)`` with the kinetic flow ``K`` exact on the
    Fourier side and ``P`` the pointwise phase ``exp(-i dt (V - sign |u|^2))``,
    which is exact because ``|u|`` is invariant under it.
    """
    _check_sign(sign)
    _check_grid(V, u0)
    if n_slices < 2:
        raise ValueError("n_slices must be at least 2")
    times = np.linspace(0.0, T, n_slices)
    steps = _slice_steps(times, dt)
    g = u0.grid
    half = np.exp(-0.5j * dt * g.k_squared)
    full = half * half
    vpot = V.values
    cap = BLOWUP_FACTOR * max(lp_norm(u0, np.inf), np.finfo(float).tiny)
    fields = [u0]
    vh = forward(u0.values)
    for m in steps:
        if m == 0:
            raise ValueError("slice spacing must be positive")
        vh = half * vh
        for k in range(m):
            u = inverse(vh)
            u *= np.exp(-1j * dt * (vpot - sign * np.abs(u) ** 2))
            vh = forward(u)
            vh *= full if k < m - 1 else half
            if k % 100 == 99 and not np.abs(u).max() <= cap:
                raise BlowUpError(f"|u| exceeded {BLOWUP_FACTOR:g} times its initial maximum")
        u = inverse(vh)
        if not np.abs(u).max() <= cap:
            raise BlowUpError(f"|u| exceeded {BLOWUP_FACTOR:g} times its initial maximum")
        fields.append(Field(g, u))
    return EvolutionTrace.from_fields(V, sign, times, fields, dt)


def conservation_report(trace: EvolutionTrace, eps: float = 1e-300) -> tuple[float, float]:
    """Relative sups ``|M(t) - M(0)| / M(0)`` and ``|E(t) - E(0)| / |E(0)|``."""
    m0, e0 = trace.mass[0], trace.energy[0]
    dm = float(np.max(np.abs(trace.mass - m0)) / max(m0, eps))
    de = float(np.max(np.abs(trace.energy - e0)) / max(abs(e0), eps))
    return dm, de


def h1_bound_check(
    trace: EvolutionTrace, V: Potential, a: float, M0: float | None = None, E0: float | None = None, rtol: float = 1e-4
) -> bool:
    """``||(1 + a + H)^{1/2} u(t)||^2 <= 2 E0 + (1 + a) M0`` (relative slack ``rtol``) at every slice.

    Only meaningful for the defocusing sign, where ``2E`` dominates the form.
    """
    if trace.sign != -1:
        raise ValueError("the H^1 bound holds for defocusing traces only")
    M0 = trace.mass[0] if M0 is None else M0
    E0 = trace.energy[0] if E0 is None else E0
    bound = 2 * E0 + (1 + a) * M0
    slack = rtol * abs(bound)
    return all(quadratic_form(V, u) + (1 + a) * mass(u) <= bound + slack for u in trace.fields)
