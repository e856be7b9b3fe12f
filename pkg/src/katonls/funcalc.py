"""Functional calculus of ``H = -Delta + V``.

Heat semigroup by Strang splitting, fractional powers ``(1 + a + H)^{s/2}``
through the heat-semigroup (Bochner) integral, distorted Sobolev norms and the
measurement of their equivalence with the standard ones.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import gamma

from ._split import strang
from .grid import Field, lp_norm, random_field, sobolev_norm_standard
from .lanczos import KrylovError, matrix_function
from .potentials import Potential
from .spectral import SpectralData, _check_grid, _h_apply, continuous_projection, quadratic_form

HEAT_MAX_SUBSTEP = 1e-2
TAU_MIN = -30.0
TAU_MAX = 5.0
BOCHNER_NODES = 256
BOCHNER_RTOL = 1e-6
BOCHNER_MAX_NODES = 1 << 14


class QuadratureError(RuntimeError):
    """The Bochner quadrature did not converge."""


def heat_apply(V: Potential, t: float, f: Field, max_substep: float = HEAT_MAX_SUBSTEP) -> Field:
    """``exp(-t H) f`` by Strang splitting with substeps no longer than ``max_substep``."""
    if t < 0:
        raise ValueError(f"heat time must be nonnegative, got {t}")
    _check_grid(V, f)
    if t == 0:
        return f
    m = max(1, math.ceil(t / max_substep - 1e-9))
    dt = t / m
    g = f.grid
    pot = None if V.is_zero else np.exp(-dt * V.values)
    return Field(g, strang(f.values, -g.k_squared, pot, dt, m))


@dataclass
class GaussianBoundFit:
    A1: float
    A2: float
    fit_residual: float

    def to_dict(self) -> dict:
        return asdict(self)


def heat_kernel_samples(V: Potential, t_ladder, a: float = 0.0, source=(0.0, 0.0, 0.0), floor: float = 1e-10):
    """Samples ``(t, |x-y|, K_t(x, y))`` of the kernel of ``exp(-t(1 + a + H))``.

    Columns come from heat flows of a discrete delta at the node nearest ``source``;
    only nodes within a quarter box of the source are kept, and only values above
    ``floor * max`` and above the spectral truncation level ``100 exp(-t k_max^2)``.
    Times whose truncation level exceeds 1% of the peak are rejected as unresolved.
    """
    g = V.grid
    idx = tuple(int(round((c + g.box_length / 2) / g.spacing)) for c in source)
    delta = np.zeros(g.shape, complex)
    delta[idx] = 1.0 / g.cell_volume
    y = tuple(g.axis[i] for i in idx)
    r = g.radius(y)
    near = r <= g.box_length / 4
    ts, rs, ks = [], [], []
    u = Field(g, delta)
    t_prev = 0.0
    k_max = np.pi / g.spacing
    for t in sorted(t_ladder):
        level = max(floor, 100.0 * math.exp(-t * k_max**2))
        if level > 1e-2:
            raise ValueError(f"t = {t} is below the grid resolution (need t >= {math.log(1e4) / k_max**2:.3g})")
        u = heat_apply(V, t - t_prev, u)
        t_prev = t
        K = u.values.real * np.exp(-t * (1.0 + a))
        keep = near & (K > level * K.max())
        ts.append(np.full(keep.sum(), t))
        rs.append(r[keep])
        ks.append(K[keep])
    return np.concatenate(ts), np.concatenate(rs), np.concatenate(ks)


def gaussian_bound_fit(
    V: Potential, t_ladder, a: float = 0.0, max_residual: float = 1.0, source=(0.0, 0.0, 0.0)
) -> GaussianBoundFit:
    """Fit ``K_t(x, y) <= A1 t^{-3/2} exp(-t - A2 |x-y|^2 / t)`` on sampled kernel values.

    ``A2`` comes from a least-squares fit of the log-kernel against ``|x-y|^2/t``;
    ``A1`` is then the smallest amplitude for which the bound holds at every sample.
    """
    t_ladder = np.asarray(t_ladder, float)
    if np.any(t_ladder <= 0) or np.any(np.diff(t_ladder) <= 0):
        raise ValueError("t_ladder must be positive and strictly increasing")
    t, r, K = heat_kernel_samples(V, t_ladder, a, source)
    z = r**2 / t
    y = np.log(K) + 1.5 * np.log(t) + t
    shape = y + a * t
    X = np.column_stack([np.ones_like(z), -z])
    coef, *_ = np.linalg.lstsq(X, shape, rcond=None)
    A2 = float(coef[1])
    resid = shape - X @ coef
    fit_residual = float(np.sqrt(np.mean(resid**2)))
    if A2 <= 0 or fit_residual > max_residual:
        raise QuadratureError(f"Gaussian bound fit failed (A2 = {A2:.3g}, residual = {fit_residual:.3g})")
    A1 = float(np.exp(np.max(y + A2 * z)))
    return GaussianBoundFit(A1, A2, fit_residual)


def _matfun(V: Potential, vals: np.ndarray, fn) -> np.ndarray:
    try:
        out, _ = matrix_function(lambda v: _h_apply(V, v), vals, fn)
    except KrylovError as exc:
        raise QuadratureError(str(exc)) from exc
    return out


def _trapezoid_nodes(tau_min: float, tau_max: float, count: int):
    tau = np.linspace(tau_min, tau_max, count)
    w = np.full(count, tau[1] - tau[0])
    w[[0, -1]] *= 0.5
    return np.exp(tau), w


def bochner_weights(sigma: float, x_min: float, x_max: float, rtol: float = BOCHNER_RTOL):
    """Nodes ``t_k`` and weights ``c_k`` with ``x^{-sigma} ~ c_0 + sum_k c_k exp(-t_k x)``.

    Trapezoid rule in ``tau = log t`` on ``[-30, tau_max]``; the node count doubles
    until ``x^{-sigma}`` is reproduced to ``rtol`` on ``[x_min, x_max]``. ``c_0`` is the
    exact contribution of ``(0, t_min)`` where ``exp(-t x) ~ 1``.
    """
    if not 0 < sigma <= 1:
        raise ValueError(f"sigma must lie in (0, 1], got {sigma}")
    if not x_min > 0:
        raise ValueError("the shifted operator must be positive definite")
    tau_max = max(TAU_MAX, math.log(45.0 / x_min))
    probe = np.geomspace(x_min, max(x_max, x_min * 1.0001), 64)
    count = BOCHNER_NODES
    prev = None
    g = gamma(sigma)
    while count <= BOCHNER_MAX_NODES:
        t, w = _trapezoid_nodes(TAU_MIN, tau_max, count)
        c = w * t**sigma / g
        c0 = math.exp(TAU_MIN * sigma) / sigma / g
        approx = c0 + np.exp(-np.outer(probe, t)) @ c
        err = np.max(np.abs(approx * probe**sigma - 1.0))
        if prev is not None and np.max(np.abs(approx - prev) / approx) < rtol and err < 10 * rtol:
            return t, c, c0
        prev = approx
        count *= 2
    raise QuadratureError("Bochner quadrature did not converge")


def _spectrum_bounds(V: Potential):
    g = V.grid
    return float(V.values.min()), float(g.k_squared.max() + V.values.max())


def fractional_power_apply(
    V: Potential,
    a: float,
    s: float,
    f: Field,
    spec: SpectralData | None = None,
    method: str = "lanczos",
) -> Field:
    """``(1 + a + H)^{s/2} f`` for ``s`` in ``[-2, 2]``.

    Negative powers are the heat-semigroup integral
    ``Gamma(s/2)^{-1} int_0^inf t^{s/2-1} exp(-t(1+a+H)) dt`` on a log-spaced
    trapezoid ladder. Each ``exp(-tH) f`` is evaluated in a Lanczos subspace of ``H``
    (``method="lanczos"``) or by the Strang heat flow (``method="splitting"``, slow).
    Positive powers apply ``(1 + a + H)^m``, ``m = ceil(s/2)``, to the negative
    remainder ``s/2 - m``.
    """
    if not -2 <= s <= 2:
        raise ValueError(f"s must lie in [-2, 2], got {s}")
    _check_grid(V, f)
    if s == 0:
        return f
    shift = 1.0 + a
    lo, hi = _spectrum_bounds(V)
    if spec is not None:
        # without bound states the spectrum starts above -eig_tol
        bottom = spec.eigenvalues[0] if spec.eigenpairs else -spec.eig_tol
        lo = max(lo, bottom - 1e-9)
    m = math.ceil(s / 2) if s > 0 else 0
    sigma = m - s / 2
    vals = f.values
    if sigma > 0:
        vals = _negative_power(V, shift, sigma, vals, lo, hi, method)
    for _ in range(m):
        vals = _h_apply(V, vals) + shift * vals
    return Field(f.grid, vals)


def _negative_power(V, shift, sigma, vals, lo, hi, method):
    if method == "lanczos":
        cache = {}
        if lo + shift > 0:
            cache["lo"] = lo + shift
            cache["w"] = bochner_weights(sigma, lo + shift, shift + hi)

        def fn(theta):
            x = shift + theta
            if x.min() <= 0:
                raise ValueError("1 + a + H is not positive definite on this data")
            if "lo" not in cache or x.min() < cache["lo"]:
                cache["lo"] = 0.5 * x.min()
                cache["w"] = bochner_weights(sigma, cache["lo"], shift + hi)
            t, c, c0 = cache["w"]
            return c0 + np.exp(-np.outer(x, t)) @ c

        return _matfun(V, vals, fn)
    if method == "splitting":
        if lo + shift <= 0:
            raise ValueError("1 + a + H may not be positive definite; pass spectral data")
        t, c, c0 = bochner_weights(sigma, shift + lo, shift + hi)
        g = V.grid
        u = Field(g, vals)
        acc = c0 * vals
        t_prev = 0.0
        for tk, ck in zip(t, c):
            u = heat_apply(V, tk - t_prev, u)
            t_prev = tk
            acc = acc + ck * math.exp(-tk * shift) * u.values
        return acc
    raise ValueError(f"unknown method {method!r}")


def homogeneous_power_apply(V: Potential, s: float, f: Field, spec: SpectralData) -> Field:
    """``H^{s/2} P_c f``; spectrum below zero left after projection is clipped to zero."""
    if not 0 <= s <= 2:
        raise ValueError(f"s must lie in [0, 2], got {s}")
    pf = continuous_projection(spec, f)
    if s == 0:
        return pf
    return Field(f.grid, _matfun(V, pf.values, lambda th: np.maximum(th, 0.0) ** (s / 2)))


def _check_sobolev_range(s: float, r: float):
    if not 0 <= s <= 2:
        raise ValueError(f"s must lie in [0, 2], got {s}")
    if not r > 1 or (s > 0 and not r < 3 / s):
        raise ValueError(f"r = {r} outside (1, 3/s) for s = {s}")


def distorted_sobolev_norm(
    V: Potential,
    a: float,
    s: float,
    r: float,
    f: Field,
    spec: SpectralData | None = None,
    homogeneous: bool = False,
) -> float:
    """``||(1 + a + H)^{s/2} f||_{L^r}`` (or ``||H^{s/2} P_c f||_{L^r}`` when homogeneous)."""
    _check_sobolev_range(s, r)
    if homogeneous:
        if spec is None:
            raise ValueError("the homogeneous norm needs spectral data for P_c")
        return lp_norm(homogeneous_power_apply(V, s, f, spec), r)
    if s == 0:
        return lp_norm(f, r)
    if s == 1 and r == 2:
        # ||(1+a+H)^{1/2} f||^2 is the shifted quadratic form
        _check_grid(V, f)
        return math.sqrt(max(quadratic_form(V, f) + (1.0 + a) * lp_norm(f, 2) ** 2, 0.0))
    return lp_norm(fractional_power_apply(V, a, s, f, spec), r)


@dataclass
class EquivalenceReport:
    s: float
    r: float
    ratio_min: float
    ratio_max: float
    ensemble_size: int
    ratios: list[float] = field(default_factory=list, repr=False)

    @property
    def spread(self) -> float:
        return self.ratio_max / self.ratio_min

    def to_dict(self) -> dict:
        return asdict(self)


def field_ensemble(grid, size: int, seed: int = 0, k_cut: float = 3.0):
    """Deterministic ensemble of localized band-limited fields."""
    rng = np.random.default_rng(seed)
    return [random_field(grid, rng, k_cut=k_cut, center_spread=grid.box_length / 20) for _ in range(size)]


def norm_equivalence_scan(
    V: Potential,
    a: float,
    s: float,
    r: float,
    ensemble_size: int,
    spec: SpectralData | None = None,
    seed: int = 0,
    homogeneous: bool = False,
) -> EquivalenceReport:
    """Extremes of ``||u||_{distorted W^{s,r}} / ||u||_{W^{s,r}}`` over a pseudo-random ensemble."""
    _check_sobolev_range(s, r)
    ratios = []
    for u in field_ensemble(V.grid, ensemble_size, seed):
        if homogeneous:
            u = continuous_projection(spec, u)
        num = distorted_sobolev_norm(V, a, s, r, u, spec, homogeneous)
        den = sobolev_norm_standard(u, s, r, a, homogeneous)
        ratios.append(num / den)
    return EquivalenceReport(s, r, float(min(ratios)), float(max(ratios)), ensemble_size, [float(x) for x in ratios])


def sobolev_inequality_ratio(V: Potential, a: float, s: float, p: float, q: float, fields) -> float:
    """``max ||(1 + a + H)^{-s/2} u||_{L^q} / ||u||_{L^p}`` over ``fields``."""
    best = 0.0
    for u in fields:
        best = max(best, lp_norm(fractional_power_apply(V, a, -s, u), q) / lp_norm(u, p))
    return best
