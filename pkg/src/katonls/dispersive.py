"""The unitary group ``exp(-itH)``, dispersive decay and Strichartz norms."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._split import strang
from .funcalc import distorted_sobolev_norm
from .grid import Field, Grid, forward, lp_norm, sobolev_norm_standard
from .potentials import Potential
from .spectral import SpectralData, _check_grid, continuous_projection
from .trace import EvolutionTrace

DEFAULT_DT = 1e-3
STEP_TOL = 1e-9


class WrapAroundError(ValueError):
    """Requested times run past the periodic wrap-around horizon."""


def step_count(t: float, dt: float) -> int:
    """Number of steps of size ``dt`` covering ``|t|``; raises unless it is an integer."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    m = round(abs(t) / dt)
    if abs(m * dt - abs(t)) > STEP_TOL * max(1.0, abs(t)):
        raise ValueError(f"|t| = {abs(t)} is not an integer multiple of dt = {dt}")
    return int(m)


class Propagator:
    """Strang splitting ``exp(i dt/2 Delta) exp(-i dt V) exp(i dt/2 Delta)`` for one ``(V, dt)``.

    Negative times use the same factors with ``-dt``, which inverts a forward step
    exactly. ``V = 0`` is propagated by the exact Fourier multiplier.
    """

    def __init__(self, V: Potential, dt: float = DEFAULT_DT):
        if not dt > 0:
            raise ValueError(f"dt must be positive, got {dt}")
        self.V = V
        self.dt = float(dt)
        self._rate = -1j * V.grid.k_squared
        self._factors = {}

    def _factor(self, sign: int):
        if self.V.is_zero:
            return None
        if sign not in self._factors:
            self._factors[sign] = np.exp(-1j * sign * self.dt * self.V.values)
        return self._factors[sign]

    def _advance(self, vals: np.ndarray, steps: int, sign: int) -> np.ndarray:
        return strang(vals, self._rate, self._factor(sign), sign * self.dt, steps)

    def __call__(self, t: float, f: Field) -> Field:
        _check_grid(self.V, f)
        m = step_count(t, self.dt)
        return Field(f.grid, self._advance(f.values, m, 1 if t >= 0 else -1))

    def at_times(self, f: Field, times) -> list[Field]:
        """``exp(-itH) f`` at each of the increasing nonnegative ``times``, stepping once through."""
        _check_grid(self.V, f)
        out, vals, done = [], f.values, 0
        for t in times:
            if t < 0:
                raise ValueError("times must be nonnegative")
            m = step_count(t, self.dt)
            if m < done:
                raise ValueError("times must be increasing")
            vals = self._advance(vals, m - done, 1)
            done = m
            out.append(Field(f.grid, vals))
        return out


def schrodinger_propagate(V: Potential, t: float, f: Field, dt: float = DEFAULT_DT) -> Field:
    """``exp(-itH) f`` by ``|t|/dt`` Strang steps (backwards for ``t < 0``)."""
    return Propagator(V, dt)(t, f)


def linear_trace(V: Potential, f: Field, times, dt: float = DEFAULT_DT) -> EvolutionTrace:
    """Trace of the linear flow ``exp(-itH) f``; ``times`` must start at 0."""
    fields = Propagator(V, dt).at_times(f, times)
    return EvolutionTrace.from_fields(V, 0, times, fields, dt)


def rms_wavenumber(f: Field) -> float:
    """``sqrt(sum |xi|^2 |f^|^2 / sum |f^|^2)``."""
    p = np.abs(forward(f.values)) ** 2
    return float(np.sqrt(np.sum(f.grid.k_squared * p) / np.sum(p)))


def wrap_horizon(grid: Grid, f: Field | None = None) -> float:
    """Time ``L / (2 v)`` before mass moving at speed ``v`` reaches the periodic images.

    ``v`` is the group velocity ``2 k`` at the rms wavenumber of ``f``; without
    data the grid cap ``k = pi n / L`` is used.
    """
    k = rms_wavenumber(f) if f is not None else math.pi * grid.n / grid.box_length
    if k == 0:
        return math.inf
    return grid.box_length / (2 * 2 * k)


@dataclass
class DecayFit:
    """Least-squares power law ``||u(t)||_inf ~ C t^exponent``."""

    exponent: float
    amplitude: float
    times: np.ndarray
    sup_norms: np.ndarray
    horizon: float

    @property
    def amplitudes(self) -> np.ndarray:
        """``t^{3/2} ||u(t)||_inf``, which tends to ``(4 pi)^{-3/2} ||f||_1`` for free data."""
        return self.times**1.5 * self.sup_norms

    def rows(self):
        """CSV rows ``(t, sup_norm)``."""
        return list(zip(self.times.tolist(), self.sup_norms.tolist()))


def dispersive_decay_fit(
    V: Potential,
    spec: SpectralData | None,
    f: Field,
    times,
    dt: float = DEFAULT_DT,
    project: bool = True,
) -> DecayFit:
    """Fit the decay rate of ``||exp(-itH) P_c f||_inf`` over ``times``.

    The data are rescaled to unit ``L^1`` norm first. ``spec = None`` or
    ``project = False`` skips the projection onto the continuous spectrum.
    """
    times = np.asarray(times, float)
    if times.size < 2 or np.any(times <= 0) or np.any(np.diff(times) <= 0):
        raise ValueError("times must be positive, increasing and at least two")
    _check_grid(V, f)
    u = continuous_projection(spec, f) if (project and spec is not None) else f
    norm1 = lp_norm(u, 1)
    if norm1 == 0:
        raise ValueError("data vanish after projection")
    u = u * (1.0 / norm1)
    horizon = wrap_horizon(f.grid, u)
    if times[-1] > horizon:
        raise WrapAroundError(f"times up to {times[-1]:g} exceed the wrap-around horizon T_wrap = {horizon:.4g}")
    fields = Propagator(V, dt).at_times(u, times)
    sup = np.array([lp_norm(w, np.inf) for w in fields])
    slope, icept = np.polyfit(np.log(times), np.log(sup), 1)
    return DecayFit(float(slope), float(math.exp(icept)), times, sup, horizon)


@dataclass(frozen=True)
class AdmissiblePair:
    """``(q, r)`` with ``2/q + 3/r = 3/2``, ``2 <= q <= inf`` and ``2 <= r < 3/s`` (``r <= 6``)."""

    q: float
    r: float
    s: float

    def __post_init__(self):
        q, r, s = self.q, self.r, self.s
        if not 0 <= s < 1.5:
            raise ValueError(f"s must lie in [0, 3/2), got {s}")
        if not 2 <= q <= math.inf:
            raise ValueError(f"q must lie in [2, inf], got {q}")
        if not 2 <= r <= 6 or (s > 0 and not r < 3 / s):
            raise ValueError(f"r = {r} is outside [2, min(3/s, 6)] for s = {s}")
        if abs(2 / q + 3 / r - 1.5) > 1e-12:
            raise ValueError(f"(q, r) = ({q}, {r}) violates 2/q + 3/r = 3/2")

    @classmethod
    def from_r(cls, r: float, s: float) -> AdmissiblePair:
        gap = 1.5 - 3 / r
        return cls(math.inf if gap <= 0 else 2 / gap, r, s)


def admissible_pairs(s: float, count: int) -> list[AdmissiblePair]:
    """``count`` pairs with ``r`` equally spaced from 2 towards ``min(3/s, 6)``.

    The right end is included only when it is itself admissible (``r = 6`` for
    ``s < 1/2``); the first pair is always ``(inf, 2)``.
    """
    if not 0 <= s < 1.5:
        raise ValueError(f"s must lie in [0, 3/2), got {s}")
    if count < 1:
        raise ValueError("count must be at least 1")
    closed = s < 0.5
    r_max = 6.0 if closed else 3 / s
    if count == 1:
        rs = [2.0]
    elif closed:
        rs = np.linspace(2.0, r_max, count)
    else:
        rs = 2.0 + (r_max - 2.0) * np.arange(count) / count
    return [AdmissiblePair.from_r(float(r), s) for r in rs]


@dataclass
class StrichartzReport:
    pairs: list[AdmissiblePair]
    per_pair_norm: list[float]
    interval: tuple[float, float]

    @property
    def sup_norm(self) -> float:
        return max(self.per_pair_norm)

    def rows(self):
        """CSV rows ``(s, q, r, norm)``."""
        return [(p.s, p.q, p.r, v) for p, v in zip(self.pairs, self.per_pair_norm)]


def _time_norm(times: np.ndarray, values: np.ndarray, q: float) -> float:
    if math.isinf(q):
        return float(values.max())
    if times.size == 1:
        return 0.0
    return float(np.trapezoid(values**q, times) ** (1 / q))


def strichartz_norm(
    trace: EvolutionTrace,
    s: float,
    pairs: list[AdmissiblePair],
    distorted: bool = False,
    V: Potential | None = None,
    a: float = 0.0,
    spec: SpectralData | None = None,
    homogeneous: bool = False,
) -> StrichartzReport:
    """``L^q_t W^{s,r}_x`` norms of the stored slices for each pair.

    Time integrals use the trapezoid rule on the stored slices, ``q = inf`` the
    sampled maximum. ``distorted`` switches the spatial norm to
    ``||(1 + a + H)^{s/2} u||_{L^r}`` (or ``||H^{s/2} P_c u||`` when homogeneous).
    """
    if len(trace) == 0:
        raise ValueError("empty trace")
    if not pairs:
        raise ValueError("at least one admissible pair is needed")
    if distorted and V is None:
        V = trace.potential
    times = np.asarray(trace.times, float)
    norms = []
    for p in pairs:
        if p.s != s:
            raise ValueError(f"pair {p} was built for s = {p.s}, not {s}")
        if distorted:
            vals = [distorted_sobolev_norm(V, a, s, p.r, u, spec, homogeneous) for u in trace.fields]
        else:
            vals = [sobolev_norm_standard(u, s, p.r, a, homogeneous) for u in trace.fields]
        norms.append(_time_norm(times, np.array(vals), p.q))
    return StrichartzReport(list(pairs), norms, (float(times[0]), float(times[-1])))
