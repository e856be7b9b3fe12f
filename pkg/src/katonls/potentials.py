"""Potential families and Kato-class diagnostics.

All shipped families are radial profiles around ``center`` with the sign
convention ``V = -depth * profile``, so a positive depth is an attractive well.
They decay fast enough to be negligible at the box boundary for the grids used
here; bumps are compactly supported and hence members of the closure of
bounded compactly supported functions in the global Kato norm. Membership in
that closure is not decided numerically, only the norms are computed.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .grid import Grid, GridMismatchError
from .kernels import convolve

BOUNDARY_THRESHOLD = 1e-8
WEAK_L32_LEVELS = 64

KINDS = ("gaussian_well", "yukawa", "bump", "inverse_square_truncated", "sum")


class PotentialAdmissibilityError(ValueError):
    """The potential does not decay below the boundary threshold inside the box."""


@dataclass(frozen=True)
class PotentialSpec:
    kind: str
    depth: float = 0.0
    width: float = 1.0
    decay: float = 1.0
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    children: tuple[PotentialSpec, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}; expected one of {KINDS}")
        if not (self.width > 0 and self.decay > 0):
            raise ValueError("width and decay must be strictly positive")
        if self.kind == "sum" and not self.children:
            raise ValueError("a sum potential needs at least one child")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "children", tuple(self.children))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["center"] = list(self.center)
        d["children"] = [c.to_dict() for c in self.children]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> PotentialSpec:
        d = dict(d)
        d["children"] = tuple(cls.from_dict(c) for c in d.get("children", ()))
        d["center"] = tuple(d.get("center", (0.0, 0.0, 0.0)))
        return cls(**d)

    def scaled(self, c: float) -> PotentialSpec:
        if self.kind == "sum":
            return PotentialSpec("sum", children=tuple(ch.scaled(c) for ch in self.children))
        return PotentialSpec(self.kind, self.depth * c, self.width, self.decay, self.center)


def gaussian_well(depth: float, width: float = 1.0, center=(0.0, 0.0, 0.0)) -> PotentialSpec:
    return PotentialSpec("gaussian_well", depth=depth, width=width, center=center)


def _profile(spec: PotentialSpec, g: Grid) -> np.ndarray:
    r = g.radius(spec.center)
    h = g.spacing
    if spec.kind == "gaussian_well":
        return np.exp(-((r / spec.width) ** 2))
    if spec.kind == "yukawa":
        return np.exp(-spec.decay * r) / np.maximum(r, h)
    if spec.kind == "bump":
        rho = np.minimum(r / spec.width, 1.0)
        with np.errstate(divide="ignore", over="ignore"):
            out = np.exp(1.0 - 1.0 / (1.0 - rho**2))
        return np.where(rho < 1.0, out, 0.0)
    if spec.kind == "inverse_square_truncated":
        return np.where(r <= spec.width, 1.0 / np.maximum(r, h) ** 2, 0.0)
    raise ValueError(spec.kind)


def evaluate(spec: PotentialSpec, g: Grid) -> np.ndarray:
    if spec.kind == "sum":
        return sum(evaluate(c, g) for c in spec.children)
    return -spec.depth * _profile(spec, g)


@dataclass(frozen=True, eq=False)
class Potential:
    grid: Grid
    values: np.ndarray = field(repr=False)
    spec: PotentialSpec | None = None

    def __post_init__(self):
        vals = np.asarray(self.values)
        if np.iscomplexobj(vals):
            raise ValueError("potentials must be real-valued")
        vals = np.array(np.broadcast_to(vals.astype(float), self.grid.shape))
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @classmethod
    def zero(cls, g: Grid) -> Potential:
        return cls(g, np.zeros(g.shape))

    @classmethod
    def constant(cls, g: Grid, c: float) -> Potential:
        return cls(g, np.full(g.shape, float(c)))

    @property
    def is_zero(self) -> bool:
        return not np.any(self.values)

    def __mul__(self, c: float) -> Potential:
        spec = self.spec.scaled(c) if self.spec is not None else None
        return Potential(self.grid, c * self.values, spec)

    __rmul__ = __mul__

    def __add__(self, other: Potential) -> Potential:
        if other.grid != self.grid:
            raise GridMismatchError("potentials live on different grids")
        spec = None
        if self.spec is not None and other.spec is not None:
            spec = PotentialSpec("sum", children=(self.spec, other.spec))
        return Potential(self.grid, self.values + other.values, spec)


def sample_potential(spec: PotentialSpec, g: Grid, check: bool = True) -> Potential:
    """Evaluate the analytic family on the grid nodes.

    With ``check`` the boundary shell must satisfy ``|V| < 1e-8``.
    """
    vals = evaluate(spec, g)
    if check:
        edge = float(np.abs(vals[g.boundary_mask()]).max())
        if edge >= BOUNDARY_THRESHOLD:
            raise PotentialAdmissibilityError(
                f"{spec.kind} potential reaches {edge:.3g} on the box boundary "
                f"(threshold {BOUNDARY_THRESHOLD:g}); enlarge the box"
            )
    return Potential(g, vals, spec)


def negative_part(V: Potential) -> Potential:
    """``V_- = max(-V, 0)``, stored as a nonnegative potential."""
    return Potential(V.grid, np.maximum(-V.values, 0.0))


def newton_potential(V: Potential) -> np.ndarray:
    """``x -> int |V(y)| / |x - y| dy`` at every grid node."""
    return convolve(V.grid, np.abs(V.values), "newton")


def kato_norm(V: Potential) -> float:
    """Global Kato norm ``sup_x int |V(y)|/|x-y| dy`` (sup over grid nodes)."""
    if V.is_zero:
        return 0.0
    return float(newton_potential(V).max())


def local_kato_modulus(V: Potential, radii) -> list[float]:
    """``sup_x int_{|x-y|<=r} |V(y)|/|x-y| dy`` for each radius ``r > h``."""
    h = V.grid.spacing
    out = []
    for r in radii:
        if not r > h:
            raise ValueError(f"radius {r} is under-resolved (must exceed h = {h})")
        if V.is_zero:
            out.append(0.0)
            continue
        out.append(float(convolve(V.grid, np.abs(V.values), "newton_ball", float(r)).max()))
    return out


def weak_l32_profile(V: Potential, levels: int = WEAK_L32_LEVELS) -> tuple[np.ndarray, np.ndarray]:
    """Ladder ``lambda`` from ``min+ |V|`` to ``max |V|`` and ``lambda |{|V| >= lambda}|^{2/3}`` on it."""
    mod = np.abs(V.values).ravel()
    pos = mod[mod > 0]
    if pos.size == 0:
        return np.zeros(0), np.zeros(0)
    lam = np.geomspace(pos.min(), pos.max(), levels)
    srt = np.sort(pos)
    counts = srt.size - np.searchsorted(srt, lam, side="left")
    return lam, lam * (V.grid.cell_volume * counts) ** (2.0 / 3.0)


def weak_l32_quasinorm(V: Potential, levels: int = WEAK_L32_LEVELS) -> float:
    """``sup_lambda lambda |{|V| >= lambda}|^{2/3}`` over a logarithmic ladder."""
    _, vals = weak_l32_profile(V, levels)
    return float(vals.max()) if vals.size else 0.0


@dataclass
class KatoReport:
    global_norm: float
    local_modulus: list[tuple[float, float]]
    negative_part_norm: float
    weak_l32: float

    @property
    def form_positive(self) -> bool:
        """Negative part strictly below the ``4 pi`` threshold for form positivity."""
        return self.negative_part_norm < 4 * np.pi

    def to_dict(self) -> dict:
        return {
            "global_norm": self.global_norm,
            "local_modulus": [list(p) for p in self.local_modulus],
            "negative_part_norm": self.negative_part_norm,
            "weak_l32": self.weak_l32,
            "form_positive": self.form_positive,
        }


def kato_report(V: Potential, radii=None) -> KatoReport:
    h = V.grid.spacing
    if radii is None:
        radii = [h * f for f in (8.0, 4.0, 2.0, 1.5)]
    radii = sorted(radii, reverse=True)
    return KatoReport(
        global_norm=kato_norm(V),
        local_modulus=list(zip(radii, local_kato_modulus(V, radii))),
        negative_part_norm=kato_norm(negative_part(V)),
        weak_l32=weak_l32_quasinorm(V),
    )
