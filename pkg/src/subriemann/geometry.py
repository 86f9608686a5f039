"""Vector fields, brackets and (2,3) sub-Riemannian frames on a single chart."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import expr as ex
from .expr import Expr, ONE, ZERO, add, mul, neg

DIM = 3


class GeometryError(Exception):
    pass


class GrowthVectorError(GeometryError):
    """The frame {X1, X2, [X1, X2]} degenerates somewhere on the sampling box."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class CoframeError(GeometryError):
    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class InconsistencyError(GeometryError):
    """An identity that holds by construction failed to verify."""


@dataclass(frozen=True)
class Chart:
    names: tuple[str, ...]
    domain: tuple[tuple[float, float], ...] = ((-1.0, 1.0),) * DIM

    def __post_init__(self):
        if len(self.names) != DIM or len(self.domain) != DIM:
            raise GeometryError("a chart has exactly three coordinates")
        if len(set(self.names)) != DIM:
            raise GeometryError("coordinate names must be distinct")
        for lo, hi in self.domain:
            if not lo < hi:
                raise GeometryError(f"empty sampling interval {lo}..{hi}")

    @property
    def coords(self) -> tuple[ex.Sym, ...]:
        return ex.coordinates(self.names)

    def parse(self, text: str) -> Expr:
        return ex.parse(text, self.names)

    @property
    def center(self) -> tuple[float, ...]:
        return tuple((lo + hi) / 2 for lo, hi in self.domain)


@dataclass(frozen=True)
class VectorField:
    """Sum of coefficient * d/dx^k over the chart coordinates."""

    coeffs: tuple[Expr, Expr, Expr]

    def __post_init__(self):
        if len(self.coeffs) != DIM:
            raise GeometryError("a vector field has three coefficients")

    @classmethod
    def of(cls, *coeffs) -> "VectorField":
        return cls(tuple(ex.as_expr(c) for c in coeffs))

    @classmethod
    def zero(cls) -> "VectorField":
        return cls((ZERO, ZERO, ZERO))

    def __call__(self, f: Expr) -> Expr:
        """Directional derivative of the scalar ``f``."""
        return add(*(mul(c, ex.diff(f, k)) for k, c in enumerate(self.coeffs) if not c.is_zero_literal()))

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(tuple(add(a, b) for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField(tuple(add(a, neg(b)) for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> "VectorField":
        return VectorField(tuple(neg(a) for a in self.coeffs))

    def scale(self, f) -> "VectorField":
        f = ex.as_expr(f)
        return VectorField(tuple(mul(f, a) for a in self.coeffs))

    def at(self, p) -> np.ndarray:
        return np.array([ex.evaluate(c, p) for c in self.coeffs])

    def is_zero(self, domain, **kw) -> bool:
        return all(ex.is_zero(c, domain, **kw) for c in self.coeffs)

    def __str__(self):
        return "(" + ", ".join(str(c) for c in self.coeffs) + ")"


@dataclass(frozen=True)
class Covector:
    """Sum of a_k dx^k."""

    coeffs: tuple[Expr, Expr, Expr]

    def __call__(self, v: VectorField) -> Expr:
        return add(*(mul(a, e) for a, e in zip(self.coeffs, v.coeffs)))

    def __str__(self):
        return "(" + ", ".join(str(c) for c in self.coeffs) + ")"


def lie_bracket(v: VectorField, w: VectorField) -> VectorField:
    return VectorField(tuple(add(v(wk), neg(w(vk))) for vk, wk in zip(v.coeffs, w.coeffs)))


def combine(coeffs: Sequence[Expr], fields: Sequence[VectorField]) -> VectorField:
    """Pointwise linear combination sum_i coeffs[i] * fields[i]."""
    return VectorField(tuple(
        add(*(mul(c, f.coeffs[k]) for c, f in zip(coeffs, fields) if not c.is_zero_literal()))
        for k in range(DIM)
    ))


def determinant(m) -> Expr:
    (a, b, c), (d, e, f), (g, h, i) = m
    return add(
        mul(a, add(mul(e, i), neg(mul(f, h)))),
        neg(mul(b, add(mul(d, i), neg(mul(f, g))))),
        mul(c, add(mul(d, h), neg(mul(e, g)))),
    )


def adjugate(m) -> list[list[Expr]]:
    def minor(r, c):
        rows = [i for i in range(3) if i != r]
        cols = [j for j in range(3) if j != c]
        (p, q), (s, t) = [[m[i][j] for j in cols] for i in rows]
        return add(mul(p, t), neg(mul(q, s)))

    # adj[i][j] = cofactor(j, i)
    return [[mul(ex.num((-1) ** (i + j)), minor(j, i)) for j in range(3)] for i in range(3)]


@dataclass(frozen=True)
class SubRiemannianStructure:
    """Oriented orthonormal horizontal frame {X1, X2} with X3 = [X1, X2] and coframe."""

    chart: Chart
    X1: VectorField
    X2: VectorField
    X3: VectorField
    coframe: tuple[Covector, Covector, Covector]
    det: Expr
    name: str = "manifold"
    seed: int = ex.DEFAULT_SEED
    samples: int = ex.DEFAULT_SAMPLES
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def frame(self) -> tuple[VectorField, VectorField, VectorField]:
        return (self.X1, self.X2, self.X3)

    @property
    def domain(self):
        return self.chart.domain

    def components(self, v: VectorField) -> tuple[Expr, Expr, Expr]:
        """Frame components xi^i(v)."""
        return tuple(xi(v) for xi in self.coframe)

    def from_components(self, comps: Sequence[Expr]) -> VectorField:
        return combine(comps, self.frame)

    def bracket(self, i: int, j: int) -> VectorField:
        """[X_i, X_j] for 0-based indices, memoised."""
        key = ("bracket", i, j)
        if key not in self._cache:
            if i == j:
                out = VectorField.zero()
            elif (i, j) == (0, 1):
                out = self.X3
            elif ("bracket", j, i) in self._cache:
                out = -self._cache[("bracket", j, i)]
            else:
                out = lie_bracket(self.frame[i], self.frame[j])
            self._cache[key] = out
        return self._cache[key]

    def bracket_components(self, i: int, j: int) -> tuple[Expr, Expr, Expr]:
        key = ("bracket_comps", i, j)
        if key not in self._cache:
            self._cache[key] = self.components(self.bracket(i, j))
        return self._cache[key]

    def is_zero(self, e: Expr, tol: float = ex.DEFAULT_TOL) -> bool:
        return ex.is_zero(e, self.domain, n=self.samples, tol=tol, seed=self.seed)

    def deviation(self, e: Expr):
        return ex.max_deviation(e, self.domain, n=self.samples, seed=self.seed)

    def frame_matrix_at(self, p) -> np.ndarray:
        """Columns are X1, X2, X3 at p in coordinate components."""
        return np.column_stack([f.at(p) for f in self.frame])

    def coframe_at(self, p) -> np.ndarray:
        """Rows are xi^1, xi^2, xi^3 at p."""
        return np.array([[ex.evaluate(a, p) for a in xi.coeffs] for xi in self.coframe])


def build_structure(
    chart: Chart,
    X1: VectorField,
    X2: VectorField,
    *,
    name: str = "manifold",
    seed: int = ex.DEFAULT_SEED,
    samples: int = ex.DEFAULT_SAMPLES,
    tol: float = ex.DEFAULT_TOL,
) -> SubRiemannianStructure:
    X3 = lie_bracket(X1, X2)
    frame = (X1, X2, X3)
    m = [[frame[j].coeffs[k] for j in range(DIM)] for k in range(DIM)]
    det = determinant(m)
    pts = ex.sample_points(chart.domain, samples, seed)
    vals = ex.evaluate_many(det, pts)
    for q, v in zip(pts, vals):
        if not np.isfinite(v) or abs(v) <= tol:
            raise GrowthVectorError(
                f"frame {{X1, X2, [X1, X2]}} is degenerate at {tuple(float(c) for c in q)} (det = {v})",
                point=tuple(float(c) for c in q),
            )
    adj = adjugate(m)
    inv_det = ex.power(det, -1)
    coframe = tuple(Covector(tuple(mul(adj[i][k], inv_det) for k in range(DIM))) for i in range(DIM))
    s = SubRiemannianStructure(chart, X1, X2, X3, coframe, det, name=name, seed=seed, samples=samples)
    for i in range(DIM):
        for j in range(DIM):
            d = add(coframe[i](frame[j]), neg(ONE if i == j else ZERO))
            if not s.is_zero(d, tol):
                raise CoframeError(f"xi^{i + 1}(X{j + 1}) != delta", pair=(i + 1, j + 1))
    return s


def cometric(s: SubRiemannianStructure) -> list[list[Expr]]:
    a, b = s.X1.coeffs, s.X2.coeffs
    return [[add(mul(a[i], a[j]), mul(b[i], b[j])) for j in range(DIM)] for i in range(DIM)]


def rotate_frame(
    s: SubRiemannianStructure,
    theta: Expr | None = None,
    *,
    cos: Expr | None = None,
    sin: Expr | None = None,
    check: bool = True,
) -> SubRiemannianStructure:
    """Rotate the horizontal frame by the angle function ``theta``.

    A constant rotation that has no rational angle can be given as the pair
    ``cos``/``sin`` directly (they must satisfy cos^2 + sin^2 = 1).
    """
    if theta is not None:
        c, sn = ex.cos(theta), ex.sin(theta)
        dtheta = [s.X1(theta), s.X2(theta)]
    else:
        if cos is None or sin is None:
            raise ValueError("give theta or both cos and sin")
        c, sn = ex.as_expr(cos), ex.as_expr(sin)
        # X_i(theta) = cos X_i(sin) - sin X_i(cos)
        dtheta = [add(mul(c, X(sn)), neg(mul(sn, X(c)))) for X in (s.X1, s.X2)]
    X1n = combine([c, sn], [s.X1, s.X2])
    X2n = combine([neg(sn), c], [s.X1, s.X2])
    out = build_structure(s.chart, X1n, X2n, name=s.name, seed=s.seed, samples=s.samples)
    if check:
        predicted = combine([neg(dtheta[0]), neg(dtheta[1]), ONE], s.frame)
        if not (out.X3 - predicted).is_zero(s.domain, n=s.samples, seed=s.seed):
            raise InconsistencyError("rotated X3 disagrees with -(X1 theta) X1 - (X2 theta) X2 + X3")
    return out


def weighted_order(alpha: Sequence[int]) -> int:
    """Number of entries equal to 1 or 2 plus twice the number equal to 3."""
    total = 0
    for a in alpha:
        if a not in (1, 2, 3):
            raise ValueError(f"multi-index entries must be 1, 2 or 3, got {a!r}")
        total += 2 if a == 3 else 1
    return total


def jacobi(s: SubRiemannianStructure) -> VectorField:
    X1, X2, X3 = s.frame
    return (lie_bracket(X1, lie_bracket(X2, X3))
            + lie_bracket(X2, lie_bracket(X3, X1))
            + lie_bracket(X3, lie_bracket(X1, X2)))
