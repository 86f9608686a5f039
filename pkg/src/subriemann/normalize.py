"""Carnot frames, normalized charts and Heisenberg flattenings at a point.

Pointwise work happens in centred coordinates u = x - p.  Every frame
coefficient is replaced by its third-order Taylor polynomial about p (see
``jets``); a chain of at most three frame derivatives evaluated at p only
sees that much of each coefficient, so the values are exact up to rounding.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import expr as ex
from . import jets
from .jets import TPoly
from .connection import Connection, natural_connection
from .expr import Expr, ONE, ZERO, add, mul, neg
from .geometry import (
    DIM,
    Chart,
    InconsistencyError,
    SubRiemannianStructure,
    VectorField,
    lie_bracket,
    rotate_frame,
    weighted_order,
)
from .report import SKIP, Check

__all__ = [
    "ThetaJet", "CarnotFrame", "VerticalDirection", "ChartNormalization", "Flattening",
    "FrameJet", "CarnotVerificationError", "CarnotRequiredError",
    "carnot_theta_jet", "realize_theta", "carnot_frame", "carnot_residuals", "vertical_direction",
    "normalize_chart_order2", "normalize_chart_order3", "phi", "phi_table", "flatten",
    "verify_jet_agreement", "inherited_connection_at", "natural_connection_at",
    "compare_with_natural", "bracket_operator_identities", "weighted_multi_indices",
    "monomial_exponents", "weighted_order", "BRACKET_TOL", "SOLVE_TOL", "AGREEMENT_TOL",
]

BRACKET_TOL = 1e-9
SOLVE_TOL = 1e-10
AGREEMENT_TOL = 1e-8

ORIGIN = (0.0, 0.0, 0.0)
HORIZONTAL = (0, 1)


class CarnotVerificationError(InconsistencyError):
    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class CarnotRequiredError(ValueError):
    """Third-order normalization was asked for on a frame that is not Carnot at p."""


# ---------------------------------------------------------------------------
# multi-indices and monomials


def weighted_multi_indices(max_order: int = 3) -> list[tuple[int, ...]]:
    """0-based multi-indices over {X1, X2, X3} with weighted order <= max_order."""
    out = []
    for n in range(1, max_order + 1):
        for a in itertools.product(range(DIM), repeat=n):
            if weighted_order([i + 1 for i in a]) <= max_order:
                out.append(a)
    return out


def monomial_exponents(max_degree: int = 3) -> list[tuple[int, int, int]]:
    return [b for d in range(max_degree + 1)
            for b in itertools.product(range(d + 1), repeat=DIM) if sum(b) == d]


def _monomial(xs: Sequence[TPoly], beta: Sequence[int]) -> TPoly:
    out = TPoly.const(1.0)
    for x, b in zip(xs, beta):
        for _ in range(b):
            out = out * x
    return out


def _label(alpha: Sequence[int]) -> str:
    return "X" + "X".join(str(a + 1) for a in alpha)


# ---------------------------------------------------------------------------
# frame jets


FieldJet = tuple[TPoly, TPoly, TPoly]


@dataclass
class FrameJet:
    """Third-order Taylor models of X1, X2, X3 about p, in centred coordinates."""

    fields: tuple[FieldJet, FieldJet, FieldJet]
    point: tuple[float, ...]

    @classmethod
    def of(cls, frame: Sequence[VectorField], p: Sequence[float]) -> "FrameJet":
        fields = tuple(tuple(jets.jet(c, p) for c in X.coeffs) for X in frame)
        return cls(fields, tuple(float(c) for c in p))

    def derivative(self, a: int, g: TPoly) -> TPoly:
        F = self.fields[a]
        return F[0] * g.diff(0) + F[1] * g.diff(1) + F[2] * g.diff(2)

    def apply(self, alpha: Sequence[int], f: TPoly) -> float:
        """(X_{a1} X_{a2} ... X_{an} f)(p) for a function ``f`` of the centred coordinates."""
        n = len(alpha)
        g = f.truncate(n)
        for r, a in enumerate(reversed(alpha)):
            g = self.derivative(a, g).truncate(n - r - 1)
        return g.value

    def bracket_at(self, i: int, j: int) -> np.ndarray:
        """Coordinate components of [X_i, X_j] at p."""
        u = jets.variables()
        return np.array([self.apply((i, j), u[k]) - self.apply((j, i), u[k]) for k in range(DIM)])

    def frame_matrix(self) -> np.ndarray:
        return np.array([[F[k].value for F in self.fields] for k in range(DIM)])


def uncentred(f: TPoly, p: Sequence[float], chart: Chart) -> Expr:
    """Rewrite a polynomial in u = x - p in the chart coordinates."""
    u = [add(x, ex.num(-ex.rationalize(float(c)))) for x, c in zip(chart.coords, p)]
    return f.to_expr(u)


# ---------------------------------------------------------------------------
# Carnot frames


@dataclass(frozen=True)
class ThetaJet:
    """Prescribed frame derivatives of the rotation angle at p."""

    d1: float
    d2: float
    d11: float
    d12: float
    d21: float
    d22: float

    @property
    def d3(self) -> float:
        """X3 theta forced by X3 = X1 X2 - X2 X1."""
        return self.d12 - self.d21

    def as_tuple(self) -> tuple[float, ...]:
        return (self.d1, self.d2, self.d11, self.d12, self.d21, self.d22)

    @classmethod
    def zero(cls) -> "ThetaJet":
        return cls(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


def _at(e: Expr, p) -> float:
    return ex.evaluate(e, p)


def _coef(x: float) -> Expr:
    # keeps theta printable; the jet check below bounds the rounding
    r = ex.rationalize(float(x))
    if r.denominator > 10**12:
        r = r.limit_denominator(10**12)
    return ex.num(r)


def _bracket_frame_components(J: FrameJet) -> tuple[np.ndarray, np.ndarray]:
    """Frame components of [X2, X3] and [X1, X3] at p."""
    Einv = np.linalg.inv(J.frame_matrix())
    return Einv @ J.bracket_at(1, 2), Einv @ J.bracket_at(0, 2)


def carnot_theta_jet(s: SubRiemannianStructure, p: Sequence[float], *, _jet: FrameJet | None = None) -> ThetaJet:
    b23, b13 = _bracket_frame_components(_jet or FrameJet.of(s.frame, p))
    d1, d2 = -b23[2], b13[2]
    sq = d1 * d1 + d2 * d2
    return ThetaJet(
        d1=d1,
        d2=d2,
        d11=b13[0],
        d12=(sq + b23[0] + 2 * b13[1]) / 3,
        d21=(-sq + b13[1] + 2 * b23[0]) / 3,
        d22=b23[1],
    )


def _theta_jet_of(s: SubRiemannianStructure, theta: Expr, p) -> ThetaJet:
    X1, X2 = s.X1, s.X2
    return ThetaJet(_at(X1(theta), p), _at(X2(theta), p),
                    _at(X1(X1(theta)), p), _at(X1(X2(theta)), p),
                    _at(X2(X1(theta)), p), _at(X2(X2(theta)), p))


def realize_theta(s: SubRiemannianStructure, p: Sequence[float], jet: ThetaJet, tol: float = SOLVE_TOL) -> Expr:
    """Quadratic polynomial theta with theta(p) = 0 and the given frame jet at p.

    Linear part g solves E^T g = (X1 theta, X2 theta, X3 theta) with E the
    frame matrix at p.  The Hessian H is fixed in frame-adapted coordinates:
    (E^T H E)_{ij} for horizontal i, j absorbs the first-order part of the
    second derivatives, and the entries involving X3 are set to zero.
    """
    E = s.frame_matrix_at(p)
    if abs(np.linalg.det(E)) < 1e-14:
        raise InconsistencyError(f"singular frame matrix at {tuple(p)}")
    g = np.linalg.solve(E.T, [jet.d1, jet.d2, jet.d3])
    target = [[jet.d11, jet.d12], [jet.d21, jet.d22]]
    S = np.zeros((DIM, DIM))
    for i in HORIZONTAL:
        for j in HORIZONTAL:
            dX = np.array([_at(s.frame[i](c), p) for c in s.frame[j].coeffs])
            S[i, j] = target[i][j] - dX @ g
    # S[0, 1] - S[1, 0] = X3 theta - X3(p).g = 0 up to rounding
    S[0, 1] = S[1, 0] = 0.5 * (S[0, 1] + S[1, 0])
    Einv = np.linalg.inv(E)
    H = Einv.T @ S @ Einv
    u = [add(x, ex.num(-ex.rationalize(float(c)))) for x, c in zip(s.chart.coords, p)]
    terms = [mul(_coef(g[k]), u[k]) for k in range(DIM)]
    for k in range(DIM):
        for l in range(k, DIM):
            h = H[k, l] if k == l else 2 * H[k, l]
            terms.append(mul(_coef(0.5 * h), u[k], u[l]))
    theta = add(*terms)
    got = _theta_jet_of(s, theta, p)
    dev = max(abs(a - b) for a, b in zip(got.as_tuple(), jet.as_tuple()))
    if dev > tol:
        raise InconsistencyError(f"realized theta misses its jet by {dev:.3e}")
    return theta


def carnot_residuals(s: SubRiemannianStructure, p: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Coordinate components of [X1, X3] and [X2, X3] at p."""
    J = FrameJet.of(s.frame, p)
    return J.bracket_at(0, 2), J.bracket_at(1, 2)


@dataclass(frozen=True)
class CarnotFrame:
    theta: Expr
    structure: SubRiemannianStructure
    point: tuple[float, ...]
    jet: ThetaJet
    residuals: tuple[np.ndarray, np.ndarray] = field(compare=False)

    @property
    def residual(self) -> float:
        return float(max(np.max(np.abs(r)) for r in self.residuals))


def carnot_frame(s: SubRiemannianStructure, p: Sequence[float] | None = None, tol: float = BRACKET_TOL) -> CarnotFrame:
    p = tuple(float(c) for c in (s.chart.center if p is None else p))
    jet = carnot_theta_jet(s, p)
    theta = realize_theta(s, p, jet)
    rotated = s if theta.is_zero_literal() else rotate_frame(s, theta)
    res = carnot_residuals(rotated, p)
    cf = CarnotFrame(theta, rotated, p, jet, res)
    if cf.residual > tol:
        raise CarnotVerificationError(
            f"Carnot residual {cf.residual:.3e} exceeds {tol:g} at {p}", residuals=res)
    return cf


@dataclass(frozen=True)
class VerticalDirection:
    frame: np.ndarray
    coordinates: np.ndarray


def vertical_direction(s: SubRiemannianStructure, p: Sequence[float]) -> VerticalDirection:
    """N = c1 X1 + c2 X2 + X3 at p, with c1 = xi3([X2, X3]) and c2 = xi3([X3, X1])."""
    J = FrameJet.of(s.frame, p)
    b23, b13 = _bracket_frame_components(J)
    comps = np.array([b23[2], -b13[2], 1.0])
    return VerticalDirection(comps, J.frame_matrix() @ comps)


# ---------------------------------------------------------------------------
# chart normalization


@dataclass(frozen=True)
class ChartNormalization:
    coords: tuple[Expr, Expr, Expr]
    order: int
    point: tuple[float, ...]
    centred: tuple[TPoly, TPoly, TPoly]
    checks: tuple[Check, ...]
    jet: FrameJet = field(compare=False, repr=False)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _delta(i, j) -> float:
    return 1.0 if i == j else 0.0


def _second_order_target(i: int, j: int, k: int) -> float:
    if k == 2 and (i, j) == (0, 1):
        return 0.5
    if k == 2 and (i, j) == (1, 0):
        return -0.5
    return 0.0


def _normalization_checks(J: FrameJet, xs: Sequence[TPoly], carnot: bool, tol: float) -> list[Check]:
    checks = [Check.from_deviation("(a) coordinates vanish at p", max(abs(x.value) for x in xs), tol)]
    dev = max(abs(J.apply((i,), xs[j]) - _delta(i, j)) for i in range(DIM) for j in range(DIM))
    checks.append(Check.from_deviation("(b) X_i x^j = delta at p", dev, tol))
    horiz, vert = 0.0, 0.0
    for i, j, k in itertools.product(range(DIM), repeat=3):
        if (i, j, k) in ((0, 1, 2), (1, 0, 2)):
            continue
        d = abs(J.apply((i, j), xs[k]))
        if i in HORIZONTAL and j in HORIZONTAL:
            horiz = max(horiz, d)
        else:
            vert = max(vert, d)
    checks.append(Check.from_deviation("(c) horizontal second derivatives vanish at p", horiz, tol))
    if carnot:
        checks.append(Check.from_deviation("(c) second derivatives involving X3 vanish at p", vert, tol))
    else:
        checks.append(Check("(c) second derivatives involving X3 vanish at p", SKIP, vert,
                            note="needs a Carnot frame at p"))
    dev = max(abs(J.apply((0, 1), xs[2]) - 0.5), abs(J.apply((1, 0), xs[2]) + 0.5))
    checks.append(Check.from_deviation("(d) X1X2 x^3 = 1/2 and X2X1 x^3 = -1/2 at p", dev, tol))
    return checks


def _is_carnot(J: FrameJet, tol: float) -> bool:
    return max(np.max(np.abs(J.bracket_at(i, 2))) for i in HORIZONTAL) <= tol


def normalize_chart_order2(
    s: SubRiemannianStructure,
    p: Sequence[float] | None = None,
    tol: float = SOLVE_TOL,
    *,
    _jet: FrameJet | None = None,
) -> ChartNormalization:
    """Coordinates with x(p) = 0, X_i x^j = delta at p and normalized second derivatives.

    Each coordinate gets the quadratic correction -1/2 sum_ab S_ab y^a y^b with
    S the symmetrised second frame derivatives at p of the linear coordinates
    y = E^{-1}(x - p).  For the horizontal block this is the classical
    correction (the x^3 cross term picks up the -1/2 shift automatically
    because X2X1 y^3 = X1X2 y^3 - 1).  The remaining pairs only matter for
    derivatives involving X3; their antisymmetric part is [X_i, X3]_p, so they
    can all vanish exactly when the frame is Carnot at p.
    """
    p = tuple(float(c) for c in (s.chart.center if p is None else p))
    J = _jet or FrameJet.of(s.frame, p)
    E = J.frame_matrix()
    if abs(np.linalg.det(E)) < 1e-14:
        raise InconsistencyError(f"singular frame matrix at {p}")
    Einv = np.linalg.inv(E)
    u = jets.variables()
    y = [sum((u[l] * Einv[k, l] for l in range(DIM)), TPoly.const(0.0)) for k in range(DIM)]
    xs = []
    for k in range(DIM):
        x = y[k]
        for a in range(DIM):
            for b in range(a, DIM):
                sym = 0.5 * (J.apply((a, b), y[k]) + J.apply((b, a), y[k]))
                weight = 0.5 if a == b else 1.0
                x = x - y[a] * y[b] * (weight * sym)
        xs.append(x)
    checks = _normalization_checks(J, xs, _is_carnot(J, BRACKET_TOL), tol)
    coords = tuple(uncentred(x, p, s.chart) for x in xs)
    return ChartNormalization(coords, 2, p, tuple(xs), tuple(checks), J)


PHI_INDICES = list(itertools.product(HORIZONTAL, repeat=3))
PHI_EXCLUDED = ((0, 1, 0), (1, 0, 1))


def phi(index: tuple[int, int, int], z: Sequence[TPoly]) -> TPoly:
    """Cubic corrector with third horizontal derivative e_index at p (0-based index)."""
    z1, z2, z3 = z
    table = {
        (0, 0, 0): z1 ** 3 * (1 / 6),
        (0, 0, 1): z1 * z1 * z2 * 0.25 + z1 * z3 * 0.5,
        (0, 1, 0): TPoly.const(0.0),
        (0, 1, 1): z1 * z2 * z2 * 0.25 + z2 * z3 * 0.5,
        (1, 0, 0): z1 * z1 * z2 * 0.25 - z1 * z3 * 0.5,
        (1, 0, 1): TPoly.const(0.0),
        (1, 1, 0): z1 * z2 * z2 * 0.25 - z2 * z3 * 0.5,
        (1, 1, 1): z2 ** 3 * (1 / 6),
    }
    return table[tuple(index)]


def phi_table(J: FrameJet, z: Sequence[TPoly]) -> dict[tuple[int, int, int], dict[tuple[int, int, int], float]]:
    """values[(i,j,k)][(a,b,c)] = (X_i X_j X_k)_p phi^(a,b,c)."""
    return {ijk: {abc: J.apply(ijk, phi(abc, z)) for abc in PHI_INDICES} for ijk in PHI_INDICES}


def _phi_checks(table, tol: float) -> list[Check]:
    regular, excluded = 0.0, 0.0
    worst_excluded = None
    for ijk, row in table.items():
        for abc, v in row.items():
            if ijk in PHI_EXCLUDED:
                if abs(v) > excluded:
                    excluded, worst_excluded = abs(v), (ijk, abc)
            else:
                regular = max(regular, abs(v - (1.0 if ijk == abc else 0.0)))
    note = ""
    if worst_excluded is not None:
        (ijk, abc) = worst_excluded
        note = f"worst at {_label(ijk)} phi^{tuple(a + 1 for a in abc)}"
    return [
        Check.from_deviation("phi table: (X_iX_jX_k) phi^(a,b,c) = delta", regular, tol),
        Check.from_deviation("phi table: rows (1,2,1), (2,1,2) vanish", excluded, tol, note=note),
    ]


def normalize_chart_order3(
    cf: CarnotFrame,
    p: Sequence[float] | None = None,
    tol: float = BRACKET_TOL,
) -> ChartNormalization:
    p = cf.point if p is None else tuple(float(c) for c in p)
    s = cf.structure
    J = FrameJet.of(s.frame, p)
    res = max(np.max(np.abs(J.bracket_at(i, 2))) for i in HORIZONTAL)
    if res > BRACKET_TOL:
        raise CarnotRequiredError(f"frame is not Carnot at {p}: residual {res:.3e}")
    n2 = normalize_chart_order2(s, p, _jet=J)
    z = n2.centred
    xs = []
    for l in range(DIM):
        x = z[l]
        for ijk in PHI_INDICES:
            if ijk not in PHI_EXCLUDED:
                x = x - phi(ijk, z) * J.apply(ijk, z[l])
        xs.append(x)
    checks = _normalization_checks(J, xs, True, tol)
    third = max(abs(J.apply(ijk, xs[l])) for ijk in PHI_INDICES for l in range(DIM))
    checks.append(Check.from_deviation("third horizontal derivatives vanish at p", third, tol))
    checks.extend(_phi_checks(phi_table(J, z), tol))
    coords = tuple(uncentred(x, p, s.chart) for x in xs)
    return ChartNormalization(coords, 3, p, tuple(xs), tuple(checks), J)


# ---------------------------------------------------------------------------
# flattening


MODEL_NAMES = ("y1", "y2", "y3")


def model_fields() -> tuple[VectorField, VectorField, VectorField]:
    """Heisenberg fields in the normalized coordinates, named y1, y2, y3."""
    y1, y2, _ = ex.coordinates(MODEL_NAMES)
    h = ex.HALF
    return (VectorField((ONE, ZERO, neg(mul(h, y2)))),
            VectorField((ZERO, ONE, mul(h, y1))),
            VectorField((ZERO, ZERO, ONE)))


@dataclass(frozen=True)
class Flattening:
    carnot: CarnotFrame
    normalization: ChartNormalization
    model: tuple[VectorField, VectorField, VectorField]
    point: tuple[float, ...]


def _check_heisenberg(model) -> None:
    X1, X2, X3 = model
    for name, diff in (("[X1, X2] - X3", lie_bracket(X1, X2) - X3),
                       ("[X1, X3]", lie_bracket(X1, X3)),
                       ("[X2, X3]", lie_bracket(X2, X3))):
        if not all(c.is_zero_literal() for c in diff.coeffs):
            raise InconsistencyError(f"model fields violate {name} = 0")


def flatten(s: SubRiemannianStructure, p: Sequence[float] | None = None) -> Flattening:
    cf = carnot_frame(s, p)
    norm = normalize_chart_order3(cf)
    model = model_fields()
    _check_heisenberg(model)
    return Flattening(cf, norm, model, cf.point)


@dataclass(frozen=True)
class JetAgreement:
    by_alpha: dict[tuple[int, ...], float]
    worst: tuple[tuple[int, ...], tuple[int, int, int], float]
    matrix: dict[tuple[int, ...], dict[tuple[int, int, int], float]] = field(default_factory=dict)

    def as_table(self) -> dict[str, dict[str, float]]:
        """{"X1X3": {"x^(1,0,0)": deviation, ...}, ...} with 1-based frame labels."""
        return {_label(a): {"x^(%d,%d,%d)" % b: d for b, d in row.items()} for a, row in self.matrix.items()}

    @property
    def max_deviation(self) -> float:
        return self.worst[2]

    def check(self, tol: float = BRACKET_TOL) -> Check:
        alpha, beta, dev = self.worst
        return Check.from_deviation("weighted jets of the frame match the model", dev, tol,
                                    note=f"worst {_label(alpha)} on x^{beta}")


def verify_jet_agreement(f: Flattening, s: SubRiemannianStructure | None = None, p=None) -> JetAgreement:
    """Compare (X^alpha)_p x^beta with (Xhat^alpha)_p x^beta for |alpha|_w <= 3, |beta| <= 3.

    ``s`` and ``p`` default to the Carnot frame and base point the flattening was built from.
    """
    J = f.normalization.jet if s is None else FrameJet.of(s.frame, f.point if p is None else p)
    xs = f.normalization.centred
    model = FrameJet.of(f.model, ORIGIN)
    ys = jets.variables()
    by_alpha: dict[tuple[int, ...], float] = {}
    matrix: dict[tuple[int, ...], dict[tuple[int, int, int], float]] = {a: {} for a in weighted_multi_indices(3)}
    worst = ((0,), (0, 0, 0), -1.0)
    for beta in monomial_exponents(3):
        mono_x = _monomial(xs, beta)
        mono_y = _monomial(ys, beta)
        for alpha in weighted_multi_indices(3):
            d = abs(J.apply(alpha, mono_x) - model.apply(alpha, mono_y))
            matrix[alpha][beta] = d
            by_alpha[alpha] = max(by_alpha.get(alpha, 0.0), d)
            if d > worst[2]:
                worst = (alpha, beta, d)
    return JetAgreement(by_alpha, worst, matrix)


def bracket_operator_identities(J: FrameJet) -> float:
    """Largest gap between [X1, X3]_p, [X2, X3]_p and their third-order horizontal expansions
    on monomials of degree <= 3."""
    u = jets.variables()
    worst = 0.0
    for beta in monomial_exponents(3):
        m = _monomial(u, beta)
        b13 = J.apply((0, 2), m) - J.apply((2, 0), m)
        e13 = J.apply((0, 0, 1), m) - 2 * J.apply((0, 1, 0), m) + J.apply((1, 0, 0), m)
        b23 = J.apply((1, 2), m) - J.apply((2, 1), m)
        e23 = 2 * J.apply((1, 0, 1), m) - J.apply((1, 1, 0), m) - J.apply((0, 1, 1), m)
        worst = max(worst, abs(b13 - e13), abs(b23 - e23))
    return worst


# ---------------------------------------------------------------------------
# the connection a flattening inherits from the Heisenberg group


def inherited_connection_at(f: Flattening) -> np.ndarray:
    """G[i, j, m]: Christoffel symbols at p, in the Carnot frame, of the flat
    Heisenberg connection pulled back through the normalized chart.

    With B_j^k the components of X_j in the model frame,
    Gamma^m_ij = sum_k (X_i B_j^k)(p) (B(p)^{-1})_{km}.
    """
    J = f.normalization.jet
    x1, x2, x3 = f.normalization.centred
    B = [[None] * DIM for _ in range(DIM)]  # B[j][k]
    for j in range(DIM):
        d1, d2, d3 = (J.derivative(j, x) for x in (x1, x2, x3))
        B[j] = [d1, d2, d3 + x2 * d1 * 0.5 - x1 * d2 * 0.5]
    Bp = np.array([[B[j][k].value for k in range(DIM)] for j in range(DIM)])
    Binv = np.linalg.inv(Bp)
    dB = np.array([[[J.apply((i,), B[j][k]) for k in range(DIM)] for j in range(DIM)] for i in range(DIM)])
    return np.einsum("ijk,km->ijm", dB, Binv)


def natural_connection_at(c: Connection, frame: SubRiemannianStructure, p: Sequence[float]) -> np.ndarray:
    """G[i, j, m]: Christoffel symbols of ``c`` at p taken in another frame."""
    base = c.structure
    A = [base.components(X) for X in frame.frame]  # A[i][a]: X'_i = sum_a A[i][a] X_a
    Ap = np.array([[_at(a, p) for a in row] for row in A])
    G = c.gamma_at(p)
    dA = np.array([[[_at(base.frame[a](A[j][b]), p) for b in range(DIM)] for a in range(DIM)]
                   for j in range(DIM)])  # dA[j, a, b] = X_a(A[j][b])
    old = np.einsum("ia,jab->ijb", Ap, dA) + np.einsum("ia,jc,acb->ijb", Ap, Ap, G)
    # express old-frame components in the new frame
    to_new = np.linalg.inv(Ap.T)
    return np.einsum("ijb,mb->ijm", old, to_new)


def _torsion_from_gamma(G: np.ndarray, brackets: np.ndarray) -> np.ndarray:
    return G - np.transpose(G, (1, 0, 2)) - brackets


def compare_with_natural(f: Flattening, s: SubRiemannianStructure, tol: float = AGREEMENT_TOL) -> tuple[list[Check], dict]:
    """Natural connection of ``s`` against the flattening's inherited connection at p."""
    frame = f.carnot.structure
    p = f.point
    nat = natural_connection_at(natural_connection(s), frame, p)
    hat = inherited_connection_at(f)
    J = f.normalization.jet
    Einv = np.linalg.inv(J.frame_matrix())
    br = np.array([[Einv @ J.bracket_at(i, j) for j in range(DIM)] for i in range(DIM)])
    dG = np.abs(nat - hat)
    dT = np.abs(_torsion_from_gamma(nat, br) - _torsion_from_gamma(hat, br))
    i, j, m = np.unravel_index(int(np.argmax(dG)), dG.shape)
    checks = [
        Check.from_deviation("natural connection equals the inherited one at p", float(dG.max()), tol,
                             location=p, note=f"worst Gamma^{m + 1}_{i + 1}{j + 1}: "
                             f"natural {nat[i, j, m]:.6g}, inherited {hat[i, j, m]:.6g}"),
        Check.from_deviation("torsions agree at p", float(dT.max()), tol, location=p),
    ]
    return checks, {"natural": nat, "inherited": hat}
