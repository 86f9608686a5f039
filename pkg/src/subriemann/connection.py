"""Compatible connections on a (2,3) frame: the natural connection, torsion,
horizontal curvature, reconstruction from (T, R_H), and parallel transport.

Vectors expanded in the frame {X1, X2, X3} are plain 3-tuples of Expr.
``gamma[i][j]`` holds the frame components of nabla_{X_i} X_j (0-based), so
the Christoffel symbol Gamma^k_ij is ``gamma[i][j][k]``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import expr as ex
from .expr import Expr, ONE, ZERO, add, mul, neg
from .geometry import DIM, SubRiemannianStructure, VectorField, lie_bracket
from .report import Check

Comps = tuple[Expr, Expr, Expr]


class DataConstraintError(ValueError):
    """Torsion/curvature data that no compatible connection can have."""


def vadd(*vs: Sequence[Expr]) -> Comps:
    return tuple(add(*(v[k] for v in vs)) for k in range(DIM))


def vscale(f: Expr, v: Sequence[Expr]) -> Comps:
    return tuple(mul(f, a) for a in v)


def vneg(v: Sequence[Expr]) -> Comps:
    return tuple(neg(a) for a in v)


def _unit(k: int, f: Expr = ONE) -> Comps:
    return tuple(f if i == k else ZERO for i in range(DIM))


@dataclass(frozen=True)
class Connection:
    structure: SubRiemannianStructure
    gamma: tuple[tuple[Comps, ...], ...]
    f: Comps
    c: tuple[Expr, Expr]

    def christoffel(self, k: int, i: int, j: int) -> Expr:
        return self.gamma[i][j][k]

    def nabla(self, i: int, w: Sequence[Expr]) -> Comps:
        """nabla_{X_i} W for W given by frame components."""
        X = self.structure.frame[i]
        out = [X(wj) for wj in w]
        for j, wj in enumerate(w):
            if wj.is_zero_literal():
                continue
            for k in range(DIM):
                out[k] = add(out[k], mul(wj, self.gamma[i][j][k]))
        return tuple(out)

    def with_gamma(self, i: int, j: int, comps: Sequence[Expr]) -> "Connection":
        rows = [list(r) for r in self.gamma]
        rows[i][j] = tuple(comps)
        gamma = tuple(tuple(r) for r in rows)
        f = tuple(gamma[n][0][1] for n in range(DIM))
        return replace(self, gamma=gamma, f=f)

    def gamma_at(self, p) -> np.ndarray:
        """Array G[i, j, k] = Gamma^k_ij evaluated at p."""
        return np.array([[[ex.evaluate(e, p) for e in row] for row in rows] for rows in self.gamma])


@dataclass(frozen=True)
class TorsionData:
    """T(X1, X2), T(X2, X3), T(X3, X1) in frame components."""

    t12: Comps
    t23: Comps
    t31: Comps


@dataclass(frozen=True)
class CurvatureData:
    """R_H X1, R_H X2, R_H X3 in frame components."""

    r1: Comps
    r2: Comps
    r3: Comps

    @classmethod
    def zero(cls) -> "CurvatureData":
        z = (ZERO, ZERO, ZERO)
        return cls(z, z, z)


def structure_scalars(s: SubRiemannianStructure) -> tuple[Expr, Expr]:
    """c1 = xi^3([X2, X3]) and c2 = xi^3([X3, X1])."""
    return s.bracket_components(1, 2)[2], s.bracket_components(2, 0)[2]


def _assemble(
    s: SubRiemannianStructure,
    f: Comps,
    t23: Comps,
    t31: Comps,
    r3: Comps,
) -> Connection:
    rows: list[list[Comps]] = [[None] * DIM for _ in range(DIM)]
    for i in range(DIM):
        rows[i][0] = _unit(1, f[i])
        rows[i][1] = _unit(0, neg(f[i]))
    # nabla_{X1} X3 = f3 X2 - [X3, X1] - T(X3, X1)
    rows[0][2] = vadd(_unit(1, f[2]), vneg(s.bracket_components(2, 0)), vneg(t31))
    # nabla_{X2} X3 = -f3 X1 + [X2, X3] + T(X2, X3)
    rows[1][2] = vadd(_unit(0, neg(f[2])), s.bracket_components(1, 2), t23)
    partial = Connection(s, tuple(tuple(r) for r in rows[:2]) + ((None, None, None),), f, structure_scalars(s))
    # nabla_{X3} X3 from the horizontal curvature of X3
    rows[2][2] = vadd(partial.nabla(0, rows[1][2]), vneg(partial.nabla(1, rows[0][2])), vneg(r3))
    return Connection(s, tuple(tuple(r) for r in rows), f, structure_scalars(s))


def natural_connection(s: SubRiemannianStructure) -> Connection:
    c1, c2 = structure_scalars(s)
    f3 = add(s.X1(c2), neg(s.X2(c1)))
    vertical = (c1, c2, ONE)
    # T(X2, X3) = -c1 N and T(X3, X1) = -c2 N with N = c1 X1 + c2 X2 + X3
    t23 = vscale(neg(c1), vertical)
    t31 = vscale(neg(c2), vertical)
    z = (ZERO, ZERO, ZERO)
    return _assemble(s, (c1, c2, f3), t23, t31, z)


def torsion(c: Connection) -> TorsionData:
    s = c.structure

    def t(i, j):
        return vadd(c.gamma[i][j], vneg(c.gamma[j][i]), vneg(s.bracket_components(i, j)))

    return TorsionData(t(0, 1), t(1, 2), t(2, 0))


def curvature(c: Connection) -> CurvatureData:
    return CurvatureData(*(_rh(c, c.gamma[0][j], c.gamma[1][j], c.gamma[2][j]) for j in range(DIM)))


def _rh(c: Connection, n1: Comps, n2: Comps, n3: Comps) -> Comps:
    return vadd(c.nabla(0, n2), vneg(c.nabla(1, n1)), vneg(n3))


def covariant_derivative_comps(c: Connection, v: Sequence[Expr], w: Sequence[Expr]) -> Comps:
    terms = [vscale(vi, c.nabla(i, w)) for i, vi in enumerate(v) if not vi.is_zero_literal()]
    return vadd(*terms) if terms else (ZERO, ZERO, ZERO)


def covariant_derivative(c: Connection, V: VectorField, W: VectorField) -> VectorField:
    s = c.structure
    return s.from_components(covariant_derivative_comps(c, s.components(V), s.components(W)))


def _field_values(fields: Sequence[VectorField], pts: np.ndarray) -> np.ndarray:
    """[n, component, field]"""
    return np.stack([np.column_stack([ex.evaluate_many(a, pts) for a in F.coeffs]) for F in fields], axis=2)


def _field_gradients(fields: Sequence[VectorField], pts: np.ndarray) -> np.ndarray:
    """[n, component, field, k] = d_k of each coefficient."""
    return np.stack([
        np.stack([np.column_stack([ex.evaluate_many(ex.diff(a, k), pts) for k in range(DIM)]) for a in F.coeffs], axis=1)
        for F in fields], axis=2)


def covariant_derivative_many(c: Connection, V: VectorField, W: VectorField, pts) -> np.ndarray:
    """Coordinate components of nabla_V W at each row of ``pts``.

    With w = E^{-1} W the frame components of W, V(w) = E^{-1}(DW V - (DE V) w).
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    frame = c.structure.frame
    E, dE = _field_values(frame, pts), _field_gradients(frame, pts)
    Wp, dW = _field_values([W], pts)[:, :, 0], _field_gradients([W], pts)[:, :, 0]
    Vp = _field_values([V], pts)[:, :, 0]
    Einv = np.linalg.inv(E)
    w = np.einsum("nab,nb->na", Einv, Wp)
    v = np.einsum("nab,nb->na", Einv, Vp)
    DWV = np.einsum("nck,nk->nc", dW, Vp)
    DEVw = np.einsum("ncjk,nk,nj->nc", dE, Vp, w)
    Vw = np.einsum("nab,nb->na", Einv, DWV - DEVw)
    G = np.array([[[ex.evaluate_many(e, pts) for e in row] for row in rows] for rows in c.gamma])
    comps = Vw + np.einsum("ni,nj,ijkn->nk", v, w, G)
    return np.einsum("nab,nb->na", E, comps)


def horizontal_curvature_many(c: Connection, V: VectorField, pts, R: CurvatureData | None = None) -> np.ndarray:
    """Coordinate components of R_H V at each row of ``pts``, using R_H V = sum_j v^j R_H X_j."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    R = R or curvature(c)
    E = _field_values(c.structure.frame, pts)
    v = np.linalg.solve(E, _field_values([V], pts)[:, :, 0][..., None])[..., 0]
    RX = np.array([[ex.evaluate_many(e, pts) for e in r] for r in (R.r1, R.r2, R.r3)])  # [j, k, n]
    return np.einsum("nab,nj,jbn->na", E, v, RX)


def torsion_at(c: Connection, V: VectorField, W: VectorField) -> VectorField:
    return covariant_derivative(c, V, W) - covariant_derivative(c, W, V) - lie_bracket(V, W)


def horizontal_curvature(c: Connection, V: VectorField) -> VectorField:
    s = c.structure
    w = s.components(V)
    r = _rh(c, c.nabla(0, w), c.nabla(1, w), c.nabla(2, w))
    return s.from_components(r)


def check_compatibility(c: Connection, tol: float = ex.DEFAULT_TOL) -> list[Check]:
    s = c.structure
    out = []
    for i in range(DIM):
        n1, n2 = c.gamma[i][0], c.gamma[i][1]
        idents = [
            (f"(a) xi1(nabla_X{i + 1} X1) = 0", n1[0]),
            (f"(a) xi2(nabla_X{i + 1} X2) = 0", n2[1]),
            (f"(b) xi2(nabla_X{i + 1} X1) + xi1(nabla_X{i + 1} X2) = 0", add(n1[1], n2[0])),
            (f"(c) xi3(nabla_X{i + 1} X1) = 0", n1[2]),
            (f"(c) xi3(nabla_X{i + 1} X2) = 0", n2[2]),
        ]
        for name, e in idents:
            dev, loc = s.deviation(e)
            out.append(Check.from_deviation(name, dev, tol, loc))
    return out


def connection_from_data(
    s: SubRiemannianStructure,
    T: TorsionData,
    R: CurvatureData,
    tol: float = ex.DEFAULT_TOL,
) -> Connection:
    """The unique compatible connection with torsion T and horizontal curvature R."""
    constraints = [
        ("xi3(T(X1, X2)) = -1", add(T.t12[2], ONE)),
        ("xi1(R_H X1) = 0", R.r1[0]),
        ("xi2(R_H X2) = 0", R.r2[1]),
        ("xi2(R_H X1) = -xi1(R_H X2)", add(R.r1[1], R.r2[0])),
        ("xi3(R_H X1) = 0", R.r1[2]),
        ("xi3(R_H X2) = 0", R.r2[2]),
    ]
    for name, e in constraints:
        if not s.is_zero(e, tol):
            raise DataConstraintError(f"violated: {name}")
    f1, f2 = neg(T.t12[0]), neg(T.t12[1])
    f3 = add(s.X1(f2), neg(s.X2(f1)), neg(R.r1[1]))
    return _assemble(s, (f1, f2, f3), T.t23, T.t31, R.r3)


def reframe(c: Connection, s_new: SubRiemannianStructure) -> Connection:
    """The same connection with Christoffel symbols taken in another frame."""
    old = c.structure
    old_comps = [old.components(X) for X in s_new.frame]
    # old frame expanded in the new one
    back = [s_new.components(X) for X in old.frame]
    rows = []
    for i in range(DIM):
        row = []
        for j in range(DIM):
            V = covariant_derivative_comps(c, old_comps[i], old_comps[j])
            terms = [vscale(V[k], back[k]) for k in range(DIM) if not V[k].is_zero_literal()]
            row.append(vadd((ZERO, ZERO, ZERO), *terms))
        rows.append(tuple(row))
    f = tuple(rows[i][0][1] for i in range(DIM))
    return Connection(s_new, tuple(rows), f, structure_scalars(s_new))


# ---------------------------------------------------------------------------
# parallel transport


def parallel_transport(
    c: Connection,
    curve: Sequence[Expr],
    v0: Sequence[float],
    steps: int = 1000,
) -> np.ndarray:
    """Transport frame components ``v0`` along ``curve`` (exprs in t on [0, 1]).

    The curve expressions use a single parameter symbol of index 0.  Solves
    dw^k/dt = -sum_ij v^i w^j Gamma^k_ij with classical RK4, where v^i are the
    frame components of the velocity.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    s = c.structure
    ts = np.linspace(0.0, 1.0, 2 * steps + 1)[:, None]
    pos = np.column_stack([ex.evaluate_many(e, ts) for e in curve])
    vel = np.column_stack([ex.evaluate_many(ex.diff(e, 0), ts) for e in curve])
    if np.isnan(pos).any() or np.isnan(vel).any():
        raise ex.EvaluationError("curve is undefined at a sample time", curve[0])
    xi = np.array([[ex.evaluate_many(a, pos) for a in cov.coeffs] for cov in s.coframe])
    G = np.array([[[ex.evaluate_many(e, pos) for e in row] for row in rows] for rows in c.gamma])
    if np.isnan(xi).any() or np.isnan(G).any():
        raise ex.EvaluationError("connection undefined along the curve", curve[0])
    v = np.einsum("ikn,nk->in", xi, vel)
    A = np.einsum("in,ijkn->nkj", v, G)
    h = 1.0 / steps
    w = np.array(v0, dtype=float)
    for n in range(steps):
        a0, ah, a1 = A[2 * n], A[2 * n + 1], A[2 * n + 2]
        k1 = -a0 @ w
        k2 = -ah @ (w + 0.5 * h * k1)
        k3 = -ah @ (w + 0.5 * h * k2)
        k4 = -a1 @ (w + h * k3)
        w = w + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return w


BUNDLED_CURVES = {
    "line": ("t", "0", "0"),
    "twisted": ("t", "t^2", "sin(t)"),
    # horizontal for roto-translation with speed 1: velocity 3/5 X1 + 4/5 X2
    "roto-unit": ("3/4*sin(4/5*t)", "3/4 - 3/4*cos(4/5*t)", "4/5*t"),
}


def parse_curve(text: str | Sequence[str]) -> tuple[Expr, Expr, Expr]:
    parts = text.split(";") if isinstance(text, str) else list(text)
    if len(parts) != DIM:
        raise ValueError("a curve needs three ';'-separated expressions")
    return tuple(ex.parse(p, ["t"]) for p in parts)
