"""The acceptance suite, shared by ``subriemann selftest`` and the pytest suite.

Each criterion returns a list of ``Check`` entries; a criterion passes when
none of its checks fails.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import connection as C
from . import expr as ex
from . import normalize as N
from .geometry import SubRiemannianStructure, VectorField, rotate_frame
from .models import BUNDLED, bundled
from .report import FAIL, PASS, Check

SEED = ex.DEFAULT_SEED
POINT_SEED = 7
ROTATION_SEED = 11
HEISENBERG_TOL = 1e-12
NONFLAT = ("roto-translation", "heisenberg-rotated")


@dataclass
class Criterion:
    key: str
    title: str
    checks: list[Check] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        failed = [c.name for c in self.checks if not c.passed]
        tail = f"  failing: {'; '.join(failed)}" if failed else ""
        return f"[{status}] criterion {self.key}: {self.title} ({self.seconds:.2f}s){tail}"


def _structures() -> dict[str, SubRiemannianStructure]:
    return {name: bundled(name) for name in BUNDLED}


def _worst(s: SubRiemannianStructure, exprs) -> tuple[float, tuple | None]:
    worst, where = 0.0, None
    for e in exprs:
        if e.is_zero_literal():
            continue
        d, loc = s.deviation(e)
        if d > worst:
            worst, where = d, loc
    return worst, where


def random_points(s: SubRiemannianStructure, n: int = 10, seed: int = POINT_SEED) -> np.ndarray:
    """Seeded points inside the middle half of the sampling box."""
    lo = np.array([a for a, _ in s.domain])
    hi = np.array([b for _, b in s.domain])
    mid, half = (lo + hi) / 2, (hi - lo) / 4
    return ex.sample_points(tuple(zip(mid - half, mid + half)), n, seed)


def random_angle(s: SubRiemannianStructure, rng: np.random.Generator):
    """A random quadratic polynomial angle with small rational coefficients."""
    x1, x2, x3 = s.chart.coords
    basis = [x1, x2, x3, ex.mul(x1, x2), ex.mul(x2, x3), ex.mul(x3, x3)]
    coeffs = [Fraction(int(k), 8) for k in rng.integers(-8, 9, len(basis))]
    return ex.linear_combination(coeffs, basis)


# ---------------------------------------------------------------------------


def criterion_1() -> list[Check]:
    s = bundled("heisenberg")
    t0 = time.perf_counter()
    c = C.natural_connection(s)
    gam = [c.gamma[i][j][k] for i in range(3) for j in range(3) for k in range(3)]
    T = C.torsion(c)
    R = C.curvature(c)
    dt = time.perf_counter() - t0
    tol = HEISENBERG_TOL
    t12 = [T.t12[0], T.t12[1], ex.add(T.t12[2], ex.ONE)]
    return [
        Check.from_deviation("all 27 Christoffel symbols vanish", _worst(s, gam)[0], tol),
        Check.from_deviation("T(X1, X2) = -X3", _worst(s, t12)[0], tol),
        Check.from_deviation("T(X2, X3) = T(X3, X1) = 0", _worst(s, T.t23 + T.t31)[0], tol),
        Check.from_deviation("R_H X_j = 0 for j = 1, 2, 3", _worst(s, R.r1 + R.r2 + R.r3)[0], tol),
        Check("runtime under 1 s", PASS if dt < 1.0 else FAIL, dt),
    ]


def criterion_2(structures=None) -> list[Check]:
    out = []
    for name, s in (structures or _structures()).items():
        T = C.torsion(C.natural_connection(s))
        dev, loc = _worst(s, [ex.add(T.t12[2], ex.ONE)])
        out.append(Check.from_deviation(f"{name}: xi3(T(X1, X2)) = -1", dev, ex.DEFAULT_TOL, loc))
    return out


def criterion_3(structures=None) -> list[Check]:
    out = []
    for name, s in (structures or _structures()).items():
        checks = C.check_compatibility(C.natural_connection(s))
        worst = max(checks, key=lambda c: c.deviation)
        out.append(Check(f"{name}: {len(checks)} compatibility identities",
                         PASS if all(c.passed for c in checks) else FAIL, worst.deviation,
                         worst.location, note="" if worst.passed else worst.name))
    return out


def _gamma_diff(s, a: C.Connection, b: C.Connection) -> list:
    return [ex.add(a.gamma[i][j][k], ex.neg(b.gamma[i][j][k]))
            for i in range(3) for j in range(3) for k in range(3)]


def criterion_4(structures=None) -> list[Check]:
    out = []
    for name, s in (structures or _structures()).items():
        c = C.natural_connection(s)
        T, R = C.torsion(c), C.curvature(c)
        back = C.connection_from_data(s, T, R)
        dev, loc = _worst(s, _gamma_diff(s, c, back))
        out.append(Check.from_deviation(f"{name}: rebuilt from (T, R_H) equals the original", dev,
                                        ex.DEFAULT_TOL, loc))
        bumped = C.TorsionData(C.vadd(T.t12, (ex.ONE, ex.ZERO, ex.ZERO)), T.t23, T.t31)
        other = C.connection_from_data(s, bumped, R)
        dev, loc = _worst(s, _gamma_diff(s, c, other))
        out.append(Check(f"{name}: T(X1, X2) + X1 gives a different connection",
                         PASS if dev > 1e-3 else FAIL, dev, loc))
    return out


def criterion_5(structures=None) -> list[Check]:
    out = []
    structures = structures or _structures()
    rng = np.random.default_rng(ROTATION_SEED)
    for name, s in structures.items():
        worst = 0.0
        for p in random_points(s):
            worst = max(worst, N.carnot_frame(s, p).residual)
        out.append(Check.from_deviation(f"{name}: Carnot residual at 10 seeded points", worst, N.BRACKET_TOL))
        p = tuple(random_points(s, 1, POINT_SEED + 1)[0])
        base = N.vertical_direction(s, p).coordinates
        dev = 0.0
        for _ in range(5):
            sr = rotate_frame(s, random_angle(s, rng))
            dev = max(dev, float(np.max(np.abs(N.vertical_direction(sr, p).coordinates - base))))
        out.append(Check.from_deviation(f"{name}: vertical direction under 5 random rotations", dev,
                                        N.AGREEMENT_TOL, p))
    s = structures.get("roto-translation") or bundled("roto-translation")
    jet = N.carnot_theta_jet(s, (0.0, 0.0, 0.0))
    want = (0.0, 0.0, 0.0, 1 / 3, 2 / 3, 0.0)
    dev = max(abs(a - b) for a, b in zip(jet.as_tuple(), want))
    out.append(Check.from_deviation("roto-translation: theta jet at origin = (0,0,0,1/3,2/3,0)", dev, N.SOLVE_TOL))
    return out


def criterion_6(structures=None) -> list[Check]:
    structures = structures or _structures()
    order2: dict[str, float] = {}
    order3: dict[str, float] = {}
    table_regular = table_excluded = 0.0
    for name, s in structures.items():
        w2 = w3 = 0.0
        for p in random_points(s):
            n2 = N.normalize_chart_order2(s, p)
            cf = N.carnot_frame(s, p)
            n2c = N.normalize_chart_order2(cf.structure, p)
            n3 = N.normalize_chart_order3(cf)
            for c in n2.checks + n2c.checks:
                if c.status != "skip":
                    w2 = max(w2, c.deviation)
            for c in n3.checks:
                if c.name.startswith("phi table: rows"):
                    table_excluded = max(table_excluded, c.deviation)
                elif c.name.startswith("phi table"):
                    table_regular = max(table_regular, c.deviation)
                else:
                    w3 = max(w3, c.deviation)
        order2[name], order3[name] = w2, w3
    out = [Check.from_deviation(f"{n}: order-2 postconditions (a)-(d)", d, N.SOLVE_TOL) for n, d in order2.items()]
    out += [Check.from_deviation(f"{n}: order-3 postconditions incl. third horizontal derivatives", d,
                                 N.BRACKET_TOL) for n, d in order3.items()]
    out.append(Check.from_deviation("phi duality table: delta entries", table_regular, N.BRACKET_TOL))
    out.append(Check.from_deviation("phi duality table: rows (1,2,1), (2,1,2) vanish", table_excluded,
                                    N.BRACKET_TOL, note="X1X2X1 phi^(1,1,2) = 1/2 on every frame"
                                    if table_excluded > N.BRACKET_TOL else ""))
    return out


def criterion_7(structures=None) -> list[Check]:
    structures = structures or _structures()
    out = []
    for name, s in structures.items():
        jets = thm = 0.0
        where = None
        worst_note = ""
        pts = [tuple(s.chart.center)] + [tuple(p) for p in random_points(s)]
        for p in pts:
            f = N.flatten(s, p)
            jets = max(jets, N.verify_jet_agreement(f).max_deviation)
            if name in NONFLAT:
                checks, _ = N.compare_with_natural(f, s)
                if checks[0].deviation > thm:
                    thm, where, worst_note = checks[0].deviation, p, checks[0].note
        out.append(Check.from_deviation(f"{name}: weighted jets agree (19 multi-indices x 20 monomials)",
                                        jets, N.BRACKET_TOL))
        if name in NONFLAT:
            out.append(Check.from_deviation(f"{name}: natural connection = inherited connection at p",
                                            thm, N.AGREEMENT_TOL, where, note=worst_note))
    return out


def criterion_8(structures=None) -> list[Check]:
    structures = structures or _structures()
    rng = np.random.default_rng(ROTATION_SEED + 1)
    out = []
    for name, s in structures.items():
        c = C.natural_connection(s)
        # a compatible connection with nonzero horizontal curvature
        f3 = ex.add(c.f[2], ex.ONE)
        bent = c.with_gamma(2, 0, (ex.ZERO, f3, ex.ZERO)).with_gamma(2, 1, (ex.neg(f3), ex.ZERO, ex.ZERO))
        test_fields = list(s.frame) + [VectorField((s.chart.coords[1], ex.ONE, ex.sin(s.chart.coords[0])))]
        pts = ex.sample_points(s.domain, s.samples, s.seed)
        base_nabla = {(a, b): C.covariant_derivative_many(c, V, W, pts)
                      for a, V in enumerate(test_fields) for b, W in enumerate(test_fields)}
        R = C.curvature(bent)
        base_rh = [C.horizontal_curvature_many(bent, V, pts, R) for V in test_fields]
        nabla = rh = 0.0
        for _ in range(5):
            sr = rotate_frame(s, random_angle(s, rng))
            cr = C.natural_connection(sr)
            for (a, b), ref in base_nabla.items():
                d = C.covariant_derivative_many(cr, test_fields[a], test_fields[b], pts) - ref
                nabla = max(nabla, float(np.max(np.abs(d))))
            br = C.reframe(bent, sr)
            Rr = C.curvature(br)
            for V, ref in zip(test_fields, base_rh):
                rh = max(rh, float(np.max(np.abs(C.horizontal_curvature_many(br, V, pts, Rr) - ref))))
        out.append(Check.from_deviation(f"{name}: natural covariant derivatives in 5 rotated frames",
                                        nabla, N.AGREEMENT_TOL))
        out.append(Check.from_deviation(f"{name}: R_H in 5 rotated frames", rh, N.AGREEMENT_TOL))
    return out


TRANSPORT_CURVES = {
    "heisenberg": ("twisted", "line"),
    "roto-translation": ("roto-unit", "twisted"),
    "heisenberg-rotated": ("twisted", "line"),
}


def criterion_9(structures=None, steps: int = 1000) -> list[Check]:
    structures = structures or _structures()
    out = []
    for name, s in structures.items():
        c = C.natural_connection(s)
        horiz = drift = 0.0
        for curve_name in TRANSPORT_CURVES.get(name, ("twisted",)):
            curve = C.parse_curve(C.BUNDLED_CURVES[curve_name])
            for v0 in ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.6, -0.8, 0.0)):
                w = C.parallel_transport(c, curve, v0, steps)
                horiz = max(horiz, abs(w[2]))
                drift = max(drift, abs(np.hypot(w[0], w[1]) - np.hypot(v0[0], v0[1])))
        out.append(Check.from_deviation(f"{name}: horizontal vectors stay horizontal", horiz, 1e-6))
        out.append(Check.from_deviation(f"{name}: horizontal norm drift", drift, 1e-6))
    s = structures.get("heisenberg") or bundled("heisenberg")
    c = C.natural_connection(s)
    curve = C.parse_curve(C.BUNDLED_CURVES["twisted"])
    dev = 0.0
    for k in range(3):
        e = np.eye(3)[k]
        dev = max(dev, float(np.max(np.abs(C.parallel_transport(c, curve, e, steps) - e))))
    out.append(Check.from_deviation("heisenberg: frame fields transport to themselves", dev, HEISENBERG_TOL))
    return out


CRITERIA: list[tuple[str, str, Callable[..., list[Check]]]] = [
    ("1", "Heisenberg connection, torsion and curvature", criterion_1),
    ("2", "torsion obstruction xi3(T(X1, X2)) = -1", criterion_2),
    ("3", "compatibility identities", criterion_3),
    ("4", "uniqueness from torsion and horizontal curvature", criterion_4),
    ("5", "Carnot frames and the vertical direction", criterion_5),
    ("6", "chart normalization to orders 2 and 3", criterion_6),
    ("7", "flattening jets and agreement with the inherited connection", criterion_7),
    ("8", "frame independence", criterion_8),
    ("9", "parallel transport", criterion_9),
]


def run(key: str) -> Criterion:
    for k, title, fn in CRITERIA:
        if k == key:
            t0 = time.perf_counter()
            checks = fn()
            return Criterion(k, title, checks, time.perf_counter() - t0)
    raise KeyError(key)


def run_all() -> list[Criterion]:
    return [run(k) for k, _, _ in CRITERIA]
