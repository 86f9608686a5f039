"""Command-line front end.

Exit codes: 0 all checks pass, 1 usage or parse problem, 2 a check failed,
3 internal inconsistency.
"""

from __future__ import annotations

import argparse
import sys
from typing import Callable, Sequence

import numpy as np

from . import __version__
from . import acceptance
from . import connection as C
from . import expr as ex
from . import normalize as N
from .geometry import (
    DIM,
    CoframeError,
    GrowthVectorError,
    InconsistencyError,
    SubRiemannianStructure,
    jacobi,
)
from .manifest import Manifest, ManifestError, bundled_names, load_manifest
from .report import FAIL, PASS, Check, Report

EXIT_OK, EXIT_USAGE, EXIT_CHECK, EXIT_INTERNAL = 0, 1, 2, 3
DEFAULT_MANIFEST = "heisenberg"
DEFAULT_CURVE = "line"
TRANSPORT_TOL = 1e-6
FRAME = ("X1", "X2", "X3")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# helpers


def _strs(exprs) -> list[str]:
    return [str(e) for e in exprs]


def _floats(a) -> list:
    a = np.asarray(a, dtype=float)
    if a.ndim == 0:
        return _clean(float(a))
    return [_floats(x) for x in a]


def _clean(x: float) -> float:
    return 0.0 if x == 0 else float(f"{x:.12g}")


def _frame_dict(vectors) -> dict[str, list[str]]:
    return {name: _strs(v) for name, v in zip(FRAME, vectors)}


def parse_point(text: str, chart) -> tuple[float, float, float]:
    try:
        p = tuple(float(t) for t in text.split(","))
    except ValueError:
        raise UsageError(f"--point must be three comma-separated numbers, got {text!r}") from None
    if len(p) != DIM:
        raise UsageError(f"--point must have three entries, got {text!r}")
    for c, (lo, hi), v in zip(chart.names, chart.domain, p):
        if not lo <= v <= hi:
            raise UsageError(f"point {p} lies outside the domain ({c} in [{lo:g}, {hi:g}])")
    return p


def parse_vector(text: str) -> tuple[float, float, float]:
    try:
        v = tuple(float(t) for t in text.split(","))
    except ValueError:
        raise UsageError(f"--vector must be three comma-separated numbers, got {text!r}") from None
    if len(v) != DIM:
        raise UsageError(f"--vector must have three entries, got {text!r}")
    return v


# ---------------------------------------------------------------------------
# commands


def cmd_validate(s: SubRiemannianStructure, args) -> Report:
    r = Report("validate", s.name)
    det = s.det
    const = ex.num(ex.rationalize(ex.evaluate(det, s.chart.center)))
    note = f"det = {det}"
    if not isinstance(det, ex.Num) and s.is_zero(ex.add(det, ex.neg(const)), args.tol):
        note += f", identically {const}"
    # build_structure already rejected degenerate samples
    r.add(Check("growth vector (2,3): X1, X2, [X1, X2] independent", PASS, note=note))
    worst = 0.0
    for i in range(DIM):
        for j in range(DIM):
            d = ex.add(s.coframe[i](s.frame[j]), ex.neg(ex.ONE if i == j else ex.ZERO))
            worst = max(worst, s.deviation(d)[0])
    r.add(Check.from_deviation("coframe duality xi^i(X_j) = delta", worst, args.tol))
    jac = max(s.deviation(c)[0] for c in jacobi(s).coeffs)
    r.add(Check.from_deviation("Jacobi identity for X1, X2, X3", jac, args.tol))
    r.payload = {"X3": _strs(s.X3.coeffs), "determinant": str(det)}
    return r


def cmd_frame(s: SubRiemannianStructure, args) -> Report:
    r = Report("frame", s.name)
    r.payload = {
        "frame": _frame_dict(F.coeffs for F in s.frame),
        "coframe": {f"xi{i + 1}": _strs(cv.coeffs) for i, cv in enumerate(s.coframe)},
        "brackets": {
            "[X1,X3]": _strs(s.bracket_components(0, 2)),
            "[X2,X3]": _strs(s.bracket_components(1, 2)),
        },
        "c1": str(C.structure_scalars(s)[0]),
        "c2": str(C.structure_scalars(s)[1]),
    }
    return r


def _torsion_payload(T: C.TorsionData) -> dict:
    return {"T(X1,X2)": _strs(T.t12), "T(X2,X3)": _strs(T.t23), "T(X3,X1)": _strs(T.t31)}


def _curvature_payload(R: C.CurvatureData) -> dict:
    return {"R_H X1": _strs(R.r1), "R_H X2": _strs(R.r2), "R_H X3": _strs(R.r3)}


def _torsion_checks(s, c, T, tol) -> list[Check]:
    c1, c2 = c.c
    vertical = (c1, c2, ex.ONE)
    out = [Check.from_deviation("xi3(T(X1, X2)) = -1", s.deviation(ex.add(T.t12[2], ex.ONE))[0], tol)]
    for name, t, coef in (("T(X2, X3) = -c1 N", T.t23, c1), ("T(X3, X1) = -c2 N", T.t31, c2)):
        target = C.vscale(ex.neg(coef), vertical)
        dev = max(s.deviation(ex.add(a, ex.neg(b)))[0] for a, b in zip(t, target))
        out.append(Check.from_deviation(name, dev, tol))
    return out


def _curvature_checks(s, R, tol) -> list[Check]:
    dev = max(s.deviation(e)[0] for r in (R.r1, R.r2, R.r3) for e in r)
    eq = s.deviation(ex.add(R.r1[2], ex.neg(R.r2[2])))[0]
    return [
        Check.from_deviation("R_H X1 = R_H X2 = R_H X3 = 0", dev, tol),
        Check.from_deviation("xi3(R_H X1) = xi3(R_H X2)", eq, tol),
    ]


def cmd_connection(s: SubRiemannianStructure, args) -> Report:
    c = C.natural_connection(s)
    T, R = C.torsion(c), C.curvature(c)
    r = Report("connection", s.name)
    r.payload = {
        "gamma": [[_strs(c.gamma[i][j]) for j in range(DIM)] for i in range(DIM)],
        "f1": str(c.f[0]),
        "f2": str(c.f[1]),
        "f3": str(c.f[2]),
        "c1": str(c.c[0]),
        "c2": str(c.c[1]),
        "torsion": _torsion_payload(T),
        "curvature": _curvature_payload(R),
    }
    r.extend(C.check_compatibility(c, args.tol))
    r.extend(_torsion_checks(s, c, T, args.tol))
    r.extend(_curvature_checks(s, R, args.tol))
    return r


def cmd_torsion(s: SubRiemannianStructure, args) -> Report:
    c = C.natural_connection(s)
    T = C.torsion(c)
    r = Report("torsion", s.name, payload={"torsion": _torsion_payload(T)})
    r.extend(_torsion_checks(s, c, T, args.tol))
    return r


def cmd_curvature(s: SubRiemannianStructure, args) -> Report:
    R = C.curvature(C.natural_connection(s))
    r = Report("curvature", s.name, payload={"curvature": _curvature_payload(R)})
    r.extend(_curvature_checks(s, R, args.tol))
    return r


def _carnot_payload(cf: N.CarnotFrame, vd: N.VerticalDirection) -> dict:
    rs = cf.structure
    return {
        "point": _floats(cf.point),
        "theta": str(cf.theta),
        "theta_jet": dict(zip(("d1", "d2", "d11", "d12", "d21", "d22"), _floats(cf.jet.as_tuple()))),
        "carnot_frame": _frame_dict(F.coeffs for F in rs.frame),
        "residuals": {"[X1,X3]_p": _floats(cf.residuals[0]), "[X2,X3]_p": _floats(cf.residuals[1])},
        "vertical_direction": {"frame": _floats(vd.frame), "coordinates": _floats(vd.coordinates)},
    }


def cmd_carnot(s: SubRiemannianStructure, args) -> Report:
    p = args.point_value
    cf = N.carnot_frame(s, p)
    vd = N.vertical_direction(s, p)
    r = Report("carnot", s.name, payload=_carnot_payload(cf, vd))
    r.add(Check.from_deviation("Carnot frame: [X1, X3]_p = [X2, X3]_p = 0", cf.residual, N.BRACKET_TOL, location=cf.point))
    return r


def cmd_flatten(s: SubRiemannianStructure, args) -> Report:
    p = args.point_value
    f = N.flatten(s, p)
    r = Report("flatten", s.name)
    r.extend(c for c in f.normalization.checks if not c.name.startswith("phi table"))
    agreement = N.verify_jet_agreement(f)
    r.add(agreement.check())
    r.add(Check.from_deviation("[X1, X3]_p and [X2, X3]_p as third-order operators",
                               N.bracket_operator_identities(f.normalization.jet), N.BRACKET_TOL))
    checks, gammas = N.compare_with_natural(f, s, N.AGREEMENT_TOL)
    r.extend(checks)
    r.payload = {
        "point": _floats(f.point),
        "theta": str(f.carnot.theta),
        "coordinates": dict(zip(("x1", "x2", "x3"), _strs(f.normalization.coords))),
        "model_frame": _frame_dict(F.coeffs for F in f.model),
        "model_names": list(N.MODEL_NAMES),
        "residuals": {"[X1,X3]_p": _floats(f.carnot.residuals[0]), "[X2,X3]_p": _floats(f.carnot.residuals[1])},
        "jet_agreement": {a: {b: _clean(d) for b, d in row.items()} for a, row in agreement.as_table().items()},
        "natural_gamma": _floats(gammas["natural"]),
        "inherited_gamma": _floats(gammas["inherited"]),
    }
    return r


def cmd_transport(s: SubRiemannianStructure, args) -> Report:
    curve_text = args.curve or DEFAULT_CURVE
    try:
        curve = C.parse_curve(C.BUNDLED_CURVES.get(curve_text, curve_text))
    except (ValueError, ex.ParseError) as exc:
        raise UsageError(f"--curve: {exc}") from None
    v0 = parse_vector(args.vector) if args.vector else (1.0, 0.0, 0.0)
    if args.steps < 1:
        raise UsageError("--steps must be at least 1")
    ts = np.linspace(0.0, 1.0, 2 * args.steps + 1)[:, None]
    pos = np.column_stack([ex.evaluate_many(e, ts) for e in curve])
    lo = np.array([a for a, _ in s.domain])
    hi = np.array([b for _, b in s.domain])
    if np.isnan(pos).any():
        raise ex.EvaluationError("curve is undefined at a sample time", curve[0])
    if (pos < lo).any() or (pos > hi).any():
        raise UsageError("curve leaves the domain")
    c = C.natural_connection(s)
    w = C.parallel_transport(c, curve, v0, args.steps)
    w2 = C.parallel_transport(c, curve, v0, 2 * args.steps)
    r = Report("transport", s.name)
    r.payload = {
        "curve": _strs(curve),
        "start": _floats(v0),
        "end": _floats(w),
        "steps": args.steps,
    }
    r.add(Check.from_deviation("step halving changes the result by at most 1e-6",
                               float(np.max(np.abs(w - w2))), TRANSPORT_TOL))
    if v0[2] == 0:
        r.add(Check.from_deviation("horizontal vectors stay horizontal", abs(w[2]), TRANSPORT_TOL))
        r.add(Check.from_deviation("horizontal norm is preserved",
                                   abs(np.hypot(w[0], w[1]) - np.hypot(v0[0], v0[1])), TRANSPORT_TOL))
    return r


def cmd_selftest(args) -> Report:
    r = Report("selftest", "bundled")
    for key, _, _ in acceptance.CRITERIA:
        result = acceptance.run(key)
        print(result.line(), file=sys.stderr, flush=True)
        failing = [c.name for c in result.checks if not c.passed]
        r.add(Check(f"criterion {result.key}: {result.title}", PASS if result.passed else FAIL,
                    note="; ".join(failing)))
    return r


COMMANDS: dict[str, Callable] = {
    "validate": cmd_validate,
    "frame": cmd_frame,
    "connection": cmd_connection,
    "torsion": cmd_torsion,
    "curvature": cmd_curvature,
    "carnot": cmd_carnot,
    "flatten": cmd_flatten,
    "transport": cmd_transport,
}
POINT_COMMANDS = ("carnot", "flatten")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="subriemann", description="Natural connections and flattenings of (2,3) sub-Riemannian frames.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("command", choices=list(COMMANDS) + ["selftest"])
    ap.add_argument("--manifest", default=DEFAULT_MANIFEST,
                    help=f"manifest file or bundled name ({', '.join(bundled_names())})")
    ap.add_argument("--point", help="X,Y,Z (default: centre of the domain); use --point=-1,0,0 for negatives")
    ap.add_argument("--json", action="store_true", help="print the report as JSON")
    ap.add_argument("--seed", type=lambda t: int(t, 0), help="sampling seed (default from the manifest)")
    ap.add_argument("--tol", type=float, help="zero-test tolerance (default from the manifest)")
    ap.add_argument("--steps", type=int, default=1000, help="RK4 steps for transport")
    ap.add_argument("--curve", help=f"'e1;e2;e3' in t on [0, 1], or one of {', '.join(C.BUNDLED_CURVES)}")
    ap.add_argument("--vector", help="a,b,c frame components of the start vector (default 1,0,0)")
    return ap


def _emit(report: Report, as_json: bool) -> None:
    print(report.to_json() if as_json else report.to_text())


def _failure(command: str, manifold: str, name: str, exc: Exception, **extra) -> Report:
    r = Report(command, manifold, payload=extra)
    r.add(Check(name, FAIL, note=str(exc)))
    return r


def run(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "selftest":
        report = cmd_selftest(args)
        _emit(report, args.json)
        return EXIT_OK if report.passed else EXIT_CHECK
    manifold = str(args.manifest)
    try:
        m: Manifest = load_manifest(args.manifest)
        manifold = m.name
        args.tol = m.tol if args.tol is None else args.tol
        if args.tol <= 0:
            raise UsageError("--tol must be positive")
        s = m.build(seed=args.seed, tol=args.tol)
        args.point_value = parse_point(args.point, m.chart()) if args.point else s.chart.center
        report = COMMANDS[args.command](s, args)
    except (ManifestError, UsageError) as exc:
        print(f"subriemann: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GrowthVectorError as exc:
        _emit(_failure(args.command, manifold, "growth vector (2,3)", exc), args.json)
        return EXIT_CHECK
    except CoframeError as exc:
        _emit(_failure(args.command, manifold, "coframe duality xi^i(X_j) = delta", exc), args.json)
        return EXIT_CHECK
    except N.CarnotVerificationError as exc:
        residuals = {"[X1,X3]_p": _floats(exc.residuals[0]), "[X2,X3]_p": _floats(exc.residuals[1])}
        _emit(_failure(args.command, manifold, "Carnot frame verification", exc, residuals=residuals), args.json)
        return EXIT_INTERNAL
    except InconsistencyError as exc:
        _emit(_failure(args.command, manifold, "internal consistency", exc), args.json)
        return EXIT_INTERNAL
    except (C.DataConstraintError, N.CarnotRequiredError, ex.EvaluationError) as exc:
        _emit(_failure(args.command, manifold, type(exc).__name__, exc), args.json)
        return EXIT_CHECK
    _emit(report, args.json)
    return EXIT_OK if report.passed else EXIT_CHECK


def main(argv: Sequence[str] | None = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
