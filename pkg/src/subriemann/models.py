"""Bundled model manifolds.

``heisenberg`` uses the standard left-invariant coordinate fields.  The
roto-translation frame (cos x3, sin x3, 0), (0, 0, 1) is the usual choice of
coordinates on the group of planar rigid motions; it is a modelling choice,
not derived data.
"""

from __future__ import annotations

from .geometry import Chart, SubRiemannianStructure, VectorField, build_structure, rotate_frame

COORDS = ("x1", "x2", "x3")


def _fields(chart: Chart, x1: tuple[str, str, str], x2: tuple[str, str, str]):
    return (VectorField(tuple(chart.parse(t) for t in x1)),
            VectorField(tuple(chart.parse(t) for t in x2)))


def heisenberg(**kw) -> SubRiemannianStructure:
    chart = Chart(COORDS)
    X1, X2 = _fields(chart, ("1", "0", "-(1/2)*x2"), ("0", "1", "(1/2)*x1"))
    return build_structure(chart, X1, X2, name="heisenberg", **kw)


def roto_translation(**kw) -> SubRiemannianStructure:
    chart = Chart(COORDS)
    X1, X2 = _fields(chart, ("cos(x3)", "sin(x3)", "0"), ("0", "0", "1"))
    return build_structure(chart, X1, X2, name="roto-translation", **kw)


def heisenberg_rotated(**kw) -> SubRiemannianStructure:
    """Heisenberg frame rotated by the angle function theta = x1."""
    h = heisenberg(**kw)
    s = rotate_frame(h, h.chart.parse("x1"))
    return SubRiemannianStructure(s.chart, s.X1, s.X2, s.X3, s.coframe, s.det,
                                  name="heisenberg-rotated", seed=s.seed, samples=s.samples)


BUNDLED = {
    "heisenberg": heisenberg,
    "roto-translation": roto_translation,
    "heisenberg-rotated": heisenberg_rotated,
}


def bundled(name: str, **kw) -> SubRiemannianStructure:
    try:
        return BUNDLED[name](**kw)
    except KeyError:
        raise KeyError(f"unknown bundled manifold {name!r}; choose from {sorted(BUNDLED)}") from None
