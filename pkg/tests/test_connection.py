import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subriemann import connection as C
from subriemann import expr as ex
from subriemann import models
from subriemann.geometry import Chart, VectorField, lie_bracket, rotate_frame

CHART = Chart(models.COORDS)
Z3 = (ex.ZERO, ex.ZERO, ex.ZERO)


def P(t):
    return CHART.parse(t)


def zero_vec(s, v):
    return all(s.is_zero(c) for c in v)


def same_gamma(a, b):
    s = a.structure
    return all(s.is_zero(ex.add(x, ex.neg(y)))
               for i in range(3) for j in range(3) for x, y in zip(a.gamma[i][j], b.gamma[i][j]))


@pytest.fixture(scope="module", params=sorted(models.BUNDLED))
def natural(request):
    return C.natural_connection(models.bundled(request.param))


def test_heisenberg_connection_is_zero():
    c = C.natural_connection(models.heisenberg())
    assert all(e == ex.ZERO for rows in c.gamma for row in rows for e in row)
    T = C.torsion(c)
    assert T.t12 == (ex.ZERO, ex.ZERO, ex.num(-1)) and T.t23 == Z3 and T.t31 == Z3


def test_roto_translation_single_row():
    c = C.natural_connection(models.roto_translation())
    assert c.f == Z3
    for i in range(3):
        for j in range(3):
            expected = (ex.ONE, ex.ZERO, ex.ZERO) if (i, j) == (1, 2) else Z3
            assert c.gamma[i][j] == expected
    T = C.torsion(c)
    assert T.t12 == (ex.ZERO, ex.ZERO, ex.num(-1)) and T.t23 == Z3 and T.t31 == Z3


def test_rotated_heisenberg_f1_against_direct_bracket():
    s = rotate_frame(models.heisenberg(), P("x1"))
    c = C.natural_connection(s)
    # oracle: xi3'([X2', X3']) from the rotated fields themselves
    direct = s.coframe[2](lie_bracket(s.X2, s.X3))
    assert s.is_zero(ex.add(c.f[0], ex.neg(direct)))
    assert s.is_zero(ex.add(c.f[0], ex.neg(P("cos(x1)"))))


def test_natural_connection_properties(natural):
    s = natural.structure
    assert all(ch.passed for ch in C.check_compatibility(natural))
    T = C.torsion(natural)
    assert s.is_zero(ex.add(T.t12[2], ex.ONE))
    # f1 = c1, f2 = c2 from T(X1, X2) = -c1 X1 - c2 X2 - X3
    assert s.is_zero(ex.add(T.t12[0], natural.c[0])) and s.is_zero(ex.add(T.t12[1], natural.c[1]))
    R = C.curvature(natural)
    assert all(zero_vec(s, r) for r in (R.r1, R.r2, R.r3))


def test_injected_christoffel_breaks_compatibility():
    c = C.natural_connection(models.heisenberg())
    bad = c.with_gamma(0, 0, (ex.ONE, ex.ZERO, ex.ZERO))
    failing = [ch.name for ch in C.check_compatibility(bad) if not ch.passed]
    assert failing == ["(a) xi1(nabla_X1 X1) = 0"]


def test_tensoriality_and_leibniz():
    s = models.heisenberg()
    c = C.natural_connection(s)
    V = VectorField((P("x2"), P("x3^2"), P("sin(x1)")))
    W = VectorField((P("x1*x2"), ex.ONE, P("cos(x3)")))
    twice = C.covariant_derivative(c, V.scale(ex.num(2)), W) - C.covariant_derivative(c, V, W).scale(ex.num(2))
    assert zero_vec(s, twice.coeffs)
    lhs = C.covariant_derivative(c, s.X1, s.X2.scale(P("x1")))
    assert zero_vec(s, (lhs - s.X2).coeffs)
    assert zero_vec(s, C.torsion_at(c, V, V).coeffs)


def test_roto_translation_nabla_x2_x3():
    s = models.roto_translation()
    c = C.natural_connection(s)
    assert zero_vec(s, (C.covariant_derivative(c, s.X2, s.X3) - s.X1).coeffs)


def test_vectorised_covariant_derivative_matches_symbolic(natural):
    s = natural.structure
    V = VectorField((P("x2"), ex.ONE, P("sin(x1)")))
    pts = ex.sample_points(s.domain, 8, seed=3)
    for A in (s.X1, s.X3, V):
        for B in (s.X2, V):
            sym = C.covariant_derivative(natural, A, B)
            num = C.covariant_derivative_many(natural, A, B, pts)
            assert np.allclose(num, np.column_stack([ex.evaluate_many(e, pts) for e in sym.coeffs]), atol=1e-12)


def _bent(c):
    f3 = ex.add(c.f[2], ex.ONE)
    return c.with_gamma(2, 0, (ex.ZERO, f3, ex.ZERO)).with_gamma(2, 1, (ex.neg(f3), ex.ZERO, ex.ZERO))


def test_shifted_f3_gives_minus_x2(natural):
    s = natural.structure
    b = _bent(natural)
    assert zero_vec(s, (C.horizontal_curvature(b, s.X1) + s.X2).coeffs)
    assert zero_vec(s, (C.horizontal_curvature(b, s.X2) - s.X1).coeffs)


def test_curvature_of_compatible_connection_has_lemma_form(natural):
    s = natural.structure
    b = _bent(natural)
    R = C.curvature(b)
    k = ex.add(s.X1(b.f[1]), ex.neg(s.X2(b.f[0])), ex.neg(b.f[2]))
    assert zero_vec(s, C.vadd(R.r1, (ex.ZERO, ex.neg(k), ex.ZERO)))
    assert zero_vec(s, C.vadd(R.r2, (k, ex.ZERO, ex.ZERO)))
    # the weaker statement xi3(R_H X1) = xi3(R_H X2)
    assert s.is_zero(ex.add(R.r1[2], ex.neg(R.r2[2])))


def test_rh_frame_independent_at_sample_points():
    s = models.roto_translation()
    b = _bent(C.natural_connection(s))
    sr = rotate_frame(s, P("x1*x3/2 - x2/3"))
    br = C.reframe(b, sr)
    pts = ex.sample_points(s.domain, 64, s.seed)
    for V in (s.X1, s.X3, VectorField((P("x2"), ex.ONE, P("x1^2")))):
        assert np.allclose(C.horizontal_curvature_many(br, V, pts), C.horizontal_curvature_many(b, V, pts), atol=1e-9)


class TestFromData:
    def test_round_trip(self, natural):
        c2 = C.connection_from_data(natural.structure, C.torsion(natural), C.curvature(natural))
        assert same_gamma(c2, natural)

    def test_heisenberg_lemma_values_give_zero_connection(self):
        s = models.heisenberg()
        T = C.TorsionData((ex.ZERO, ex.ZERO, ex.num(-1)), Z3, Z3)
        c = C.connection_from_data(s, T, C.CurvatureData.zero())
        assert all(zero_vec(s, row) for rows in c.gamma for row in rows)

    def test_heisenberg_other_torsion(self):
        s = models.heisenberg()
        T = C.TorsionData((ex.ONE, ex.ZERO, ex.num(-1)), Z3, Z3)
        c = C.connection_from_data(s, T, C.CurvatureData.zero())
        assert c.gamma[0][0] == (ex.ZERO, ex.num(-1), ex.ZERO)
        assert c.gamma[0][1] == (ex.ONE, ex.ZERO, ex.ZERO)

    @pytest.mark.parametrize("field, bad", [
        ("t12", (ex.ZERO, ex.ZERO, ex.ZERO)),
    ])
    def test_torsion_constraint(self, field, bad):
        T = C.TorsionData(bad, Z3, Z3)
        with pytest.raises(C.DataConstraintError, match="xi3"):
            C.connection_from_data(models.heisenberg(), T, C.CurvatureData.zero())

    @pytest.mark.parametrize("r1, r2, name", [
        ((ex.ONE, ex.ZERO, ex.ZERO), Z3, "xi1(R_H X1)"),
        (Z3, (ex.ZERO, ex.ONE, ex.ZERO), "xi2(R_H X2)"),
        ((ex.ZERO, ex.ONE, ex.ZERO), Z3, "xi2(R_H X1) = -xi1(R_H X2)"),
        ((ex.ZERO, ex.ZERO, ex.ONE), Z3, "xi3(R_H X1)"),
    ])
    def test_curvature_constraints(self, r1, r2, name):
        T = C.TorsionData((ex.ZERO, ex.ZERO, ex.num(-1)), Z3, Z3)
        with pytest.raises(C.DataConstraintError) as info:
            C.connection_from_data(models.heisenberg(), T, C.CurvatureData(r1, r2, Z3))
        assert name in str(info.value)


polys = st.lists(st.integers(-3, 3), min_size=4, max_size=4).map(
    lambda c: P(f"{c[0]}/2 + {c[1]}/2*x1 + {c[2]}/3*x2*x3 + {c[3]}/4*x3^2"))
vectors = st.tuples(polys, polys, polys)


@settings(max_examples=5, deadline=None)
@given(st.sampled_from(["heisenberg", "roto-translation"]), polys, polys, vectors, vectors, polys, vectors)
def test_random_valid_data_round_trip(name, a, b, t23, t31, g, r3):
    s = models.bundled(name)
    T = C.TorsionData((a, b, ex.num(-1)), t23, t31)
    R = C.CurvatureData((ex.ZERO, g, ex.ZERO), (ex.neg(g), ex.ZERO, ex.ZERO), r3)
    c = C.connection_from_data(s, T, R)
    assert all(ch.passed for ch in C.check_compatibility(c))
    T2, R2 = C.torsion(c), C.curvature(c)
    for u, v in zip((T.t12, T.t23, T.t31, R.r1, R.r2, R.r3), (T2.t12, T2.t23, T2.t31, R2.r1, R2.r2, R2.r3)):
        assert zero_vec(s, C.vadd(u, C.vneg(v)))
    assert same_gamma(C.connection_from_data(s, T2, R2), c)


def test_reframe_preserves_covariant_derivatives():
    s = models.roto_translation()
    c = C.natural_connection(s)
    sr = rotate_frame(s, P("x1 - x2*x3"))
    cr = C.reframe(c, sr)
    V, W = s.X1, VectorField((P("x3"), ex.ONE, P("x1")))
    d = C.covariant_derivative(cr, V, W) - C.covariant_derivative(c, V, W)
    assert zero_vec(s, d.coeffs)


class TestTransport:
    def test_constant_curve(self):
        c = C.natural_connection(models.roto_translation())
        curve = C.parse_curve("1/4; -1/3; 1/2")
        assert np.array_equal(C.parallel_transport(c, curve, (0.3, -0.2, 0.7), 50), [0.3, -0.2, 0.7])

    @pytest.mark.parametrize("curve", sorted(C.BUNDLED_CURVES))
    def test_heisenberg_frame_is_parallel(self, curve):
        c = C.natural_connection(models.heisenberg())
        w = C.parallel_transport(c, C.parse_curve(C.BUNDLED_CURVES[curve]), (1, 0, 0))
        assert np.max(np.abs(w - [1, 0, 0])) <= 1e-12

    def test_roto_translation_horizontal_unit_curve(self):
        c = C.natural_connection(models.roto_translation())
        w = C.parallel_transport(c, C.parse_curve(C.BUNDLED_CURVES["roto-unit"]), (0.0, 1.0, 0.0), 1000)
        assert abs(w[2]) <= 1e-6
        assert abs(np.hypot(w[0], w[1]) - 1) <= 1e-6

    def test_richardson_oracle(self):
        # a connection with nontrivial horizontal rotation: transport along a
        # non-horizontal curve, compare step counts; RK4 error shrinks ~16x
        c = C.natural_connection(rotate_frame(models.heisenberg(), P("x1")))
        curve = C.parse_curve(C.BUNDLED_CURVES["twisted"])
        w1, w2, w4 = (C.parallel_transport(c, curve, (1, 0, 0), n) for n in (10, 20, 40))
        e1, e2 = np.max(np.abs(w1 - w4)), np.max(np.abs(w2 - w4))
        assert e2 < e1 / 8
        assert np.max(np.abs(w2 - C.parallel_transport(c, curve, (1, 0, 0), 1000))) < 1e-6

    def test_rejects_bad_steps(self):
        c = C.natural_connection(models.heisenberg())
        with pytest.raises(ValueError):
            C.parallel_transport(c, C.parse_curve("t;0;0"), (1, 0, 0), 0)

    def test_undefined_curve(self):
        c = C.natural_connection(models.heisenberg())
        with pytest.raises(ex.EvaluationError):
            C.parallel_transport(c, C.parse_curve("ln(t);0;0"), (1, 0, 0), 4)
