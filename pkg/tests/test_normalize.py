import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subriemann import expr as ex
from subriemann import jets, models
from subriemann import normalize as N
from subriemann.geometry import Chart, lie_bracket, rotate_frame

CHART = Chart(models.COORDS)
O = (0.0, 0.0, 0.0)


def P(t):
    return CHART.parse(t)


def frame_derivative(s, alpha, f):
    """(X_alpha f) symbolically, alpha 0-based, applied right to left."""
    for a in reversed(alpha):
        f = s.frame[a](f)
    return f


def at(e, p):
    return ex.evaluate(e, p)


def symbolic_theta_jet(s, p):
    """The six prescriptions evaluated through symbolic brackets and the coframe."""
    xi = s.coframe
    b23 = [at(xi[k](lie_bracket(s.X2, s.X3)), p) for k in range(3)]
    b13 = [at(xi[k](lie_bracket(s.X1, s.X3)), p) for k in range(3)]
    sq = b23[2] ** 2 + b13[2] ** 2
    return (-b23[2], b13[2], b13[0], (sq + b23[0] + 2 * b13[1]) / 3, (-sq + b13[1] + 2 * b23[0]) / 3, b23[1])


points = st.tuples(*(st.floats(-0.8, 0.8) for _ in range(3)))


class TestThetaJet:
    @given(points)
    @settings(max_examples=10, deadline=None)
    def test_heisenberg_is_zero(self, p):
        assert np.allclose(N.carnot_theta_jet(models.heisenberg(), p).as_tuple(), 0, atol=1e-14)

    def test_roto_translation_origin(self):
        jet = N.carnot_theta_jet(models.roto_translation(), O)
        assert np.allclose(jet.as_tuple(), (0, 0, 0, 1 / 3, 2 / 3, 0), atol=1e-14)
        assert jet.d12 - jet.d21 == pytest.approx(-1 / 3)

    @pytest.mark.parametrize("name", sorted(models.BUNDLED))
    def test_matches_symbolic_brackets(self, name):
        s = models.bundled(name)
        for p in ex.sample_points(s.domain, 3, seed=11) * 0.5:
            assert np.allclose(N.carnot_theta_jet(s, p).as_tuple(), symbolic_theta_jet(s, p), atol=1e-12)


def rederive(s, theta, p):
    vals = [at(frame_derivative(s, a, theta), p) for a in ((0,), (1,), (0, 0), (0, 1), (1, 0), (1, 1))]
    return np.array(vals)


class TestRealizeTheta:
    def test_zero_jet(self):
        assert N.realize_theta(models.roto_translation(), O, N.ThetaJet.zero()) == ex.ZERO

    def test_injected_jet_on_heisenberg(self):
        s = models.heisenberg()
        jet = N.ThetaJet(1, 0, 0, 0, 0, 0)
        theta = N.realize_theta(s, O, jet)
        assert at(frame_derivative(s, (0,), theta), O) == pytest.approx(1, abs=1e-10)
        assert at(theta, O) == 0

    def test_roto_translation_origin(self):
        s = models.roto_translation()
        jet = N.carnot_theta_jet(s, O)
        theta = N.realize_theta(s, O, jet)
        assert np.allclose(rederive(s, theta, O), jet.as_tuple(), atol=1e-10)

    @settings(max_examples=15, deadline=None)
    @given(st.lists(st.integers(-8, 8), min_size=6, max_size=6), points,
           st.sampled_from(sorted(models.BUNDLED)))
    def test_random_jets(self, c, p, name):
        s = models.bundled(name)
        jet = N.ThetaJet(*(k / 4 for k in c))
        theta = N.realize_theta(s, p, jet)
        assert abs(at(theta, p)) <= 1e-12
        assert np.allclose(rederive(s, theta, p), jet.as_tuple(), atol=1e-10)


class TestCarnotFrame:
    def test_heisenberg_unchanged(self):
        s = models.heisenberg()
        cf = N.carnot_frame(s, (0.3, 0.1, -0.2))
        assert cf.theta == ex.ZERO and cf.structure is s

    def test_roto_translation_origin(self):
        cf = N.carnot_frame(models.roto_translation(), O)
        assert cf.theta == P("x2/3 + x1*x3/3")
        assert cf.residual <= 1e-9
        # independent check with symbolic brackets of the rotated fields
        s = cf.structure
        for V in (lie_bracket(s.X1, s.X3), lie_bracket(s.X2, s.X3)):
            assert np.max(np.abs(V.at(O))) <= 1e-9

    @pytest.mark.parametrize("angle", [0.4, -1.3, math.pi / 2])
    def test_constant_rotation_stays_carnot(self, angle):
        cf = N.carnot_frame(models.roto_translation(), (0.2, -0.1, 0.3))
        turned = rotate_frame(cf.structure, ex.num(ex.rationalize(angle)))
        r13, r23 = N.carnot_residuals(turned, cf.point)
        assert max(np.max(np.abs(r13)), np.max(np.abs(r23))) <= 1e-9

    def test_residuals_at_random_points(self):
        for name in sorted(models.BUNDLED):
            s = models.bundled(name)
            for p in ex.sample_points(s.domain, 4, seed=5) * 0.5:
                assert N.carnot_frame(s, p).residual <= 1e-9


class TestVerticalDirection:
    @given(points)
    @settings(max_examples=10, deadline=None)
    def test_heisenberg(self, p):
        vd = N.vertical_direction(models.heisenberg(), p)
        assert np.allclose(vd.frame, (0, 0, 1)) and np.allclose(vd.coordinates, (0, 0, 1))

    def test_roto_translation_origin(self):
        vd = N.vertical_direction(models.roto_translation(), O)
        assert np.allclose(vd.frame, (0, 0, 1)) and np.allclose(vd.coordinates, (0, -1, 0))

    def test_rotation_invariance(self):
        s = models.heisenberg()
        a = N.vertical_direction(s, O).coordinates
        b = N.vertical_direction(rotate_frame(s, P("x1")), O).coordinates
        assert np.max(np.abs(a - b)) <= 1e-8


class TestOrder2:
    def test_heisenberg_origin_is_identity(self):
        s = models.heisenberg()
        n = N.normalize_chart_order2(s, O)
        assert n.passed
        for x, c in zip(n.coords, CHART.coords):
            assert s.is_zero(ex.add(x, ex.neg(c)))

    @pytest.mark.parametrize("name", sorted(models.BUNDLED))
    def test_postconditions_symbolically(self, name):
        s = models.bundled(name)
        p = (0.2, -0.3, 0.1)
        n = N.normalize_chart_order2(s, p)
        xs = n.coords
        assert max(abs(at(x, p)) for x in xs) <= 1e-10
        for i, j in itertools.product(range(3), repeat=2):
            assert at(frame_derivative(s, (i,), xs[j]), p) == pytest.approx(float(i == j), abs=1e-10)
        for i, j, k in itertools.product((0, 1), (0, 1), range(3)):
            target = {(0, 1, 2): 0.5, (1, 0, 2): -0.5}.get((i, j, k), 0.0)
            assert at(frame_derivative(s, (i, j), xs[k]), p) == pytest.approx(target, abs=1e-10)

    def test_index_three_pairs_skipped_off_carnot(self):
        n = N.normalize_chart_order2(models.roto_translation(), O)
        check = next(c for c in n.checks if "involving X3" in c.name)
        assert check.status == "skip"


class TestOrder3:
    def test_heisenberg_identity(self):
        s = models.heisenberg()
        n = N.normalize_chart_order3(N.carnot_frame(s, O))
        for x, c in zip(n.coords, CHART.coords):
            assert s.is_zero(ex.add(x, ex.neg(c)))

    def test_roto_translation_third_derivatives_symbolically(self):
        cf = N.carnot_frame(models.roto_translation(), O)
        n = N.normalize_chart_order3(cf)
        s = cf.structure
        worst = max(abs(at(frame_derivative(s, ijk, x), O))
                    for ijk in itertools.product((0, 1), repeat=3) for x in n.coords)
        assert worst <= 1e-9

    def test_requires_carnot_frame(self):
        s = models.roto_translation()
        fake = N.CarnotFrame(ex.ZERO, s, O, N.ThetaJet.zero(), N.carnot_residuals(s, O))
        with pytest.raises(N.CarnotRequiredError):
            N.normalize_chart_order3(fake)

    def test_phi_on_heisenberg_model(self):
        J = N.FrameJet.of(models.heisenberg().frame, O)
        table = N.phi_table(J, jets.variables())
        assert table[(0, 0, 0)][(0, 0, 0)] == pytest.approx(1)
        for ijk in N.PHI_INDICES:
            if ijk not in N.PHI_EXCLUDED:
                assert table[ijk][ijk] == pytest.approx(1)

    def test_phi_excluded_rows_are_not_zero(self):
        # documents a mismatch: X1X2X1 phi^(1,1,2) = 1/2, not 0
        J = N.FrameJet.of(models.heisenberg().frame, O)
        table = N.phi_table(J, jets.variables())
        assert table[(0, 1, 0)][(0, 0, 1)] == pytest.approx(0.5)


class TestFlatten:
    def test_model_brackets(self):
        X1, X2, X3 = N.model_fields()
        assert lie_bracket(X1, X2) == X3
        assert all(c == ex.ZERO for c in lie_bracket(X1, X3).coeffs + lie_bracket(X2, X3).coeffs)

    def test_heisenberg_flattens_to_itself(self):
        s = models.heisenberg()
        f = N.flatten(s, O)
        for x, c in zip(f.normalization.coords, CHART.coords):
            assert s.is_zero(ex.add(x, ex.neg(c)))
        assert N.verify_jet_agreement(f).max_deviation == 0

    def test_weighted_indices(self):
        idx = N.weighted_multi_indices(3)
        assert (2,) in idx and (2, 2) not in idx and len(idx) == 19

    @pytest.mark.parametrize("name", sorted(models.BUNDLED))
    def test_jet_agreement(self, name):
        f = N.flatten(models.bundled(name), (0.1, 0.2, -0.1))
        assert N.verify_jet_agreement(f).max_deviation <= 1e-9

    def test_agreement_forces_carnot_condition(self):
        s = models.roto_translation()
        cf = N.carnot_frame(s, O)
        f = N.flatten(s, O)
        J = f.normalization.jet
        assert N.bracket_operator_identities(J) <= 1e-12
        assert N.verify_jet_agreement(f).max_deviation <= 1e-9 and cf.residual <= 1e-9
        # a raw frame fails jet agreement precisely through a bracket monomial
        raw = N.FrameJet.of(s.frame, O)
        assert N.bracket_operator_identities(raw) <= 1e-12
        assert np.max(np.abs(raw.bracket_at(1, 2))) == pytest.approx(1)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(sorted(models.BUNDLED)), points,
       st.lists(st.integers(0, 1), min_size=1, max_size=3), st.integers(0, 2))
def test_frame_jets_match_symbolic_derivatives(name, p, alpha, k):
    s = models.bundled(name)
    J = N.FrameJet.of(s.frame, p)
    u = jets.TPoly.var(k) + jets.TPoly.var(0) * jets.TPoly.var(1)
    sym = ex.add(CHART.coords[k], ex.neg(ex.num(ex.rationalize(p[k]))))
    sym = ex.add(sym, ex.mul(ex.add(CHART.coords[0], ex.num(-ex.rationalize(p[0]))),
                             ex.add(CHART.coords[1], ex.num(-ex.rationalize(p[1])))))
    assert J.apply(alpha, u) == pytest.approx(at(frame_derivative(s, alpha, sym), p), abs=1e-9)


def test_taylor_jet_of_expression():
    e = P("sin(x1)*exp(x2) + x3^2/(2 + x1) + sqrt(2 + x2)")
    p = (0.1, -0.2, 0.3)
    t = jets.jet(e, p)
    for beta in jets.MONOMIALS:
        d = e
        for k, n in enumerate(beta):
            for _ in range(n):
                d = ex.diff(d, k)
        expected = at(d, p) / math.prod(math.factorial(n) for n in beta)
        assert t.coeff(beta) == pytest.approx(expected, abs=1e-12)


def test_natural_and_inherited_differ_on_roto_translation():
    # documents a mismatch: at the origin Gamma^1_32 is 1/3 for the natural
    # connection in the Carnot frame and 0 for the inherited one, while the
    # torsions agree
    from subriemann import connection as C

    s = models.roto_translation()
    f = N.flatten(s, O)
    symbolic = C.reframe(C.natural_connection(s), f.carnot.structure)
    assert at(symbolic.gamma[2][1][0], O) == pytest.approx(1 / 3, abs=1e-10)
    hat = N.inherited_connection_at(f)
    assert hat[2, 1, 0] == pytest.approx(0, abs=1e-10)
    checks, _ = N.compare_with_natural(f, s)
    assert [c.passed for c in checks] == [False, True]
