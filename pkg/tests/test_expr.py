from fractions import Fraction

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from subriemann import expr as ex

COORDS = ("x1", "x2", "x3")
X1, X2, X3 = ex.coordinates(COORDS)
BOX = ((-1.0, 1.0),) * 3


def P(text):
    return ex.parse(text, COORDS)


# random expression trees built through the smart constructors
leaves = st.one_of(
    st.sampled_from([X1, X2, X3]),
    st.fractions(min_value=-5, max_value=5, max_denominator=6).map(ex.num),
)


def _extend(children):
    return st.one_of(
        st.tuples(children, children).map(lambda t: ex.add(*t)),
        st.tuples(children, children).map(lambda t: ex.mul(*t)),
        st.tuples(children, st.integers(0, 3)).map(lambda t: ex.power(*t)),
        children.map(ex.neg),
        st.tuples(st.sampled_from(["sin", "cos", "exp"]), children).map(lambda t: ex.func(*t)),
    )


exprs = st.recursive(leaves, _extend, max_leaves=8)
settings.register_profile("default", max_examples=100, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


class TestParse:
    def test_zero(self):
        assert P("0") is ex.ZERO or P("0") == ex.ZERO

    def test_rational_coefficient(self):
        e = P("-(1/2)*x2")
        assert e == ex.mul(ex.num(Fraction(-1, 2)), X2)
        assert ex.evaluate(e, (0, 2, 0)) == -1

    def test_pythagoras_parses_and_evaluates(self):
        e = P("sin(x3)^2 + cos(x3)^2")
        assert ex.evaluate(e, (0.3, -1, 0.7)) == pytest.approx(1, abs=1e-12)

    def test_comments_and_whitespace(self):
        assert P("  x1 *\n x2  # trailing comment") == ex.mul(X1, X2)

    @pytest.mark.parametrize("text", ["x1 +", "(x1", "x4", "sin x1", "x1^x2", "1/0", "x1 $ 2"])
    def test_errors(self, text):
        with pytest.raises(ex.ParseError):
            P(text)

    def test_error_position(self):
        with pytest.raises(ex.ParseError) as info:
            P("x1 +\n  * x2")
        assert info.value.line == 2

    def test_rationals_are_exact(self):
        assert P("1/3 + 1/6") == ex.num(Fraction(1, 2))

    @given(exprs)
    def test_print_parse_round_trip(self, e):
        assert P(str(e)) == e


class TestDiff:
    def test_examples(self):
        assert ex.diff(P("sin(x3)"), 2) == P("cos(x3)")
        assert ex.diff(P("7/3"), 0) == ex.ZERO
        assert ex.diff(P("-(1/2)*x2"), 1) == ex.num(Fraction(-1, 2))

    @given(exprs, st.integers(0, 2), st.integers(0, 2))
    def test_mixed_partials_commute(self, e, i, j):
        d = ex.add(ex.diff(ex.diff(e, i), j), ex.neg(ex.diff(ex.diff(e, j), i)))
        assert ex.is_zero(d, BOX)

    @given(exprs, exprs, st.integers(0, 2))
    def test_product_rule(self, a, b, k):
        lhs = ex.diff(ex.mul(a, b), k)
        rhs = ex.add(ex.mul(ex.diff(a, k), b), ex.mul(a, ex.diff(b, k)))
        assert ex.max_deviation(ex.add(lhs, ex.neg(rhs)), BOX)[0] <= 1e-9 * (1 + _scale(lhs))

    @given(exprs, st.integers(0, 2))
    def test_matches_finite_differences(self, e, k):
        p = np.array([0.2, -0.3, 0.4])
        h = 1e-6
        step = np.eye(3)[k] * h
        fd = (ex.evaluate(e, p + step) - ex.evaluate(e, p - step)) / (2 * h)
        exact = ex.evaluate(ex.diff(e, k), p)
        assert exact == pytest.approx(fd, rel=1e-4, abs=1e-4)


def _scale(e):
    vals = ex.evaluate_many(e, ex.sample_points(BOX, 64))
    return float(np.max(np.abs(vals)))


class TestSimplify:
    def test_guaranteed_rewrites(self):
        assert ex.add(X1, ex.ZERO) == X1
        assert P("sin(x3)*sin(x3) + cos(x3)*cos(x3)") == ex.ONE
        assert P("cos(x3)*0 + 1*x2") == X2

    @given(exprs)
    def test_preserves_value(self, e):
        pts = ex.sample_points(BOX, 64)
        a = ex.evaluate_many(e, pts)
        b = ex.evaluate_many(ex.simplify(e), pts)
        assert np.allclose(a, b, rtol=1e-12, atol=1e-12)

    @given(exprs)
    def test_idempotent(self, e):
        once = ex.simplify(e)
        assert ex.simplify(once) == once


class TestEvaluate:
    def test_examples(self):
        assert ex.evaluate(P("x1/2"), (2, 0, 0)) == 1
        assert ex.evaluate(P("1/6*x1^3"), (1, 0, 0)) == pytest.approx(1 / 6)

    def test_domain_error_names_subtree(self):
        with pytest.raises(ex.EvaluationError) as info:
            ex.evaluate(P("ln(x1)"), (-1, 0, 0))
        assert "x1" in str(info.value)

    def test_vectorised_agrees(self):
        e = P("exp(x1)*sin(x2) - x3^2/(2 + x1)")
        pts = ex.sample_points(BOX, 16)
        many = ex.evaluate_many(e, pts)
        assert np.allclose(many, [ex.evaluate(e, q) for q in pts], rtol=1e-14)


class TestIsZero:
    def test_examples(self):
        assert ex.is_zero(P("sin(x3)^2 + cos(x3)^2 - 1"), BOX)
        assert not ex.is_zero(X1, BOX)

    def test_deterministic_for_a_seed(self):
        e = P("x1*x2 - x3")
        assert ex.max_deviation(e, BOX, seed=3) == ex.max_deviation(e, BOX, seed=3)

    def test_skips_undefined_points(self):
        # ln(x1) - ln(x1) is undefined on half the box
        e = ex.add(P("ln(x1)"), ex.neg(P("ln(x1)")))
        assert ex.is_zero(e, ((0.0, 1.0), (-1, 1), (-1, 1)))

    def test_too_few_points_is_an_error(self):
        e = ex.add(P("sqrt(x1)"), P("x2"))
        with pytest.raises(ex.EvaluationError):
            ex.is_zero(e, ((-1.0, -0.5), (-1, 1), (-1, 1)))

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            ex.is_zero(X1, BOX, n=0)


def test_rationalize():
    assert ex.rationalize(1 / 3) == Fraction(1, 3)
    assert ex.rationalize(0.1 + 1e-13) == Fraction(0.1 + 1e-13)
