"""Truncated Taylor arithmetic in three variables.

A ``TPoly`` is a polynomial of total degree <= 3 in centred coordinates
u = x - p, stored as a dense vector over the 20 monomials.  Products drop
everything of degree > 3, which is exact for every derivative of order <= 3
at the origin.  ``jet`` evaluates an expression tree directly in this
arithmetic, giving its third-order Taylor polynomial at p without symbolic
differentiation.
"""

from __future__ import annotations

import itertools
import math
from typing import Sequence

import numpy as np

from . import expr as ex
from .expr import Expr

DEGREE = 3
NVARS = 3
CHOP = 1e-14

MONOMIALS: list[tuple[int, int, int]] = [
    b for d in range(DEGREE + 1)
    for b in sorted(itertools.product(range(d + 1), repeat=NVARS), reverse=True) if sum(b) == d
]
INDEX = {b: n for n, b in enumerate(MONOMIALS)}
SIZE = len(MONOMIALS)
DEG = np.array([sum(b) for b in MONOMIALS])

_pairs = [(i, j, INDEX[tuple(a + b for a, b in zip(MONOMIALS[i], MONOMIALS[j]))])
          for i in range(SIZE) for j in range(SIZE) if DEG[i] + DEG[j] <= DEGREE]
_PI = np.array([p[0] for p in _pairs])
_PJ = np.array([p[1] for p in _pairs])
_PK = np.array([p[2] for p in _pairs])

_DIFF = np.zeros((NVARS, SIZE, SIZE))
for _n, _b in enumerate(MONOMIALS):
    for _k in range(NVARS):
        if _b[_k]:
            _lower = tuple(c - (i == _k) for i, c in enumerate(_b))
            _DIFF[_k, INDEX[_lower], _n] = _b[_k]


class TPoly:
    __slots__ = ("v",)

    def __init__(self, v):
        self.v = np.asarray(v, dtype=float)

    @classmethod
    def const(cls, c: float) -> "TPoly":
        v = np.zeros(SIZE)
        v[0] = c
        return cls(v)

    @classmethod
    def var(cls, k: int) -> "TPoly":
        v = np.zeros(SIZE)
        v[INDEX[tuple(int(i == k) for i in range(NVARS))]] = 1.0
        return cls(v)

    @classmethod
    def monomial(cls, beta: Sequence[int], coeff: float = 1.0) -> "TPoly":
        v = np.zeros(SIZE)
        if sum(beta) <= DEGREE:
            v[INDEX[tuple(beta)]] = coeff
        return cls(v)

    def __add__(self, other):
        if isinstance(other, TPoly):
            return TPoly(self.v + other.v)
        return self + TPoly.const(other)

    __radd__ = __add__

    def __neg__(self):
        return TPoly(-self.v)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, TPoly):
            return TPoly(np.bincount(_PK, weights=self.v[_PI] * other.v[_PJ], minlength=SIZE))
        return TPoly(self.v * float(other))

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = TPoly.const(1.0)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def diff(self, k: int) -> "TPoly":
        return TPoly(_DIFF[k] @ self.v)

    def truncate(self, n: int) -> "TPoly":
        return TPoly(np.where(DEG <= n, self.v, 0.0))

    @property
    def value(self) -> float:
        return float(self.v[0])

    def coeff(self, beta: Sequence[int]) -> float:
        return float(self.v[INDEX[tuple(beta)]])

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.v)))

    def to_expr(self, syms: Sequence[Expr], chop: float = CHOP) -> Expr:
        """Rationalized polynomial; coefficients below ``chop`` times the largest are rounding noise."""
        terms = []
        floor = chop * max(1.0, self.max_abs())
        for beta, c in zip(MONOMIALS, self.v):
            if abs(c) <= floor:
                continue
            term = ex.num(ex.rationalize(float(c)))
            for s, b in zip(syms, beta):
                if b:
                    term = ex.mul(term, ex.power(s, b))
            terms.append(term)
        return ex.add(*terms)

    def __repr__(self):
        return f"TPoly({self.to_expr(ex.coordinates(('u1', 'u2', 'u3')))})"


def _compose(derivs: Sequence[float], h: TPoly) -> TPoly:
    """sum_n derivs[n] / n! h^n for h with zero constant term."""
    out = TPoly.const(derivs[0])
    hn = TPoly.const(1.0)
    for n in range(1, DEGREE + 1):
        hn = hn * h
        out = out + hn * (derivs[n] / math.factorial(n))
    return out


def _reciprocal(a: TPoly, node: Expr) -> TPoly:
    a0 = a.value
    if a0 == 0:
        raise ex.EvaluationError("division by zero", node)
    return _compose([1 / a0, -1 / a0 ** 2, 2 / a0 ** 3, -6 / a0 ** 4], a - a0)


def _func(name: str, a: TPoly, node: Expr) -> TPoly:
    a0 = a.value
    if name == "sin":
        s, c = math.sin(a0), math.cos(a0)
        d = [s, c, -s, -c]
    elif name == "cos":
        s, c = math.sin(a0), math.cos(a0)
        d = [c, -s, -c, s]
    elif name == "exp":
        d = [math.exp(a0)] * 4
    elif name == "ln":
        if a0 <= 0:
            raise ex.EvaluationError("ln of non-positive value", node)
        d = [math.log(a0), 1 / a0, -1 / a0 ** 2, 2 / a0 ** 3]
    elif name == "sqrt":
        if a0 <= 0:
            raise ex.EvaluationError("sqrt is not smooth at a non-positive value", node)
        r = math.sqrt(a0)
        d = [r, 0.5 / r, -0.25 / (r * a0), 0.375 / (r * a0 * a0)]
    elif name == "tan":
        if math.cos(a0) == 0:
            raise ex.EvaluationError("tan pole", node)
        t = math.tan(a0)
        sec2 = 1 + t * t
        d = [t, sec2, 2 * t * sec2, 2 * sec2 * (1 + 3 * t * t)]
    else:
        raise ex.EvaluationError(f"unknown function {name}", node)
    return _compose(d, a - a0)


def jet(e: Expr, p: Sequence[float]) -> TPoly:
    """Third-order Taylor polynomial of ``e`` about p, in u = x - p."""
    memo: dict[int, TPoly] = {}

    def go(x: Expr) -> TPoly:
        hit = memo.get(id(x))
        if hit is not None:
            return hit
        if isinstance(x, ex.Num):
            out = TPoly.const(float(x.value))
        elif isinstance(x, ex.Sym):
            out = TPoly.var(x.index) + float(p[x.index])
        elif isinstance(x, ex.Add):
            out = TPoly(np.sum([go(a).v for a in x.args], axis=0))
        elif isinstance(x, ex.Mul):
            out = go(x.args[0])
            for a in x.args[1:]:
                out = out * go(a)
        elif isinstance(x, ex.Pow):
            b = go(x.base)
            out = b ** x.exp if x.exp > 0 else _reciprocal(b, x.base) ** (-x.exp)
        elif isinstance(x, ex.Neg):
            out = -go(x.arg)
        elif isinstance(x, ex.Div):
            out = go(x.num) * _reciprocal(go(x.den), x.den)
        else:
            out = _func(x.name, go(x.arg), x)
        memo[id(x)] = out
        return out

    return go(e)


def variables() -> tuple[TPoly, TPoly, TPoly]:
    return tuple(TPoly.var(k) for k in range(NVARS))
