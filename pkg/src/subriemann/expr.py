"""Symbolic scalar expressions over the coordinates of a 3-dimensional chart.

Expressions are immutable trees with exact rational literals.  The smart
constructors (:func:`add`, :func:`mul`, :func:`power`, :func:`func`) keep
trees in a canonical-ordered, expanded form: flat sums of monomial terms with
like terms collected, products with integer powers, ``sin(u)^2 + cos(u)^2``
folded to ``1``.  The raw node classes may also be instantiated directly to
build unsimplified trees; :func:`simplify` brings those into canonical form.
"""

from __future__ import annotations

import logging
import math
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)

FUNCTIONS = ("sin", "cos", "tan", "exp", "ln", "sqrt")

DEFAULT_SEED = 0x5EED
DEFAULT_SAMPLES = 64
DEFAULT_TOL = 1e-9


class ExprError(Exception):
    pass


class ParseError(ExprError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column


class EvaluationError(ExprError):
    """Raised when an expression cannot be evaluated at a point."""

    def __init__(self, message: str, subtree: "Expr"):
        super().__init__(f"{message}: {subtree}")
        self.subtree = subtree


# ---------------------------------------------------------------------------
# node classes


class Expr:
    __slots__ = ("_hash", "_str", "_diff", "_syms")

    rank = 99

    def __init__(self):
        self._hash = None
        self._str = None
        self._diff = None
        self._syms = None

    def _key(self) -> tuple:
        raise NotImplementedError

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((type(self).__name__, self._key()))
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Expr) or type(self) is not type(other):
            return False
        if hash(self) != hash(other):
            return False
        return self._key() == other._key()

    def __str__(self):
        if self._str is None:
            self._str = _print(self)
        return self._str

    def __repr__(self):
        return f"Expr({str(self)!r})"

    def sort_key(self):
        return (self.rank, str(self))

    def children(self) -> tuple["Expr", ...]:
        return ()

    def symbols(self) -> frozenset[int]:
        """Indices of the coordinates this expression depends on."""
        if self._syms is None:
            acc = set()
            for c in self.children():
                acc |= c.symbols()
            self._syms = frozenset(acc)
        return self._syms

    # arithmetic sugar; all routes go through the smart constructors
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return add(self, neg(as_expr(other)))

    def __rsub__(self, other):
        return add(as_expr(other), neg(self))

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, n):
        if not isinstance(n, int):
            raise TypeError("only integer powers are supported")
        return power(self, n)

    def is_zero_literal(self) -> bool:
        return isinstance(self, Num) and self.value == 0


class Num(Expr):
    __slots__ = ("value",)
    rank = 0

    def __init__(self, value):
        super().__init__()
        self.value = Fraction(value)

    def _key(self):
        return self.value

    def sort_key(self):
        return (0, "")


class Sym(Expr):
    __slots__ = ("index", "name")
    rank = 1

    def __init__(self, index: int, name: str):
        super().__init__()
        self.index = index
        self.name = name

    def _key(self):
        return (self.index, self.name)

    def symbols(self):
        if self._syms is None:
            self._syms = frozenset((self.index,))
        return self._syms

    def sort_key(self):
        return (1, f"{self.index:03d}")


class Func(Expr):
    __slots__ = ("name", "arg")
    rank = 2

    def __init__(self, name: str, arg: Expr):
        super().__init__()
        if name not in FUNCTIONS:
            raise ExprError(f"unknown function {name!r}")
        self.name = name
        self.arg = arg

    def _key(self):
        return (self.name, self.arg)

    def children(self):
        return (self.arg,)


class Pow(Expr):
    __slots__ = ("base", "exp")
    rank = 3

    def __init__(self, base: Expr, exp: int):
        super().__init__()
        self.base = base
        self.exp = int(exp)

    def _key(self):
        return (self.base, self.exp)

    def children(self):
        return (self.base,)

    def sort_key(self):
        b = self.base.sort_key()
        return (b[0], b[1], self.exp)


class Mul(Expr):
    __slots__ = ("args",)
    rank = 4

    def __init__(self, args: Sequence[Expr]):
        super().__init__()
        self.args = tuple(args)

    def _key(self):
        return self.args

    def children(self):
        return self.args


class Add(Expr):
    __slots__ = ("args",)
    rank = 5

    def __init__(self, args: Sequence[Expr]):
        super().__init__()
        self.args = tuple(args)

    def _key(self):
        return self.args

    def children(self):
        return self.args


class Neg(Expr):
    """Unary negation.  Only appears in raw (unsimplified) trees."""

    __slots__ = ("arg",)
    rank = 6

    def __init__(self, arg: Expr):
        super().__init__()
        self.arg = arg

    def _key(self):
        return (self.arg,)

    def children(self):
        return (self.arg,)


class Div(Expr):
    """Quotient.  Only appears in raw trees; canonical form uses negative powers."""

    __slots__ = ("num", "den")
    rank = 7

    def __init__(self, num: Expr, den: Expr):
        super().__init__()
        self.num = num
        self.den = den

    def _key(self):
        return (self.num, self.den)

    def children(self):
        return (self.num, self.den)


ZERO = Num(0)
ONE = Num(1)
HALF = Num(Fraction(1, 2))


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, Fraction)):
        return Num(x)
    if isinstance(x, float):
        return Num(Fraction(x))
    raise TypeError(f"cannot convert {type(x).__name__} to Expr")


def num(x) -> Num:
    x = Fraction(x)
    if x == 0:
        return ZERO
    if x == 1:
        return ONE
    return Num(x)


# ---------------------------------------------------------------------------
# smart constructors


def _split_coeff(e: Expr) -> tuple[Fraction, Expr]:
    if isinstance(e, Num):
        return e.value, ONE
    if isinstance(e, Mul) and isinstance(e.args[0], Num):
        rest = e.args[1:]
        return e.args[0].value, rest[0] if len(rest) == 1 else Mul(rest)
    return Fraction(1), e


def _with_coeff(c: Fraction, rest: Expr) -> Expr:
    if c == 0:
        return ZERO
    if isinstance(rest, Num):
        return num(c * rest.value)
    if c == 1:
        return rest
    if isinstance(rest, Mul):
        return Mul((Num(c),) + rest.args)
    return Mul((Num(c), rest))


def _factors(rest: Expr) -> dict[Expr, int]:
    """Base -> exponent map of a coefficient-free product."""
    out: dict[Expr, int] = {}
    items = rest.args if isinstance(rest, Mul) else (rest,)
    for f in items:
        if isinstance(f, Num):
            continue
        if isinstance(f, Pow):
            out[f.base] = out.get(f.base, 0) + f.exp
        else:
            out[f] = out.get(f, 0) + 1
    return out


def _build_product(factors: dict[Expr, int]) -> Expr:
    parts = []
    for base, e in factors.items():
        if e == 0:
            continue
        parts.append(base if e == 1 else Pow(base, e))
    if not parts:
        return ONE
    if len(parts) == 1:
        return parts[0]
    parts.sort(key=lambda f: f.sort_key())
    return Mul(parts)


def _sin_squares(fac: dict[Expr, int]) -> list[Expr]:
    return [b for b, e in fac.items() if e >= 2 and isinstance(b, Func) and b.name == "sin"]


def _pythagoras(terms: dict[Expr, Fraction]) -> Fraction:
    """Fold c*sin(u)^2*R + c*cos(u)^2*R -> c*R in place; return constant gained."""
    gained = Fraction(0)
    changed = True
    while changed:
        changed = False
        for rest in [r for r in terms if isinstance(r, (Mul, Pow))]:
            coef = terms.get(rest, 0)
            if coef == 0:
                continue
            fac = _factors(rest)
            for base in _sin_squares(fac):
                cos_b = Func("cos", base.arg)
                reduced = dict(fac)
                reduced[base] -= 2
                partner = dict(reduced)
                partner[cos_b] = partner.get(cos_b, 0) + 2
                pkey = _build_product(partner)
                pc = terms.get(pkey, 0)
                if pc == 0 or (pc > 0) != (coef > 0):
                    continue
                m = coef if abs(coef) <= abs(pc) else pc
                terms[rest] = coef - m
                terms[pkey] = pc - m
                rkey = _build_product(reduced)
                if isinstance(rkey, Num):
                    gained += m
                else:
                    terms[rkey] = terms.get(rkey, 0) + m
                for k in (rest, pkey, rkey):
                    if terms.get(k, 1) == 0:
                        del terms[k]
                changed = True
                break
    return gained


def add(*args: Expr) -> Expr:
    const = Fraction(0)
    terms: dict[Expr, Fraction] = {}
    stack = list(args)
    while stack:
        a = stack.pop()
        if isinstance(a, Add):
            stack.extend(a.args)
            continue
        if isinstance(a, (Neg, Div)):
            a = simplify(a)
            stack.append(a)
            continue
        c, rest = _split_coeff(a)
        if c == 0:
            continue
        if rest is ONE or isinstance(rest, Num):
            const += c
        else:
            terms[rest] = terms.get(rest, 0) + c
    terms = {k: v for k, v in terms.items() if v != 0}
    const += _pythagoras(terms)
    parts = [_with_coeff(c, r) for r, c in terms.items()]
    parts.sort(key=lambda t: _split_coeff(t)[1].sort_key())
    if const != 0:
        parts.insert(0, num(const))
    if not parts:
        return ZERO
    if len(parts) == 1:
        return parts[0]
    return Add(parts)


def mul(*args: Expr) -> Expr:
    coeff = Fraction(1)
    factors: dict[Expr, int] = {}
    sums: list[Add] = []
    stack = list(args)
    while stack:
        a = stack.pop()
        if isinstance(a, (Neg, Div)):
            stack.append(simplify(a))
            continue
        if isinstance(a, Num):
            if a.value == 0:
                return ZERO
            coeff *= a.value
        elif isinstance(a, Mul):
            stack.extend(a.args)
        elif isinstance(a, Add):
            sums.append(a)
        elif isinstance(a, Pow):
            factors[a.base] = factors.get(a.base, 0) + a.exp
        else:
            factors[a] = factors.get(a, 0) + 1
    # a sum raised to a negative power may cancel against itself
    for s in list(sums):
        if factors.get(s, 0) < 0:
            factors[s] += 1
            sums.remove(s)
    core = _build_product(factors)
    if not sums:
        return _with_coeff(coeff, core)
    # distribute over the sums
    acc: list[Expr] = [_with_coeff(coeff, core)]
    for s in sums:
        nxt = []
        for a in acc:
            for t in s.args:
                nxt.append(_mul2(a, t))
        acc = nxt
    return add(*acc)


def _mul2(a: Expr, b: Expr) -> Expr:
    # both are non-sum terms here
    ca, ra = _split_coeff(a)
    cb, rb = _split_coeff(b)
    fac = _factors(ra)
    for base, e in _factors(rb).items():
        fac[base] = fac.get(base, 0) + e
    return _with_coeff(ca * cb, _build_product(fac))


def power(base: Expr, n: int) -> Expr:
    n = int(n)
    if isinstance(base, (Neg, Div)):
        base = simplify(base)
    if n == 0:
        return ONE
    if n == 1:
        return base
    if isinstance(base, Num):
        if base.value == 0 and n < 0:
            raise ExprError("division by zero")
        return num(base.value ** n)
    if isinstance(base, Pow):
        return power(base.base, base.exp * n)
    if isinstance(base, Mul):
        return mul(*(power(f, n) for f in base.args))
    if isinstance(base, Add) and n > 0:
        out = base
        for _ in range(n - 1):
            out = mul(out, base)
        return out
    return Pow(base, n)


def neg(e: Expr) -> Expr:
    return mul(Num(-1), e)


def div(a: Expr, b: Expr) -> Expr:
    if isinstance(b, (Neg, Div)):
        b = simplify(b)
    if b.is_zero_literal():
        raise ExprError("division by zero")
    return mul(a, power(b, -1))


def func(name: str, arg: Expr) -> Expr:
    if name not in FUNCTIONS:
        raise ExprError(f"unknown function {name!r}")
    if isinstance(arg, (Neg, Div)):
        arg = simplify(arg)
    if isinstance(arg, Num):
        v = arg.value
        if v == 0:
            if name in ("sin", "tan", "sqrt"):
                return ZERO
            if name in ("cos", "exp"):
                return ONE
            raise ExprError("ln of zero")
        if v == 1 and name in ("ln", "sqrt"):
            return ZERO if name == "ln" else ONE
    return Func(name, arg)


def sin(e):
    return func("sin", as_expr(e))


def cos(e):
    return func("cos", as_expr(e))


def simplify(e: Expr) -> Expr:
    """Rebuild ``e`` bottom-up through the canonicalizing constructors."""
    if isinstance(e, (Num, Sym)):
        return e
    if isinstance(e, Func):
        return func(e.name, simplify(e.arg))
    if isinstance(e, Pow):
        return power(simplify(e.base), e.exp)
    if isinstance(e, Mul):
        return mul(*(simplify(a) for a in e.args))
    if isinstance(e, Add):
        return add(*(simplify(a) for a in e.args))
    if isinstance(e, Neg):
        return neg(simplify(e.arg))
    if isinstance(e, Div):
        return div(simplify(e.num), simplify(e.den))
    raise TypeError(type(e))


# ---------------------------------------------------------------------------
# differentiation


def diff(e: Expr, k: int) -> Expr:
    """Partial derivative with respect to coordinate index ``k`` (0-based)."""
    if k not in e.symbols():
        return ZERO
    if e._diff is None:
        e._diff = {}
    hit = e._diff.get(k)
    if hit is not None:
        return hit
    out = _diff(e, k)
    e._diff[k] = out
    return out


def _diff(e: Expr, k: int) -> Expr:
    if isinstance(e, Sym):
        return ONE if e.index == k else ZERO
    if isinstance(e, Add):
        return add(*(diff(a, k) for a in e.args))
    if isinstance(e, Mul):
        terms = []
        for i, a in enumerate(e.args):
            da = diff(a, k)
            if da.is_zero_literal():
                continue
            terms.append(mul(da, *e.args[:i], *e.args[i + 1:]))
        return add(*terms)
    if isinstance(e, Pow):
        return mul(Num(e.exp), power(e.base, e.exp - 1), diff(e.base, k))
    if isinstance(e, Neg):
        return neg(diff(e.arg, k))
    if isinstance(e, Div):
        n, d = e.num, e.den
        return div(add(mul(diff(n, k), d), neg(mul(n, diff(d, k)))), power(d, 2))
    if isinstance(e, Func):
        u = e.arg
        du = diff(u, k)
        name = e.name
        if name == "sin":
            outer = func("cos", u)
        elif name == "cos":
            outer = neg(func("sin", u))
        elif name == "tan":
            outer = add(ONE, power(func("tan", u), 2))
        elif name == "exp":
            outer = e
        elif name == "ln":
            outer = power(u, -1)
        else:  # sqrt
            outer = mul(HALF, power(e, -1))
        return mul(outer, du)
    raise TypeError(type(e))


# ---------------------------------------------------------------------------
# substitution and truncation


def substitute(e: Expr, mapping: dict[int, Expr]) -> Expr:
    """Replace coordinate symbols by expressions (index -> Expr)."""
    memo: dict[Expr, Expr] = {}

    def go(x: Expr) -> Expr:
        if not (x.symbols() & mapping.keys()):
            return x
        hit = memo.get(x)
        if hit is not None:
            return hit
        if isinstance(x, Sym):
            out = mapping.get(x.index, x)
        elif isinstance(x, Num):
            out = x
        elif isinstance(x, Func):
            out = func(x.name, go(x.arg))
        elif isinstance(x, Pow):
            out = power(go(x.base), x.exp)
        elif isinstance(x, Mul):
            out = mul(*(go(a) for a in x.args))
        elif isinstance(x, Add):
            out = add(*(go(a) for a in x.args))
        elif isinstance(x, Neg):
            out = neg(go(x.arg))
        else:
            out = div(go(x.num), go(x.den))
        memo[x] = out
        return out

    return go(e)


def monomial_degree(term: Expr) -> int:
    """Total degree of the polynomial (bare coordinate) part of a product term."""
    if isinstance(term, Sym):
        return 1
    if isinstance(term, Pow) and isinstance(term.base, Sym) and term.exp > 0:
        return term.exp
    if isinstance(term, Mul):
        return sum(monomial_degree(f) for f in term.args)
    return 0


def truncate(e: Expr, order: int) -> Expr:
    """Drop terms whose coordinate monomial has degree > ``order``.

    With coordinates centred at the origin, every derivative of order
    ``<= order`` of the dropped terms vanishes there, so values of such
    derivatives at the origin are unchanged.
    """
    if isinstance(e, Add):
        kept = [t for t in e.args if monomial_degree(t) <= order]
        if len(kept) == len(e.args):
            return e
        return add(*kept)
    if monomial_degree(e) > order:
        return ZERO
    return e


# ---------------------------------------------------------------------------
# evaluation

_NP = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "ln": np.log,
    "sqrt": np.sqrt,
}


def _scalar_func(name: str, v: float, node: Expr) -> float:
    if name == "ln" and v <= 0:
        raise EvaluationError("ln of non-positive value", node)
    if name == "sqrt" and v < 0:
        raise EvaluationError("sqrt of negative value", node)
    if name == "tan" and math.cos(v) == 0:
        raise EvaluationError("tan pole", node)
    try:
        return {"sin": math.sin, "cos": math.cos, "tan": math.tan,
                "exp": math.exp, "ln": math.log, "sqrt": math.sqrt}[name](v)
    except OverflowError as exc:
        raise EvaluationError(str(exc), node) from None


def evaluate(e: Expr, p: Sequence[float]) -> float:
    """Double-precision value of ``e`` at the point ``p``."""
    memo: dict[int, float] = {}

    def go(x: Expr) -> float:
        key = id(x)
        if key in memo:
            return memo[key]
        if isinstance(x, Num):
            v = float(x.value)
        elif isinstance(x, Sym):
            v = float(p[x.index])
        elif isinstance(x, Add):
            v = math.fsum(go(a) for a in x.args)
        elif isinstance(x, Mul):
            v = 1.0
            for a in x.args:
                v *= go(a)
        elif isinstance(x, Pow):
            b = go(x.base)
            if b == 0 and x.exp < 0:
                raise EvaluationError("division by zero", x.base)
            v = b ** x.exp
        elif isinstance(x, Neg):
            v = -go(x.arg)
        elif isinstance(x, Div):
            d = go(x.den)
            if d == 0:
                raise EvaluationError("division by zero", x.den)
            v = go(x.num) / d
        else:
            v = _scalar_func(x.name, go(x.arg), x)
        memo[key] = v
        return v

    return go(e)


def evaluate_many(e: Expr, points: np.ndarray) -> np.ndarray:
    """Vectorised evaluation at each row of ``points``; invalid entries become nan."""
    points = np.asarray(points, dtype=float)
    n = points.shape[0]
    memo: dict[int, np.ndarray] = {}

    def go(x: Expr) -> np.ndarray:
        key = id(x)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if isinstance(x, Num):
            v = np.full(n, float(x.value))
        elif isinstance(x, Sym):
            v = points[:, x.index]
        elif isinstance(x, Add):
            v = go(x.args[0]).copy()
            for a in x.args[1:]:
                v += go(a)
        elif isinstance(x, Mul):
            v = go(x.args[0]).copy()
            for a in x.args[1:]:
                v *= go(a)
        elif isinstance(x, Pow):
            b = go(x.base)
            if x.exp < 0:
                v = np.where(b == 0, np.nan, 1.0 / np.where(b == 0, 1.0, b) ** (-x.exp))
            else:
                v = b ** x.exp
        elif isinstance(x, Neg):
            v = -go(x.arg)
        elif isinstance(x, Div):
            d = go(x.den)
            v = np.where(d == 0, np.nan, go(x.num) / np.where(d == 0, 1.0, d))
        else:
            a = go(x.arg)
            if x.name == "ln":
                a = np.where(a > 0, a, np.nan)
            elif x.name == "sqrt":
                a = np.where(a >= 0, a, np.nan)
            v = _NP[x.name](a)
        memo[key] = v
        return v

    with np.errstate(all="ignore"):
        out = np.array(go(e), dtype=float, copy=True)
    out[~np.isfinite(out)] = np.nan
    return out


def sample_points(domain: Sequence[tuple[float, float]], n: int, seed: int = DEFAULT_SEED) -> np.ndarray:
    rng = np.random.default_rng(seed)
    lo = np.array([float(a) for a, _ in domain])
    hi = np.array([float(b) for _, b in domain])
    return lo + (hi - lo) * rng.random((n, len(domain)))


def max_deviation(
    e: Expr,
    domain: Sequence[tuple[float, float]],
    n: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
) -> tuple[float, tuple[float, ...] | None]:
    """Worst |e(q)| over the seeded sample and the point where it occurs.

    Points where evaluation fails are logged and skipped; fewer than n/2
    successful samples is an error.
    """
    if isinstance(e, Num):
        return abs(float(e.value)), None
    pts = sample_points(domain, n, seed)
    vals = evaluate_many(e, pts)
    ok = ~np.isnan(vals)
    bad = int(n - ok.sum())
    if bad:
        log.warning("skipped %d sample point(s) where %s is undefined", bad, _short(e))
    if ok.sum() < n / 2:
        raise EvaluationError(f"only {int(ok.sum())} of {n} sample points evaluable", e)
    absv = np.where(ok, np.abs(vals), -1.0)
    i = int(np.argmax(absv))
    return float(absv[i]), tuple(float(c) for c in pts[i])


def is_zero(
    e: Expr,
    domain: Sequence[tuple[float, float]],
    n: int = DEFAULT_SAMPLES,
    tol: float = DEFAULT_TOL,
    seed: int = DEFAULT_SEED,
) -> bool:
    if n < 1 or tol <= 0:
        raise ValueError("need n >= 1 and tol > 0")
    e = simplify(e) if isinstance(e, (Neg, Div)) else e
    if e.is_zero_literal():
        return True
    dev, _ = max_deviation(e, domain, n, seed)
    return dev <= tol


def _short(e: Expr, width: int = 60) -> str:
    s = str(e)
    return s if len(s) <= width else s[: width - 3] + "..."


# ---------------------------------------------------------------------------
# printing

_PREC_ADD, _PREC_MUL, _PREC_UNARY, _PREC_ATOM = 1, 2, 3, 4


def _fmt_frac(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def _print(e: Expr) -> str:
    return _p(e)[0]


def _p(e: Expr) -> tuple[str, int]:
    """Return (text, precedence) for canonical printing."""
    if isinstance(e, Num):
        v = e.value
        if v < 0:
            return "-" + _fmt_frac(-v), _PREC_UNARY if v.denominator == 1 else _PREC_MUL
        return _fmt_frac(v), _PREC_ATOM if v.denominator == 1 else _PREC_MUL
    if isinstance(e, Sym):
        return e.name, _PREC_ATOM
    if isinstance(e, Func):
        return f"{e.name}({e.arg})", _PREC_ATOM
    if isinstance(e, Pow):
        base = _wrap(e.base, _PREC_ATOM)
        if e.exp < 0:
            inner = base if e.exp == -1 else f"{base}^{-e.exp}"
            return f"1/{inner}", _PREC_MUL
        return f"{base}^{e.exp}", _PREC_ATOM
    if isinstance(e, Mul):
        return _print_mul(e)
    if isinstance(e, Add):
        out = []
        for i, t in enumerate(e.args):
            c, rest = _split_coeff(t)
            if i and c < 0:
                out.append(" - " + _wrap(_with_coeff(-c, rest), _PREC_MUL))
            elif i:
                out.append(" + " + _wrap(t, _PREC_MUL))
            else:
                out.append(_wrap(t, _PREC_MUL) if c >= 0 else _p(t)[0])
        return "".join(out), _PREC_ADD
    if isinstance(e, Neg):
        return "-" + _wrap(e.arg, _PREC_UNARY), _PREC_UNARY
    if isinstance(e, Div):
        return f"{_wrap(e.num, _PREC_MUL)}/{_wrap(e.den, _PREC_ATOM)}", _PREC_MUL
    raise TypeError(type(e))


def _wrap(e: Expr, min_prec: int) -> str:
    s, prec = _p(e)
    return s if prec >= min_prec else f"({s})"


def _print_mul(e: Mul) -> tuple[str, int]:
    c, rest = _split_coeff(e)
    fac = rest.args if isinstance(rest, Mul) else (rest,)
    numer, denom = [], []
    for f in fac:
        if isinstance(f, Pow) and f.exp < 0:
            b = _wrap(f.base, _PREC_ATOM)
            denom.append(b if f.exp == -1 else f"{b}^{-f.exp}")
        else:
            numer.append(_wrap(f, _PREC_ATOM))
    sign = "-" if c < 0 else ""
    a = abs(c)
    head = []
    if a.numerator != 1 or not numer:
        head.append(str(a.numerator))
    head.extend(numer)
    text = "*".join(head)
    if a.denominator != 1:
        denom.insert(0, str(a.denominator))
    for d in denom:
        text += "/" + d
    return sign + text, _PREC_MUL if not sign else _PREC_UNARY


# ---------------------------------------------------------------------------
# parsing


class _Lexer:
    def __init__(self, text: str):
        self.tokens: list[tuple[str, str, int, int]] = []
        line, col, i = 1, 1, 0
        while i < len(text):
            ch = text[i]
            if ch == "\n":
                line, col, i = line + 1, 1, i + 1
                continue
            if ch.isspace():
                i, col = i + 1, col + 1
                continue
            if ch == "#":
                while i < len(text) and text[i] != "\n":
                    i += 1
                continue
            if ch.isdigit():
                j = i
                while j < len(text) and text[j].isdigit():
                    j += 1
                self.tokens.append(("int", text[i:j], line, col))
                col += j - i
                i = j
                continue
            if ch.isalpha() or ch == "_":
                j = i
                while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                self.tokens.append(("id", text[i:j], line, col))
                col += j - i
                i = j
                continue
            if ch in "+-*/^()":
                self.tokens.append((ch, ch, line, col))
                i, col = i + 1, col + 1
                continue
            raise ParseError(f"unexpected character {ch!r}", line, col)
        self.tokens.append(("eof", "", line, col))
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def take(self, kind=None):
        tok = self.tokens[self.pos]
        if kind is not None and tok[0] != kind:
            want = "end of input" if kind == "eof" else repr(kind)
            got = "end of input" if tok[0] == "eof" else repr(tok[1])
            raise ParseError(f"expected {want}, found {got}", tok[2], tok[3])
        self.pos += 1
        return tok


def parse(text: str, coords: Sequence[str]) -> Expr:
    """Parse ``text`` with the arithmetic grammar over the given coordinate names."""
    coords = list(coords)
    lx = _Lexer(text)

    def expr():
        left = term()
        while lx.peek()[0] in "+-" and lx.peek()[0] != "eof":
            op = lx.take()[0]
            right = term()
            left = add(left, right) if op == "+" else add(left, neg(right))
        return left

    def term():
        left = factor()
        while lx.peek()[0] in ("*", "/"):
            tok = lx.take()
            right = factor()
            if tok[0] == "*":
                left = mul(left, right)
            else:
                if right.is_zero_literal():
                    raise ParseError("division by zero", tok[2], tok[3])
                left = div(left, right)
        return left

    def factor():
        if lx.peek()[0] == "-":
            lx.take()
            return neg(factor())
        base = atom()
        if lx.peek()[0] == "^":
            tok = lx.take()
            n = int(lx.take("int")[1])
            if n == 0 and base.is_zero_literal():
                raise ParseError("0^0 is undefined", tok[2], tok[3])
            return power(base, n)
        return base

    def atom():
        tok = lx.peek()
        kind = tok[0]
        if kind == "int":
            lx.take()
            return num(int(tok[1]))
        if kind == "(":
            lx.take()
            e = expr()
            lx.take(")")
            return e
        if kind == "id":
            lx.take()
            name = tok[1]
            if name in FUNCTIONS:
                lx.take("(")
                arg = expr()
                lx.take(")")
                try:
                    return func(name, arg)
                except ExprError as exc:
                    raise ParseError(str(exc), tok[2], tok[3]) from None
            if name in coords:
                return Sym(coords.index(name), name)
            raise ParseError(f"undeclared identifier {name!r}", tok[2], tok[3])
        what = "end of input" if kind == "eof" else repr(tok[1])
        raise ParseError(f"unexpected {what}", tok[2], tok[3])

    e = expr()
    lx.take("eof")
    return e


def coordinates(names: Sequence[str]) -> tuple[Sym, ...]:
    return tuple(Sym(i, n) for i, n in enumerate(names))


def to_fraction(x: float) -> Fraction:
    """Exact rational value of a double."""
    return Fraction(x)


def rationalize(x: float, max_den: int = 10**6) -> Fraction:
    """A short fraction within a few ulps of ``x`` if one exists, else its exact value."""
    exact = Fraction(x)
    short = exact.limit_denominator(max_den)
    if abs(float(short) - x) <= 4 * math.ulp(x):
        return short
    return exact


def linear_combination(coeffs: Iterable, exprs: Iterable[Expr]) -> Expr:
    return add(*(mul(as_expr(c), e) for c, e in zip(coeffs, exprs)))
