"""Immutable expression trees over x, y^I, dy^I and named parameters.

Expressions are complex-analytic: rational constants, the variables of a
second-order ODE system, field operations, integer powers and the
functions exp, log, sin, cos, sqrt (principal branches).

Canonicalization is deliberately shallow: nested sums/products are
flattened, rational constants are folded exactly, additive/multiplicative
units are dropped and ``Power`` exponents of one are collapsed.  Deciding
whether an expression vanishes identically is the zero oracle's job, not
the tree's.
"""

from __future__ import annotations

import cmath
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Union

Number = Union[Fraction, complex]

FUNCTIONS = ("exp", "log", "sin", "cos", "sqrt")


# ---------------------------------------------------------------------------
# Variables


class VarRef:
    """A reference to x, y^I, dy^I or a named parameter."""

    __slots__ = ("kind", "index", "name", "_h")

    X = "x"
    Y = "y"
    YDOT = "dy"
    PARAM = "param"

    def __init__(self, kind, index=0, name=""):
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "index", index)
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "_h", hash((kind, index, name)))

    def __setattr__(self, *_):
        raise AttributeError("VarRef is immutable")

    def __eq__(self, other):
        return (
            self is other
            or isinstance(other, VarRef)
            and self.kind == other.kind
            and self.index == other.index
            and self.name == other.name
        )

    def __hash__(self):
        return self._h

    def __repr__(self):
        return f"VarRef({self})"

    def __str__(self):
        if self.kind == VarRef.X:
            return "x"
        if self.kind == VarRef.Y:
            return f"y{self.index}"
        if self.kind == VarRef.YDOT:
            return f"dy{self.index}"
        return self.name


X = VarRef(VarRef.X)


def Y(index: int) -> VarRef:
    if index < 1:
        raise ValueError(f"y index must be >= 1, got {index}")
    return VarRef(VarRef.Y, index=index)


def YDot(index: int) -> VarRef:
    if index < 1:
        raise ValueError(f"dy index must be >= 1, got {index}")
    return VarRef(VarRef.YDOT, index=index)


def Param(name: str) -> VarRef:
    return VarRef(VarRef.PARAM, name=name)


# ---------------------------------------------------------------------------
# Nodes
#
# Direct construction produces a "raw" node; build() (or the lowercase
# smart constructors) canonicalizes.  Canonical nodes are interned, so
# equality of canonical trees is usually an identity check.


class Expr:
    __slots__ = ("_h",)

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other):
            return False
        return self._key() == other._key()

    def __hash__(self):
        return self._h

    def _key(self):
        raise NotImplementedError

    def __repr__(self):
        from .parsing import to_str

        try:
            return f"<Expr {to_str(self)}>"
        except Exception:
            return object.__repr__(self)


class Const(Expr):
    """A rational (exact) or complex (inexact) literal."""

    __slots__ = ("value",)

    def __init__(self, value):
        object.__setattr__(self, "value", _coerce_number(value))
        object.__setattr__(self, "_h", hash(("c", self.value)))

    def _key(self):
        v = self.value
        # Fraction(2) == complex(2) under ==, but keep exactness distinct.
        return ("c", type(v).__name__, v)


class Var(Expr):
    __slots__ = ("ref",)

    def __init__(self, ref: VarRef):
        object.__setattr__(self, "ref", ref)
        object.__setattr__(self, "_h", hash(("v", ref)))

    def _key(self):
        return ("v", self.ref)


class Sum(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms: Iterable[Expr]):
        object.__setattr__(self, "terms", tuple(terms))
        object.__setattr__(self, "_h", hash(("+",) + tuple(id(t) for t in self.terms)))

    def _key(self):
        return ("+", self.terms)


class Product(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors: Iterable[Expr]):
        object.__setattr__(self, "factors", tuple(factors))
        object.__setattr__(self, "_h", hash(("*",) + tuple(id(f) for f in self.factors)))

    def _key(self):
        return ("*", self.factors)


class Power(Expr):
    __slots__ = ("base", "exponent")

    def __init__(self, base: Expr, exponent: int):
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "exponent", int(exponent))
        object.__setattr__(self, "_h", hash(("^", id(base), self.exponent)))

    def _key(self):
        return ("^", self.base, self.exponent)


class Quotient(Expr):
    __slots__ = ("numerator", "denominator")

    def __init__(self, numerator: Expr, denominator: Expr):
        object.__setattr__(self, "numerator", numerator)
        object.__setattr__(self, "denominator", denominator)
        object.__setattr__(self, "_h", hash(("/", id(numerator), id(denominator))))

    def _key(self):
        return ("/", self.numerator, self.denominator)


class Apply(Expr):
    __slots__ = ("fn", "arg")

    def __init__(self, fn: str, arg: Expr):
        if fn not in FUNCTIONS:
            raise ValueError(f"unknown function {fn!r}")
        object.__setattr__(self, "fn", fn)
        object.__setattr__(self, "arg", arg)
        object.__setattr__(self, "_h", hash((fn, id(arg))))

    def _key(self):
        return ("f", self.fn, self.arg)


class Negate(Expr):
    """Raw-input convenience node; build() rewrites it as (-1) * arg."""

    __slots__ = ("arg",)

    def __init__(self, arg: Expr):
        object.__setattr__(self, "arg", arg)
        object.__setattr__(self, "_h", hash(("-", id(arg))))

    def _key(self):
        return ("-", self.arg)


def _coerce_number(value) -> Number:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        # Decimal-point literals convert exactly (0.5 -> 1/2).
        return Fraction(value)
    if isinstance(value, complex):
        if value.imag == 0.0:
            return Fraction(value.real)
        return value
    raise TypeError(f"not a constant: {value!r}")


# ---------------------------------------------------------------------------
# Interning

_intern: dict = {}


def _mk(node: Expr) -> Expr:
    key = node._key()
    got = _intern.get(key)
    if got is None:
        _intern[key] = node
        return node
    return got


ZERO = _mk(Const(0))
ONE = _mk(Const(1))


# ---------------------------------------------------------------------------
# Smart constructors (canonicalizing)


def const(value) -> Const:
    return _mk(Const(value))


def var(ref: VarRef) -> Var:
    return _mk(Var(ref))


def _is_const(e: Expr, v=None) -> bool:
    return isinstance(e, Const) and (v is None or e.value == v)


def _num_add(a: Number, b: Number) -> Number:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a + b
    return _to_complex(a) + _to_complex(b)


def _num_mul(a: Number, b: Number) -> Number:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a * b
    return _to_complex(a) * _to_complex(b)


def _to_complex(v: Number) -> complex:
    return complex(v) if isinstance(v, Fraction) else v


def add(*terms: Expr) -> Expr:
    flat: list[Expr] = []
    acc: Number = Fraction(0)
    for t in terms:
        if isinstance(t, Sum):
            # already canonical: at most one Const inside
            for s in t.terms:
                if isinstance(s, Const):
                    acc = _num_add(acc, s.value)
                else:
                    flat.append(s)
        elif isinstance(t, Const):
            acc = _num_add(acc, t.value)
        else:
            flat.append(t)
    if acc != 0:
        flat.append(const(acc))
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    return _mk(Sum(flat))


def mul(*factors: Expr) -> Expr:
    flat: list[Expr] = []
    acc: Number = Fraction(1)
    for f in factors:
        if isinstance(f, Product):
            for g in f.factors:
                if isinstance(g, Const):
                    acc = _num_mul(acc, g.value)
                else:
                    flat.append(g)
        elif isinstance(f, Const):
            acc = _num_mul(acc, f.value)
        else:
            flat.append(f)
    if acc == 0:
        return ZERO
    if acc != 1:
        flat.insert(0, const(acc))
    if not flat:
        return ONE
    if len(flat) == 1:
        return flat[0]
    return _mk(Product(flat))


def neg(e: Expr) -> Expr:
    return mul(const(-1), e)


def sub(a: Expr, b: Expr) -> Expr:
    return add(a, neg(b))


def pow_(base: Expr, exponent: int) -> Expr:
    exponent = int(exponent)
    if exponent == 0:
        return ONE
    if exponent == 1:
        return base
    if isinstance(base, Const):
        v = base.value
        if v == 0 and exponent < 0:
            raise ZeroDivisionError("0 raised to a negative power")
        if isinstance(v, Fraction):
            return const(v ** exponent)
        return const(v ** exponent)
    if isinstance(base, Power):
        return pow_(base.base, base.exponent * exponent)
    return _mk(Power(base, exponent))


def quot(numerator: Expr, denominator: Expr) -> Expr:
    if _is_const(denominator):
        v = denominator.value
        if v != 0:
            recip = 1 / v if isinstance(v, Fraction) else 1.0 / v
            return mul(const(recip), numerator)
    if _is_const(numerator, 0):
        return ZERO
    if _is_const(denominator, 1):
        return numerator
    return _mk(Quotient(numerator, denominator))


def apply(fn: str, arg: Expr) -> Expr:
    return _mk(Apply(fn, arg))


def build(raw: Expr) -> Expr:
    """Canonicalize an arbitrary well-formed tree.

    Idempotent: build(build(t)) is structurally equal to build(t).
    """
    if isinstance(raw, Const):
        return const(raw.value)
    if isinstance(raw, Var):
        return var(raw.ref)
    if isinstance(raw, Sum):
        return add(*(build(t) for t in raw.terms))
    if isinstance(raw, Product):
        return mul(*(build(f) for f in raw.factors))
    if isinstance(raw, Power):
        return pow_(build(raw.base), raw.exponent)
    if isinstance(raw, Quotient):
        return quot(build(raw.numerator), build(raw.denominator))
    if isinstance(raw, Apply):
        return apply(raw.fn, build(raw.arg))
    if isinstance(raw, Negate):
        return neg(build(raw.arg))
    raise TypeError(f"not an expression: {raw!r}")


# ---------------------------------------------------------------------------
# Traversal helpers


def children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, Sum):
        return e.terms
    if isinstance(e, Product):
        return e.factors
    if isinstance(e, Power):
        return (e.base,)
    if isinstance(e, Quotient):
        return (e.numerator, e.denominator)
    if isinstance(e, (Apply, Negate)):
        return (e.arg,)
    return ()


def free_vars(e: Expr) -> frozenset[VarRef]:
    seen: dict[int, frozenset] = {}

    def go(n: Expr) -> frozenset:
        got = seen.get(id(n))
        if got is not None:
            return got
        if isinstance(n, Var):
            out = frozenset((n.ref,))
        else:
            out = frozenset().union(*(go(c) for c in children(n))) if children(n) else frozenset()
        seen[id(n)] = out
        return out

    return go(e)


def node_count(e: Expr) -> int:
    """Number of distinct nodes in the (shared) expression DAG."""
    seen: set[int] = set()

    def go(n):
        if id(n) in seen:
            return
        seen.add(id(n))
        for c in children(n):
            go(c)

    go(e)
    return len(seen)


def contains_fn(e: Expr, fns: tuple[str, ...]) -> bool:
    seen: set[int] = set()

    def go(n) -> bool:
        if id(n) in seen:
            return False
        seen.add(id(n))
        if isinstance(n, Apply) and n.fn in fns:
            return True
        return any(go(c) for c in children(n))

    return go(e)


def substitute(e: Expr, mapping: Mapping[VarRef, Expr]) -> Expr:
    """Simultaneous substitution, re-canonicalized."""
    if not mapping:
        return build(e)
    memo: dict[int, Expr] = {}

    def go(n: Expr) -> Expr:
        got = memo.get(id(n))
        if got is not None:
            return got
        if isinstance(n, Var) and n.ref in mapping:
            out = build(mapping[n.ref])
        elif isinstance(n, Const):
            out = const(n.value)
        elif isinstance(n, Var):
            out = var(n.ref)
        elif isinstance(n, Sum):
            out = add(*(go(t) for t in n.terms))
        elif isinstance(n, Product):
            out = mul(*(go(f) for f in n.factors))
        elif isinstance(n, Power):
            out = pow_(go(n.base), n.exponent)
        elif isinstance(n, Quotient):
            out = quot(go(n.numerator), go(n.denominator))
        elif isinstance(n, Apply):
            out = apply(n.fn, go(n.arg))
        elif isinstance(n, Negate):
            out = neg(go(n.arg))
        else:
            raise TypeError(f"not an expression: {n!r}")
        memo[id(n)] = out
        return out

    return go(e)


def is_polynomial(e: Expr) -> bool:
    """True iff e is a polynomial over the rationals in its variables.

    No transcendental nodes, no variable in any denominator (explicit
    Quotient or negative Power), all constants exact rationals.
    """
    memo: dict[int, bool] = {}

    def go(n: Expr) -> bool:
        got = memo.get(id(n))
        if got is not None:
            return got
        if isinstance(n, Const):
            out = isinstance(n.value, Fraction)
        elif isinstance(n, Var):
            out = True
        elif isinstance(n, Apply):
            out = False
        elif isinstance(n, Quotient):
            out = go(n.numerator) and go(n.denominator) and not free_vars(n.denominator)
        elif isinstance(n, Power):
            if n.exponent < 0 and free_vars(n.base):
                out = False
            else:
                out = go(n.base)
        elif isinstance(n, Negate):
            out = go(n.arg)
        else:
            out = all(go(c) for c in children(n))
        memo[id(n)] = out
        return out

    return go(e)


# ---------------------------------------------------------------------------
# Evaluation


class EvalSingular(ArithmeticError):
    """Division by zero, log(0) or 0 to a negative power during eval."""

    def __init__(self, message: str, subexpr: Expr):
        super().__init__(message)
        self.subexpr = subexpr


class EvalContext:
    """Single-use assignment of complex values plus conditioning telemetry.

    After evaluate() runs, ``max_abs`` holds the largest intermediate
    magnitude seen and ``cancellation_scale`` the sum of term magnitudes
    of the top-level sum (the scale against which the result cancelled).
    """

    def __init__(self, assignment: Mapping[VarRef, complex]):
        self.assignment = {k: complex(v) for k, v in assignment.items()}
        self.max_abs = 0.0
        self.cancellation_scale = 0.0
        self._memo: dict[int, complex] = {}

    def __getitem__(self, ref: VarRef) -> complex:
        return self.assignment[ref]


_CFUNCS: dict[str, Callable[[complex], complex]] = {
    "exp": cmath.exp,
    "sin": cmath.sin,
    "cos": cmath.cos,
}


def evaluate(e: Expr, ctx: EvalContext) -> complex:
    """Evaluate with standard complex arithmetic; principal branches."""

    def note(v: complex) -> complex:
        m = abs(v)
        if m > ctx.max_abs:
            ctx.max_abs = m
        return v

    def go(n: Expr) -> complex:
        got = ctx._memo.get(id(n))
        if got is not None:
            return got
        if isinstance(n, Const):
            out = _to_complex(n.value)
        elif isinstance(n, Var):
            try:
                out = ctx.assignment[n.ref]
            except KeyError:
                raise KeyError(f"no assignment for {n.ref}") from None
        elif isinstance(n, Sum):
            out = 0j
            for t in n.terms:
                out += go(t)
        elif isinstance(n, Product):
            out = 1 + 0j
            for f in n.factors:
                out *= go(f)
        elif isinstance(n, Power):
            b = go(n.base)
            if b == 0 and n.exponent < 0:
                raise EvalSingular("0 raised to a negative power", n)
            out = b ** n.exponent
        elif isinstance(n, Quotient):
            den = go(n.denominator)
            if den == 0:
                raise EvalSingular("division by zero", n)
            out = go(n.numerator) / den
        elif isinstance(n, Apply):
            a = go(n.arg)
            if n.fn == "log":
                if a == 0:
                    raise EvalSingular("log(0)", n)
                out = cmath.log(a)
            elif n.fn == "sqrt":
                out = cmath.sqrt(a)
            else:
                out = _CFUNCS[n.fn](a)
        elif isinstance(n, Negate):
            out = -go(n.arg)
        else:
            raise TypeError(f"not an expression: {n!r}")
        ctx._memo[id(n)] = note(out)
        return out

    value = go(e)
    if isinstance(e, Sum):
        ctx.cancellation_scale = sum(abs(go(t)) for t in e.terms)
    else:
        ctx.cancellation_scale = abs(value)
    return value


def evaluate_exact(e: Expr, assignment: Mapping[VarRef, Fraction]) -> Fraction:
    """Exact rational evaluation; e must satisfy is_polynomial()."""
    memo: dict[int, Fraction] = {}

    def go(n: Expr) -> Fraction:
        got = memo.get(id(n))
        if got is not None:
            return got
        if isinstance(n, Const):
            out = n.value
        elif isinstance(n, Var):
            out = assignment[n.ref]
        elif isinstance(n, Sum):
            out = Fraction(0)
            for t in n.terms:
                out += go(t)
        elif isinstance(n, Product):
            out = Fraction(1)
            for f in n.factors:
                out *= go(f)
        elif isinstance(n, Power):
            out = go(n.base) ** n.exponent
        elif isinstance(n, Quotient):
            out = go(n.numerator) / go(n.denominator)
        elif isinstance(n, Negate):
            out = -go(n.arg)
        else:
            raise TypeError(f"not exactly evaluable: {n!r}")
        memo[id(n)] = out
        return out

    return go(e)
