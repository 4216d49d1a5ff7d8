"""Expression and corpus-file parsing, plus the OdeSystem value types.

Expression grammar::

    expr   := term (("+"|"-") term)*
    term   := factor (("*"|"/") factor)*
    factor := "-" factor | atom ("^" integer)?
    atom   := number | "i" | ident | fn "(" expr ")" | "(" expr ")"
    fn     := "exp"|"log"|"sin"|"cos"|"sqrt"

Reserved identifiers: x, y, dy, yK, dyK (K >= 1 decimal), i, and the
function names; anything else is a named parameter.  y and dy are
aliases for y1 and dy1.

Corpus files are line oriented (see parse_corpus); blank lines and lines
beginning with ``#`` are ignored.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import expr as ex
from .expr import Expr, VarRef


class ParseError(ValueError):
    def __init__(self, message, line=0, col=0, expected=()):
        self.line = line
        self.col = col
        self.expected = tuple(expected)
        loc = f" at line {line}, column {col}" if line else ""
        exp = f" (expected {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{message}{loc}{exp}")


class ValidationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)

_YVAR_RE = re.compile(r"^(dy|y)([0-9]+)?$")


@dataclass
class _Token:
    kind: str  # number | ident | op | end
    text: str
    line: int
    col: int


def _tokenize(text: str, line0: int = 1) -> list[_Token]:
    tokens = []
    line, col = line0, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            tokens.append(_Token(kind, chunk, line, col))
        nl = chunk.count("\n")
        if nl:
            line += nl
            col = len(chunk) - chunk.rfind("\n")
        else:
            col += len(chunk)
        pos = m.end()
    tokens.append(_Token("end", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    @property
    def cur(self) -> _Token:
        return self.tokens[self.pos]

    def _fail(self, expected):
        t = self.cur
        what = "end of input" if t.kind == "end" else repr(t.text)
        raise ParseError(f"unexpected {what}", t.line, t.col, expected)

    def eat_op(self, *ops: str) -> str:
        t = self.cur
        if t.kind == "op" and t.text in ops:
            self.pos += 1
            return t.text
        self._fail(ops)

    def peek_op(self, *ops: str) -> Optional[str]:
        t = self.cur
        if t.kind == "op" and t.text in ops:
            return t.text
        return None

    def expr(self) -> Expr:
        out = self.term()
        while self.peek_op("+", "-"):
            op = self.eat_op("+", "-")
            rhs = self.term()
            out = ex.add(out, rhs if op == "+" else ex.neg(rhs))
        return out

    def term(self) -> Expr:
        out = self.factor()
        while self.peek_op("*", "/"):
            op = self.eat_op("*", "/")
            rhs = self.factor()
            out = ex.mul(out, rhs) if op == "*" else ex.quot(out, rhs)
        return out

    def factor(self) -> Expr:
        if self.peek_op("-"):
            self.eat_op("-")
            return ex.neg(self.factor())
        out = self.atom()
        if self.peek_op("^"):
            self.eat_op("^")
            sign = 1
            if self.peek_op("-"):
                self.eat_op("-")
                sign = -1
            t = self.cur
            if t.kind != "number" or not t.text.isdigit():
                self._fail(("integer exponent",))
            self.pos += 1
            n = sign * int(t.text)
            if n == 0:
                raise ParseError("zero exponent", t.line, t.col)
            out = ex.pow_(out, n)
        return out

    def atom(self) -> Expr:
        t = self.cur
        if t.kind == "number":
            self.pos += 1
            return ex.const(Fraction(t.text))
        if t.kind == "ident":
            self.pos += 1
            name = t.text
            if name == "i":
                return ex.const(1j)
            if name in ex.FUNCTIONS:
                self.eat_op("(")
                arg = self.expr()
                self.eat_op(")")
                return ex.apply(name, arg)
            if name == "x":
                return ex.var(ex.X)
            m = _YVAR_RE.match(name)
            if m:
                index = int(m.group(2)) if m.group(2) else 1
                if index < 1:
                    raise ParseError(f"bad variable index in {name!r}", t.line, t.col)
                ref = ex.YDot(index) if m.group(1) == "dy" else ex.Y(index)
                return ex.var(ref)
            return ex.var(ex.Param(name))
        if self.peek_op("("):
            self.eat_op("(")
            out = self.expr()
            self.eat_op(")")
            return out
        self._fail(("number", "identifier", "(", "-"))


def parse_expr(text: str, line: int = 1) -> Expr:
    p = _Parser(_tokenize(text, line))
    out = p.expr()
    if p.cur.kind != "end":
        p._fail(("operator", "end of input"))
    return out


# ---------------------------------------------------------------------------
# Pretty printing


def _fmt_number(v) -> str:
    if isinstance(v, Fraction):
        if v < 0:
            return "-" + _fmt_number(-v)
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    re_, im = v.real, v.imag
    parts = []
    if re_ != 0 or im == 0:
        parts.append(repr(re_))
    if im != 0:
        parts.append(f"{im!r}*i")
    s = " + ".join(parts)
    return f"({s})" if len(parts) > 1 else s


def to_str(e: Expr) -> str:
    """Render in the expression grammar; reparses to an equal Expr."""
    if isinstance(e, ex.Const):
        return _fmt_number(e.value)
    if isinstance(e, ex.Var):
        return str(e.ref)
    if isinstance(e, ex.Sum):
        return " + ".join(to_str(t) for t in e.terms)
    if isinstance(e, ex.Product):
        return "*".join(_wrap(f, also=(ex.Quotient,)) for f in e.factors)
    if isinstance(e, ex.Power):
        base = to_str(e.base) if isinstance(e.base, (ex.Var, ex.Apply)) else f"({to_str(e.base)})"
        return f"{base}^{e.exponent}"
    if isinstance(e, ex.Quotient):
        num = _wrap(e.numerator, also=(ex.Quotient,))
        return f"{num}/({to_str(e.denominator)})"
    if isinstance(e, ex.Apply):
        return f"{e.fn}({to_str(e.arg)})"
    if isinstance(e, ex.Negate):
        return f"-{_wrap(e.arg, also=(ex.Quotient,))}"
    raise TypeError(f"not an expression: {e!r}")


def _wrap(e: Expr, also=()) -> str:
    if isinstance(e, (ex.Sum,) + tuple(also)):
        return f"({to_str(e)})"
    if isinstance(e, ex.Const) and not isinstance(e.value, Fraction):
        return f"({to_str(e)})" if e.value.real != 0 and e.value.imag != 0 else to_str(e)
    return to_str(e)


# ---------------------------------------------------------------------------
# Systems and corpus entries

GENERIC = "generic"
GENERIC_NONZERO = "generic-nonzero"
FIXED = "fixed"

_RESERVED = {"x", "y", "dy", "i"} | set(ex.FUNCTIONS)


@dataclass(frozen=True)
class ParamDecl:
    name: str
    policy: str = GENERIC  # generic | generic-nonzero | fixed
    value: object = None  # Fraction or complex when fixed

    def __post_init__(self):
        if self.policy not in (GENERIC, GENERIC_NONZERO, FIXED):
            raise ValueError(f"bad parameter policy {self.policy!r}")
        if (self.policy == FIXED) != (self.value is not None):
            raise ValueError("fixed policy requires a value, others forbid one")


@dataclass(frozen=True)
class OdeSystem:
    """d^2 y^I / dx^2 = rhs[I-1](x, y, dy), I = 1..n."""

    n: int
    rhs: tuple[Expr, ...]
    params: tuple[ParamDecl, ...] = ()
    name: str = "system"

    def __post_init__(self):
        object.__setattr__(self, "rhs", tuple(ex.build(f) for f in self.rhs))
        object.__setattr__(self, "params", tuple(self.params))
        if self.n < 1:
            raise ValidationError(f"{self.name}: n must be positive")
        if len(self.rhs) != self.n:
            raise ValidationError(f"{self.name}: expected {self.n} right-hand sides, got {len(self.rhs)}")
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise ValidationError(f"{self.name}: duplicate parameter names")
        for name in names:
            if name in _RESERVED or _YVAR_RE.match(name):
                raise ValidationError(f"{self.name}: parameter name {name!r} is reserved")
        for f in self.rhs:
            self.validate_expr(f)

    def validate_expr(self, e: Expr):
        declared = {p.name for p in self.params}
        for ref in ex.free_vars(e):
            if ref.kind in (VarRef.Y, VarRef.YDOT):
                if not 1 <= ref.index <= self.n:
                    raise ValidationError(f"{self.name}: variable index {ref.index} outside 1..{self.n}")
            elif ref.kind == VarRef.PARAM and ref.name not in declared:
                raise ValidationError(f"{self.name}: undeclared parameter {ref.name!r}")

    def param_map(self) -> dict[str, ParamDecl]:
        return {p.name: p for p in self.params}


STRAIGHT = "straight"
NOT_STRAIGHT = "not-straight"
UNSPECIFIED = "unspecified"


@dataclass(frozen=True)
class CorpusEntry:
    system: OdeSystem
    expect: str = UNSPECIFIED
    conserved: tuple[Expr, ...] = ()
    notes: tuple[str, ...] = ()

    @property
    def transcription_uncertain(self) -> bool:
        return any("transcription-uncertain" in n for n in self.notes)


def _parse_fixed_value(text: str, line: int):
    e = parse_expr(text, line)
    if not isinstance(e, ex.Const):
        raise ParseError("fixed parameter value must be a constant", line, 1)
    return e.value


def parse_corpus(text: str) -> list[CorpusEntry]:
    """Parse a corpus file into validated entries."""
    entries: list[CorpusEntry] = []
    state = None  # None or dict while inside a system block
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        word, _, rest = line.partition(" ")
        rest = rest.strip()
        if state is None:
            if word != "system":
                raise ParseError("expected 'system <name>'", lineno, 1, ("system",))
            if not rest:
                raise ParseError("missing system name", lineno, 1)
            state = {"name": rest, "n": None, "params": [], "rhs": {},
                     "conserved": [], "expect": None, "notes": [], "line": lineno}
            continue
        if word == "n":
            try:
                state["n"] = int(rest)
            except ValueError:
                raise ParseError(f"bad dimension {rest!r}", lineno, 1) from None
        elif word == "param":
            pname, _, policy = rest.partition(" ")
            policy = policy.strip()
            if policy == "generic":
                state["params"].append(ParamDecl(pname, GENERIC))
            elif policy == "generic-nonzero":
                state["params"].append(ParamDecl(pname, GENERIC_NONZERO))
            elif policy.startswith("="):
                value = _parse_fixed_value(policy[1:].strip(), lineno)
                state["params"].append(ParamDecl(pname, FIXED, value))
            else:
                raise ParseError(f"bad parameter policy {policy!r}", lineno, 1,
                                 ("generic", "generic-nonzero", "= <value>"))
        elif re.fullmatch(r"f[0-9]+", word):
            k = int(word[1:])
            if not rest.startswith("="):
                raise ParseError(f"expected '{word} = <expr>'", lineno, 1, ("=",))
            if k in state["rhs"]:
                raise ParseError(f"duplicate {word}", lineno, 1)
            state["rhs"][k] = parse_expr(rest[1:].strip(), lineno)
        elif word == "conserved":
            state["conserved"].append(parse_expr(rest, lineno))
        elif word == "expect":
            if rest not in (STRAIGHT, NOT_STRAIGHT, UNSPECIFIED):
                raise ParseError(f"bad expectation {rest!r}", lineno, 1,
                                 (STRAIGHT, NOT_STRAIGHT, UNSPECIFIED))
            state["expect"] = rest
        elif word == "note":
            state["notes"].append(rest)
        elif word == "end":
            entries.append(_finish_entry(state))
            state = None
        else:
            raise ParseError(f"unknown directive {word!r}", lineno, 1)
    if state is not None:
        raise ParseError(f"system {state['name']!r} not closed with 'end'", state["line"], 1)
    return entries


def _finish_entry(state) -> CorpusEntry:
    name, lineno = state["name"], state["line"]
    if state["n"] is None:
        raise ValidationError(f"{name}: missing dimension 'n'")
    if state["expect"] is None:
        raise ValidationError(f"{name}: missing 'expect' line")
    n = state["n"]
    missing = [k for k in range(1, n + 1) if k not in state["rhs"]]
    if missing:
        raise ValidationError(f"{name}: missing f{missing[0]}")
    extra = [k for k in state["rhs"] if not 1 <= k <= n]
    if extra:
        raise ValidationError(f"{name}: f{extra[0]} outside n={n}")
    sys = OdeSystem(
        n=n,
        rhs=tuple(state["rhs"][k] for k in range(1, n + 1)),
        params=tuple(state["params"]),
        name=name,
    )
    for g in state["conserved"]:
        sys.validate_expr(g)
    return CorpusEntry(
        system=sys,
        expect=state["expect"],
        conserved=tuple(ex.build(g) for g in state["conserved"]),
        notes=tuple(state["notes"]),
    )
