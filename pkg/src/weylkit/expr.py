"""Closed-form scalar expressions on a coordinate chart.

Expressions are immutable trees over constants, coordinates ``x1..xn``,
the four arithmetic operations, non-negative integer powers and the
functions ``exp``, ``ln``, ``sin`` and ``cos``.  Trees are hashable by
structure, which lets :func:`lambdify` share common subexpressions when
many related trees (a metric and its derivatives, say) are compiled into
one evaluator.

Grammar accepted by :func:`parse`::

    expr   := term (("+"|"-") term)*
    term   := factor (("*"|"/") factor)*
    factor := "-"? base ("^" integer)?
    base   := number | ident | "(" expr ")" | func "(" expr ")"
    func   := "exp" | "ln" | "sin" | "cos"
    ident  := "x" digit

``^`` binds tighter than unary minus, so ``-x1^2`` is ``-(x1^2)``.
"""

from __future__ import annotations

import math
import re
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "Expr", "Const", "Var", "Add", "Sub", "Mul", "Div", "Neg", "Pow", "Func",
    "ParseError", "DomainError", "const", "var", "exp", "ln", "sin", "cos",
    "as_expr", "parse", "partial", "evaluate", "substitute", "shift_vars",
    "free_vars", "lambdify",
]


class ParseError(ValueError):
    """Malformed expression text; ``position`` is a 0-based character offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at offset {position})")
        self.position = position


class DomainError(ArithmeticError):
    """Evaluation hit ``ln`` of a non-positive value or a zero divisor."""

    def __init__(self, message: str, subexpr: "Expr", point=None):
        super().__init__(f"{message}: {subexpr}" + ("" if point is None else f" at {point}"))
        self.subexpr = subexpr
        self.point = point


class Expr:
    """Base node.  Subclasses set ``_key`` (structural identity) in ``__init__``."""

    __slots__ = ("_key", "_hash", "_dcache", "__weakref__")

    def _finish(self, key):
        self._key = key
        self._hash = hash(key)
        self._dcache = {}

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Expr) or self._hash != other._hash:
            return False
        return self._key == other._key

    def __ne__(self, other):
        return not self.__eq__(other)

    # arithmetic sugar; every operator goes through the simplifying builders
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

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
        return power(self, n)

    def __repr__(self):
        return f"Expr({self})"

    def __str__(self):
        return to_text(self)

    @property
    def children(self) -> tuple:
        return ()


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value: float):
        self.value = float(value)
        self._finish(("c", self.value))


class Var(Expr):
    """Coordinate ``x{index+1}``; ``index`` is 0-based."""

    __slots__ = ("index",)

    def __init__(self, index: int):
        if index < 0:
            raise ValueError("coordinate index must be >= 0")
        self.index = int(index)
        self._finish(("x", self.index))


class _Binary(Expr):
    __slots__ = ("a", "b")
    tag = "?"

    def __init__(self, a: Expr, b: Expr):
        self.a, self.b = a, b
        self._finish((self.tag, a._key, b._key))

    @property
    def children(self):
        return (self.a, self.b)


class Add(_Binary):
    __slots__ = ()
    tag = "+"


class Sub(_Binary):
    __slots__ = ()
    tag = "-"


class Mul(_Binary):
    __slots__ = ()
    tag = "*"


class Div(_Binary):
    __slots__ = ()
    tag = "/"


class Neg(Expr):
    __slots__ = ("a",)

    def __init__(self, a: Expr):
        self.a = a
        self._finish(("neg", a._key))

    @property
    def children(self):
        return (self.a,)


class Pow(Expr):
    """``a ** n`` with integer ``n >= 0``."""

    __slots__ = ("a", "n")

    def __init__(self, a: Expr, n: int):
        if n < 0:
            raise ValueError("Pow exponent must be a non-negative integer")
        self.a, self.n = a, int(n)
        self._finish(("^", a._key, self.n))

    @property
    def children(self):
        return (self.a,)


FUNCS = ("exp", "ln", "sin", "cos")


class Func(Expr):
    __slots__ = ("name", "a")

    def __init__(self, name: str, a: Expr):
        if name not in FUNCS:
            raise ValueError(f"unknown function {name!r}")
        self.name, self.a = name, a
        self._finish((name, a._key))

    @property
    def children(self):
        return (self.a,)


ZERO = Const(0.0)
ONE = Const(1.0)


def const(value: float) -> Const:
    return Const(value)


def var(index: int) -> Var:
    return Var(index)


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, float, np.integer, np.floating)):
        return Const(float(x))
    raise TypeError(f"cannot convert {type(x).__name__} to Expr")


def _is(e: Expr, value: float) -> bool:
    return isinstance(e, Const) and e.value == value


# -- simplifying builders (constant folding and 0/1 absorption only) --------

def add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if _is(a, 0.0):
        return b
    if _is(b, 0.0):
        return a
    if isinstance(b, Neg):
        return sub(a, b.a)
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if _is(b, 0.0):
        return a
    if _is(a, 0.0):
        return neg(b)
    if isinstance(b, Neg):
        return add(a, b.a)
    if a == b:
        return ZERO
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if _is(a, 0.0) or _is(b, 0.0):
        return ZERO
    if _is(a, 1.0):
        return b
    if _is(b, 1.0):
        return a
    if _is(a, -1.0):
        return neg(b)
    if _is(b, -1.0):
        return neg(a)
    if isinstance(a, Neg) and isinstance(b, Neg):
        return mul(a.a, b.a)
    if isinstance(a, Neg):
        return neg(mul(a.a, b))
    if isinstance(b, Neg):
        return neg(mul(a, b.a))
    if isinstance(b, Const) and not isinstance(a, Const):
        a, b = b, a
    if isinstance(a, Const) and isinstance(b, Mul) and isinstance(b.a, Const):
        return mul(Const(a.value * b.a.value), b.b)
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0.0:
        return Const(a.value / b.value)
    if _is(b, 1.0):
        return a
    if _is(a, 0.0) and not _is(b, 0.0):
        return ZERO
    if isinstance(a, Neg):
        return neg(div(a.a, b))
    return Div(a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.a
    if isinstance(a, Sub):
        return Sub(a.b, a.a)
    return Neg(a)


def power(a: Expr, n: int) -> Expr:
    if int(n) != n or n < 0:
        raise ValueError("only non-negative integer powers are supported")
    n = int(n)
    if n == 0:
        return ONE
    if n == 1:
        return a
    if isinstance(a, Const):
        return Const(a.value ** n)
    if isinstance(a, Pow):
        return Pow(a.a, a.n * n)
    return Pow(a, n)


def func(name: str, a: Expr) -> Expr:
    if isinstance(a, Const):
        v = a.value
        if name == "exp":
            return Const(math.exp(v))
        if name == "sin":
            return Const(math.sin(v))
        if name == "cos":
            return Const(math.cos(v))
        if name == "ln" and v > 0:
            return Const(math.log(v))
    if name == "ln" and isinstance(a, Func) and a.name == "exp":
        return a.a
    return Func(name, a)


def exp(a) -> Expr:
    return func("exp", as_expr(a))


def ln(a) -> Expr:
    return func("ln", as_expr(a))


def sin(a) -> Expr:
    return func("sin", as_expr(a))


def cos(a) -> Expr:
    return func("cos", as_expr(a))


# -- calculus ---------------------------------------------------------------

def partial(e: Expr, i: int) -> Expr:
    """Exact symbolic derivative of ``e`` with respect to coordinate ``i`` (0-based)."""
    cached = e._dcache.get(i)
    if cached is not None:
        return cached
    if isinstance(e, Const):
        d = ZERO
    elif isinstance(e, Var):
        d = ONE if e.index == i else ZERO
    elif isinstance(e, Add):
        d = add(partial(e.a, i), partial(e.b, i))
    elif isinstance(e, Sub):
        d = sub(partial(e.a, i), partial(e.b, i))
    elif isinstance(e, Mul):
        d = add(mul(partial(e.a, i), e.b), mul(e.a, partial(e.b, i)))
    elif isinstance(e, Div):
        da, db = partial(e.a, i), partial(e.b, i)
        if _is(db, 0.0):
            d = div(da, e.b)
        else:
            d = div(sub(mul(da, e.b), mul(e.a, db)), power(e.b, 2))
    elif isinstance(e, Neg):
        d = neg(partial(e.a, i))
    elif isinstance(e, Pow):
        d = mul(mul(Const(e.n), power(e.a, e.n - 1)), partial(e.a, i))
    elif isinstance(e, Func):
        da = partial(e.a, i)
        if _is(da, 0.0):
            d = ZERO
        elif e.name == "exp":
            d = mul(e, da)
        elif e.name == "ln":
            d = div(da, e.a)
        elif e.name == "sin":
            d = mul(cos(e.a), da)
        else:
            d = neg(mul(sin(e.a), da))
    else:  # pragma: no cover
        raise TypeError(type(e))
    e._dcache[i] = d
    return d


def free_vars(e: Expr) -> set[int]:
    """0-based indices of the coordinates ``e`` mentions."""
    out: set[int] = set()
    stack = [e]
    seen = set()
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        if isinstance(node, Var):
            out.add(node.index)
        stack.extend(node.children)
    return out


def _rebuild(e: Expr, leaf: Callable[[Var], Expr], memo: dict) -> Expr:
    key = id(e)
    if key in memo:
        return memo[key]
    if isinstance(e, Var):
        r = leaf(e)
    elif isinstance(e, Const):
        r = e
    elif isinstance(e, Add):
        r = add(_rebuild(e.a, leaf, memo), _rebuild(e.b, leaf, memo))
    elif isinstance(e, Sub):
        r = sub(_rebuild(e.a, leaf, memo), _rebuild(e.b, leaf, memo))
    elif isinstance(e, Mul):
        r = mul(_rebuild(e.a, leaf, memo), _rebuild(e.b, leaf, memo))
    elif isinstance(e, Div):
        r = div(_rebuild(e.a, leaf, memo), _rebuild(e.b, leaf, memo))
    elif isinstance(e, Neg):
        r = neg(_rebuild(e.a, leaf, memo))
    elif isinstance(e, Pow):
        r = power(_rebuild(e.a, leaf, memo), e.n)
    elif isinstance(e, Func):
        r = func(e.name, _rebuild(e.a, leaf, memo))
    else:  # pragma: no cover
        raise TypeError(type(e))
    memo[key] = r
    return r


def substitute(e: Expr, values: dict[int, object]) -> Expr:
    """Replace coordinates by numbers or expressions, keyed by 0-based index."""
    repl = {k: as_expr(v) for k, v in values.items()}
    return _rebuild(e, lambda v: repl.get(v.index, v), {})


def shift_vars(e: Expr, offset: int) -> Expr:
    """Renumber every coordinate ``x_i`` to ``x_{i+offset}``."""
    return _rebuild(e, lambda v: Var(v.index + offset), {})


# -- evaluation -------------------------------------------------------------

def evaluate(e: Expr, point) -> float | np.ndarray:
    """Evaluate ``e`` at ``point`` (shape ``(n,)`` or ``(n, ...)`` for a batch).

    Raises :class:`DomainError` naming the offending subexpression when a
    logarithm argument is non-positive or a divisor vanishes.
    """
    x = np.asarray(point, dtype=float)
    memo: dict[int, object] = {}

    def ev(node: Expr):
        k = id(node)
        if k in memo:
            return memo[k]
        if isinstance(node, Const):
            r = node.value
        elif isinstance(node, Var):
            if node.index >= x.shape[0]:
                raise IndexError(f"point has no coordinate x{node.index + 1}")
            r = x[node.index]
        elif isinstance(node, Add):
            r = ev(node.a) + ev(node.b)
        elif isinstance(node, Sub):
            r = ev(node.a) - ev(node.b)
        elif isinstance(node, Mul):
            r = ev(node.a) * ev(node.b)
        elif isinstance(node, Div):
            den = ev(node.b)
            if np.any(np.asarray(den) == 0.0):
                raise DomainError("division by zero", node, _fmt_point(x))
            r = ev(node.a) / den
        elif isinstance(node, Neg):
            r = -ev(node.a)
        elif isinstance(node, Pow):
            r = ev(node.a) ** node.n
        else:
            a = ev(node.a)
            if node.name == "ln":
                if np.any(np.asarray(a) <= 0.0):
                    raise DomainError("logarithm of a non-positive value", node, _fmt_point(x))
                r = np.log(a)
            else:
                r = getattr(np, node.name)(a)
        memo[k] = r
        return r

    r = ev(e)
    if np.ndim(r) == 0:
        return float(r)
    return np.broadcast_to(r, x.shape[1:]).astype(float)


def _fmt_point(x: np.ndarray):
    return x.tolist() if x.ndim == 1 else f"batch of shape {x.shape}"


_NP_NAME = {"exp": "_np.exp", "ln": "_np.log", "sin": "_np.sin", "cos": "_np.cos"}


def lambdify(exprs: Sequence[Expr]) -> Callable[[np.ndarray], np.ndarray]:
    """Compile expressions into one function ``f(x) -> array`` of their values.

    Structurally equal subtrees are computed once.  ``x`` may be a single
    point ``(n,)`` or a batch ``(n, m)``; the result has shape
    ``(len(exprs),) + x.shape[1:]``.  Non-finite intermediate results fall
    back to :func:`evaluate`, which raises a :class:`DomainError`.
    """
    exprs = [as_expr(e) for e in exprs]
    names: dict[Expr, str] = {}
    lines: list[str] = []

    def emit(node: Expr) -> str:
        if isinstance(node, Const):
            return repr(node.value)
        if isinstance(node, Var):
            return f"x[{node.index}]"
        name = names.get(node)
        if name is not None:
            return name
        if isinstance(node, _Binary):
            op = {"+": "+", "-": "-", "*": "*", "/": "/"}[node.tag]
            src = f"({emit(node.a)} {op} {emit(node.b)})"
        elif isinstance(node, Neg):
            src = f"(-{emit(node.a)})"
        elif isinstance(node, Pow):
            src = f"({emit(node.a)} ** {node.n})"
        else:
            src = f"{_NP_NAME[node.name]}({emit(node.a)})"
        name = f"t{len(names)}"
        names[node] = name
        lines.append(f"    {name} = {src}")
        return name

    outs = [emit(e) for e in exprs]
    body = "\n".join(lines)
    src = f"def _f(x):\n{body}\n    return ({', '.join(outs)},)\n"
    scope: dict = {"_np": np}
    exec(src, scope)
    raw = scope["_f"]
    n_out = len(exprs)

    def f(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(all="ignore"):
            vals = raw(x)
        shape = x.shape[1:]
        out = np.empty((n_out,) + shape)
        for k, v in enumerate(vals):
            out[k] = v
        if not np.all(np.isfinite(out)):
            with np.errstate(all="ignore"):
                for e in exprs:
                    evaluate(e, x)
            raise FloatingPointError("non-finite value while evaluating compiled expressions")
        return out

    f.source = src
    return f


# -- printing ---------------------------------------------------------------

def _num_text(v: float) -> str:
    if v != v or v in (math.inf, -math.inf):
        raise ValueError("non-finite constants have no text form")
    s = repr(abs(v))
    return s if v >= 0 else f"(-{s})"


def to_text(e: Expr) -> str:
    """Render in the grammar of :func:`parse`; the output re-parses to an equal value."""
    if isinstance(e, Const):
        return _num_text(e.value)
    if isinstance(e, Var):
        return f"x{e.index + 1}"
    if isinstance(e, Add):
        return f"{to_text(e.a)} + {_wrap_sum(e.b)}"
    if isinstance(e, Sub):
        return f"{to_text(e.a)} - {_wrap_sum(e.b)}"
    if isinstance(e, Mul):
        return f"{_wrap_prod(e.a)}*{_wrap_prod(e.b, right=True)}"
    if isinstance(e, Div):
        return f"{_wrap_prod(e.a)}/{_wrap_prod(e.b, right=True)}"
    if isinstance(e, Neg):
        return f"-{_wrap_atom(e.a)}"
    if isinstance(e, Pow):
        return f"{_wrap_atom(e.a)}^{e.n}"
    return f"{e.name}({to_text(e.a)})"


def _wrap_sum(e: Expr) -> str:
    s = to_text(e)
    return f"({s})" if isinstance(e, (Add, Sub)) else s


def _wrap_prod(e: Expr, right: bool = False) -> str:
    s = to_text(e)
    if isinstance(e, (Add, Sub)) or (right and isinstance(e, (Mul, Div))):
        return f"({s})"
    if isinstance(e, Neg):
        return f"({s})"
    return s


def _wrap_atom(e: Expr) -> str:
    if isinstance(e, (Var, Func)) or (isinstance(e, Const) and e.value >= 0):
        return to_text(e)
    return f"({to_text(e)})"


# -- parsing ----------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>x\d)|(?P<func>exp|ln|sin|cos)(?=\s*\()|(?P<op>[-+*/^()]))"
)


class _Parser:
    def __init__(self, text: str, dim: int | None):
        self.text = text
        self.dim = dim
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        n = len(text)
        while pos < n:
            if text[pos].isspace():
                pos += 1
                continue
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                raise ParseError(f"unexpected character {text[pos]!r}", pos)
            kind = m.lastgroup
            start = m.start(kind)
            self.tokens.append((kind, m.group(kind), start))
            pos = m.end()
        self.tokens.append(("end", "", n))
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.take()
        if val != value or kind != "op":
            what = "end of input" if kind == "end" else repr(val)
            raise ParseError(f"expected {value!r}, found {what}", pos)

    def parse(self) -> Expr:
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {val!r}", pos)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            e = add(e, rhs) if op == "+" else sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.factor()
            e = mul(e, rhs) if op == "*" else div(e, rhs)
        return e

    def factor(self) -> Expr:
        negate = False
        if self.peek()[:2] == ("op", "-"):
            self.take()
            negate = True
        e = self.base()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            kind, val, pos = self.take()
            if kind != "num" or not val.isdigit():
                raise ParseError("exponent must be a non-negative integer literal", pos)
            e = power(e, int(val))
        return neg(e) if negate else e

    def base(self) -> Expr:
        kind, val, pos = self.take()
        if kind == "num":
            return Const(float(val))
        if kind == "ident":
            k = int(val[1:])
            if k < 1 or (self.dim is not None and k > self.dim):
                rng = "x1..x{}".format(self.dim) if self.dim else "x1.."
                raise ParseError(f"coordinate {val} outside chart range {rng}", pos)
            return Var(k - 1)
        if kind == "func":
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            return func(val, arg)
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "end":
            raise ParseError("unexpected end of input", pos)
        raise ParseError(f"unexpected token {val!r}", pos)


_IDENT_WORD = re.compile(r"[A-Za-z_]\w*")


def parse(text: str, dim: int | None = None) -> Expr:
    """Parse ``text`` into an expression over coordinates ``x1..x{dim}``.

    >>> evaluate(parse("x1*x3"), [1.0, 0.0, 2.0, 0.0])
    2.0
    """
    for m in _IDENT_WORD.finditer(text):
        word = m.group()
        if word in FUNCS or re.fullmatch(r"x\d", word):
            continue
        # allow numeric exponents such as 1e-3 which the word scan catches as "e"
        if re.fullmatch(r"[eE]\d*", word) and m.start() > 0 and (text[m.start() - 1].isdigit() or text[m.start() - 1] == "."):
            continue
        raise ParseError(f"unknown identifier {word!r}", m.start())
    return _Parser(text, dim).parse()


def parse_many(texts: Iterable[str], dim: int | None = None) -> list[Expr]:
    return [parse(t, dim) for t in texts]
