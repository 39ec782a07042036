"""Expression trees shared by the source language and the pure target IR.

All nodes are frozen dataclasses, so structurally equal expressions compare
and hash equal. That property is what common-subexpression elimination and
certificate checking are built on.

Source programs only use Const, Var, Neg, BinOp, Compare, Cond, Pair and
Proj. The translator additionally introduces Input (the function's
parameter), Gen (a generator applied to a uniform draw) and Call (a
non-hoisted call to a previously translated function). Apply exists so that
hand-built IR can contain primitives outside the certified fragment.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Union

ARITH_OPS = ("+", "-", "*", "/")
COMPARE_OPS = ("==", "!=", "<", "<=", ">", ">=")
PROJ_NAMES = ("fst", "snd")


@dataclass(frozen=True)
class Const:
    value: Fraction


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Compare:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Cond:
    test: "Expr"
    then: "Expr"
    orelse: "Expr"


@dataclass(frozen=True)
class Pair:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Proj:
    arg: "Expr"
    index: int  # 0 = fst, 1 = snd


@dataclass(frozen=True)
class Input:
    pass


@dataclass(frozen=True)
class Gen:
    dist: str
    params: tuple
    u: "Expr"


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Expr"


@dataclass(frozen=True)
class Apply:
    fn: str
    args: tuple


Expr = Union[Const, Var, Neg, BinOp, Compare, Cond, Pair, Proj, Input, Gen, Call, Apply]


def const(x) -> Const:
    return Const(Fraction(x))


def children(e: Expr) -> tuple:
    if isinstance(e, (Const, Var, Input)):
        return ()
    if isinstance(e, (Neg, Proj)):
        return (e.arg,)
    if isinstance(e, (BinOp, Compare)):
        return (e.left, e.right)
    if isinstance(e, Cond):
        return (e.test, e.then, e.orelse)
    if isinstance(e, Pair):
        return (e.left, e.right)
    if isinstance(e, Gen):
        return (*e.params, e.u)
    if isinstance(e, Call):
        return (e.arg,)
    if isinstance(e, Apply):
        return tuple(e.args)
    raise TypeError(f"not an expression: {e!r}")


def rebuild(e: Expr, kids: tuple) -> Expr:
    """Return `e` with its children replaced by `kids` (same arity)."""
    if isinstance(e, (Const, Var, Input)):
        return e
    if isinstance(e, Neg):
        return Neg(kids[0])
    if isinstance(e, Proj):
        return Proj(kids[0], e.index)
    if isinstance(e, BinOp):
        return BinOp(e.op, kids[0], kids[1])
    if isinstance(e, Compare):
        return Compare(e.op, kids[0], kids[1])
    if isinstance(e, Cond):
        return Cond(*kids)
    if isinstance(e, Pair):
        return Pair(*kids)
    if isinstance(e, Gen):
        return Gen(e.dist, tuple(kids[:-1]), kids[-1])
    if isinstance(e, Call):
        return Call(e.fn, kids[0])
    if isinstance(e, Apply):
        return Apply(e.fn, tuple(kids))
    raise TypeError(f"not an expression: {e!r}")


def transform(e: Expr, fn: Callable[[Expr], Expr | None]) -> Expr:
    """Top-down rewrite: `fn` may return a replacement, or None to recurse."""
    out = fn(e)
    if out is not None:
        return out
    kids = children(e)
    if not kids:
        return e
    return rebuild(e, tuple(transform(k, fn) for k in kids))


def walk(e: Expr) -> Iterator[Expr]:
    yield e
    for k in children(e):
        yield from walk(k)


def free_vars(e: Expr) -> set[str]:
    return {n.name for n in walk(e) if isinstance(n, Var)}


def substitute(e: Expr, env: dict[str, Expr]) -> Expr:
    return transform(e, lambda n: env.get(n.name, n) if isinstance(n, Var) else None)


def proj_path(e: Expr) -> tuple[Expr, tuple[int, ...]]:
    """Split a projection chain into (base, path). `u.fst.snd` -> (u, (0, 1))."""
    path: list[int] = []
    while isinstance(e, Proj):
        path.append(e.index)
        e = e.arg
    return e, tuple(reversed(path))


def project(base: Expr, path) -> Expr:
    for i in path:
        base = Proj(base, i)
    return base


def balanced(items: list):
    """Nest a non-empty list into a balanced binary tree of pairs.

    Return tuples use this layout: (a, b) stays flat and (a, b, c, d)
    becomes ((a, b), (c, d)).
    """
    if not items:
        raise ValueError("empty tuple")
    if len(items) == 1:
        return items[0]
    mid = (len(items) + 1) // 2
    return (balanced(items[:mid]), balanced(items[mid:]))


def balanced_paths(n: int) -> list[tuple[int, ...]]:
    """Projection paths to the leaves of `balanced` over n items, in order."""
    if n == 1:
        return [()]
    mid = (n + 1) // 2
    return [(0, *p) for p in balanced_paths(mid)] + [(1, *p) for p in balanced_paths(n - mid)]


def balanced_expr(items: list[Expr]) -> Expr:
    def build(t):
        return Pair(build(t[0]), build(t[1])) if isinstance(t, tuple) else t
    return build(balanced(items))


# -- rendering ---------------------------------------------------------------

_LEVEL_COND, _LEVEL_CMP, _LEVEL_ADD, _LEVEL_MUL, _LEVEL_NEG, _LEVEL_POSTFIX, _LEVEL_ATOM = range(7)
_OP_LEVEL = {"+": _LEVEL_ADD, "-": _LEVEL_ADD, "*": _LEVEL_MUL, "/": _LEVEL_MUL}


def format_fraction(q: Fraction, decimal: bool = False) -> str:
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    if decimal:
        d = q.denominator
        while d % 2 == 0:
            d //= 2
        while d % 5 == 0:
            d //= 5
        if d == 1:
            return _decimal_str(q)
    return f"{q.numerator}/{q.denominator}"


def _decimal_str(q: Fraction) -> str:
    sign = "-" if q < 0 else ""
    q = abs(q)
    whole, rem = divmod(q.numerator, q.denominator)
    digits = []
    while rem:
        rem *= 10
        d, rem = divmod(rem, q.denominator)
        digits.append(str(d))
    return f"{sign}{whole}." + "".join(digits)


class Printer:
    """Precedence-aware renderer.

    `style="source"` prints the Python-like surface syntax; `style="lean"`
    prints conditionals as `if c then a else b` and generators with the
    `gen_` prefix. `names` overrides how Input is printed.
    """

    def __init__(self, style: str = "source", input_name: str = "u", decimal: bool = False,
                 fn_names: Callable[[str], str] | None = None):
        self.style = style
        self.input_name = input_name
        self.decimal = decimal
        self.fn_names = fn_names or (lambda s: s)

    def __call__(self, e: Expr) -> str:
        return self.fmt(e)[0]

    def fmt(self, e: Expr) -> tuple[str, int]:
        if isinstance(e, Const):
            s = format_fraction(e.value, self.decimal)
            if "/" in s:
                return s, _LEVEL_MUL
            if s.startswith("-"):
                return s, _LEVEL_NEG
            return s, _LEVEL_ATOM
        if isinstance(e, Var):
            return e.name, _LEVEL_ATOM
        if isinstance(e, Input):
            return self.input_name, _LEVEL_ATOM
        if isinstance(e, Neg):
            return "-" + self.sub(e.arg, _LEVEL_NEG), _LEVEL_NEG
        if isinstance(e, BinOp):
            lvl = _OP_LEVEL[e.op]
            return f"{self.sub(e.left, lvl)} {e.op} {self.sub(e.right, lvl + 1)}", lvl
        if isinstance(e, Compare):
            return f"{self.sub(e.left, _LEVEL_CMP + 1)} {e.op} {self.sub(e.right, _LEVEL_CMP + 1)}", _LEVEL_CMP
        if isinstance(e, Cond):
            if self.style == "lean":
                return (f"if {self(e.test)} then {self(e.then)} else {self(e.orelse)}", _LEVEL_COND)
            return (f"{self.sub(e.then, _LEVEL_CMP)} if {self.sub(e.test, _LEVEL_CMP)} else "
                    f"{self.sub(e.orelse, _LEVEL_COND)}", _LEVEL_COND)
        if isinstance(e, Pair):
            return f"({self(e.left)},{self(e.right)})", _LEVEL_ATOM
        if isinstance(e, Proj):
            return f"{self.sub(e.arg, _LEVEL_POSTFIX)}.{PROJ_NAMES[e.index]}", _LEVEL_POSTFIX
        if isinstance(e, Gen):
            args = ",".join(self(a) for a in (*e.params, e.u))
            return f"gen_{e.dist}({args})", _LEVEL_ATOM
        if isinstance(e, Call):
            return f"{self.fn_names(e.fn)}({self(e.arg)})", _LEVEL_ATOM
        if isinstance(e, Apply):
            return f"{e.fn}({','.join(self(a) for a in e.args)})", _LEVEL_ATOM
        raise TypeError(f"not an expression: {e!r}")

    def sub(self, e: Expr, need: int) -> str:
        s, lvl = self.fmt(e)
        return s if lvl >= need else f"({s})"


def format_expr(e: Expr, style: str = "source", **kw) -> str:
    return Printer(style, **kw)(e)
