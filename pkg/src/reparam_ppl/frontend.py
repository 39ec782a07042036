"""Parser, pretty-printer and validator for the source probabilistic language.

A file holds zero-argument model definitions::

    def majority():
      theta = uniform(0, 1)
      X = bernoulli(theta)
      return (theta, X)

Each body line is a sample (`v = DIST(args)`), a deterministic let
(`v = expr`), a destructuring call (`[a, b] = other()`) or the final
`return (v1, ..., vk)`. Numeric literals become exact fractions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

from .errors import DuplicateModel, EmptyProgram, ParseError, UnknownDistribution, ValidationError
from .expr import (
    BinOp, Compare, Cond, Const, Expr, Neg, Pair, Proj, Var, balanced, free_vars, format_expr, walk,
)

DISTRIBUTIONS = {"uniform": 2, "bernoulli": 1, "normal": 2}
# Lean-side keywords are reserved too so emitted text stays parseable.
KEYWORDS = {"def", "return", "if", "else", "fst", "snd", "let", "in", "then", "lemma", "by", "fun"}


@dataclass(frozen=True)
class DistCall:
    dist: str
    args: tuple


@dataclass(frozen=True)
class SampleStmt:
    var: str
    call: DistCall
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class LetStmt:
    var: str
    expr: Expr
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class CallStmt:
    vars: tuple
    callee: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ReturnStmt:
    vars: tuple
    line: int = field(default=0, compare=False)


Stmt = Union[SampleStmt, LetStmt, CallStmt, ReturnStmt]


@dataclass(frozen=True)
class Model:
    name: str
    stmts: tuple
    line: int = field(default=0, compare=False)

    @property
    def body(self) -> tuple:
        return self.stmts[:-1]

    @property
    def result(self) -> tuple:
        return self.stmts[-1].vars

    def samples(self) -> list[SampleStmt]:
        return [s for s in self.stmts if isinstance(s, SampleStmt)]

    def calls(self) -> list[CallStmt]:
        return [s for s in self.stmts if isinstance(s, CallStmt)]


# -- tokenizer -----------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t]+)
  | (?P<num>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<op>==|!=|<=|>=|[-+*/<>()\[\],.:=])
""", re.VERBOSE)


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize_line(text: str, lineno: int, start: int = 0) -> list[Token]:
    toks = []
    pos = start
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", lineno, pos + 1)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(Token(kind, m.group(), lineno, pos + 1))
        pos = m.end()
    toks.append(Token("eol", "", lineno, len(text) + 1))
    return toks


# inside an expression a single `=` can only mean equality
_COMPARE_TOKENS = {"=": "==", "==": "==", "!=": "!=", "<": "<", "<=": "<=", ">": ">", ">=": ">="}


class _LineParser:
    def __init__(self, toks: list[Token]):
        self.toks = toks
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def next(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("op", "name")

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}")
        return self.next()

    def fail(self, msg: str):
        t = self.tok
        found = "end of line" if t.kind == "eol" else repr(t.text)
        raise ParseError(f"{msg}, found {found}", t.line, t.col)

    def name(self) -> str:
        t = self.tok
        if t.kind != "name" or t.text in KEYWORDS:
            self.fail("expected identifier")
        return self.next().text

    def end(self):
        if self.tok.kind != "eol":
            self.fail("expected end of line")

    # expression grammar, lowest precedence first
    def expr(self) -> Expr:
        e = self.compare()
        if self.at("if"):
            self.next()
            test = self.compare()
            self.expect("else")
            return Cond(test, e, self.expr())
        return e

    def compare(self) -> Expr:
        e = self.additive()
        if self.tok.kind == "op" and self.tok.text in _COMPARE_TOKENS:
            op = _COMPARE_TOKENS[self.next().text]
            e = Compare(op, e, self.additive())
            if self.tok.kind == "op" and self.tok.text in _COMPARE_TOKENS:
                self.fail("chained comparisons are not supported")
        return e

    def additive(self) -> Expr:
        e = self.multiplicative()
        while self.tok.kind == "op" and self.tok.text in ("+", "-"):
            op = self.next().text
            e = BinOp(op, e, self.multiplicative())
        return e

    def multiplicative(self) -> Expr:
        e = self.unary()
        while self.tok.kind == "op" and self.tok.text in ("*", "/"):
            op = self.next().text
            rhs = self.unary()
            if op == "/" and isinstance(e, Const) and isinstance(rhs, Const):
                # fraction literal
                if rhs.value == 0:
                    raise ParseError("division by zero in literal", self.tok.line, self.tok.col)
                e = Const(e.value / rhs.value)
            else:
                e = BinOp(op, e, rhs)
        return e

    def unary(self) -> Expr:
        if self.at("-"):
            self.next()
            arg = self.unary()
            return Const(-arg.value) if isinstance(arg, Const) else Neg(arg)
        return self.postfix()

    def postfix(self) -> Expr:
        e = self.atom()
        while self.at("."):
            self.next()
            t = self.tok
            if t.text not in ("fst", "snd"):
                self.fail("expected fst or snd")
            self.next()
            e = Proj(e, 0 if t.text == "fst" else 1)
        return e

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.next()
            return Const(Fraction(t.text))
        if t.kind == "name" and t.text not in KEYWORDS:
            self.next()
            if self.at("("):
                self.fail(f"function calls are not expressions (`{t.text}`)")
            return Var(t.text)
        if self.at("("):
            self.next()
            first = self.expr()
            if self.at(","):
                self.next()
                second = self.expr()
                self.expect(")")
                return Pair(first, second)
            self.expect(")")
            return first
        self.fail("expected expression")


def _name_list(p: _LineParser, close: str) -> tuple:
    names = [p.name()]
    while p.at(","):
        p.next()
        names.append(p.name())
    p.expect(close)
    return tuple(names)


def _parse_stmt(toks: list[Token]) -> Stmt:
    p = _LineParser(toks)
    line = toks[0].line
    if p.at("return"):
        p.next()
        if p.at("("):
            p.next()
            names = _name_list(p, ")")
        else:
            names = (p.name(),)
        p.end()
        return ReturnStmt(names, line)
    if p.at("["):
        p.next()
        names = _name_list(p, "]")
        p.expect("=")
        callee = p.name()
        p.expect("(")
        p.expect(")")
        p.end()
        return CallStmt(names, callee, line)
    var = p.name()
    p.expect("=")
    t = p.tok
    if t.kind == "name" and p.toks[p.i + 1].text == "(":
        if t.text not in DISTRIBUTIONS:
            raise UnknownDistribution(f"unknown distribution `{t.text}`", t.line, t.col)
        p.next()
        p.next()
        args = []
        if not p.at(")"):
            args.append(p.expr())
            while p.at(","):
                p.next()
                args.append(p.expr())
        p.expect(")")
        p.end()
        return SampleStmt(var, DistCall(t.text, tuple(args)), line)
    e = p.expr()
    p.end()
    return LetStmt(var, e, line)


def parse_program(text: str) -> list[Model]:
    """Parse every model in `text`, in file order."""
    models: list[Model] = []
    seen: dict[str, int] = {}
    current = None
    body_indent = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip(" \t"))
        if indent == 0:
            toks = tokenize_line(line, lineno)
            p = _LineParser(toks)
            p.expect("def")
            name = p.name()
            p.expect("(")
            p.expect(")")
            p.expect(":")
            p.end()
            if name in seen:
                raise DuplicateModel(f"duplicate model `{name}` (first defined on line {seen[name]})",
                                     lineno, 5)
            seen[name] = lineno
            if current is not None:
                models.append(_finish(current))
            current = (name, [], lineno)
            body_indent = None
            continue
        if current is None:
            raise ParseError("statement outside a model definition", lineno, indent + 1)
        if body_indent is None:
            body_indent = indent
        elif indent != body_indent:
            raise ParseError("inconsistent indentation", lineno, indent + 1)
        stmts = current[1]
        if stmts and isinstance(stmts[-1], ReturnStmt):
            raise ParseError("statement after return", lineno, indent + 1)
        stmts.append(_parse_stmt(tokenize_line(line, lineno, indent)))
    if current is not None:
        models.append(_finish(current))
    if not models:
        raise EmptyProgram("no models found")
    return models


def _finish(current) -> Model:
    name, stmts, lineno = current
    if not stmts or not isinstance(stmts[-1], ReturnStmt):
        raise ParseError(f"model `{name}` has no return statement", lineno, 1)
    return Model(name, tuple(stmts), lineno)


# -- pretty printing -----------------------------------------------------------

def format_stmt(s: Stmt) -> str:
    if isinstance(s, SampleStmt):
        args = ", ".join(format_expr(a) for a in s.call.args)
        return f"{s.var} = {s.call.dist}({args})"
    if isinstance(s, LetStmt):
        return f"{s.var} = {format_expr(s.expr)}"
    if isinstance(s, CallStmt):
        return f"[{', '.join(s.vars)}] = {s.callee}()"
    return f"return ({', '.join(s.vars)})"


def format_model(m: Model, indent: str = "  ") -> str:
    lines = [f"def {m.name}():"] + [indent + format_stmt(s) for s in m.stmts]
    return "\n".join(lines) + "\n"


def format_program(models: list[Model]) -> str:
    return "\n".join(format_model(m) for m in models)


# -- validation ----------------------------------------------------------------

REAL, INT = "real", "int"


def _is_scalar(t) -> bool:
    return t in (REAL, INT)


def format_type(t) -> str:
    if isinstance(t, tuple):
        return f"({format_type(t[0])} × {format_type(t[1])})"
    return t


INF = float("inf")


def _imul(a, b):
    return 0 if a == 0 or b == 0 else a * b


class Interval:
    """Closed range of possible values; used only to reject division by zero."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi):
        self.lo, self.hi = lo, hi

    def __add__(self, o):
        return Interval(self.lo + o.lo, self.hi + o.hi)

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __sub__(self, o):
        return self + (-o)

    def __mul__(self, o):
        ps = [_imul(a, b) for a in (self.lo, self.hi) for b in (o.lo, o.hi)]
        return Interval(min(ps), max(ps))

    def contains_zero(self) -> bool:
        return self.lo <= 0 <= self.hi

    def hull(self, o):
        return Interval(min(self.lo, o.lo), max(self.hi, o.hi))

    def __truediv__(self, o):
        inv = Interval(1 / o.hi if o.hi not in (INF, -INF) else 0,
                       1 / o.lo if o.lo not in (INF, -INF) else 0)
        return self * inv


UNBOUNDED = Interval(-INF, INF)
UNIT = Interval(0, 1)


@dataclass
class ModelInfo:
    model: Model
    types: dict
    ranges: dict
    result_type: object
    callees: list


@dataclass
class ValidatedProgram:
    models: list
    order: list          # topological: callees before callers
    info: dict
    edges: list          # (caller, callee), one per call site

    def __getitem__(self, name: str) -> Model:
        return self.info[name].model

    def __contains__(self, name: str) -> bool:
        return name in self.info

    @property
    def by_name(self) -> dict:
        return {n: i.model for n, i in self.info.items()}


def _verr(msg: str, code: str, line: int = 0) -> ValidationError:
    return ValidationError(msg, line, 1 if line else 0, code=code)


def validate(models: list[Model]) -> ValidatedProgram:
    """Check scoping, call graph, arities and types; return the checked program."""
    by_name = {}
    for m in models:
        if m.name in by_name:
            raise _verr(f"duplicate model `{m.name}`", "E_DUP", m.line)
        by_name[m.name] = m
    edges = []
    for m in models:
        for c in m.calls():
            if c.callee not in by_name:
                raise _verr(f"call to unknown model `{c.callee}`", "E_CALLEE", c.line)
            edges.append((m.name, c.callee))
    order = _toposort(models, edges)
    info: dict[str, ModelInfo] = {}
    for name in order:
        info[name] = _check_model(by_name[name], info)
    return ValidatedProgram(list(models), order, info, edges)


def _toposort(models, edges) -> list[str]:
    graph = {m.name: [] for m in models}
    for a, b in edges:
        graph[a].append(b)
    state: dict[str, int] = {}
    order: list[str] = []
    lines = {m.name: m.line for m in models}

    def visit(n, stack):
        st = state.get(n)
        if st == 2:
            return
        if st == 1:
            cyc = stack[stack.index(n):] + [n]
            raise _verr("cyclic call graph: " + " -> ".join(cyc), "E_CYCLE", lines[n])
        state[n] = 1
        for c in graph[n]:
            visit(c, stack + [n])
        state[n] = 2
        order.append(n)

    for m in models:
        visit(m.name, [])
    return order


def _check_model(m: Model, done: dict) -> ModelInfo:
    types: dict[str, object] = {}
    ranges: dict[str, object] = {}

    def define(var, line):
        if var in types:
            raise _verr(f"`{var}` is assigned more than once", "E_REASSIGN", line)

    for s in m.body:
        if isinstance(s, ReturnStmt):
            raise _verr("return must be the final statement", "E_SYNTAX", s.line)
        if isinstance(s, SampleStmt):
            define(s.var, s.line)
            want = DISTRIBUTIONS[s.call.dist]
            if len(s.call.args) != want:
                raise _verr(f"{s.call.dist} takes {want} argument(s), got {len(s.call.args)}",
                            "E_ARITY", s.line)
            for a in s.call.args:
                t = _type_of(a, types, s.line)
                if not _is_scalar(t):
                    raise _verr(f"{s.call.dist} parameter must be a number, got {format_type(t)}",
                                "E_TYPE", s.line)
                _range_of(a, ranges, s.line)
            if s.call.dist == "bernoulli":
                types[s.var], ranges[s.var] = INT, UNIT
            elif s.call.dist == "uniform":
                lo = _range_of(s.call.args[0], ranges, s.line)
                hi = _range_of(s.call.args[1], ranges, s.line)
                types[s.var], ranges[s.var] = REAL, Interval(lo.lo, hi.hi)
            else:
                types[s.var], ranges[s.var] = REAL, UNBOUNDED
        elif isinstance(s, LetStmt):
            t = _type_of(s.expr, types, s.line)
            r = _range_of(s.expr, ranges, s.line)
            define(s.var, s.line)
            types[s.var], ranges[s.var] = t, r
        elif isinstance(s, CallStmt):
            if s.callee == m.name:
                raise _verr(f"cyclic call graph: {m.name} -> {m.name}", "E_CYCLE", s.line)
            callee = done[s.callee]
            n = len(callee.model.result)
            if len(s.vars) != n:
                raise _verr(f"arity mismatch: `{s.callee}` returns {n} value(s), "
                            f"{len(s.vars)} destructured", "E_ARITY", s.line)
            for v, rv in zip(s.vars, callee.model.result):
                define(v, s.line)
                types[v] = callee.types[rv]
                ranges[v] = callee.ranges[rv]
    ret = m.stmts[-1]
    for v in ret.vars:
        if v not in types:
            raise _verr(f"`{v}` used before definition", "E_UNDEF", ret.line)
    rtype = balanced([types[v] for v in ret.vars])
    return ModelInfo(m, types, ranges, rtype, [c.callee for c in m.calls()])


def _type_of(e: Expr, types: dict, line: int):
    if isinstance(e, Const):
        return INT if e.value.denominator == 1 else REAL
    if isinstance(e, Var):
        if e.name not in types:
            raise _verr(f"`{e.name}` used before definition", "E_UNDEF", line)
        return types[e.name]
    if isinstance(e, Neg):
        t = _type_of(e.arg, types, line)
        _need_scalar(t, "-", line)
        return t
    if isinstance(e, BinOp):
        a, b = _type_of(e.left, types, line), _type_of(e.right, types, line)
        _need_scalar(a, e.op, line)
        _need_scalar(b, e.op, line)
        if e.op == "/":
            return REAL
        return INT if a == b == INT else REAL
    if isinstance(e, Compare):
        for t in (_type_of(e.left, types, line), _type_of(e.right, types, line)):
            _need_scalar(t, e.op, line)
        return INT
    if isinstance(e, Cond):
        tt = _type_of(e.test, types, line)
        if tt != INT:
            raise _verr(f"condition must be an integer-coded boolean, got {format_type(tt)}",
                        "E_TYPE", line)
        a, b = _type_of(e.then, types, line), _type_of(e.orelse, types, line)
        if _is_scalar(a) and _is_scalar(b):
            return INT if a == b == INT else REAL
        if a != b:
            raise _verr(f"conditional branches disagree: {format_type(a)} vs {format_type(b)}",
                        "E_TYPE", line)
        return a
    if isinstance(e, Pair):
        return (_type_of(e.left, types, line), _type_of(e.right, types, line))
    if isinstance(e, Proj):
        t = _type_of(e.arg, types, line)
        if not isinstance(t, tuple):
            raise _verr(f"projection of non-pair value of type {format_type(t)}", "E_TYPE", line)
        return t[e.index]
    raise _verr(f"unsupported expression {e!r}", "E_SYNTAX", line)


def type_of(e: Expr, types: dict):
    """Type of `e` given variable types: "real", "int" or a pair of types."""
    return _type_of(e, types, 0)


def _need_scalar(t, op, line):
    if not _is_scalar(t):
        raise _verr(f"operator {op} needs numbers, got {format_type(t)}", "E_TYPE", line)


def _range_of(e: Expr, ranges: dict, line: int):
    if isinstance(e, Const):
        return Interval(e.value, e.value)
    if isinstance(e, Var):
        return ranges[e.name]
    if isinstance(e, Neg):
        r = _range_of(e.arg, ranges, line)
        return -r if isinstance(r, Interval) else r
    if isinstance(e, BinOp):
        a, b = _range_of(e.left, ranges, line), _range_of(e.right, ranges, line)
        if e.op == "/":
            if b.contains_zero():
                raise _verr(f"divisor `{format_expr(e.right)}` may be zero", "E_DIV", line)
            return a / b
        return {"+": a.__add__, "-": a.__sub__, "*": a.__mul__}[e.op](b)
    if isinstance(e, Compare):
        _range_of(e.left, ranges, line)
        _range_of(e.right, ranges, line)
        return UNIT
    if isinstance(e, Cond):
        _range_of(e.test, ranges, line)
        a, b = _range_of(e.then, ranges, line), _range_of(e.orelse, ranges, line)
        if isinstance(a, Interval) and isinstance(b, Interval):
            return a.hull(b)
        return a if a == b else _merge_tree(a, b)
    if isinstance(e, Pair):
        return (_range_of(e.left, ranges, line), _range_of(e.right, ranges, line))
    if isinstance(e, Proj):
        return _range_of(e.arg, ranges, line)[e.index]
    return UNBOUNDED


def _merge_tree(a, b):
    if isinstance(a, Interval):
        return a.hull(b)
    return (_merge_tree(a[0], b[0]), _merge_tree(a[1], b[1]))


def load_program(text: str) -> ValidatedProgram:
    return validate(parse_program(text))


__all__ = [
    "DISTRIBUTIONS", "DistCall", "SampleStmt", "LetStmt", "CallStmt", "ReturnStmt", "Model",
    "parse_program", "validate", "load_program", "format_program", "format_model",
    "ValidatedProgram", "ModelInfo", "REAL", "INT", "free_vars", "walk",
]
