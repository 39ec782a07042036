"""Executable meanings for source models and translated functions.

* `run_sampler` runs a source model, feeding each sample statement the next
  entry of a uniform stream (quantile coupling).
* `eval_pure` / `eval_pure_batch` evaluate a translated function on one input
  vector or a batch of them.
* `giry_enumerate` interprets a finite-support model in the probability monad:
  `bind` is a weighted sum over the support, `ret` a point mass.
* `pushforward_exact` computes the Lebesgue measure of the inputs that land in
  an event, keeping continuous draws as exact polynomials.
* `mc_probability` estimates event probabilities from counter-based streams.

Stream order contract (shared with the translator): callees consume their
draws first, in call order and recursively; then the model's own sample
statements consume theirs in source order.
"""

from __future__ import annotations

import math
import re
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Callable, Iterable, Iterator, Mapping

import numpy as np

from . import rng
from .dist import BATCH_GENERATORS, apply_generator
from .errors import (
    DomainError, EventSyntaxError, NonFiniteSupport, PPLError, ShapeMismatch, StreamExhausted,
    UnsupportedStructure,
)
from .expr import (
    Apply, BinOp, Call, Compare, Cond, Const, Expr, Gen, Input, Neg, Pair, Proj, Var, balanced,
    balanced_paths, children, format_fraction, proj_path, walk,
)
from .frontend import CallStmt, LetStmt, Model, ReturnStmt, SampleStmt
from .ir import ModelLeaf, PureFn, ShapePair, UniformLeaf, UnitShape, demand
from .poly import Poly

_APPLY = {"floor": math.floor, "abs": abs, "min": min, "max": max}


# -- values ------------------------------------------------------------------------

def format_value(v) -> str:
    if isinstance(v, tuple):
        return "(" + ",".join(format_value(x) for x in v) + ")"
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, Fraction):
        return format_fraction(v)
    if isinstance(v, Poly):
        return f"<{v!r}>"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return repr(v)


def parse_value(text: str):
    text = text.strip()
    pos = 0

    def parse():
        nonlocal pos
        if text[pos] == "(":
            pos += 1
            items = [parse()]
            while text[pos] == ",":
                pos += 1
                items.append(parse())
            if text[pos] != ")":
                raise ValueError(f"bad value {text!r}")
            pos += 1
            return tuple(items)
        m = re.compile(r"-?[0-9.eE+-]+(?:/[0-9]+)?").match(text, pos)
        if not m:
            raise ValueError(f"bad value {text!r}")
        pos = m.end()
        s = m.group()
        if "/" in s:
            return Fraction(s)
        try:
            return int(s)
        except ValueError:
            return float(s)

    v = parse()
    if pos != len(text):
        raise ValueError(f"trailing text in {text!r}")
    return v


def _flat(v) -> tuple:
    if isinstance(v, tuple):
        return tuple(x for item in v for x in _flat(item))
    return (v,)


def bitwise_equal(a, b) -> bool:
    """Same structure, same number kinds, identical float bit patterns."""
    if isinstance(a, tuple) or isinstance(b, tuple):
        return (isinstance(a, tuple) and isinstance(b, tuple) and len(a) == len(b)
                and all(map(bitwise_equal, a, b)))
    if type(a) is not type(b):
        return False
    if isinstance(a, float):
        return struct.pack("<d", a) == struct.pack("<d", b)
    return a == b


# -- scalar evaluation ----------------------------------------------------------------

def _div(a, b):
    if b == 0:
        raise DomainError("division by zero")
    if isinstance(a, int) and isinstance(b, int):
        return Fraction(a, b)
    return a / b


_ARITH = {"+": lambda a, b: a + b, "-": lambda a, b: a - b, "*": lambda a, b: a * b, "/": _div}
_CMP = {"==": lambda a, b: a == b, "!=": lambda a, b: a != b, "<": lambda a, b: a < b,
        "<=": lambda a, b: a <= b, ">": lambda a, b: a > b, ">=": lambda a, b: a >= b}


def eval_expr(e: Expr, env: Mapping, inp=None, table=None):
    """Evaluate one expression on plain Python numbers (exact where possible)."""
    try:
        rule = _RULES[type(e)]
    except KeyError:
        raise TypeError(f"not an expression: {e!r}") from None
    return rule(e, env, inp, table)


def _ev_proj(e, env, inp, table):
    v = eval_expr(e.arg, env, inp, table)
    if type(v) is not tuple or len(v) != 2:
        raise ShapeMismatch(f"projection of non-pair value {format_value(v)}")
    return v[e.index]


def _ev_cond(e, env, inp, table):
    if eval_expr(e.test, env, inp, table) != 0:
        return eval_expr(e.then, env, inp, table)
    return eval_expr(e.orelse, env, inp, table)


def _ev_call(e, env, inp, table):
    if table is None:
        raise PPLError(f"call to `{e.fn}` needs a translation table")
    return eval_pure(table.by_fn(e.fn).fn, eval_expr(e.arg, env, inp, table), table)


# dispatch on the exact node type; much cheaper than an isinstance chain
_RULES = {
    Const: lambda e, env, inp, table: (e.value.numerator if e.value.denominator == 1 else e.value),
    Var: lambda e, env, inp, table: env[e.name],
    Input: lambda e, env, inp, table: inp,
    BinOp: lambda e, env, inp, table: _ARITH[e.op](eval_expr(e.left, env, inp, table),
                                                   eval_expr(e.right, env, inp, table)),
    Compare: lambda e, env, inp, table: int(_CMP[e.op](eval_expr(e.left, env, inp, table),
                                                       eval_expr(e.right, env, inp, table))),
    Neg: lambda e, env, inp, table: -eval_expr(e.arg, env, inp, table),
    Cond: _ev_cond,
    Pair: lambda e, env, inp, table: (eval_expr(e.left, env, inp, table),
                                      eval_expr(e.right, env, inp, table)),
    Proj: _ev_proj,
    Gen: lambda e, env, inp, table: apply_generator(
        e.dist, [eval_expr(p, env, inp, table) for p in e.params], eval_expr(e.u, env, inp, table)),
    Call: _ev_call,
    Apply: lambda e, env, inp, table: _APPLY[e.fn](*(eval_expr(a, env, inp, table) for a in e.args)),
}


class _Stream:
    def __init__(self, stream: Iterable):
        self.it = iter(stream)
        self.used = 0

    def take(self):
        try:
            u = next(self.it)
        except StopIteration:
            raise StreamExhausted(f"uniform stream exhausted after {self.used} draws") from None
        self.used += 1
        return u


def run_sampler(model: Model, stream, models: Mapping | None = None):
    """Run `model` forward, drawing uniforms from `stream` (see the order contract)."""
    src = stream if isinstance(stream, _Stream) else _Stream(stream)
    results = {}
    for k, c in enumerate(model.calls()):
        if models is None or c.callee not in models:
            raise PPLError(f"call to unknown model `{c.callee}`")
        results[k] = run_sampler(models[c.callee], src, models)
    env: dict = {}
    k = 0
    for s in model.stmts:
        if isinstance(s, SampleStmt):
            params = [eval_expr(a, env) for a in s.call.args]
            env[s.var] = apply_generator(s.call.dist, params, src.take())
        elif isinstance(s, LetStmt):
            env[s.var] = eval_expr(s.expr, env)
        elif isinstance(s, CallStmt):
            out = results[k]
            k += 1
            for v, path in zip(s.vars, balanced_paths(len(s.vars))):
                x = out
                for i in path:
                    x = x[i]
                env[v] = x
        elif isinstance(s, ReturnStmt):
            return balanced([env[v] for v in s.vars])
    raise PPLError(f"model `{model.name}` has no return")


_NUMBER = (int, float, Fraction)


def _conforms(v, shape) -> bool:
    if isinstance(shape, UniformLeaf):
        return type(v) in _NUMBER and 0 <= v <= 1
    if isinstance(shape, UnitShape):
        return v == ()
    if isinstance(shape, ShapePair):
        return isinstance(v, tuple) and len(v) == 2 and _conforms(v[0], shape.left) \
            and _conforms(v[1], shape.right)
    if isinstance(shape, ModelLeaf):
        return _conforms_type(v, shape.out_type)
    return False


def _conforms_type(v, t) -> bool:
    if isinstance(t, tuple):
        return isinstance(v, tuple) and len(v) == 2 and all(map(_conforms_type, v, t))
    return type(v) in _NUMBER


def eval_pure(fn: PureFn, v, table=None):
    """Evaluate a translated function on one input vector shaped like `fn.shape`."""
    if not _conforms(v, fn.shape):
        raise ShapeMismatch(f"input {format_value(v)} does not match the shape of {fn.name}")
    env: dict = {}
    for var, rhs in fn.bindings:
        env[var] = eval_expr(rhs, env, v, table)
    return eval_expr(fn.result, env, v, table)


def stream_vector(shape, stream, table=None):
    """Build an input vector from a flat uniform stream; ModelLeaf slots run the callee."""
    src = stream if isinstance(stream, _Stream) else _Stream(stream)
    if isinstance(shape, UniformLeaf):
        return src.take()
    if isinstance(shape, UnitShape):
        return ()
    if isinstance(shape, ShapePair):
        left = stream_vector(shape.left, src, table)
        return (left, stream_vector(shape.right, src, table))
    entry = table[shape.model]
    return eval_pure(entry.fn, stream_vector(entry.fn.shape, src, table), table)


# -- batch evaluation ---------------------------------------------------------------------

def _bmap(f, *xs):
    if isinstance(xs[0], tuple):
        return tuple(_bmap(f, *parts) for parts in zip(*xs))
    return f(*xs)


def _eval_batch(e: Expr, env: dict, inp, table):
    if isinstance(e, Const):
        return float(e.value)
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, Input):
        return inp
    if isinstance(e, BinOp):
        a, b = _eval_batch(e.left, env, inp, table), _eval_batch(e.right, env, inp, table)
        if e.op == "/":
            if np.any(np.asarray(b) == 0):
                raise DomainError("division by zero")
            return np.true_divide(a, b)
        return _ARITH[e.op](np.asarray(a), b)
    if isinstance(e, Compare):
        a, b = _eval_batch(e.left, env, inp, table), _eval_batch(e.right, env, inp, table)
        return np.asarray(_CMP[e.op](np.asarray(a), b)).astype(np.int64)
    if isinstance(e, Neg):
        return -np.asarray(_eval_batch(e.arg, env, inp, table))
    if isinstance(e, Cond):
        t = np.asarray(_eval_batch(e.test, env, inp, table)) != 0
        a, b = _eval_batch(e.then, env, inp, table), _eval_batch(e.orelse, env, inp, table)
        return _bmap(lambda x, y: np.where(t, x, y), a, b)
    if isinstance(e, Pair):
        return (_eval_batch(e.left, env, inp, table), _eval_batch(e.right, env, inp, table))
    if isinstance(e, Proj):
        v = _eval_batch(e.arg, env, inp, table)
        if not isinstance(v, tuple):
            raise ShapeMismatch("projection of non-pair value")
        return v[e.index]
    if isinstance(e, Gen):
        params = [_eval_batch(p, env, inp, table) for p in e.params]
        return BATCH_GENERATORS[e.dist](*params, _eval_batch(e.u, env, inp, table))
    if isinstance(e, Call):
        return eval_pure_batch(table.by_fn(e.fn).fn, _eval_batch(e.arg, env, inp, table), table)
    if isinstance(e, Apply):
        f = {"floor": np.floor, "abs": np.abs, "min": np.minimum, "max": np.maximum}[e.fn]
        return f(*(_eval_batch(a, env, inp, table) for a in e.args))
    raise TypeError(f"not an expression: {e!r}")


def eval_pure_batch(fn: PureFn, v, table=None):
    """Vectorised `eval_pure`: leaves of `v` are equal-length numpy arrays."""
    env: dict = {}
    with np.errstate(divide="ignore", invalid="ignore"):
        for var, rhs in fn.bindings:
            env[var] = _eval_batch(rhs, env, v, table)
        return _eval_batch(fn.result, env, v, table)


def batch_vector(shape, columns: Iterator, table=None):
    if isinstance(shape, UniformLeaf):
        return next(columns)
    if isinstance(shape, UnitShape):
        return ()
    if isinstance(shape, ShapePair):
        left = batch_vector(shape.left, columns, table)
        return (left, batch_vector(shape.right, columns, table))
    entry = table[shape.model]
    return eval_pure_batch(entry.fn, batch_vector(entry.fn.shape, columns, table), table)


# -- discrete measures ---------------------------------------------------------------------

class DiscreteMeasure:
    """Finite-support probability measure with exact rational weights.

    Construction enforces nonnegative weights summing to exactly one, so every
    `bind` result is checked as it is built.
    """

    __slots__ = ("weights",)

    def __init__(self, weights):
        acc: dict = {}
        items = weights.items() if isinstance(weights, Mapping) else weights
        for v, w in items:
            w = Fraction(w)
            if w < 0:
                raise ValueError(f"negative weight {w} for {format_value(v)}")
            if w:
                acc[v] = acc.get(v, Fraction(0)) + w
        total = sum(acc.values(), Fraction(0))
        if total != 1:
            raise ValueError(f"weights sum to {total}, not 1")
        self.weights = acc

    @classmethod
    def ret(cls, x) -> "DiscreteMeasure":
        return cls({x: 1})

    @classmethod
    def bernoulli(cls, p) -> "DiscreteMeasure":
        p = Fraction(p)
        return cls([(1, p), (0, 1 - p)])

    def bind(self, f: Callable[[object], "DiscreteMeasure"]) -> "DiscreteMeasure":
        out: dict = {}
        for x, w in self.weights.items():
            for y, w2 in f(x).weights.items():
                out[y] = out.get(y, Fraction(0)) + w * w2
        return DiscreteMeasure(out)

    def map(self, g) -> "DiscreteMeasure":
        return self.bind(lambda x: DiscreteMeasure.ret(g(x)))

    def prob(self, pred) -> Fraction:
        return sum((w for v, w in self.weights.items() if pred(v)), Fraction(0))

    def support(self) -> list:
        return sorted(self.weights, key=_flat)

    def items(self) -> list:
        return [(v, self.weights[v]) for v in self.support()]

    def tv_distance(self, other: "DiscreteMeasure") -> Fraction:
        keys = set(self.weights) | set(other.weights)
        return sum((abs(self.weights.get(k, 0) - other.weights.get(k, 0)) for k in keys),
                   Fraction(0)) / 2

    def __eq__(self, other):
        return isinstance(other, DiscreteMeasure) and self.weights == other.weights

    def __repr__(self):
        inner = ", ".join(f"{format_value(v)}: {w}" for v, w in self.items())
        return f"DiscreteMeasure({{{inner}}})"

    def serialize(self) -> str:
        return "".join(f"{format_value(v)}\t{w.numerator}/{w.denominator}\n" for v, w in self.items())

    @classmethod
    def deserialize(cls, text: str) -> "DiscreteMeasure":
        pairs = []
        for line in text.splitlines():
            if line.strip():
                v, w = line.split("\t")
                pairs.append((parse_value(v), Fraction(w)))
        return cls(pairs)


def giry_enumerate(model: Model, models: Mapping | None = None, _cache=None) -> DiscreteMeasure:
    """Exact output distribution of a Bernoulli-only model, by monadic enumeration."""
    cache = {} if _cache is None else _cache
    if model.name in cache:
        return cache[model.name]
    stmts = model.stmts
    memo: dict = {}

    def go(i: int, env: dict) -> DiscreteMeasure:
        key = (i, frozenset(env.items()))
        if key in memo:
            return memo[key]
        s = stmts[i]
        if isinstance(s, ReturnStmt):
            m = DiscreteMeasure.ret(balanced([env[v] for v in s.vars]))
        elif isinstance(s, SampleStmt):
            if s.call.dist != "bernoulli":
                raise NonFiniteSupport(f"`{s.var}` = {s.call.dist}(...) has continuous support")
            p = eval_expr(s.call.args[0], env)
            if not isinstance(p, (int, Fraction)):
                raise NonFiniteSupport(f"parameter of `{s.var}` is not exact: {p!r}")
            if not 0 <= p <= 1:
                raise DomainError(f"bernoulli parameter {p} outside [0,1]")
            m = DiscreteMeasure.bernoulli(p).bind(lambda x: go(i + 1, {**env, s.var: x}))
        elif isinstance(s, LetStmt):
            m = go(i + 1, {**env, s.var: eval_expr(s.expr, env)})
        else:
            callee = giry_enumerate(models[s.callee], models, cache)
            paths = balanced_paths(len(s.vars))

            def rest(out, s=s, paths=paths):
                new = dict(env)
                for v, path in zip(s.vars, paths):
                    x = out
                    for j in path:
                        x = x[j]
                    new[v] = x
                return go(i + 1, new)
            m = callee.bind(rest)
        memo[key] = m
        return m

    result = go(0, {})
    cache[model.name] = result
    return result


# -- events ---------------------------------------------------------------------------------

_EVENT_OPS = {"=": "==", "==": "==", "!=": "!=", "≠": "!=", "<": "<", "<=": "<=", "≤": "<=",
              ">": ">", ">=": ">=", "≥": ">="}
_CANON_OP = {"==": "=", "!=": "!=", "<": "<", "<=": "<=", ">": ">", ">=": ">="}


@dataclass(frozen=True)
class Clause:
    path: tuple
    op: str
    value: Fraction

    def component(self, v):
        """The value component this clause compares; it must be a number."""
        for i in self.path:
            if not isinstance(v, tuple):
                raise EventSyntaxError(f"`{self.where()}` projects out of a number")
            v = v[i]
        if isinstance(v, tuple):
            raise EventSyntaxError(f"`{self.where()}` selects a tuple, not a number")
        return v

    def where(self) -> str:
        return "v" + "".join(".fst" if i == 0 else ".snd" for i in self.path)

    def holds(self, v) -> bool:
        return bool(_CMP[self.op](self.component(v), self.value))


@dataclass(frozen=True)
class Event:
    """Conjunction of projection comparisons; the empty conjunction is the whole space."""

    clauses: tuple = ()

    def holds(self, v) -> bool:
        return all(c.holds(v) for c in self.clauses)

    def mask(self, v, n: int) -> np.ndarray:
        out = np.ones(n, dtype=bool)
        for c in self.clauses:
            x = c.component(v)
            out &= np.broadcast_to(_CMP[c.op](np.asarray(x), float(c.value)), (n,))
        return out

    def __str__(self):
        return format_event(self)


def parse_event(text: str) -> Event:
    """Parse e.g. `v.fst.snd = 1 & v.snd.snd != 0`; `true` or "" is the whole space."""
    text = text.strip()
    if text in ("", "true"):
        return Event()
    clauses = []
    for part in re.split(r"\s*(?:&|∧|\band\b)\s*", text):
        m = re.fullmatch(r"v((?:\.(?:fst|snd))*)\s*(==|!=|<=|>=|=|≠|≤|≥|<|>)\s*(-?[0-9./eE+-]+)", part)
        if not m:
            raise EventSyntaxError(f"cannot parse event clause {part!r}")
        path = tuple(0 if p == "fst" else 1 for p in m.group(1).split(".")[1:])
        clauses.append(Clause(path, _EVENT_OPS[m.group(2)], Fraction(m.group(3))))
    return Event(tuple(clauses))


def format_event(ev: Event) -> str:
    if not ev.clauses:
        return "true"
    return " & ".join(f"{c.where()} {_CANON_OP[c.op]} {format_fraction(c.value)}"
                      for c in ev.clauses)


# -- exact pushforward ------------------------------------------------------------------------

def _norm(x):
    if isinstance(x, Poly) and x.is_const():
        return x.const_value()
    return x


def _check_bernoulli_inputs(fn: PureFn):
    """Each uniform feeding a Bernoulli must be read by that generator alone."""
    root = fn.inline()
    parents: dict = {}
    seen: set = set()

    def visit(e):
        if e in seen:
            return
        seen.add(e)
        for k in children(e):
            parents.setdefault(k, set()).add(e)
            visit(k)
    visit(root)
    for e in seen:
        if isinstance(e, Gen) and e.dist == "bernoulli":
            base, path = proj_path(e.u)
            if not isinstance(base, Input):
                raise UnsupportedStructure("bernoulli threshold input is not a uniform projection")
            if len(parents[e.u]) != 1:
                raise UnsupportedStructure(f"uniform input {path} is shared with another computation")


class _SymState:
    __slots__ = ("cache", "weight", "consumed")

    def __init__(self, cache, weight, consumed):
        self.cache, self.weight, self.consumed = cache, weight, consumed


def _sym_eval(e: Expr, scope, inp, st: _SymState, table) -> list:
    """All (value, state) alternatives for `e` under the given branch state."""
    key = (scope, e)
    if key in st.cache:
        return [(st.cache[key], st)]
    if isinstance(e, Const):
        return [(e.value, st)]
    if isinstance(e, Input):
        return [(inp, st)]
    if isinstance(e, Var):
        raise UnsupportedStructure(f"free variable `{e.name}`")
    if isinstance(e, Cond):
        out = []
        for t, st1 in _sym_eval(e.test, scope, inp, st, table):
            t = _norm(t)
            if isinstance(t, Poly):
                raise UnsupportedStructure("condition depends on a continuous draw")
            out.extend(_sym_eval(e.then if t != 0 else e.orelse, scope, inp, st1, table))
        return [(v, _remember(s, key, v)) for v, s in out]
    if isinstance(e, Call):
        entry = table.by_fn(e.fn)
        _check_bernoulli_inputs(entry.fn)
        out = []
        for arg, st1 in _sym_eval(e.arg, scope, inp, st, table):
            sub = (e.fn, scope, e.arg)
            out.extend(_sym_eval(entry.fn.inline(), sub, arg, st1, table))
        return [(v, _remember(s, key, v)) for v, s in out]

    # strict nodes: evaluate children left to right, threading branch state
    branches = [((), st)]
    for k in children(e):
        branches = [(vals + (v,), s2) for vals, s1 in branches
                    for v, s2 in _sym_eval(k, scope, inp, s1, table)]
    out = []
    for vals, s in branches:
        for v, s2 in _sym_apply(e, vals, s):
            out.append((v, _remember(s2, key, v)))
    return out


def _remember(st: _SymState, key, v) -> _SymState:
    cache = dict(st.cache)
    cache[key] = v
    return _SymState(cache, st.weight, st.consumed)


def _sym_apply(e: Expr, vals: tuple, st: _SymState) -> list:
    if isinstance(e, Pair):
        return [(vals, st)]
    if isinstance(e, Proj):
        if not isinstance(vals[0], tuple):
            raise ShapeMismatch("projection of non-pair value")
        return [(vals[0][e.index], st)]
    if isinstance(e, Neg):
        return [(_norm(-Poly.lift(vals[0])), st)]
    if isinstance(e, BinOp):
        a, b = vals
        if e.op == "/":
            b = _norm(b)
            if isinstance(b, Poly):
                raise UnsupportedStructure("division by a continuous quantity")
            if b == 0:
                raise DomainError("division by zero")
            return [(_norm(Poly.lift(a) * (1 / Fraction(b))), st)]
        pa, pb = Poly.lift(a), Poly.lift(b)
        r = {"+": pa + pb, "-": pa - pb, "*": pa * pb}[e.op]
        r = _norm(r)
        if isinstance(a, int) and isinstance(b, int) and isinstance(r, Fraction):
            r = int(r)
        return [(r, st)]
    if isinstance(e, Compare):
        a, b = _norm(vals[0]), _norm(vals[1])
        if isinstance(a, Poly) or isinstance(b, Poly):
            raise UnsupportedStructure("comparison on a continuous draw")
        return [(int(_CMP[e.op](a, b)), st)]
    if isinstance(e, Gen):
        *params, u = vals
        if e.dist == "uniform":
            a, b = params
            return [(_norm(Poly.lift(a) + (Poly.lift(b) - a) * Poly.lift(u)), st)]
        if e.dist == "bernoulli":
            p = params[0]
            if not isinstance(u, Poly) or len(u.terms) != 1 or u.variables() == set() \
                    or u != Poly.var(next(iter(u.variables()))):
                raise UnsupportedStructure("bernoulli input is not a raw uniform")
            k = next(iter(u.variables()))
            pp = Poly.lift(p)
            if k in st.consumed or k in pp.variables() or k in st.weight.variables():
                raise UnsupportedStructure(f"uniform U{k} is reused")
            if pp.is_const() and not 0 <= pp.const_value() <= 1:
                raise DomainError(f"bernoulli parameter {pp.const_value()} outside [0,1]")
            consumed = st.consumed | {k}
            out = []
            for outcome, w in ((1, pp), (0, 1 - pp)):
                if w.is_const() and w.const_value() == 0:
                    continue
                out.append((outcome, _SymState(st.cache, st.weight * w, consumed)))
            return out
        raise UnsupportedStructure(f"gen_{e.dist} is not handled exactly")
    raise UnsupportedStructure(f"no exact rule for {type(e).__name__}")


def _sym_inputs(shape, offset: int, table) -> list:
    """Alternatives (value, weight, next offset) for a symbolic input vector."""
    if isinstance(shape, UniformLeaf):
        return [(Poly.var(offset), Poly.const(1), offset + 1)]
    if isinstance(shape, UnitShape):
        return [((), Poly.const(1), offset)]
    if isinstance(shape, ShapePair):
        out = []
        for lv, lw, off in _sym_inputs(shape.left, offset, table):
            for rv, rw, off2 in _sym_inputs(shape.right, off, table):
                out.append(((lv, rv), lw * rw, off2))
        return out
    entry = table[shape.model]
    return [(v, w, offset + entry.demand)
            for v, w in _sym_outcomes(entry.fn, table, offset)]


def _sym_outcomes(fn: PureFn, table, offset: int = 0) -> list:
    _check_bernoulli_inputs(fn)
    root = fn.inline()
    out = []
    for inp, w, _ in _sym_inputs(fn.shape, offset, table):
        start = _SymState({}, w, frozenset())
        for v, st in _sym_eval(root, fn.name, inp, start, table):
            out.append((v, st.weight))
    return out


def pushforward_outcomes(fn: PureFn, table=None) -> dict:
    """Output value -> exact probability; continuous components stay as polynomials."""
    acc: dict = {}
    for v, w in _sym_outcomes(fn, table):
        acc[v] = acc.get(v, Fraction(0)) + w.integrate()
    return {v: p for v, p in acc.items() if p}


def _event_holds_symbolic(ev: Event, v) -> bool:
    for c in ev.clauses:
        x = _norm(c.component(v))
        if isinstance(x, Poly):
            raise UnsupportedStructure("event refers to a continuous component")
        if not _CMP[c.op](x, c.value):
            return False
    return True


def pushforward_exact(fn: PureFn, event: Event, table=None) -> Fraction:
    """Lebesgue measure of the inputs that `fn` maps into `event`."""
    return sum((p for v, p in pushforward_outcomes(fn, table).items()
                if _event_holds_symbolic(event, v)), Fraction(0))


def pushforward_measure(fn: PureFn, table=None) -> DiscreteMeasure:
    """The whole pushforward as a DiscreteMeasure (discrete outputs only)."""
    out = pushforward_outcomes(fn, table)
    for v in out:
        if any(isinstance(_norm(x), Poly) for x in _flat(v)):
            raise NonFiniteSupport(f"{fn.name} has a continuous output component")
    return DiscreteMeasure({tuple_map(_norm, v): p for v, p in out.items()})


def tuple_map(f, v):
    if isinstance(v, tuple):
        return tuple(tuple_map(f, x) for x in v)
    return f(v)


# -- Monte Carlo ----------------------------------------------------------------------------

def sample_outputs(fn: PureFn, seed: int, start: int, n: int, table=None):
    """Evaluate `fn` on trials start..start+n-1 of the counter-based stream."""
    dim = demand(fn.shape)
    u = rng.uniform_matrix(seed, start, n, dim)
    cols = iter(u.T)
    return eval_pure_batch(fn, batch_vector(fn.shape, cols, table), table)


def mc_probability(fn: PureFn, event: Event, n: int, seed: int, table=None,
                   shards: int = 1, workers: int = 1) -> tuple[float, float]:
    """Monte Carlo estimate of the event probability and its standard error."""
    if n < 1:
        raise ValueError("need at least one trial")

    def count(rng_range):
        a, b = rng_range
        out = sample_outputs(fn, seed, a, b - a, table)
        return int(event.mask(out, b - a).sum())

    ranges = rng.shard_ranges(n, shards)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            hits = sum(pool.map(count, ranges))
    else:
        hits = sum(map(count, ranges))
    p = hits / n
    return p, math.sqrt(p * (1 - p) / n)


# -- coupling ---------------------------------------------------------------------------------

@dataclass(frozen=True)
class Mismatch:
    stream: tuple
    sampled: object
    pure: object


def check_coupling(model: Model, fn: PureFn, models: Mapping, table, trials: int,
                   seed: int, limit: int = 10) -> tuple[int, list[Mismatch]]:
    """Compare sampler and translated function on `trials` shared streams.

    Returns the mismatch count and up to `limit` offending examples.
    """
    dim = demand(fn.shape)
    count, examples = 0, []
    for row in rng.uniform_rows(seed, trials, dim):
        sampled = run_sampler(model, row, models)
        pure = eval_pure(fn, stream_vector(fn.shape, row, table), table)
        if not bitwise_equal(sampled, pure):
            count += 1
            if len(examples) < limit:
                examples.append(Mismatch(tuple(row), sampled, pure))
    return count, examples
