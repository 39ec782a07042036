"""Reparameterization: compile a sampling model into a pure function of uniforms.

The pipeline for one model is

1. count the uniform draws its sample statements need;
2. hoist every nested call into a pre-sampled input component (ModelLeaf);
3. thread a nested-pair input `u` through the body, turning each sample
   into a generator applied to one projection of `u`;
4. eliminate common subexpressions.

Slices (one fully inlined expression per return value) are available
separately; reassembling them and running `cse` gives back the same function.

Input layout: `(hoisted callee outputs, fresh uniforms)`, each side
right-nested, with a lone side standing on its own. The flat uniform stream
consumed by `semantics.run_sampler` follows the same order, so the sampler and
the translated function are coupled draw for draw.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from . import proofgen
from .errors import TranslationError
from .expr import (
    Apply, Call, Const, Expr, Gen, Input, Proj, Var, balanced, balanced_expr, balanced_paths,
    children, proj_path, project, rebuild, substitute,
)
from .frontend import INT, REAL, CallStmt, LetStmt, Model, SampleStmt, ValidatedProgram, type_of
from .ir import (
    ModelLeaf, PureFn, Pushforward, ShapePair, UniformLeaf, demand, measure_of, right_nest,
    right_nest_paths,
)


@dataclass
class Slice:
    var: str
    expr: Expr


@dataclass
class TranslationEntry:
    model: Model
    fn: PureFn
    measure: Pushforward
    cert: object = None
    hoisted: bool = True

    @property
    def shape(self):
        return self.fn.shape

    @property
    def out_type(self):
        return self.fn.out_type

    @property
    def demand(self) -> int:
        return demand(self.fn.shape)

    def __iter__(self):
        return iter((self.fn, self.fn.shape, self.measure))


class TranslationTable:
    """Translated models by name, kept in insertion (= topological) order."""

    def __init__(self):
        self.entries: dict[str, TranslationEntry] = {}

    def __getitem__(self, name: str) -> TranslationEntry:
        try:
            return self.entries[name]
        except KeyError:
            raise TranslationError(f"model `{name}` has not been translated") from None

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def __iter__(self):
        return iter(self.entries.values())

    def __len__(self):
        return len(self.entries)

    def add(self, entry: TranslationEntry):
        self.entries[entry.model.name] = entry

    def fns(self) -> dict[str, PureFn]:
        return {e.fn.name: e.fn for e in self.entries.values()}

    def by_fn(self, fn_name: str) -> TranslationEntry:
        for e in self.entries.values():
            if e.fn.name == fn_name:
                return e
        raise TranslationError(f"no translated function `{fn_name}`")


def fn_name(model_name: str) -> str:
    return f"{model_name}_fun"


def count_uniforms(model: Model, table: TranslationTable) -> int:
    """Fresh uniform draws needed by the model's own sample statements."""
    for c in model.calls():
        table[c.callee]
    return len(model.samples())


def _fresh(base: str, used: set) -> str:
    name = base
    while name in used:
        name += "'"
    used.add(name)
    return name


def _model_vars(model: Model) -> set:
    out = set()
    for s in model.stmts:
        if isinstance(s, (SampleStmt, LetStmt)):
            out.add(s.var)
        elif isinstance(s, CallStmt):
            out.update(s.vars)
    return out


def _layout(n_calls: int, n_fresh: int) -> tuple[list, list]:
    """Projection paths for call slots and fresh uniforms under the canonical layout."""
    if n_calls and n_fresh:
        return ([(0, *p) for p in right_nest_paths(n_calls)],
                [(1, *p) for p in right_nest_paths(n_fresh)])
    return right_nest_paths(n_calls), right_nest_paths(n_fresh)


def _assemble_shape(call_shapes: list, n_fresh: int):
    fresh = right_nest([UniformLeaf() for _ in range(n_fresh)])
    if call_shapes and n_fresh:
        return ShapePair(right_nest(call_shapes), fresh)
    if call_shapes:
        return right_nest(call_shapes)
    return fresh


def hoist_calls(model: Model, table: TranslationTable) -> tuple[Model, list[ModelLeaf]]:
    """Replace each call by projections of a new pre-sampled input component.

    The returned model starts with one let per destructured variable (in call
    order) reading from `Input`; the remaining statements follow unchanged.
    """
    calls = model.calls()
    if not calls:
        return model, []
    call_paths, _ = _layout(len(calls), count_uniforms(model, table))
    leaves, lets = [], []
    for c, path in zip(calls, call_paths):
        entry = table[c.callee]
        leaves.append(ModelLeaf(c.callee, entry.out_type, entry.demand))
        for v, rp in zip(c.vars, balanced_paths(len(c.vars))):
            lets.append(LetStmt(v, project(project(Input(), path), rp), c.line))
    rest = [s for s in model.stmts if not isinstance(s, CallStmt)]
    return Model(model.name, tuple(lets + rest), model.line), leaves


def _infer_types(model: Model, table: TranslationTable) -> dict:
    types: dict = {}
    for s in model.body:
        if isinstance(s, SampleStmt):
            types[s.var] = INT if s.call.dist == "bernoulli" else REAL
        elif isinstance(s, LetStmt):
            types[s.var] = type_of(s.expr, types)
        elif isinstance(s, CallStmt):
            out = table[s.callee].out_type
            for v, p in zip(s.vars, balanced_paths(len(s.vars))):
                t = out
                for i in p:
                    t = t[i]
                types[v] = t
    return types


def thread_inputs(model: Model, table: TranslationTable, hoist: bool = True) -> PureFn:
    """Turn the model into a pure function of `u` (before CSE).

    Bindings come out as: callee outputs, uniform projections `u1, u2, ...`,
    then the body in source order with samples replaced by generators. Uniform
    numbering continues after the draws consumed by callees, so the names match
    positions in the flat stream.
    """
    used = _model_vars(model)
    param = _fresh("u", used)
    n_fresh = count_uniforms(model, table)
    calls = model.calls()
    call_paths, fresh_paths = _layout(len(calls), n_fresh)
    bindings: list[tuple[str, Expr]] = []
    call_shapes = []
    offset = 0
    if hoist:
        hoisted, call_shapes = hoist_calls(model, table)
        for s in hoisted.stmts[:sum(len(c.vars) for c in calls)]:
            bindings.append((s.var, s.expr))
        offset = sum(leaf.demand for leaf in call_shapes)
    else:
        for i, (c, path) in enumerate(zip(calls, call_paths), start=1):
            entry = table[c.callee]
            call_shapes.append(entry.shape)
            tmp = _fresh(f"{c.callee}_{i}", used)
            bindings.append((tmp, Call(entry.fn.name, project(Input(), path))))
            for v, rp in zip(c.vars, balanced_paths(len(c.vars))):
                bindings.append((v, project(Var(tmp), rp)))
            offset += entry.demand
    u_names = []
    for k, path in enumerate(fresh_paths, start=offset + 1):
        name = _fresh(f"u{k}", used)
        u_names.append(name)
        bindings.append((name, project(Input(), path)))
    draws = iter(u_names)
    for s in model.body:
        if isinstance(s, SampleStmt):
            bindings.append((s.var, Gen(s.call.dist, tuple(s.call.args), Var(next(draws)))))
        elif isinstance(s, LetStmt):
            bindings.append((s.var, s.expr))
    types = _infer_types(model, table)
    out_type = balanced([types[v] for v in model.result])
    return PureFn(
        name=fn_name(model.name),
        model=model.name,
        shape=_assemble_shape(call_shapes, n_fresh),
        bindings=tuple(bindings),
        result=balanced_expr([Var(v) for v in model.result]),
        param=param,
        out_type=out_type,
    )


def slice(model: Model, ret_var: str, table: TranslationTable, hoist: bool = True) -> Slice:
    """Fully inlined expression computing one return value from the input."""
    if ret_var not in model.result:
        raise TranslationError(f"`{ret_var}` is not a return value of `{model.name}`")
    fn = thread_inputs(model, table, hoist)
    return Slice(ret_var, fn.inline(Var(ret_var)))


def slices(model: Model, table: TranslationTable, hoist: bool = True) -> list[Slice]:
    fn = thread_inputs(model, table, hoist)
    return [Slice(v, fn.inline(Var(v))) for v in model.result]


def binding_names(fn: PureFn) -> dict:
    """Inlined expression -> variable name, for every non-trivial binding."""
    env: dict[str, Expr] = {}
    names: dict = {}
    for v, rhs in fn.bindings:
        full = substitute(rhs, env)
        env[v] = full
        if not isinstance(full, (Const, Var, Input)):
            names.setdefault(full, v)
    return names


def assemble_slices(model: Model, table: TranslationTable, hoist: bool = True) -> PureFn:
    """Combine per-return-value slices into one function, sharing work via CSE."""
    fn = thread_inputs(model, table, hoist)
    exprs = [fn.inline(Var(v)) for v in model.result]
    combined = fn.replace(bindings=(), result=balanced_expr(exprs))
    return cse(combined, names=binding_names(fn))


def _is_access(e: Expr) -> bool:
    base, path = proj_path(e)
    return bool(path) and isinstance(base, (Input, Call))


def cse(fn: PureFn, names: dict | None = None) -> PureFn:
    """Let-normalize `fn`, binding each repeated subexpression exactly once.

    Generator and call sites and the input projections they read are always
    let-bound; other compound expressions are bound when shared or when the
    input named them. Constants and variable aliases are inlined and unused
    bindings disappear, except generator calls: every draw keeps its binding
    so each uniform input stays consumed. Existing names and binding order are kept where
    possible, which makes the pass idempotent.
    """
    hints = binding_names(fn)
    for e, v in (names or {}).items():
        hints.setdefault(e, v)
    result = fn.inline()

    count: Counter = Counter()
    direct: set = {result}

    def visit(e):
        count[e] += 1
        if count[e] > 1:
            return
        for k in children(e):
            if not isinstance(e, (Proj, Call)):
                direct.add(k)
            visit(k)
    visit(result)
    # draws whose value is unused still consume their uniform
    for e in hints:
        if isinstance(e, Gen) and e not in count:
            direct.add(e)
            visit(e)

    def should_bind(e) -> bool:
        if isinstance(e, (Const, Var, Input)):
            return False
        if isinstance(e, (Gen, Call, Apply)):
            return True
        if _is_access(e):
            return e in direct
        return e in hints or count[e] >= 2

    used = set(hints.values()) | {fn.param} | {v for v, _ in fn.bindings}
    bound: dict = {}
    out: list = []
    seen: set = set()
    counter = [0]

    def replace(e):
        if e in bound:
            return Var(bound[e])
        kids = children(e)
        return rebuild(e, tuple(replace(k) for k in kids)) if kids else e

    def emit(e):
        if e in seen:
            return
        seen.add(e)
        for k in children(e):
            emit(k)
        if should_bind(e):
            name = hints.get(e)
            if name is None or name in bound.values():
                counter[0] += 1
                name = _fresh(f"c{counter[0]}", used)
            out.append((name, rebuild(e, tuple(replace(k) for k in children(e)))))
            bound[e] = name

    prelude = sorted((e for e in count if isinstance(proj_path(e)[0], Input) and _is_access(e)
                      and should_bind(e)), key=lambda e: proj_path(e)[1])
    for e in prelude:
        emit(e)
    for e in hints:
        if e in count:
            emit(e)
    emit(result)
    return fn.replace(bindings=tuple(out), result=replace(result))


def translate(model: Model, table: TranslationTable, hoist: bool = True,
              certify: bool = True) -> TranslationEntry:
    """Translate one model whose callees are already in `table`; record it there."""
    fn = cse(thread_inputs(model, table, hoist))
    entry = TranslationEntry(model, fn, Pushforward(fn.name, measure_of(fn.shape)), hoisted=hoist)
    if certify:
        entry.cert = proofgen.derive_cert(fn, table)
    table.add(entry)
    return entry


def translate_program(program: ValidatedProgram, hoist: bool = True,
                      certify: bool = True) -> TranslationTable:
    if not program.order:
        raise TranslationError("nothing to translate")
    table = TranslationTable()
    for name in program.order:
        translate(program[name], table, hoist, certify)
    return table
