"""Target IR: pure functions of a nested-pair input and their input shapes."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from .expr import Expr, Input, children, proj_path, substitute


@dataclass(frozen=True)
class UniformLeaf:
    pass


@dataclass(frozen=True)
class ModelLeaf:
    """Pre-sampled output of a hoisted callee, distributed as that callee's measure."""

    model: str
    out_type: object
    demand: int = 0  # uniforms the callee consumes, transitively


@dataclass(frozen=True)
class ShapePair:
    left: "InputShape"
    right: "InputShape"


@dataclass(frozen=True)
class UnitShape:
    pass


InputShape = Union[UniformLeaf, ModelLeaf, ShapePair, UnitShape]


def right_nest(shapes: list) -> InputShape:
    if not shapes:
        return UnitShape()
    if len(shapes) == 1:
        return shapes[0]
    return ShapePair(shapes[0], right_nest(shapes[1:]))


def right_nest_paths(n: int) -> list[tuple[int, ...]]:
    if n == 0:
        return []
    if n == 1:
        return [()]
    return [(0,)] + [(1, *p) for p in right_nest_paths(n - 1)]


def resolve_path(shape: InputShape, path) -> tuple[InputShape, tuple]:
    """Walk `path`; return (reached shape node, remaining path inside a ModelLeaf output)."""
    for k, i in enumerate(path):
        if isinstance(shape, ShapePair):
            shape = shape.left if i == 0 else shape.right
        elif isinstance(shape, ModelLeaf):
            rest = tuple(path[k:])
            t = shape.out_type
            for j in rest:
                if not isinstance(t, tuple):
                    raise KeyError(f"projection {path} escapes model output")
                t = t[j]
            return shape, rest
        else:
            raise KeyError(f"projection {path} does not resolve in input shape")
    return shape, ()


def leaves(shape: InputShape) -> list[tuple[tuple, InputShape]]:
    """(path, leaf) pairs in left-to-right order."""
    if isinstance(shape, ShapePair):
        return ([((0, *p), s) for p, s in leaves(shape.left)]
                + [((1, *p), s) for p, s in leaves(shape.right)])
    if isinstance(shape, UnitShape):
        return []
    return [((), shape)]


def uniform_leaf_count(shape: InputShape) -> int:
    return sum(isinstance(s, UniformLeaf) for _, s in leaves(shape))


def demand(shape: InputShape) -> int:
    """Length of the flat uniform stream the shape consumes (callees included)."""
    total = 0
    for _, s in leaves(shape):
        total += 1 if isinstance(s, UniformLeaf) else s.demand
    return total


@dataclass(frozen=True)
class PureFn:
    name: str
    model: str
    shape: InputShape
    bindings: tuple  # of (var, Expr)
    result: Expr
    param: str = "u"
    out_type: object = None

    def inline(self, e: Expr | None = None) -> Expr:
        """Substitute every binding into `e` (default: the result)."""
        env: dict[str, Expr] = {}
        for v, rhs in self.bindings:
            env[v] = substitute(rhs, env)
        return substitute(self.result if e is None else e, env)

    def binding(self, var: str) -> Expr:
        for v, rhs in self.bindings:
            if v == var:
                return rhs
        raise KeyError(var)

    def replace(self, **kw) -> "PureFn":
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(kw)
        return PureFn(**d)


def input_paths(e: Expr) -> set[tuple]:
    """Projection paths on Input that occur in `e` (maximal chains only)."""
    out: set[tuple] = set()

    def go(n):
        base, path = proj_path(n)
        if isinstance(base, Input):
            out.add(path)
            return
        for k in children(n):
            go(k)
    go(e)
    return out


# -- measure expressions -------------------------------------------------------

@dataclass(frozen=True)
class UniformMeasure:
    pass


@dataclass(frozen=True)
class UnitMeasure:
    pass


@dataclass(frozen=True)
class ModelMeasure:
    model: str


@dataclass(frozen=True)
class ProdMeasure:
    left: "Measure"
    right: "Measure"


@dataclass(frozen=True)
class Pushforward:
    fn: str
    base: "Measure"


Measure = Union[UniformMeasure, UnitMeasure, ModelMeasure, ProdMeasure, Pushforward]


def measure_of(shape: InputShape) -> Measure:
    if isinstance(shape, UniformLeaf):
        return UniformMeasure()
    if isinstance(shape, ModelLeaf):
        return ModelMeasure(shape.model)
    if isinstance(shape, UnitShape):
        return UnitMeasure()
    return ProdMeasure(measure_of(shape.left), measure_of(shape.right))
