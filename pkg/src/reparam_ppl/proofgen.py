"""Compositional measurability certificates.

A certificate is a tree that mirrors the expression computing a function of
the input `u`: leaves name primitives with a known measurability lemma, and
inner nodes record composition (f ∘ g) or pairing (⟨f, g⟩). Measurability of
the whole function follows because both constructions preserve it.

`derive_cert` builds the tree; `check_cert` re-validates a tree against an
expression without trusting how it was built.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .errors import UnwhitelistedPrimitive
from .expr import (
    Apply, BinOp, Call, Compare, Cond, Const, Expr, Gen, Input, Neg, Pair, Proj, Var, format_fraction,
)
from .ir import PureFn

GENERATORS = ("gen_uniform", "gen_bernoulli", "gen_normal")
OPERATOR_PRIMS = {"+": "add", "-": "sub", "*": "mul", "/": "div",
                  "==": "eq", "!=": "ne", "<": "lt", "<=": "le", ">": "gt", ">=": "ge"}
WHITELIST = frozenset(GENERATORS) | frozenset(OPERATOR_PRIMS.values()) | {"neg", "ite", "id"}


@dataclass(frozen=True)
class PrimCert:
    name: str
    curried: tuple = ()  # constant leading arguments, e.g. gen_uniform 0 1


@dataclass(frozen=True)
class CompCert:
    outer: "MeasCert"
    inner: "MeasCert"


@dataclass(frozen=True)
class PairCert:
    left: "MeasCert"
    right: "MeasCert"


@dataclass(frozen=True)
class ProjCert:
    which: str  # "fst" | "snd"


@dataclass(frozen=True)
class ConstCert:
    value: object = None


@dataclass(frozen=True)
class RefCert:
    """Reuse of an already certified translated function."""

    fn: str


MeasCert = Union[PrimCert, CompCert, PairCert, ProjCert, ConstCert, RefCert]


def _pair_args(certs: list) -> MeasCert:
    return certs[0] if len(certs) == 1 else PairCert(certs[0], _pair_args(certs[1:]))


def _known_fns(table) -> set:
    if table is None:
        return set()
    if isinstance(table, (set, frozenset)):
        return set(table)
    return {e.fn.name for e in table if e.cert is not None}


def cert_of_expr(e: Expr, known: set = frozenset()) -> MeasCert:
    if isinstance(e, Input):
        return PrimCert("id")
    if isinstance(e, Const):
        return ConstCert(e.value)
    if isinstance(e, Proj):
        proj = ProjCert("fst" if e.index == 0 else "snd")
        if isinstance(e.arg, Input):
            return proj
        return CompCert(proj, cert_of_expr(e.arg, known))
    if isinstance(e, Pair):
        return PairCert(cert_of_expr(e.left, known), cert_of_expr(e.right, known))
    if isinstance(e, BinOp):
        return CompCert(PrimCert(OPERATOR_PRIMS[e.op]),
                        PairCert(cert_of_expr(e.left, known), cert_of_expr(e.right, known)))
    if isinstance(e, Compare):
        return CompCert(PrimCert(OPERATOR_PRIMS[e.op]),
                        PairCert(cert_of_expr(e.left, known), cert_of_expr(e.right, known)))
    if isinstance(e, Neg):
        return CompCert(PrimCert("neg"), cert_of_expr(e.arg, known))
    if isinstance(e, Cond):
        return CompCert(PrimCert("ite"), _pair_args([cert_of_expr(k, known)
                                                     for k in (e.test, e.then, e.orelse)]))
    if isinstance(e, Gen):
        name = f"gen_{e.dist}"
        if name not in WHITELIST:
            raise UnwhitelistedPrimitive(name)
        if all(isinstance(p, Const) for p in e.params):
            return CompCert(PrimCert(name, tuple(p.value for p in e.params)),
                            cert_of_expr(e.u, known))
        return CompCert(PrimCert(name), _pair_args([cert_of_expr(k, known)
                                                    for k in (*e.params, e.u)]))
    if isinstance(e, Call):
        if e.fn not in known:
            raise UnwhitelistedPrimitive(e.fn)
        return CompCert(RefCert(e.fn), cert_of_expr(e.arg, known))
    if isinstance(e, Apply):
        raise UnwhitelistedPrimitive(e.fn)
    if isinstance(e, Var):
        raise UnwhitelistedPrimitive(f"free variable {e.name}")
    raise UnwhitelistedPrimitive(type(e).__name__)


def _target(fn) -> Expr:
    if isinstance(fn, PureFn):
        return fn.inline()
    return fn.expr  # Slice


def derive_cert(fn, table=None) -> MeasCert:
    """Certificate for a PureFn (over its result tuple) or a Slice.

    Calls to other translated functions are certified by reference to their
    existing certificate, taken from `table` (a TranslationTable or a set of
    certified function names).
    """
    return cert_of_expr(_target(fn), _known_fns(table))


@dataclass(frozen=True)
class CertCheck:
    ok: bool
    path: str = ""
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def check_cert(cert: MeasCert, fn, table=None) -> CertCheck:
    """Validate that `cert` is homomorphic to `fn`'s expression and whitelisted."""
    return _check(cert, _target(fn), _known_fns(table), "root")


def _fail(path, reason) -> CertCheck:
    return CertCheck(False, path, reason)


def _check_operands(cert, operands, known, path) -> CertCheck:
    for i, k in enumerate(operands[:-1]):
        if not isinstance(cert, PairCert):
            return _fail(path, "expected pairing of operands")
        r = _check(cert.left, k, known, f"{path}.arg{i}")
        if not r:
            return r
        cert = cert.right
    return _check(cert, operands[-1], known, f"{path}.arg{len(operands) - 1}")


def _prim_is(cert, name) -> bool:
    return isinstance(cert, PrimCert) and cert.name == name and cert.name in WHITELIST


def _check(cert, e, known, path) -> CertCheck:
    if isinstance(e, Input):
        return CertCheck(True) if _prim_is(cert, "id") and not cert.curried else _fail(path, "expected id")
    if isinstance(e, Const):
        if isinstance(cert, ConstCert) and (cert.value is None or Fraction(cert.value) == e.value):
            return CertCheck(True)
        return _fail(path, "expected constant")
    if isinstance(e, Proj):
        which = "fst" if e.index == 0 else "snd"
        if isinstance(e.arg, Input):
            return CertCheck(True) if cert == ProjCert(which) else _fail(path, f"expected {which}")
        if not (isinstance(cert, CompCert) and cert.outer == ProjCert(which)):
            return _fail(path, f"expected {which} ∘ _")
        return _check(cert.inner, e.arg, known, f"{path}.{which}")
    if isinstance(e, Pair):
        if not isinstance(cert, PairCert):
            return _fail(path, "expected pairing")
        return _check(cert.left, e.left, known, f"{path}.left") and \
            _check(cert.right, e.right, known, f"{path}.right")
    if isinstance(e, (BinOp, Compare, Neg, Cond)):
        prim = "neg" if isinstance(e, Neg) else "ite" if isinstance(e, Cond) else OPERATOR_PRIMS[e.op]
        if not (isinstance(cert, CompCert) and _prim_is(cert.outer, prim) and not cert.outer.curried):
            return _fail(path, f"expected {prim} ∘ _")
        ops = {Neg: lambda: [e.arg], Cond: lambda: [e.test, e.then, e.orelse]}.get(
            type(e), lambda: [e.left, e.right])()
        return _check_operands(cert.inner, ops, known, f"{path}.{prim}")
    if isinstance(e, Gen):
        name = f"gen_{e.dist}"
        if not (isinstance(cert, CompCert) and _prim_is(cert.outer, name)):
            return _fail(path, f"expected {name} ∘ _")
        curried = cert.outer.curried
        if curried:
            if len(curried) != len(e.params) or not all(
                    isinstance(p, Const) and p.value == c for p, c in zip(e.params, curried)):
                return _fail(path, "curried parameters do not match")
            return _check(cert.inner, e.u, known, f"{path}.{name}")
        return _check_operands(cert.inner, [*e.params, e.u], known, f"{path}.{name}")
    if isinstance(e, Call):
        if not (isinstance(cert, CompCert) and cert.outer == RefCert(e.fn) and e.fn in known):
            return _fail(path, f"expected certified call to {e.fn}")
        return _check(cert.inner, e.arg, known, f"{path}.{e.fn}")
    return _fail(path, f"no measurability rule for {type(e).__name__}")


# -- lemma text ----------------------------------------------------------------

_LEMMA = {"fst": "measurable_fst", "snd": "measurable_snd", "id": "measurable_id",
          "neg": "measurable_neg", "ite": "measurable_ite"}


def lemma_name(fn_name: str) -> str:
    return f"{fn_name}_measurable"


def _tactics(cert: MeasCert, decimal: bool) -> list:
    """Nested tactic script: a list of lines and sub-lists (one per subgoal)."""
    if isinstance(cert, PairCert):
        return ["apply measurable.prod", _tactics(cert.left, decimal), _tactics(cert.right, decimal)]
    if isinstance(cert, CompCert):
        return ["apply measurable.comp", _tactics(cert.outer, decimal), _tactics(cert.inner, decimal)]
    if isinstance(cert, ConstCert):
        return ["exact measurable_const"]
    if isinstance(cert, ProjCert):
        return [f"exact {_LEMMA[cert.which]}"]
    if isinstance(cert, RefCert):
        return [f"exact {lemma_name(cert.fn)}"]
    if isinstance(cert, PrimCert):
        lemma = _LEMMA.get(cert.name, f"measurable_{cert.name}")
        args = "".join(" " + _arg(c, decimal) for c in cert.curried)
        return [f"exact {lemma}{args}"]
    raise TypeError(f"not a certificate: {cert!r}")


def _arg(c, decimal) -> str:
    s = format_fraction(c, decimal)
    return f"({s})" if "/" in s or s.startswith("-") else s


def emit_cert_lemma(cert: MeasCert, fn_name: str, indent: int = 2, decimal: bool = False) -> str:
    """Lean-style tactic skeleton proving `measurable fn_name`."""
    pad = " " * indent
    lines = [f"lemma {lemma_name(fn_name)} : measurable {fn_name} := by"]

    def render(script, depth, bullet):
        head, *subgoals = script
        prefix = pad * depth + ("· " if bullet else "")
        lines.append(prefix + head)
        for sub in subgoals:
            render(sub, depth + 1 if bullet else depth, True)

    render(_tactics(cert, decimal), 1, False)
    return "\n".join(lines) + "\n"


def cert_size(cert: MeasCert) -> int:
    if isinstance(cert, (PairCert, CompCert)):
        a, b = (cert.left, cert.right) if isinstance(cert, PairCert) else (cert.outer, cert.inner)
        return 1 + cert_size(a) + cert_size(b)
    return 1


def cert_leaves(cert: MeasCert) -> list:
    if isinstance(cert, PairCert):
        return cert_leaves(cert.left) + cert_leaves(cert.right)
    if isinstance(cert, CompCert):
        return cert_leaves(cert.outer) + cert_leaves(cert.inner)
    return [cert]
