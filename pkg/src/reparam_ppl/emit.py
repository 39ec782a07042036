"""Lean-style text output and an alpha-equivalence comparator for it."""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from . import proofgen
from .errors import ParseError
from .expr import Pair, Printer
from .ir import Measure, ModelMeasure, ProdMeasure, UniformMeasure, UnitMeasure

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*\Z")


@dataclass(frozen=True)
class EmitConfig:
    prefix: str = ""
    indent: int = 2
    certs: bool = True
    decimal: bool = False

    def __post_init__(self):
        if self.prefix and not _IDENT.match(self.prefix):
            raise ValueError(f"prefix {self.prefix!r} is not an identifier")
        if self.indent < 1:
            raise ValueError("indent must be positive")


def render_measure(m: Measure, prefix: str = "") -> str:
    if isinstance(m, UniformMeasure):
        return "uniform(0,1)"
    if isinstance(m, UnitMeasure):
        return "unit_measure"
    if isinstance(m, ModelMeasure):
        return prefix + m.model
    if isinstance(m, ProdMeasure):
        if isinstance(m.left, UniformMeasure) and isinstance(m.right, UniformMeasure):
            return "pair_uniform(0,1)"
        return f"prod_measure {_measure_arg(m.left, prefix)} {_measure_arg(m.right, prefix)}"
    raise TypeError(f"not a measure: {m!r}")


def _measure_arg(m: Measure, prefix: str) -> str:
    s = render_measure(m, prefix)
    return f"({s})" if " " in s else s


def emit_lean(entry, cfg: EmitConfig = EmitConfig()) -> str:
    """Definitions for one translated model, plus its lemma skeleton if enabled."""
    fn = entry.fn
    pad = " " * cfg.indent
    pr = Printer("lean", input_name=fn.param, decimal=cfg.decimal,
                 fn_names=lambda s: cfg.prefix + s)
    name = cfg.prefix + fn.name
    result = pr(fn.result)
    if not isinstance(fn.result, Pair):
        result = f"({result})"
    if fn.bindings:
        lines = [f"def {name} {fn.param} :="]
        lines += [f"{pad}let {v} := {pr(rhs)} in" for v, rhs in fn.bindings]
        lines.append(pad + result)
    else:
        lines = [f"def {name} {fn.param} := {result}"]
    lines += ["", f"def {cfg.prefix}{entry.model.name} :=",
              f"{pad}push_forward {name} {_measure_arg(entry.measure.base, cfg.prefix)}"]
    text = "\n".join(lines) + "\n"
    if cfg.certs and entry.cert is not None:
        cert = entry.cert
        if cfg.prefix:
            cert = _prefix_refs(cert, cfg.prefix)
        text += "\n" + proofgen.emit_cert_lemma(cert, name, cfg.indent, cfg.decimal)
    return text


def _prefix_refs(cert, prefix):
    if isinstance(cert, proofgen.RefCert):
        return proofgen.RefCert(prefix + cert.fn)
    if isinstance(cert, proofgen.CompCert):
        return proofgen.CompCert(_prefix_refs(cert.outer, prefix), _prefix_refs(cert.inner, prefix))
    if isinstance(cert, proofgen.PairCert):
        return proofgen.PairCert(_prefix_refs(cert.left, prefix), _prefix_refs(cert.right, prefix))
    return cert


def emit_file(table, cfg: EmitConfig = EmitConfig(), header: str | None = None) -> str:
    """All entries of a translation table, in table (topological) order."""
    parts = [f"-- {header}\n"] if header else []
    parts += [emit_lean(e, cfg) for e in table]
    return "\n".join(parts)


# -- alpha equivalence ---------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+|--[^\n]*)
  | (?P<num>\d+(?:\.\d+)?)
  | (?P<ident>[^\W\d][\w']*)
  | (?P<op>:=|=>|==|!=|<=|>=|[-+*/<>=(),.:·∘≠≤≥λ→⟨⟩])
  | (?P<other>\S)
""", re.VERBOSE)

_KEYWORDS = {"def", "lemma", "theorem", "let", "in", "if", "then", "else", "fun"}
_ALIASES = {"pushforward": "push_forward", "λ": "fun", "→": "=>", "≠": "!=", "≤": "<=",
            "≥": ">=", "=": "=="}
_CMP = {"==", "!=", "<", "<=", ">", ">="}


def _tokens(text: str) -> list[str]:
    out = []
    for m in _TOKEN.finditer(text):
        if m.lastgroup != "ws":
            tok = m.group()
            out.append(_ALIASES.get(tok, tok))
    return out


class _TermParser:
    def __init__(self, toks: list[str]):
        self.toks = toks
        self.i = 0

    def peek(self, k: int = 0) -> str | None:
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else None

    def next(self) -> str:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of text")
        self.i += 1
        return tok

    def expect(self, tok: str):
        got = self.next()
        if got != tok:
            raise ParseError(f"expected {tok!r}, found {got!r}")

    def ident(self) -> str:
        tok = self.next()
        if tok in _KEYWORDS or not re.match(r"[^\W\d]", tok):
            raise ParseError(f"expected identifier, found {tok!r}")
        return tok

    # top level
    def items(self) -> list:
        out = []
        while self.peek() is not None:
            head = self.next()
            if head == "def":
                name = self.ident()
                params = []
                while self.peek() != ":=":
                    params.append(self.ident())
                self.next()
                out.append(("def", name, tuple(params), self.term()))
            elif head in ("lemma", "theorem"):
                start = self.i
                while self.peek() is not None and self.peek() not in ("def", "lemma", "theorem"):
                    self.i += 1
                out.append(("lemma", tuple(self.toks[start:self.i])))
            else:
                raise ParseError(f"expected a definition, found {head!r}")
        return out

    def term(self):
        tok = self.peek()
        if tok == "let":
            self.next()
            v = self.ident()
            self.expect(":=")
            rhs = self.term()
            self.expect("in")
            return ("let", v, rhs, self.term())
        if tok == "if":
            self.next()
            c = self.term()
            self.expect("then")
            a = self.term()
            self.expect("else")
            return ("if", c, a, self.term())
        if tok == "fun":
            self.next()
            params = [self.ident()]
            while self.peek() != "=>":
                params.append(self.ident())
            self.next()
            body = self.term()
            for p in reversed(params):
                body = ("fun", p, body)
            return body
        return self.compare()

    def compare(self):
        e = self.additive()
        if self.peek() in _CMP:
            op = self.next()
            e = ("bin", op, e, self.additive())
        return e

    def additive(self):
        e = self.multiplicative()
        while self.peek() in ("+", "-"):
            op = self.next()
            e = ("bin", op, e, self.multiplicative())
        return e

    def multiplicative(self):
        e = self.unary()
        while self.peek() in ("*", "/"):
            op = self.next()
            rhs = self.unary()
            if op == "/" and e[0] == "num" and rhs[0] == "num" and rhs[1] != 0:
                e = ("num", e[1] / rhs[1])
            else:
                e = ("bin", op, e, rhs)
        return e

    def unary(self):
        if self.peek() == "-":
            self.next()
            e = self.unary()
            return ("num", -e[1]) if e[0] == "num" else ("neg", e)
        return self.application()

    def _starts_atom(self) -> bool:
        tok = self.peek()
        return tok is not None and tok not in _KEYWORDS and (
            tok == "(" or tok[0].isdigit() or bool(re.match(r"[^\W\d]", tok)))

    def application(self):
        e = self.postfix()
        while self._starts_atom():
            e = ("app", e, self.postfix())
        return e

    def postfix(self):
        e = self.atom()
        while self.peek() == ".":
            self.next()
            e = ("proj", e, self.ident())
        return e

    def atom(self):
        tok = self.next()
        if tok == "(":
            items = [self.term()]
            while self.peek() == ",":
                self.next()
                items.append(self.term())
            self.expect(")")
            return items[0] if len(items) == 1 else ("tuple", *items)
        if tok[0].isdigit():
            return ("num", Fraction(tok))
        if tok in _KEYWORDS or not re.match(r"[^\W\d]", tok):
            raise ParseError(f"unexpected {tok!r}")
        return ("id", tok)


def _canon(t, env: dict, depth: int):
    """Replace bound names by binder depth (de Bruijn levels)."""
    kind = t[0]
    if kind == "id":
        return ("bv", depth - env[t[1]]) if t[1] in env else t
    if kind == "num":
        return t
    if kind == "let":
        _, v, rhs, body = t
        return ("let", _canon(rhs, env, depth), _canon(body, {**env, v: depth + 1}, depth + 1))
    if kind == "fun":
        _, v, body = t
        return ("fun", _canon(body, {**env, v: depth + 1}, depth + 1))
    if kind == "proj":
        return ("proj", _canon(t[1], env, depth), t[2])
    if kind == "bin":
        return ("bin", t[1], _canon(t[2], env, depth), _canon(t[3], env, depth))
    return (kind, *(_canon(k, env, depth) for k in t[1:]))


def parse_emitted(text: str) -> list:
    return _TermParser(_tokens(text)).items()


def canonical_form(text: str) -> list:
    out = []
    for item in parse_emitted(text):
        if item[0] == "def":
            _, name, params, body = item
            env = {p: i + 1 for i, p in enumerate(params)}
            out.append(("def", name, len(params), _canon(body, env, len(params))))
        else:
            out.append(item)
    return out


def alpha_equiv(a: str, b: str) -> bool:
    """True iff both texts define the same things up to bound names and layout.

    Numeric literals are compared as exact rationals, so `0.8` matches `4/5`.
    Lemma blocks are compared token by token.
    """
    return canonical_form(a) == canonical_form(b)
