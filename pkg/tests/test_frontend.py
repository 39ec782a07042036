from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from conftest import fixture_text
from reparam_ppl.errors import DuplicateModel, EmptyProgram, ParseError, PPLError, UnknownDistribution
from reparam_ppl.expr import BinOp, Compare, Cond, Const, Neg, Var
from reparam_ppl.frontend import (
    CallStmt, DistCall, LetStmt, Model, ReturnStmt, SampleStmt, format_program, load_program,
    parse_program, validate,
)


def test_parse_majority():
    (m,) = parse_program(fixture_text("majority.ppl"))
    assert m.name == "majority"
    assert m.stmts == (
        SampleStmt("theta", DistCall("uniform", (Const(Fraction(0)), Const(Fraction(1))))),
        SampleStmt("X", DistCall("bernoulli", (Var("theta"),))),
        ReturnStmt(("theta", "X")),
    )
    assert m.result == ("theta", "X")


def test_parse_decimal_literal_is_exact():
    (_, dp) = parse_program(fixture_text("selection.ppl"))
    phi = dp.stmts[1]
    assert phi.call.args[0] == BinOp("*", Const(Fraction(4, 5)), Var("theta"))
    assert dp.stmts[0] == CallStmt(("theta", "X"), "majority")


def test_empty_program():
    with pytest.raises(EmptyProgram) as exc:
        parse_program("")
    assert exc.value.code == "E_EMPTY"
    assert "no models found" in str(exc.value)


def test_unknown_distribution():
    with pytest.raises(UnknownDistribution) as exc:
        parse_program("def f():\n  x = gamma(1)\n  return (x)\n")
    assert exc.value.code == "E_DIST"
    assert "gamma" in str(exc.value)
    assert (exc.value.line, exc.value.col) == (2, 7)


def test_duplicate_model():
    text = "def f():\n  x = bernoulli(1/2)\n  return (x)\n" * 2
    with pytest.raises(DuplicateModel) as exc:
        parse_program(text)
    assert exc.value.code == "E_DUP"


@pytest.mark.parametrize("text", [
    "def f():\n  x = bernoulli(1/2\n  return (x)\n",
    "def f():\n  return (x)\n  y = 1\n",
    "def f():\n  x = 1\n",
    "def f():\n  x = 1\n   y = 2\n  return (x)\n",
    "  x = 1\n",
    "def f():\n  x = 1 < 2 < 3\n  return (x)\n",
    "def f():\n  x = 1 / 0\n  return (x)\n",
])
def test_syntax_errors(text):
    with pytest.raises(ParseError) as exc:
        parse_program(text)
    assert exc.value.code == "E_SYNTAX"
    assert exc.value.line >= 1


def test_comments_and_blank_lines():
    text = "# header\n\ndef f():  # trailing\n  x = bernoulli(1/2)  # draw\n\n  return (x)\n"
    (m,) = parse_program(text)
    assert len(m.stmts) == 2


def test_single_equals_is_equality_inside_expressions():
    (m,) = parse_program("def f():\n  x = bernoulli(1/2)\n  y = bernoulli(3/4 if x=1 else 1/4)\n"
                         "  return (x, y)\n")
    assert m.stmts[1].call.args[0].test == Compare("==", Var("x"), Const(Fraction(1)))


def test_validate_selection_call_graph():
    prog = load_program(fixture_text("selection.ppl"))
    assert prog.edges == [("demographic_parity", "majority")]
    assert prog.order == ["majority", "demographic_parity"]
    assert prog.info["demographic_parity"].types["X"] == "int"


def test_forward_reference_is_ordered_topologically():
    text = "def g():\n  [a] = f()\n  return (a)\n\ndef f():\n  x = bernoulli(1/2)\n  return (x)\n"
    assert load_program(text).order == ["f", "g"]


@pytest.mark.parametrize("text, code", [
    ("def f():\n  [x] = f()\n  return (x)\n", "E_CYCLE"),
    ("def f():\n  [x] = g()\n  return (x)\n\ndef g():\n  [y] = f()\n  return (y)\n", "E_CYCLE"),
    (fixture_text("majority.ppl") + "\ndef g():\n  [a] = majority()\n  return (a)\n", "E_ARITY"),
    ("def f():\n  x = uniform(0)\n  return (x)\n", "E_ARITY"),
    ("def f():\n  x = bernoulli(y)\n  return (x)\n", "E_UNDEF"),
    ("def f():\n  x = bernoulli(1/2)\n  return (y)\n", "E_UNDEF"),
    ("def f():\n  x = bernoulli(1/2)\n  x = bernoulli(1/3)\n  return (x)\n", "E_REASSIGN"),
    ("def f():\n  [x] = nowhere()\n  return (x)\n", "E_CALLEE"),
    ("def f():\n  z = uniform(0, 1)\n  r = 1 / z\n  return (r)\n", "E_DIV"),
    ("def f():\n  p = (1, 2)\n  x = bernoulli(p)\n  return (x)\n", "E_TYPE"),
])
def test_validation_errors(text, code):
    with pytest.raises(PPLError) as exc:
        load_program(text)
    assert exc.value.code == code


def test_division_by_interval_excluding_zero_is_accepted():
    load_program("def f():\n  a = uniform(1, 2)\n  b = uniform(0, 1)\n  r = b / a\n  return (r)\n")


# -- round trip ----------------------------------------------------------------

NAMES = ["a", "b", "c", "x1", "y2", "theta", "phi"]
consts = st.fractions(min_value=0, max_value=50, max_denominator=12).map(Const)


def _extend(sub):
    arith = st.builds(BinOp, st.sampled_from(["+", "-", "*", "/"]), sub, sub).filter(
        lambda e: not (e.op == "/" and isinstance(e.left, Const) and isinstance(e.right, Const)))
    return (arith
            | st.builds(Compare, st.sampled_from(["==", "!=", "<", "<=", ">", ">="]), sub, sub)
            | st.builds(Cond, sub, sub, sub)
            | st.builds(Neg, sub).filter(lambda e: not isinstance(e.arg, Const)))


# parsing does not check scoping, so one strategy over every name suffices;
# out-of-scope names exercise the validator's use-before-def path
EXPRS = st.recursive(consts | st.sampled_from(NAMES).map(Var), _extend, max_leaves=8)


@st.composite
def models(draw, name="m"):
    defined: list[str] = []
    stmts = []
    for var in draw(st.lists(st.sampled_from(NAMES), min_size=1, max_size=5, unique=True)):
        kind = draw(st.sampled_from(["uniform", "bernoulli", "normal", "let"]))
        if kind == "let":
            stmts.append(LetStmt(var, draw(EXPRS)))
        else:
            n = {"uniform": 2, "bernoulli": 1, "normal": 2}[kind]
            args = tuple(draw(EXPRS) for _ in range(n))
            stmts.append(SampleStmt(var, DistCall(kind, args)))
        defined.append(var)
    ret = draw(st.lists(st.sampled_from(defined), min_size=1, max_size=4))
    stmts.append(ReturnStmt(tuple(ret)))
    return Model(name, tuple(stmts))


@settings(max_examples=1000, suppress_health_check=[HealthCheck.too_slow])
@given(m=models())
def test_parse_print_round_trip(m):
    text = format_program([m])
    parsed = parse_program(text)
    assert parsed == [m]
    assert format_program(parsed) == text


@settings(max_examples=300, suppress_health_check=[HealthCheck.too_slow])
@given(m=models())
def test_validate_is_total(m):
    # accepts or raises a coded diagnostic; never any other exception
    try:
        validate([m])
    except PPLError as exc:
        assert exc.code.startswith("E_")
