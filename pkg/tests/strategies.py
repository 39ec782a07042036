"""Hypothesis strategies producing valid source programs.

Every generated program defines a helper `coin` and a model `m`. Names are
split into probability-valued ones (usable as Bernoulli parameters) and
unrestricted reals, so every program is well-defined on every input.
Expressions are drawn from a small pool and reused on purpose, which gives
CSE something to share.
"""

from __future__ import annotations

from hypothesis import strategies as st

PROB_CONSTS = ["0", "1", "1/2", "1/3", "2/5", "3/4", "9/10"]
CALLEE = "def coin():\n  c = bernoulli(1/2)\n  return (c)\n\n"


@st.composite
def model_sources(draw, continuous: bool = True, max_stmts: int = 7) -> str:
    probs: list[str] = []
    reals: list[str] = []
    pool: list[str] = []
    lines: list[str] = []

    def pick(xs):
        return draw(st.sampled_from(xs))

    def prob_expr() -> str:
        if pool and draw(st.booleans()):
            return pick(pool)
        kinds = ["const"] + (["var", "prod", "compl", "cond"] if probs else [])
        k = pick(kinds)
        if k == "const":
            e = pick(PROB_CONSTS)
        elif k == "var":
            e = pick(probs)
        elif k == "prod":
            e = f"{pick(probs)} * {pick(probs)}"
        elif k == "compl":
            e = f"1 - {pick(probs)}"
        else:
            e = f"{pick(PROB_CONSTS)} if {pick(probs)} < {pick(probs)} else {pick(PROB_CONSTS)}"
        pool.append(e)
        return e

    def real_expr() -> str:
        names = probs + reals
        if not names:
            return pick(["0", "2", "1/2"])
        op = pick(["+", "-", "*"])
        return f"{pick(names)} {op} {pick(names + ['1', '3/2'])}"

    kinds = ["bernoulli", "prob_let", "call"]
    if continuous:
        kinds += ["uniform01", "uniform", "normal", "real_let"]
    for i in range(draw(st.integers(1, max_stmts))):
        v = f"v{i}"
        k = pick(kinds)
        if k == "bernoulli":
            lines.append(f"{v} = bernoulli({prob_expr()})")
            probs.append(v)
        elif k == "prob_let":
            lines.append(f"{v} = {prob_expr()}")
            probs.append(v)
        elif k == "call":
            lines.append(f"[{v}] = coin()")
            probs.append(v)
        elif k == "uniform01":
            lines.append(f"{v} = uniform(0, 1)")
            probs.append(v)
        elif k == "uniform":
            e = real_expr()
            lines.append(f"{v} = uniform({e}, {e} + 1)")
            reals.append(v)
        elif k == "normal":
            lines.append(f"{v} = normal({real_expr()}, 1)")
            reals.append(v)
        else:
            lines.append(f"{v} = {real_expr()}")
            reals.append(v)
    names = probs + reals
    ret = draw(st.lists(st.sampled_from(names), min_size=1, max_size=4, unique=True))
    body = "".join(f"  {s}\n" for s in lines)
    return CALLEE + f"def m():\n{body}  return ({', '.join(ret)})\n"
