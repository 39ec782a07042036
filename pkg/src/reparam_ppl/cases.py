"""The two worked case studies: PAC learning of decision stumps, and a
demographic-parity check on a two-stage selection model.

Both run against models compiled from source by the normal pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import programs, rng
from .dist import Primitive, Uniform, cdf, gen_bernoulli, generate_batch
from .reparam import TranslationTable, translate_program
from .semantics import (
    eval_pure, eval_pure_batch, parse_event, pushforward_exact, sample_outputs,
)

DP_MODEL = "demographic_parity"
FOUR_FIFTHS = Fraction(4, 5)


# -- report rows ---------------------------------------------------------------------

@dataclass(frozen=True)
class Row:
    name: str
    value: object
    tolerance: str
    passed: bool

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}  value={_fmt(self.value)}  {self.tolerance}"

    def tsv(self) -> str:
        return "\t".join([self.name, _fmt(self.value), self.tolerance, "pass" if self.passed else "fail"])


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def format_report(rows: list[Row], header: str = "", tsv: bool = False) -> str:
    lines = [f"# {header}"] if header else []
    if tsv:
        lines.append("metric\tvalue\ttolerance\tresult")
        lines += [r.tsv() for r in rows]
    else:
        lines += [r.line() for r in rows]
    return "\n".join(lines) + "\n"


# -- decision stumps -----------------------------------------------------------------

def pac_sample_size(epsilon: float, delta: float) -> int:
    """Sufficient training-set size ceil(ln(1/delta) / epsilon)."""
    return math.ceil(math.log(1 / delta) / epsilon)


@dataclass(frozen=True)
class StumpSetup:
    t: float = 0.5
    n: int = 24
    epsilon: float = 0.1
    delta: float = 0.1
    dist: Primitive = field(default_factory=lambda: Uniform(0, 1))

    def __post_init__(self):
        if not (0 < self.epsilon < 1 and 0 < self.delta < 1):
            raise ValueError("epsilon and delta must lie in (0, 1)")
        if self.n < 0:
            raise ValueError("n must be nonnegative")
        if isinstance(self.dist, Uniform) and not self.dist.a <= self.t <= self.dist.b:
            raise ValueError(f"target {self.t} outside the support")


def label(c: float, x: float) -> int:
    """Stump labelling: points at or below the threshold are positive."""
    return 1 if x <= c else 0


def choose(data) -> float:
    """Largest positive example, or 0 when there is none."""
    return max([x if y == 1 else 0 for x, y in data] + [0])


def stump_error(h: float, setup: StumpSetup) -> float:
    """Probability mass on which stumps h and t disagree: mu((min, max])."""
    lo, hi = min(h, setup.t), max(h, setup.t)
    if isinstance(setup.dist, Uniform) and (setup.dist.a, setup.dist.b) == (0, 1):
        lo, hi = min(max(lo, 0.0), 1.0), min(max(hi, 0.0), 1.0)
        return hi - lo
    return float(cdf(setup.dist, hi)) - float(cdf(setup.dist, lo))


def _stump_error_batch(h: np.ndarray, setup: StumpSetup) -> np.ndarray:
    lo, hi = np.minimum(h, setup.t), np.maximum(h, setup.t)
    if isinstance(setup.dist, Uniform) and (setup.dist.a, setup.dist.b) == (0, 1):
        return np.clip(hi, 0, 1) - np.clip(lo, 0, 1)
    f = np.vectorize(lambda x: float(cdf(setup.dist, x)))
    return f(hi) - f(lo)


def pac_trials(setup: StumpSetup, trials: int, seed: int, start: int = 0) -> np.ndarray:
    """Per-trial stump errors. Trial i reads its examples from stream row start+i."""
    u = rng.uniform_matrix(seed, start, trials, max(setup.n, 1))[:, :setup.n]
    x = generate_batch(setup.dist, u)
    positive = x <= setup.t
    h = np.where(positive, x, 0.0).max(axis=1, initial=0.0)
    return _stump_error_batch(h, setup)


def pac_estimate(setup: StumpSetup, trials: int, seed: int) -> float:
    """Fraction of trials whose trained stump has error above epsilon."""
    if trials < 1:
        raise ValueError("need at least one trial")
    failures = 0
    for a, b in rng.shard_ranges(trials, -(-trials // 4096)):
        failures += int((pac_trials(setup, b - a, seed, a) > setup.epsilon).sum())
    return failures / trials


def pac_failure_probability(setup: StumpSetup) -> float:
    """Exact failure law for a continuous example distribution.

    Training fails iff no example lands in the mass-epsilon band just below t,
    which has probability (1 - epsilon)^n when mu((-inf, t]) > epsilon and
    is impossible otherwise.
    """
    if float(cdf(setup.dist, setup.t)) <= setup.epsilon:
        return 0.0
    return (1 - setup.epsilon) ** setup.n


def verify_pac(setup: StumpSetup, trials: int, seed: int) -> list[Row]:
    rate = pac_estimate(setup, trials, seed)
    q = pac_failure_probability(setup)
    se = math.sqrt(q * (1 - q) / trials)
    return [
        Row("pac.failure_rate<=delta", rate, f"<= {setup.delta}", rate <= setup.delta),
        Row("pac.failure_rate~closed_form", rate, f"|x - {q:.6g}| <= 4*{se:.3g}",
            abs(rate - q) <= 4 * se),
    ]


# -- demographic parity --------------------------------------------------------------

@lru_cache(maxsize=None)
def dp_compiled() -> tuple:
    """(program, table) for the two-stage selection model, compiled from source."""
    program = programs.load("selection")
    return program, translate_program(program)


def dp_table() -> TranslationTable:
    return dp_compiled()[1]


@dataclass(frozen=True)
class DPInputs:
    theta: float
    X: int
    u3: float
    u4: float

    def __post_init__(self):
        if not 0 <= self.theta <= 1 or not 0 <= self.u3 <= 1 or not 0 <= self.u4 <= 1:
            raise ValueError("theta, u3, u4 must lie in [0, 1]")
        if self.X not in (0, 1):
            raise ValueError("X must be 0 or 1")

    def vector(self) -> tuple:
        return ((self.theta, self.X), (self.u3, self.u4))


def dp_subset_check(t: float, inp: DPInputs) -> bool:
    """Selection at rate 4/5*t implies selection by the model, for this input."""
    if inp.theta != t:
        raise ValueError("inputs must fix theta = t")
    table = dp_table()
    y_lower = gen_bernoulli(FOUR_FIFTHS * t, inp.u4)
    y = eval_pure(table[DP_MODEL].fn, inp.vector(), table)[1][1]
    return y_lower != 1 or y == 1


def boundary_grid(ts=(0.0, 0.25, 0.5, 0.75, 1.0)) -> list[DPInputs]:
    """Inputs at and around the 4/5*t threshold, including the cube corners."""
    out = []
    for t in ts:
        edge = float(FOUR_FIFTHS * Fraction(t))
        us = sorted({min(1.0, max(0.0, x)) for x in (0.0, edge - 1e-12, edge, edge + 1e-12, t, 1.0)})
        for u3 in us:
            for u4 in us:
                for x in (0, 1):
                    out.append(DPInputs(t, x, u3, u4))
    return out


def dp_subset_violations(n: int, seed: int) -> tuple[int, int]:
    """Violations of the subset property on n random inputs and on the grid."""
    table = dp_table()
    fn = table[DP_MODEL].fn
    u = rng.uniform_matrix(seed, 0, n, 4)
    t, u2, u3, u4 = u.T
    x = (u2 < t).astype(np.int64)
    out = eval_pure_batch(fn, ((t, x), (u3, u4)), table)
    y_lower = (u4 < float(FOUR_FIFTHS) * t)
    random_bad = int((y_lower & (out[1][1] != 1)).sum())
    grid_bad = sum(not dp_subset_check(g.theta, g) for g in boundary_grid())
    return random_bad, grid_bad


def dp_exact() -> tuple[Fraction, Fraction]:
    table = dp_table()
    fn = table[DP_MODEL].fn
    return (pushforward_exact(fn, parse_event("v.fst.snd = 1"), table),
            pushforward_exact(fn, parse_event("v.snd.snd = 1"), table))


def _se(p: float, n: int) -> float:
    if p in (0.0, 1.0):
        return 0.5 / math.sqrt(n)
    return math.sqrt(p * (1 - p) / n)


def dp_estimates(trials: int, seed: int) -> tuple[float, float, float, float]:
    """Monte Carlo (p_X, se_X, p_Y, se_Y) from one coupled sample."""
    if trials < 1:
        raise ValueError("need at least one trial")
    table = dp_table()
    fn = table[DP_MODEL].fn
    hits_x = hits_y = 0
    for a, b in rng.shard_ranges(trials, -(-trials // 250_000)):
        out = sample_outputs(fn, seed, a, b - a, table)
        hits_x += int((out[0][1] == 1).sum())
        hits_y += int((out[1][1] == 1).sum())
    px, py = hits_x / trials, hits_y / trials
    return px, _se(px, trials), py, _se(py, trials)


def dp_inequality(trials: int, seed: int) -> tuple[float, float, bool]:
    """Estimates of Pr[X=1], Pr[Y=1] and whether 4/5 * p_X <= p_Y (up to 4 se)."""
    px, sx, py, sy = dp_estimates(trials, seed)
    combined = math.hypot(0.8 * sx, sy)
    return px, py, 0.8 * px <= py + 4 * combined


def verify_dp(trials: int, seed: int, subset_n: int = 100_000) -> list[Row]:
    ex, ey = dp_exact()
    px, sx, py, sy = dp_estimates(trials, seed)
    combined = math.hypot(0.8 * sx, sy)
    random_bad, grid_bad = dp_subset_violations(subset_n, seed)
    return [
        Row("dp.exact.p_X", ex, "== 1/2", ex == Fraction(1, 2)),
        Row("dp.exact.p_Y", ey, "== 7/10", ey == Fraction(7, 10)),
        Row("dp.exact.four_fifths", FOUR_FIFTHS * ex, f"<= {ey}", FOUR_FIFTHS * ex <= ey),
        Row("dp.mc.p_X", px, f"|x - 1/2| <= 4*{sx:.3g}", abs(px - float(ex)) <= 4 * sx),
        Row("dp.mc.p_Y", py, f"|x - 7/10| <= 4*{sy:.3g}", abs(py - float(ey)) <= 4 * sy),
        Row("dp.mc.four_fifths", 0.8 * px, f"<= {py:.6g} + 4*{combined:.3g}",
            0.8 * px <= py + 4 * combined),
        Row("dp.subset.random", random_bad, f"== 0 of {subset_n}", random_bad == 0),
        Row("dp.subset.grid", grid_bad, f"== 0 of {len(boundary_grid())}", grid_bad == 0),
    ]
