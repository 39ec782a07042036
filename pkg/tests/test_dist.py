from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reparam_ppl import rng
from reparam_ppl.dist import (
    Bernoulli, Normal, Uniform, cdf, gen_bernoulli, gen_normal, gen_uniform, generate,
    generate_batch, normal_quantile, quantile, uniform_arity,
)
from reparam_ppl.errors import DomainError

# Independent oracle: standard normal CDF through mpmath's erf at 50 digits.
mpmath.mp.dps = 50


def phi_oracle(x) -> float:
    return float((1 + mpmath.erf(mpmath.mpf(x) / mpmath.sqrt(2))) / 2)


def quantile_oracle(p) -> float:
    """Bisection on the high-precision CDF; floats are converted exactly."""
    lo, hi = mpmath.mpf(-40), mpmath.mpf(40)
    target = mpmath.mpf(p)
    for _ in range(200):
        mid = (lo + hi) / 2
        if (1 + mpmath.erf(mid / mpmath.sqrt(2))) / 2 < target:
            lo = mid
        else:
            hi = mid
    return float(lo)


# Values frozen from the oracles above (50-digit evaluation).
PHI_1_96 = 0.97500210485177956586
PHI_1 = 0.84134474606854294859
Q_0975 = 1.9599639845400542355
Q_0975002 = 1.9599982058538511846
Q_0001 = -3.0902323061678135415
Q_1E12 = -7.0344838253011319298


def test_frozen_values_match_oracle():
    assert phi_oracle("1.96") == pytest.approx(PHI_1_96, abs=1e-15)
    assert quantile_oracle("0.975") == pytest.approx(Q_0975, abs=1e-12)


def test_gen_uniform_examples():
    assert gen_uniform(0, 1, 0.5) == 0.5
    assert gen_uniform(2, 4, 0.25) == 2.5
    assert gen_uniform(0.4, 1, 0.0) == 0.4


def test_gen_uniform_exact_on_rationals():
    assert gen_uniform(Fraction(1, 3), 1, Fraction(1, 2)) == Fraction(2, 3)


@pytest.mark.parametrize("args", [(0, 1, -0.1), (0, 1, 1.5), (1, 1, 0.5), (2, 1, 0.5)])
def test_gen_uniform_domain(args):
    with pytest.raises(DomainError):
        gen_uniform(*args)


def test_gen_bernoulli_examples():
    assert gen_bernoulli(0.5, 0.3) == 1
    assert all(gen_bernoulli(0.0, u) == 0 for u in (0.0, 0.2, 0.999, 1.0))
    assert gen_bernoulli(0.4, 0.4) == 0


@pytest.mark.parametrize("args", [(-0.1, 0.5), (1.1, 0.5), (0.5, -0.01), (0.5, 1.01)])
def test_gen_bernoulli_domain(args):
    with pytest.raises(DomainError):
        gen_bernoulli(*args)


def test_gen_normal_examples():
    assert gen_normal(0, 1, 0.5) == 0.0
    assert gen_normal(3, 2, 0.5) == 3.0
    assert gen_normal(0, 1, 0.975002) == pytest.approx(Q_0975002, abs=1e-9)
    assert round(gen_normal(0, 1, 0.975002), 3) == 1.960


@pytest.mark.parametrize("u", [0.0, 1.0, -0.5])
def test_gen_normal_domain(u):
    with pytest.raises(DomainError):
        gen_normal(0, 1, u)


def test_normal_quantile_against_frozen_oracle():
    assert normal_quantile(0.975) == pytest.approx(Q_0975, abs=1e-12)
    assert normal_quantile(0.001) == pytest.approx(Q_0001, abs=1e-12)
    assert normal_quantile(1e-12) == pytest.approx(Q_1E12, abs=1e-9)
    assert normal_quantile(1 - 0.001) == pytest.approx(-Q_0001, abs=1e-12)


def test_normal_quantile_error_bound_on_grid():
    # declared accuracy: absolute error <= 1e-9 on [1e-12, 1 - 1e-12]
    grid = [1e-12, 1e-9, 1e-6, 1e-3, 0.02425, 0.1, 0.3, 0.5, 0.7, 0.9, 0.97575, 0.999, 1 - 1e-9]
    for p in grid:
        assert abs(normal_quantile(p) - quantile_oracle(p)) <= 1e-9, p


def test_cdf_examples():
    assert cdf(Uniform(0, 1), 0.3) == 0.3
    assert cdf(Bernoulli(Fraction(2, 5)), 0) == Fraction(3, 5)
    assert cdf(Normal(0, 1), 1.96) == pytest.approx(PHI_1_96, abs=1e-14)
    assert cdf(Normal(0, 1), 1.0) == pytest.approx(PHI_1, abs=1e-14)


def test_cdf_right_continuous_at_atoms():
    b = Bernoulli(Fraction(1, 4))
    assert cdf(b, -1e-300) == 0
    assert cdf(b, 0) == Fraction(3, 4)
    assert cdf(b, 1) == 1
    assert cdf(Uniform(2, 4), 1) == 0 and cdf(Uniform(2, 4), 5) == 1


def test_uniform_arity():
    assert uniform_arity(Uniform(0, 1)) == 1
    assert uniform_arity(Bernoulli(Fraction(1, 2))) == 1
    assert uniform_arity(Normal(3, 2)) == 1


@pytest.mark.parametrize("bad", [lambda: Uniform(1, 1), lambda: Bernoulli(2), lambda: Normal(0, 0)])
def test_primitive_invariants(bad):
    with pytest.raises(DomainError):
        bad()


@settings(max_examples=1000)
@given(a=st.floats(-1e3, 1e3), width=st.floats(1e-3, 1e3), u=st.floats(0, 1))
def test_uniform_quantile_cdf_consistency(a, width, u):
    prim = Uniform(a, a + width)
    assert abs(cdf(prim, quantile(prim, u)) - u) <= 1e-8


@settings(max_examples=1000)
@given(mu=st.floats(-100, 100), sigma=st.floats(1e-2, 1e2), u=st.floats(1e-12, 1 - 1e-12))
def test_normal_quantile_cdf_consistency(mu, sigma, u):
    prim = Normal(mu, sigma)
    assert abs(cdf(prim, quantile(prim, u)) - u) <= 1e-8


def test_quantile_cdf_consistency_grid():
    grid = [(i + 0.5) / 1000 for i in range(1000)]
    for prim in (Uniform(0, 1), Uniform(-3, 7), Normal(0, 1), Normal(3, 2)):
        assert max(abs(cdf(prim, quantile(prim, u)) - u) for u in grid) <= 1e-8


@settings(max_examples=1000)
@given(num=st.integers(0, 1000), den=st.integers(1, 1000))
def test_bernoulli_one_set_has_measure_p(num, den):
    # {u : u < p} is the interval [0, p); its Lebesgue measure is p exactly
    p = Fraction(min(num, den), den)
    assert gen_bernoulli(p, p) == 0
    if p > 0:
        assert gen_bernoulli(p, p - Fraction(1, 10 ** 9) if p > Fraction(1, 10 ** 9) else 0) == 1
    assert cdf(Bernoulli(p), 0) == 1 - p


@settings(max_examples=300)
@given(u1=st.floats(0, 1), u2=st.floats(0, 1))
def test_generators_monotone(u1, u2):
    lo, hi = min(u1, u2), max(u1, u2)
    assert gen_uniform(-1, 5, lo) <= gen_uniform(-1, 5, hi)
    assert gen_bernoulli(0.3, lo) >= gen_bernoulli(0.3, hi)  # 1 on the left of p
    if 0 < lo and hi < 1:
        assert gen_normal(0, 1, lo) <= gen_normal(0, 1, hi)


def _ks_statistic(sample: np.ndarray, cdf_fn) -> float:
    x = np.sort(sample)
    n = len(x)
    f = np.array([cdf_fn(v) for v in x])
    i = np.arange(1, n + 1)
    return float(max((i / n - f).max(), (f - (i - 1) / n).max()))


@pytest.mark.parametrize("prim", [Uniform(0, 1), Uniform(2, 5), Normal(0, 1), Normal(3, 2)])
def test_pushforward_kolmogorov_smirnov(prim):
    n = 100_000
    u = rng.uniform_matrix(2024, 0, n, 1)[:, 0]
    x = generate_batch(prim, u)
    d = _ks_statistic(x, lambda v: float(cdf(prim, v)))
    assert d < 1.95 / math.sqrt(n)  # alpha = 0.001 critical value


def test_batch_generators_match_scalar():
    u = rng.uniform_matrix(5, 0, 200, 1)[:, 0]
    for prim in (Uniform(-1, 2), Bernoulli(0.3), Normal(1, 2)):
        batch = generate_batch(prim, u)
        assert [generate(prim, float(v)) for v in u] == list(batch)
