"""Primitive distributions and their inverse-CDF generators.

Each generator turns one Uniform[0,1] draw into a draw from the primitive.
Uniform and Bernoulli stay exact when given fractions; Normal always
returns a float.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class Uniform:
    a: object = 0
    b: object = 1

    def __post_init__(self):
        if not self.a < self.b:
            raise DomainError(f"uniform needs a < b, got a={self.a}, b={self.b}")


@dataclass(frozen=True)
class Bernoulli:
    p: object

    def __post_init__(self):
        if not 0 <= self.p <= 1:
            raise DomainError(f"bernoulli needs 0 <= p <= 1, got {self.p}")


@dataclass(frozen=True)
class Normal:
    mu: object = 0
    sigma: object = 1

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError(f"normal needs sigma > 0, got {self.sigma}")


Primitive = Union[Uniform, Bernoulli, Normal]


def _check_unit(u, name: str):
    if not 0 <= u <= 1:
        raise DomainError(f"{name}: uniform input {u} outside [0,1]")


def gen_uniform(a, b, u):
    if not a < b:
        raise DomainError(f"gen_uniform: need a < b, got a={a}, b={b}")
    _check_unit(u, "gen_uniform")
    return a + (b - a) * u


def gen_bernoulli(p, u) -> int:
    if not 0 <= p <= 1:
        raise DomainError(f"gen_bernoulli: p={p} outside [0,1]")
    _check_unit(u, "gen_bernoulli")
    return 1 if u < p else 0


def gen_normal(mu, sigma, u) -> float:
    if not sigma > 0:
        raise DomainError(f"gen_normal: need sigma > 0, got {sigma}")
    if not 0 < u < 1:
        raise DomainError(f"gen_normal: quantile diverges at u={u}")
    return float(mu) + float(sigma) * normal_quantile(float(u))


# Acklam's rational approximation to the standard normal quantile
# (relative error < 1.15e-9), followed by one Halley step against erfc.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425
_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


def _acklam_lower(p: float) -> float:
    """Quantile for p <= 0.5."""
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    q = p - 0.5
    r = q * q
    return ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
            / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))


def _lower_quantile(p: float) -> float:
    x = _acklam_lower(p)
    # lower-tail residual via erfc keeps relative accuracy for tiny p
    if 0.5 * x * x > 700.0:
        return x  # beyond ~1e-300 the refinement would overflow; Acklam alone is used
    e = 0.5 * math.erfc(-x / _SQRT2) - p
    step = e * _SQRT2PI * math.exp(0.5 * x * x)
    return x - step / (1.0 + 0.5 * x * step)


def normal_quantile(p: float) -> float:
    """Standard normal inverse CDF on the open interval (0, 1)."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"normal quantile undefined at {p}")
    if p <= 0.5:
        return _lower_quantile(p)
    return -_lower_quantile(1.0 - p)


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / _SQRT2)


def cdf(prim: Primitive, x) -> object:
    """Right-continuous CDF. Exact for Uniform/Bernoulli on exact inputs."""
    if isinstance(prim, Uniform):
        if x <= prim.a:
            return Fraction(0) if isinstance(x, (int, Fraction)) else 0.0
        if x >= prim.b:
            return Fraction(1) if isinstance(x, (int, Fraction)) else 1.0
        return (x - prim.a) / (prim.b - prim.a)
    if isinstance(prim, Bernoulli):
        if x < 0:
            return 0
        if x < 1:
            return 1 - prim.p
        return 1
    if isinstance(prim, Normal):
        return normal_cdf((float(x) - float(prim.mu)) / float(prim.sigma))
    raise TypeError(f"not a primitive: {prim!r}")


def quantile(prim: Primitive, u):
    return generate(prim, u)


def generate(prim: Primitive, u):
    if isinstance(prim, Uniform):
        return gen_uniform(prim.a, prim.b, u)
    if isinstance(prim, Bernoulli):
        return gen_bernoulli(prim.p, u)
    if isinstance(prim, Normal):
        return gen_normal(prim.mu, prim.sigma, u)
    raise TypeError(f"not a primitive: {prim!r}")


def uniform_arity(prim: Primitive) -> int:
    """Number of Uniform[0,1] inputs the generator consumes."""
    if isinstance(prim, (Uniform, Bernoulli, Normal)):
        return 1
    raise TypeError(f"not a primitive: {prim!r}")


GENERATORS = {"uniform": gen_uniform, "bernoulli": gen_bernoulli, "normal": gen_normal}
ARITY = {"uniform": 2, "bernoulli": 1, "normal": 2}
PRIMITIVES = {"uniform": Uniform, "bernoulli": Bernoulli, "normal": Normal}


def apply_generator(dist: str, params, u):
    return GENERATORS[dist](*params, u)


# -- vectorised generators (Monte Carlo paths) --------------------------------

def _check_unit_batch(u, name):
    u = np.asarray(u)
    if np.any((u < 0) | (u > 1)):
        raise DomainError(f"{name}: uniform input outside [0,1]")


def gen_uniform_batch(a, b, u):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(~(a < b)):
        raise DomainError("gen_uniform: need a < b")
    _check_unit_batch(u, "gen_uniform")
    return a + (b - a) * u


def gen_bernoulli_batch(p, u):
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p > 1)):
        raise DomainError("gen_bernoulli: p outside [0,1]")
    _check_unit_batch(u, "gen_bernoulli")
    return (u < p).astype(np.int64)


_quantile_ufunc = np.vectorize(normal_quantile, otypes=[float])


def gen_normal_batch(mu, sigma, u):
    sigma = np.asarray(sigma, dtype=float)
    if np.any(~(sigma > 0)):
        raise DomainError("gen_normal: need sigma > 0")
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0) | (u >= 1)):
        raise DomainError("gen_normal: quantile diverges at 0 or 1")
    return np.asarray(mu, dtype=float) + sigma * _quantile_ufunc(u)


BATCH_GENERATORS = {"uniform": gen_uniform_batch, "bernoulli": gen_bernoulli_batch,
                    "normal": gen_normal_batch}


def generate_batch(prim: Primitive, u: np.ndarray) -> np.ndarray:
    """Vectorised `generate` over an array of uniforms."""
    if isinstance(prim, Uniform):
        return gen_uniform_batch(float(prim.a), float(prim.b), u)
    if isinstance(prim, Bernoulli):
        return gen_bernoulli_batch(float(prim.p), u)
    if isinstance(prim, Normal):
        return gen_normal_batch(float(prim.mu), float(prim.sigma), u)
    raise TypeError(f"not a primitive: {prim!r}")
