"""Multivariate polynomials with exact rational coefficients over unit-cube variables.

Used by the exact pushforward oracle: continuous draws stay symbolic, and
probabilities come out as exact integrals over [0,1]^n.
"""

from __future__ import annotations

from fractions import Fraction

# a monomial is a sorted tuple of (variable index, power)
_ONE = ()


def _mono_mul(a: tuple, b: tuple) -> tuple:
    powers = dict(a)
    for v, k in b:
        powers[v] = powers.get(v, 0) + k
    return tuple(sorted(powers.items()))


class Poly:
    __slots__ = ("terms", "_hash")

    def __init__(self, terms=None):
        self.terms = {m: Fraction(c) for m, c in (terms or {}).items() if c != 0}
        self._hash = None

    @classmethod
    def const(cls, c) -> "Poly":
        return cls({_ONE: Fraction(c)})

    @classmethod
    def var(cls, i: int) -> "Poly":
        return cls({((i, 1),): Fraction(1)})

    @classmethod
    def lift(cls, x) -> "Poly":
        return x if isinstance(x, Poly) else cls.const(x)

    def is_const(self) -> bool:
        return all(m == _ONE for m in self.terms)

    def const_value(self) -> Fraction:
        if not self.is_const():
            raise ValueError("polynomial is not constant")
        return self.terms.get(_ONE, Fraction(0))

    def variables(self) -> set[int]:
        return {v for m in self.terms for v, _ in m}

    def __add__(self, o):
        o = Poly.lift(o)
        out = dict(self.terms)
        for m, c in o.terms.items():
            out[m] = out.get(m, 0) + c
        return Poly(out)

    __radd__ = __add__

    def __neg__(self):
        return Poly({m: -c for m, c in self.terms.items()})

    def __sub__(self, o):
        return self + (-Poly.lift(o))

    def __rsub__(self, o):
        return Poly.lift(o) - self

    def __mul__(self, o):
        o = Poly.lift(o)
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in o.terms.items():
                m = _mono_mul(m1, m2)
                out[m] = out.get(m, 0) + c1 * c2
        return Poly(out)

    __rmul__ = __mul__

    def integrate(self) -> Fraction:
        """Integral over the unit cube in all variables."""
        total = Fraction(0)
        for m, c in self.terms.items():
            term = c
            for _, k in m:
                term /= k + 1
            total += term
        return total

    def __eq__(self, o):
        if isinstance(o, Poly):
            return self.terms == o.terms
        if isinstance(o, (int, Fraction)):
            return self.is_const() and self.const_value() == o
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = (hash(self.const_value()) if self.is_const()
                          else hash(frozenset(self.terms.items())))
        return self._hash

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for m, c in sorted(self.terms.items()):
            mono = "*".join(f"U{v}" + (f"^{k}" if k > 1 else "") for v, k in m)
            parts.append(f"{c}" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)
