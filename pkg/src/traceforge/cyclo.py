"""Exact arithmetic in cyclotomic fields Q(zeta_n).

Elements are stored as rational coefficient vectors in the power basis
1, zeta, ..., zeta^(phi(n)-1), i.e. reduced modulo the n-th cyclotomic
polynomial, so equality is a plain comparison.  Elements of different
orders are compared after lifting to the lcm.
"""

from __future__ import annotations

import cmath
import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence, Tuple


@lru_cache(maxsize=None)
def cyclotomic_poly(n: int) -> Tuple[int, ...]:
    """Integer coefficients (constant term first) of Phi_n."""
    if n < 1:
        raise ValueError("n must be positive")
    # x^n - 1 divided by Phi_d for every proper divisor d
    num = [-1] + [0] * (n - 1) + [1]
    for d in range(1, n):
        if n % d == 0:
            num = _poly_div_exact(num, list(cyclotomic_poly(d)))
    return tuple(num)


def _poly_div_exact(num, den):
    num = list(num)
    out = [0] * (len(num) - len(den) + 1)
    lead = den[-1]
    for i in range(len(out) - 1, -1, -1):
        c = num[i + len(den) - 1] // lead
        out[i] = c
        for j, dj in enumerate(den):
            num[i + j] -= c * dj
    if any(num[: len(den) - 1]):
        raise ArithmeticError("inexact polynomial division")
    return out


def _reduce(n: int, coeffs: Sequence) -> Tuple[Fraction, ...]:
    """Reduce sum coeffs[k] zeta_n^k into the power basis of degree phi(n)."""
    phi = cyclotomic_poly(n)
    deg = len(phi) - 1
    c = [Fraction(x) for x in coeffs]
    # zeta^n = 1 first, then divide by the monic Phi_n
    if len(c) > n:
        folded = [Fraction(0)] * n
        for k, x in enumerate(c):
            folded[k % n] += x
        c = folded
    for k in range(len(c) - 1, deg - 1, -1):
        x = c[k]
        if x:
            for j in range(deg + 1):
                c[k - deg + j] -= x * phi[j]
    c = c[:deg] + [Fraction(0)] * max(0, deg - len(c))
    return tuple(c)


class Cyclo:
    """An element of Q(zeta_n), zeta_n = exp(2 pi i / n)."""

    __slots__ = ("n", "coeffs")

    def __init__(self, n: int, coeffs: Iterable = ()):
        self.n = int(n)
        self.coeffs = _reduce(self.n, list(coeffs))

    # constructors
    @classmethod
    def rational(cls, x) -> "Cyclo":
        return cls(1, [Fraction(x)])

    @classmethod
    def root(cls, n: int, k: int = 1) -> "Cyclo":
        """zeta_n^k."""
        k %= n
        c = [0] * n
        c[k] = 1
        return cls(n, c)

    @classmethod
    def from_counts(cls, n: int, counts: Sequence, denominator: int = 1) -> "Cyclo":
        """(sum_k counts[k] zeta_n^k) / denominator."""
        d = Fraction(1, int(denominator))
        return cls(n, [Fraction(int(x)) * d for x in counts])

    # structure
    def lift(self, m: int) -> "Cyclo":
        if m % self.n:
            raise ValueError(f"cannot lift order {self.n} to {m}")
        step = m // self.n
        c = [Fraction(0)] * (len(self.coeffs) * step or 1)
        for k, x in enumerate(self.coeffs):
            c[k * step] = x
        return Cyclo(m, c)

    def _common(self, other) -> Tuple["Cyclo", "Cyclo"]:
        if not isinstance(other, Cyclo):
            other = Cyclo.rational(other)
        m = self.n * other.n // math.gcd(self.n, other.n)
        a = self if self.n == m else self.lift(m)
        b = other if other.n == m else other.lift(m)
        return a, b

    def conj(self) -> "Cyclo":
        c = [Fraction(0)] * self.n
        for k, x in enumerate(self.coeffs):
            c[(-k) % self.n] += x
        return Cyclo(self.n, c)

    def is_rational(self) -> bool:
        return all(x == 0 for x in self.coeffs[1:])

    def to_fraction(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self!r} is not rational")
        return self.coeffs[0] if self.coeffs else Fraction(0)

    # arithmetic
    def __add__(self, other):
        a, b = self._common(other)
        return Cyclo(a.n, [x + y for x, y in zip(a.coeffs, b.coeffs)])

    __radd__ = __add__

    def __neg__(self):
        return Cyclo(self.n, [-x for x in self.coeffs])

    def __sub__(self, other):
        return self + (-_as_cyclo(other))

    def __rsub__(self, other):
        return _as_cyclo(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return Cyclo(self.n, [x * other for x in self.coeffs])
        a, b = self._common(other)
        prod = [Fraction(0)] * (2 * len(a.coeffs))
        for i, x in enumerate(a.coeffs):
            if x:
                for j, y in enumerate(b.coeffs):
                    prod[i + j] += x * y
        return Cyclo(a.n, prod)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * (Fraction(1) / Fraction(other))
        other = _as_cyclo(other)
        if other.is_rational():
            return self * (1 / other.to_fraction())
        raise NotImplementedError("division by an irrational cyclotomic number")

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Cyclo.rational(other)
        if not isinstance(other, Cyclo):
            return NotImplemented
        a, b = self._common(other)
        return a.coeffs == b.coeffs

    def __hash__(self):
        # hash the minimal-order representative through its complex value
        z = complex(self)
        return hash((round(z.real, 9), round(z.imag, 9)))

    def __complex__(self):
        n = self.n
        return complex(sum(complex(float(x)) * cmath.exp(2j * math.pi * k / n) for k, x in enumerate(self.coeffs) if x))

    def __float__(self):
        return float(self.to_fraction())

    def __repr__(self):
        if self.is_rational():
            return f"Cyclo({self.to_fraction()})"
        terms = [f"{x}*z{self.n}^{k}" for k, x in enumerate(self.coeffs) if x]
        return "Cyclo(" + " + ".join(terms) + ")"

    def __str__(self):
        if self.is_rational():
            return str(self.to_fraction())
        z = complex(self)
        return f"{z.real:.12g}{z.imag:+.12g}i"


def _as_cyclo(x) -> Cyclo:
    return x if isinstance(x, Cyclo) else Cyclo.rational(x)


def as_exact(x):
    """Collapse a rational Cyclo to a Fraction; leave everything else alone."""
    if isinstance(x, Cyclo) and x.is_rational():
        return x.to_fraction()
    return x
