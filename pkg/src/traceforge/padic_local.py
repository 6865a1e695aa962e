"""Local distributions of GL2 over a non-archimedean field, computed exactly.

Values are Fractions, cyclotomic numbers (``Cyclo``) or ``PadicValue``
objects that carry a power of q and of log q symbolically.  The second half
of the module is a brute-force oracle over the finite groups GL2(Z/p^n).

Measures: GL2(o) and Z\\ZGL2(o) have volume one; for elliptic gamma the
quotient Z\\G_gamma has volume one.  Several closed forms differ from the
published tables; the published values stay reachable through
``variant='published'`` (and ``'local'``/``'global'`` for the identity term).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .cyclo import Cyclo, as_exact

BRUTE_SIZE_LIMIT = 10**7
VARIANTS = ("derived", "published")


# ---------------------------------------------------------------------------
# small number theory helpers


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


def _prime_factors(n: int) -> List[int]:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def vp(x: int, p: int) -> int:
    """p-adic valuation of a nonzero integer."""
    if x == 0:
        raise ValueError("valuation of zero")
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def _check_variant(variant: str, allowed=VARIANTS):
    if variant not in allowed:
        raise ValueError(f"unknown variant {variant!r}; expected one of {allowed}")


# ---------------------------------------------------------------------------
# exact value containers


@dataclass(frozen=True)
class PadicValue:
    """coeff * q**q_exp * (log q)**log_power with an exact coefficient."""

    coeff: object
    q: int
    q_exp: Fraction = Fraction(0)
    log_power: int = 0

    def normalized(self) -> "PadicValue":
        c = self.coeff
        e = Fraction(self.q_exp)
        if e.denominator == 1 and e != 0:
            c = c * Fraction(self.q) ** int(e)
            e = Fraction(0)
        return PadicValue(as_exact(c), self.q, e, self.log_power)

    def __complex__(self):
        return complex(self.coeff) * self.q ** float(self.q_exp) * math.log(self.q) ** self.log_power

    def __float__(self):
        z = complex(self)
        if abs(z.imag) > 1e-12 * max(1.0, abs(z.real)):
            raise ValueError("value is not real")
        return z.real

    def __eq__(self, other):
        a = self.normalized()
        if isinstance(other, PadicValue):
            b = other.normalized()
            if a.q != b.q and (a.q_exp or b.q_exp or a.log_power or b.log_power):
                return False
            return (a.q_exp, a.log_power) == (b.q_exp, b.log_power) and a.coeff == b.coeff
        if a.q_exp or a.log_power:
            return a.coeff == 0 and other == 0
        return a.coeff == other

    def __hash__(self):
        return hash(complex(self))

    def __str__(self):
        a = self.normalized()
        s = str(a.coeff)
        if a.q_exp:
            s += f"*{a.q}^({a.q_exp})"
        if a.log_power:
            s += f"*log({a.q})" + (f"^{a.log_power}" if a.log_power > 1 else "")
        return s


@dataclass(frozen=True)
class QPowerSum:
    """sum of c * q^(a + b s), stored as {(a, b): c} with exact a and c."""

    q: int
    terms: Tuple[Tuple[Fraction, int, Fraction], ...]

    @classmethod
    def make(cls, q: int, items: Dict[Tuple[Fraction, int], Fraction]) -> "QPowerSum":
        t = tuple(sorted((Fraction(a), int(b), Fraction(c)) for (a, b), c in items.items() if c != 0))
        return cls(q, t)

    @classmethod
    def constant(cls, q: int, c) -> "QPowerSum":
        return cls.make(q, {(Fraction(0), 0): Fraction(c)})

    def at(self, s) -> complex:
        s = complex(s)
        lq = math.log(self.q)
        return complex(sum(float(c) * np.exp((float(a) + b * s) * lq) for a, b, c in self.terms))

    def reflect(self) -> "QPowerSum":
        """The expression with s replaced by -s."""
        return QPowerSum.make(self.q, {(a, -b): c for a, b, c in self.terms})

    def is_zero(self) -> bool:
        return not self.terms

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for a, b, c in self.terms:
            e = " + ".join(x for x in ([str(a)] if a else []) + ([f"{b}s"] if b else [])) or "0"
            parts.append(f"{c}*q^({e})")
        return " + ".join(parts)


@dataclass(frozen=True)
class ParabolicValue:
    """Value and s-derivative at s = 1 of the local zeta integral over zeta_v."""

    value: Fraction
    log_coeff: Fraction
    q: int

    @property
    def derivative(self) -> float:
        return float(self.log_coeff) * math.log(self.q)


# ---------------------------------------------------------------------------
# characters of (Z/p^N)^x


@lru_cache(maxsize=None)
def _unit_group(p: int, N: int):
    """(order, generator list, exponent table) for (Z/p^N)^x.

    The table maps x mod p^N to a tuple of discrete-log coordinates, or None
    for non-units.  Odd p: cyclic.  p = 2: only N <= 2 is supported.
    """
    M = p**N
    if N == 0:
        return 1, [], {0: ()}
    if p == 2:
        if N == 1:
            return 1, [], {1: (), 0: None}
        if N == 2:
            return 2, [3], {1: (0,), 3: (1,), 0: None, 2: None}
        raise NotImplementedError("unit characters mod 2^N are only built for N <= 2")
    order = p ** (N - 1) * (p - 1)
    primes = _prime_factors(order)
    g = next(
        g for g in range(2, M) if g % p and all(pow(g, order // r, M) != 1 for r in primes)
    )
    table: Dict[int, Optional[Tuple[int, ...]]] = {x: None for x in range(M)}
    y = 1
    for k in range(order):
        table[y] = (k,)
        y = y * g % M
    return order, [g], table


@dataclass(frozen=True)
class UnitCharacter:
    """A character mu of o^x = Z_p^x factoring through (Z/p^N)^x.

    mu(g^k) = zeta_{ord}^{exponent k} for the smallest generator g.
    """

    p: int
    N: int
    exponent: int = 1

    @classmethod
    def trivial(cls, p: int) -> "UnitCharacter":
        return cls(p, 0, 0)

    @classmethod
    def primitive(cls, p: int, N: int) -> "UnitCharacter":
        """A character of conductor exactly p^N."""
        if N == 0:
            return cls.trivial(p)
        mu = cls(p, N, 1)
        if mu.conductor() != N:
            raise ValueError(f"no character of conductor {p}^{N} exists")
        return mu

    @property
    def order(self) -> int:
        return _unit_group(self.p, self.N)[0]

    def log(self, x: int) -> Optional[int]:
        """Exponent e with mu(x) = zeta_order^e, or None if x is not a unit."""
        coords = _unit_group(self.p, self.N)[2][x % self.p**self.N]
        if coords is None:
            return None
        if not coords:
            return 0
        return (self.exponent * coords[0]) % self.order

    def __call__(self, x: int) -> Cyclo:
        e = self.log(x)
        if e is None:
            raise ValueError(f"{x} is not a unit mod {self.p}")
        return Cyclo.root(self.order, e)

    def is_trivial(self) -> bool:
        return self.exponent % self.order == 0

    def conductor(self) -> int:
        """Smallest c with mu trivial on 1 + p^c (0 for the trivial character)."""
        if self.is_trivial():
            return 0
        M = self.p**self.N
        for c in range(1, self.N + 1):
            if all(self.log(x) == 0 for x in range(1, M, self.p**c)):
                return c
        return self.N

    def exp_table(self) -> np.ndarray:
        """Exponent of mu(x) for every x mod p^N, -1 on non-units."""
        M = self.p**self.N
        return np.array([-1 if self.log(x) is None else self.log(x) for x in range(M)], dtype=np.int64)


# ---------------------------------------------------------------------------
# test functions, representations, group elements


TEST_KINDS = ("phi_mu", "phi_steinberg", "phi_supercuspidal", "hecke_unram", "hecke_ram")


@dataclass(frozen=True)
class SupercuspidalData:
    """Plug-in data for a supercuspidal type.

    ``hom_dims`` lists dim Hom_{N(p^k)}(rho, 1) for k = 0..K, constant after K.
    ``character`` returns tr rho(gamma) for elliptic data.
    """

    dim: int
    ramified: bool = False
    hom_dims: Tuple[int, ...] = ()
    character: Optional[Callable] = None
    label: str = "abstract"


@dataclass(frozen=True)
class TestKind:
    __test__ = False  # not a pytest class

    kind: str
    N: int = 0
    mu: Optional[UnitCharacter] = None
    sc: Optional[SupercuspidalData] = None

    def __post_init__(self):
        if self.kind not in TEST_KINDS:
            raise ValueError(f"unknown test kind {self.kind!r}")
        if self.N < 0:
            raise ValueError("conductor exponent must be >= 0")
        if self.kind == "hecke_ram" and self.N < 1:
            raise ValueError("the ramified Hecke operator needs N >= 1")
        if self.kind == "phi_supercuspidal" and self.sc is None:
            raise ValueError("supercuspidal test functions need SupercuspidalData")

    @classmethod
    def phi_mu(cls, N: int = 0, mu: Optional[UnitCharacter] = None) -> "TestKind":
        if mu is not None:
            N = mu.conductor()
        return cls("phi_mu", N=N, mu=mu)

    @classmethod
    def phi_steinberg(cls) -> "TestKind":
        return cls("phi_steinberg")

    @classmethod
    def phi_supercuspidal(cls, data: SupercuspidalData) -> "TestKind":
        return cls("phi_supercuspidal", sc=data)

    @classmethod
    def hecke_unram(cls) -> "TestKind":
        return cls("hecke_unram")

    @classmethod
    def hecke_ram(cls, N: int, mu: Optional[UnitCharacter] = None) -> "TestKind":
        return cls("hecke_ram", N=N, mu=mu)


REP_KINDS = ("principal-series", "steinberg", "supercuspidal", "one-dimensional")


@dataclass(frozen=True)
class PAdicRepKind:
    kind: str
    N: int = 0
    s: complex = 0j
    label: str = ""
    trivial_twist: bool = True

    def __post_init__(self):
        if self.kind not in REP_KINDS:
            raise ValueError(f"unknown representation kind {self.kind!r}")

    @classmethod
    def principal(cls, N: int = 0, s=0j) -> "PAdicRepKind":
        return cls("principal-series", N=N, s=complex(s))

    @classmethod
    def steinberg(cls) -> "PAdicRepKind":
        return cls("steinberg")

    @classmethod
    def supercuspidal(cls, label: str) -> "PAdicRepKind":
        return cls("supercuspidal", label=label)

    @classmethod
    def one_dim(cls, trivial: bool = True) -> "PAdicRepKind":
        return cls("one-dimensional", trivial_twist=trivial)


@dataclass(frozen=True)
class HyperbolicElementData:
    """gamma = diag(m, 1) with m = p^valuation * unit.

    ``unit`` is an integer representative of the unit part, needed when
    mu(m) or |1 - m| matter; ``one_minus_val`` overrides v(1 - m) when q is
    not prime or the unit is unknown.
    """

    valuation: int
    unit: Optional[int] = None
    one_minus_val: Optional[int] = None

    def dist_to_one(self, q: int) -> int:
        """v(1 - m); zero unless valuation == 0."""
        if self.valuation != 0:
            return min(0, self.valuation)
        if self.one_minus_val is not None:
            return int(self.one_minus_val)
        if self.unit is None:
            return 0
        if not is_prime(q):
            raise ValueError("v(1 - m) from an integer unit needs prime q")
        if self.unit == 1:
            raise ValueError("m = 1 is not hyperbolic")
        return vp(self.unit - 1, q)

    def abs_one_minus(self, q: int) -> Fraction:
        """|1 - m|_v."""
        return Fraction(q) ** (-self.dist_to_one(q))


@dataclass(frozen=True)
class EllipticElementData:
    """Companion matrix of X^2 - t X + u p^d, d in {0, 1}."""

    trace: int
    d: int
    unit: int

    @property
    def classification(self) -> str:
        return "unramified" if self.d == 0 else "ramified"

    def validate(self, q: int):
        if self.d not in (0, 1):
            raise ValueError("d must be 0 or 1")
        if not is_prime(q):
            return  # irreducibility can only be tested over a prime residue field here
        p = q
        if self.unit % p == 0:
            raise ValueError("unit must be prime to p")
        if self.d == 0:
            if any((x * x - self.trace * x + self.unit) % p == 0 for x in range(p)):
                raise ValueError("characteristic polynomial is reducible mod p")
        elif self.trace % p:
            raise ValueError("for odd determinant valuation the trace must lie in p")

    def matrix(self, p: int) -> Tuple[int, int, int, int]:
        det = self.unit * p**self.d
        return 0, -det, 1, self.trace


def first_unramified_elliptic(p: int) -> EllipticElementData:
    """The lexicographically first X^2 - tX + u irreducible mod p."""
    for t in range(p):
        for u in range(1, p):
            if all((x * x - t * x + u) % p for x in range(p)):
                return EllipticElementData(t, 0, u)
    raise RuntimeError("no irreducible quadratic found")


# ---------------------------------------------------------------------------
# K-type dimensions and unipotent invariants


def ktype_dim(q: int, N: int, R: int) -> int:
    """dim rho(mu, p^R) for mu of conductor p^N."""
    if q < 2:
        raise ValueError("q must be >= 2")
    if R < N:
        raise ValueError("R must be at least the conductor exponent N")
    if N == 0 and R == 0:
        return 1
    if N == 0 and R == 1:
        return q
    if R == N:
        return q ** (N - 1) * (q + 1)
    return q ** (R - 2) * (q * q - 1)


def induced_dim(q: int, R: int) -> int:
    """[GL2(o) : Gamma_0(p^R)]."""
    return 1 if R == 0 else q ** (R - 1) * (q + 1)


HOM_KINDS = ("rho_mu", "rho_1p", "trivial")


def hom_dim_unipotent(q: int, kind: str, k: int, N: int = 1, variant: str = "derived") -> int:
    """dim Hom_{N(p^k)}(rho, 1) for rho = rho(mu, p^N) or rho(1, p).

    ``variant='published'`` uses 1 + q^floor(N/2) at k = 0 for rho(mu).
    """
    _check_variant(variant)
    if k < 0:
        raise ValueError("k must be >= 0")
    if kind == "trivial":
        return 1
    if kind == "rho_1p":
        return 1 if k == 0 else q
    if kind != "rho_mu":
        raise ValueError(f"unknown kind {kind!r}")
    if N < 1:
        raise ValueError("rho_mu needs a ramified character (N >= 1)")
    if k == 0 and variant == "published":
        return 1 + q ** (N // 2)
    if k < N:
        return 2 * q**k
    return q**N + q ** (N - 1)


def phi_mu_normalizer(q: int, N: int, variant: str = "derived") -> int:
    """Abel transform of phi_{rho(mu)} at 1, which normalises phi_mu."""
    if N == 0:
        return 1
    return hom_dim_unipotent(q, "rho_mu", 0, N, variant)


# ---------------------------------------------------------------------------
# spectral side


def _qs(q, *pairs) -> QPowerSum:
    return QPowerSum.make(q, {(Fraction(a), b): Fraction(c) for a, b, c in pairs})


def trace_on_rep(test: TestKind, rep: PAdicRepKind, q: int, variant: str = "derived") -> QPowerSum:
    """tr pi(phi) as an exact expression in q^s.

    With phi_mu normalised by the full unipotent invariant count (two for a
    ramified mu), only one of the two N(o)-fixed lines carries the right
    M(o)-character, so the derived trace on J(mu, s) is 1/2.  The published
    normalisation claims 1.
    """
    _check_variant(variant)
    zero = QPowerSum.make(q, {})
    k = test.kind
    if k == "phi_mu":
        if rep.kind == "principal-series" and rep.N == test.N:
            if test.N >= 1 and variant == "derived":
                return QPowerSum.constant(q, Fraction(1, 2))
            return QPowerSum.constant(q, 1)
        if rep.kind == "one-dimensional" and test.N == 0 and rep.trivial_twist:
            return QPowerSum.constant(q, 1)
        return zero
    if k == "phi_steinberg":
        if rep.kind == "steinberg":
            return QPowerSum.constant(q, 1)
        if rep.kind == "one-dimensional" and rep.trivial_twist:
            return QPowerSum.constant(q, -1)
        return zero
    if k == "phi_supercuspidal":
        if rep.kind == "supercuspidal" and rep.label == test.sc.label:
            return QPowerSum.constant(q, 1)
        return zero
    if k == "hecke_unram":
        if rep.kind == "principal-series" and rep.N == 0:
            return _qs(q, (0, 1, 1), (0, -1, 1))
        if rep.kind == "one-dimensional" and rep.trivial_twist:
            return _qs(q, (Fraction(1, 2), 0, 1), (Fraction(-1, 2), 0, 1))
        return zero
    if k == "hecke_ram":
        if rep.kind == "principal-series" and rep.N == test.N:
            return _qs(q, (0, 1, 1), (0, -1, 1))
        return zero
    raise AssertionError(k)


def onedim_padic(test: TestKind, q: int, chi_trivial: bool = True) -> PadicValue:
    """Character of chi o det on the test function."""
    if not chi_trivial:
        return PadicValue(Fraction(0), q)
    k = test.kind
    if k == "phi_mu":
        return PadicValue(Fraction(1 if test.N == 0 else 0), q)
    if k == "phi_steinberg":
        return PadicValue(Fraction(-1), q)
    if k == "phi_supercuspidal" or k == "hecke_ram":
        return PadicValue(Fraction(0), q)
    # q^(1/2) + q^(-1/2) = (q + 1) q^(-1/2)
    return PadicValue(Fraction(q + 1), q, Fraction(-1, 2))


# ---------------------------------------------------------------------------
# geometric side


IDENTITY_VARIANTS = ("derived", "local", "global")


def identity_padic(test: TestKind, q: int, variant: str = "derived") -> Fraction:
    """phi(1).

    For a ramified mu, phi_mu(1) = dim rho(mu) / 2 because rho(mu) has exactly
    two N(o)-fixed lines.  ``local`` divides by 1 + q^floor(N/2) and
    ``global`` uses (q^N - q^(N-1))/(q^floor(N/2) - 1).
    """
    _check_variant(variant, IDENTITY_VARIANTS)
    k = test.kind
    if k == "phi_mu":
        N = test.N
        if N == 0:
            return Fraction(1)
        if variant == "derived":
            return Fraction(q**N + q ** (N - 1), 2)
        if variant == "local":
            return Fraction(q**N + q ** (N - 1), q ** (N // 2) + 1)
        den = q ** (N // 2) - 1
        if den == 0:
            raise ZeroDivisionError("the global variant is undefined for N = 1")
        return Fraction(q**N - q ** (N - 1), den)
    if k == "phi_steinberg":
        return Fraction(q - 1)
    if k == "phi_supercuspidal":
        d = Fraction(test.sc.dim)
        return d * Fraction(1 + q, 2) if test.sc.ramified else d
    return Fraction(0)


def _hom_sequence(test: TestKind, q: int, variant: str) -> Tuple[List[Fraction], Fraction]:
    """Normalised h_k = int_{p^k} phi(n(x)) dx / vol(p^k), as (h_0..h_{K-1}, tail)."""
    k = test.kind
    if k == "phi_mu":
        N = test.N
        if N == 0:
            return [], Fraction(1)
        c = Fraction(phi_mu_normalizer(q, N, variant))
        head = [Fraction(hom_dim_unipotent(q, "rho_mu", j, N)) / c for j in range(N)]
        return head, Fraction(q**N + q ** (N - 1)) / c
    if k == "phi_steinberg":
        return [Fraction(0)], Fraction(q - 1)
    if k == "phi_supercuspidal":
        dims = list(test.sc.hom_dims) or [0, test.sc.dim]
        scale = Fraction(1 + q, 2) if test.sc.ramified else Fraction(1)
        return [Fraction(x) * scale for x in dims[:-1]], Fraction(dims[-1]) * scale
    raise ValueError("only K-supported test functions have a unipotent profile")


def zeta_ratio_laurent(head: Sequence[Fraction], tail: Fraction, q: int) -> Tuple[Dict[int, Fraction], Fraction]:
    """zeta(s, phi)/zeta_v(s) as a polynomial in X = q^-s.

    With a_j = (h_j - h_{j+1}/q)/(1 - 1/q) the zeta integral is
    sum_j a_j X^j and a_j = tail once h stabilises, so the ratio is
    (1 - X) sum_{j<K} a_j X^j + tail X^K.  Returns ({power: coeff}, tail).
    """
    K = len(head)
    h = list(head) + [tail]
    qf = Fraction(q)
    poly: Dict[int, Fraction] = {}
    for j in range(K):
        a = (h[j] - h[j + 1] / qf) / (1 - 1 / qf)
        poly[j] = poly.get(j, Fraction(0)) + a
        poly[j + 1] = poly.get(j + 1, Fraction(0)) - a
    poly[K] = poly.get(K, Fraction(0)) + tail
    return {e: c for e, c in poly.items() if c}, tail


def _eval_ratio(poly: Dict[int, Fraction], q: int) -> Tuple[Fraction, Fraction]:
    """(R, d/ds R / log q) at s = 1, i.e. X = 1/q."""
    x = Fraction(1, q)
    val = sum((c * x**e for e, c in poly.items()), Fraction(0))
    # d/ds X^e = -e log q X^e
    der = sum((-e * c * x**e for e, c in poly.items()), Fraction(0))
    return val, der


def parabolic_padic(test: TestKind, q: int, variant: str = "derived") -> ParabolicValue:
    """Value and derivative at s = 1 of zeta(s, phi)/zeta_v(s).

    The derived route builds the zeta integral from the unipotent invariant
    counts; the derivative of |x|^s is -log q * v(x) |x|^s.
    """
    _check_variant(variant)
    k = test.kind
    if k in ("hecke_unram", "hecke_ram"):
        # odd determinant valuation on the support
        return ParabolicValue(Fraction(0), Fraction(0), q)
    if variant == "published":
        qf = Fraction(q)
        if k == "phi_mu":
            if test.N == 0:
                return ParabolicValue(Fraction(1), Fraction(0), q)
            N = test.N
            return ParabolicValue(Fraction(1), (N + Fraction(1, 2)) + (Fraction(3, 2) - N) / qf + 1 / (2 * qf * qf), q)
        if k == "phi_steinberg":
            return ParabolicValue(Fraction(0), 1 - 1 / qf, q)
        if test.sc.label.startswith("depth-zero"):
            return ParabolicValue(Fraction(0), qf - 1, q)
        head, tail = _hom_sequence(test, q, "derived")
        K = len(head)
        series = sum((h / qf**j for j, h in enumerate(head)), Fraction(0)) + tail / qf**K / (1 - 1 / qf)
        return ParabolicValue(Fraction(0), (1 - 1 / qf) * series, q)
    head, tail = _hom_sequence(test, q, variant)
    poly, _ = zeta_ratio_laurent(head, tail, q)
    val, der = _eval_ratio(poly, q)
    return ParabolicValue(val, der, q)


def _mu_of(test: TestKind, unit: Optional[int]) -> Cyclo:
    if test.mu is None or test.mu.is_trivial():
        return Cyclo.rational(1)
    if unit is None:
        raise ValueError("this value depends on mu(m); give the unit part of m")
    return test.mu(unit)


def hyperbolic_padic(
    test: TestKind,
    q: int,
    gamma: HyperbolicElementData,
    weighted: bool = False,
    variant: str = "derived",
) -> PadicValue:
    """(Weighted) orbital integral of diag(m, 1).

    Derived values: J(phi_mu) = (1 + conj mu(m)) / (2 |1 - m|) for a unit m
    (just 1/|1-m| when mu = 1), J(T) = q^(-1/2) on v(m) = +-1, and the
    weight vanishes on the support of the Hecke operators.
    """
    _check_variant(variant)
    v = gamma.valuation
    if gamma.valuation == 0 and gamma.unit == 1:
        raise ValueError("m = 1 is not hyperbolic")
    zero = PadicValue(Fraction(0), q)
    k = test.kind
    if k in ("phi_steinberg", "phi_supercuspidal"):
        return zero
    if k == "phi_mu":
        if variant == "published":
            if weighted or v < 0:
                return zero
            absm = gamma.abs_one_minus(q) if v == 0 else Fraction(1)
            return PadicValue(as_exact(_mu_of(test, gamma.unit) / absm), q)
        if v != 0:
            return zero
        j = gamma.dist_to_one(q)
        if weighted:
            if j == 0:
                return zero
            return PadicValue(as_exact(_weighted_phi_mu(test, q, gamma, j)), q, Fraction(0), 1)
        absm = gamma.abs_one_minus(q)
        if test.N == 0:
            return PadicValue(1 / absm, q)
        mu = _mu_of(test, gamma.unit)
        return PadicValue(as_exact((1 + mu.conj()) / (2 * absm)), q)
    # Hecke operators
    if abs(v) != 1:
        return zero
    mu = _mu_of(test, gamma.unit) if k == "hecke_ram" else Cyclo.rational(1)
    if weighted:
        if variant == "published":
            return PadicValue(as_exact(mu * Fraction(2, q - 1)), q, Fraction(0), 1)
        return zero
    # T = q^(-1/2) 1_{Z K diag(p,1) K}; the published unweighted value agrees
    return PadicValue(as_exact(mu), q, Fraction(-1, 2))


def _weighted_phi_mu(test: TestKind, q: int, gamma: HyperbolicElementData, j: int):
    """Coefficient of log q in the weighted integral for m = 1 mod p^j.

    J^H = -2 q^j log q sum_{i<j} (j - i) int_{v(y)=i} phi(diag(m,1) n(y)) dy.
    """
    qf = Fraction(q)
    if test.N == 0:
        return -2 * qf**j * sum(((j - i) * qf ** (-i) * (1 - 1 / qf) for i in range(j)), Fraction(0))
    if not is_prime(q) or gamma.unit is None or test.mu is None:
        raise NotImplementedError("the weighted value for ramified mu needs prime q, an explicit unit and mu")
    p, N = q, test.N
    L = max(N, j)
    mod = p**L
    norm = phi_mu_normalizer(q, N)
    total = Cyclo.rational(0)
    for i in range(j):
        acc = Cyclo.rational(0)
        for y in range(p**i, mod, p**i):
            if vp(y, p) != i:
                continue
            m = gamma.unit
            acc = acc + induced_trace(test.mu, N, m, m * y, 0, 1).conj()
        total = total + acc * Fraction(j - i, mod * norm)
    return -2 * qf**j * total


def elliptic_padic(
    test: TestKind,
    q: int,
    gamma: EllipticElementData,
    variant: str = "derived",
):
    """Elliptic orbital integral with vol(Z\\G_gamma) = 1.

    For K-supported class functions and unramified gamma only the vertex
    fixed by gamma contributes, so J = phi(gamma).  For ramified gamma the
    stabiliser of an endpoint of the fixed edge has volume 1/2 inside
    Z\\G_gamma, which gives J(T) = 2 q^(-1/2).
    """
    _check_variant(variant)
    gamma.validate(q)
    k = test.kind
    unram = gamma.d == 0
    if k == "phi_mu":
        return Fraction(1 if (unram and test.N == 0) else 0)
    if k == "phi_steinberg":
        if not unram:
            return Fraction(0)
        # tr rho(1, p)(gamma) = (fixed points on P^1(F_q)) - 1 = -1
        return Fraction(-1 if variant == "published" else -2)
    if k == "phi_supercuspidal":
        sc = test.sc
        if sc.ramified == unram:
            return Fraction(0)
        if sc.character is None:
            raise ValueError("supercuspidal data carries no character values")
        chi = sc.character(gamma)
        if not unram:
            # (2/(1+q)) phi_pi(gamma) with phi_pi = ((1+q)/2) tr rho
            return as_exact(chi)
        return as_exact(chi)
    if k == "hecke_unram":
        if unram:
            return Fraction(0)
        if variant == "published":
            return Fraction(2)
        return PadicValue(Fraction(2), q, Fraction(-1, 2))
    # ramified Hecke operator with mu != 1
    return Fraction(0)


def iwahori_volume(q: int, which: str) -> Fraction:
    """Volumes inside GL2(o): I, I w0 I and I w_p I (the last normalises I)."""
    if which == "I":
        return Fraction(1, q + 1)
    if which == "Iw0I":
        return Fraction(q, q + 1)
    if which == "Iw1I":
        return Fraction(1, q + 1)
    raise ValueError(which)


# ---------------------------------------------------------------------------
# intertwiners


INTERTWINER_KINDS = ("spherical", "ramified", "steinberg")


def _pow_q(q: int, e):
    """q**e, exact when e is an integer."""
    if isinstance(e, (int, Fraction)) and Fraction(e).denominator == 1:
        return Fraction(q) ** int(e)
    return complex(q) ** complex(e)


def intertwiner_padic(kind: str, q: int, s):
    """Scalar of the standard intertwiner on the distinguished K-type.

    spherical: (1 - q^(-2s-1))/(1 - q^(-2s)); ramified: 1;
    steinberg: (1 - q^(1-2s))/(1 - q^(-2s)).
    """
    if kind not in INTERTWINER_KINDS:
        raise ValueError(f"unknown kind {kind!r}")
    if kind == "ramified":
        return Fraction(1)
    if isinstance(s, float) and s.is_integer():
        s = int(s)
    if isinstance(s, (int, Fraction)):
        two_s = 2 * Fraction(s)
        den = 1 - _pow_q(q, -two_s)
        num = 1 - _pow_q(q, -two_s - 1) if kind == "spherical" else 1 - _pow_q(q, 1 - two_s)
    else:
        s = complex(s)
        den = 1 - q ** (-2 * s)
        num = 1 - q ** (-2 * s - 1) if kind == "spherical" else 1 - q ** (1 - 2 * s)
    if den == 0 or (not isinstance(den, Fraction) and abs(den) < 1e-300):
        raise ZeroDivisionError("the intertwiner scalar has a pole here")
    return num / den


def intertwiner_spherical_series(q: int, s, terms: int = 200) -> complex:
    """1 + (1 - 1/q) sum_{k=1}^{terms} q^(-2ks), summed directly."""
    s = complex(s)
    x = q ** (-2 * s)
    total, term = 0j, 1.0 + 0j
    for _ in range(terms):
        term *= x
        total += term
    return 1 + (1 - 1 / q) * total


# ---------------------------------------------------------------------------
# depth-zero supercuspidals: F_{q^2} and the cuspidal characters of GL2(F_q)


class QuadraticField:
    """F_{p^2} = F_p[x]/(x^2 - c1 x - c0), elements as pairs (a, b) = a + b x."""

    def __init__(self, p: int):
        if not is_prime(p):
            raise ValueError("the depth-zero construction is built for prime q")
        self.p = p
        self.c1, self.c0 = next(
            (c1, c0)
            for c1 in range(p)
            for c0 in range(p)
            if all((x * x - c1 * x - c0) % p for x in range(p))
        )
        self.order = p * p - 1
        primes = _prime_factors(self.order)
        elems = [(a, b) for b in range(p) for a in range(p) if (a, b) != (0, 0)]
        self.gen = next(g for g in elems if all(self.pow(g, self.order // r) != (1, 0) for r in primes))
        self._log: Dict[Tuple[int, int], int] = {}
        y = (1, 0)
        for k in range(self.order):
            self._log[y] = k
            y = self.mul(y, self.gen)

    def mul(self, u, v):
        p = self.p
        a, b = u
        c, d = v
        bd = b * d
        return ((a * c + bd * self.c0) % p, (a * d + b * c + bd * self.c1) % p)

    def pow(self, u, e: int):
        out, base = (1, 0), u
        while e:
            if e & 1:
                out = self.mul(out, base)
            base = self.mul(base, base)
            e >>= 1
        return out

    def log(self, u) -> int:
        return self._log[(u[0] % self.p, u[1] % self.p)]

    def frob(self, u):
        return self.pow(u, self.p)

    def roots(self, t: int, n: int):
        """Roots of X^2 - t X + n in F_{p^2}."""
        p = self.p
        out = []
        for b in range(p):
            for a in range(p):
                u = (a, b)
                s = self.mul(u, u)
                val = ((s[0] - t * a + n) % p, (s[1] - t * b) % p)
                if val == (0, 0):
                    out.append(u)
        return out

    def companion(self) -> Tuple[int, int, int, int]:
        """Matrix of multiplication by x in the basis (1, x)."""
        return 0, self.c0 % self.p, 1, self.c1 % self.p


@dataclass
class DepthZeroType:
    """The cuspidal representation of GL2(F_q) attached to theta = (gen -> zeta^j)."""

    q: int
    theta_exp: int
    fld: QuadraticField = field(init=False, repr=False)

    def __post_init__(self):
        self.fld = QuadraticField(self.q)
        if (self.theta_exp * (self.q - 1)) % (self.q * self.q - 1) == 0:
            raise ValueError("theta is fixed by Frobenius, hence not regular")

    @property
    def root_order(self) -> int:
        """Cyclotomic order for all character values (zeta_p enters via psi)."""
        return self.q * (self.q * self.q - 1)

    def dim(self, variant: str = "derived") -> int:
        """q - 1; the published value is q^2 - q."""
        _check_variant(variant)
        return self.q * self.q - self.q if variant == "published" else self.q - 1

    def theta(self, u) -> Cyclo:
        return Cyclo.root(self.q * self.q - 1, self.theta_exp * self.fld.log(u))

    def character(self, a: int, b: int, c: int, d: int) -> Cyclo:
        """Closed-form character on any element of GL2(F_q)."""
        p = self.q
        a, b, c, d = a % p, b % p, c % p, d % p
        t, n = (a + d) % p, (a * d - b * c) % p
        if b == 0 and c == 0 and a == d:
            return self.theta((a, 0)) * (p - 1)
        rational = [x for x in range(p) if (x * x - t * x + n) % p == 0]
        if len(rational) == 1 or (len(rational) == 2 and rational[0] == rational[1]):
            return -self.theta((rational[0], 0))
        if rational:
            return Cyclo.rational(0)
        lam = self.fld.roots(t, n)[0]
        return -(self.theta(lam) + self.theta(self.fld.frob(lam)))

    def elliptic_value(self, gamma: EllipticElementData) -> Cyclo:
        """-theta(l1) - theta(l2) for the mod-p eigenvalues of gamma."""
        if gamma.d != 0:
            return Cyclo.rational(0)
        gamma.validate(self.q)
        lam = self.fld.roots(gamma.trace % self.q, gamma.unit % self.q)
        if len(lam) != 2:
            raise ValueError("gamma is not elliptic mod p")
        return -(self.theta(lam[0]) + self.theta(lam[1]))

    def test_kind(self) -> TestKind:
        data = SupercuspidalData(
            dim=self.dim(),
            ramified=False,
            hom_dims=(0, self.dim()),
            character=self.elliptic_value,
            label=f"depth-zero(q={self.q},theta={self.theta_exp})",
        )
        return TestKind.phi_supercuspidal(data)


def depth_zero_character(q: int, theta_exp: int, gamma: EllipticElementData) -> Cyclo:
    return DepthZeroType(q, theta_exp).elliptic_value(gamma)


def regular_theta_exponents(q: int) -> List[int]:
    """One exponent j per Frobenius orbit of regular characters."""
    n = q * q - 1
    seen, out = set(), []
    for j in range(1, n):
        if (j * (q - 1)) % n == 0 or j in seen:
            continue
        seen.update({j, (j * q) % n})
        out.append(j)
    return out


# ---------------------------------------------------------------------------
# exact traces of induced representations from Gamma_0(p^R)


def _lines(p: int, R: int):
    """Representatives (v1, v2) of P^1(Z/p^R): (1, y) and (p t, 1)."""
    M = p**R
    return [(1, y) for y in range(M)] + [(p * t, 1) for t in range(p ** (R - 1))]


def induced_trace(mu: UnitCharacter, R: int, a: int, b: int, c: int, d: int) -> Cyclo:
    """tr Ind_{Gamma_0(p^R)}^{GL2(o)} mu(a) at one matrix, by fixed lines."""
    p = mu.p
    M = p**R
    total = Cyclo.rational(0)
    for v1, v2 in _lines(p, R):
        w1 = (a * v1 + b * v2) % M
        w2 = (c * v1 + d * v2) % M
        if (w1 * v2 - w2 * v1) % M == 0:
            lam = w1 if v1 == 1 else w2
            total = total + mu(lam)
    return total


# ---------------------------------------------------------------------------
# brute-force oracle over GL2(Z/p^n)


class FiniteGroupModel:
    """All elements of GL2(Z/p^n) as numpy arrays, in lexicographic order."""

    def __init__(self, p: int, n: int):
        if not is_prime(p):
            raise ValueError("p must be prime")
        if n < 1:
            raise ValueError("n must be >= 1")
        M = p**n
        if M**4 > BRUTE_SIZE_LIMIT:
            raise ValueError(f"GL2(Z/{M}) exceeds the enumeration limit")
        self.p, self.n, self.M = p, n, M
        codes = np.arange(M**4, dtype=np.int64)
        a, r = np.divmod(codes, M**3)
        b, r = np.divmod(r, M**2)
        c, d = np.divmod(r, M)
        det = (a * d - b * c) % M
        keep = det % p != 0
        self.a, self.b, self.c, self.d = a[keep], b[keep], c[keep], d[keep]
        self.det = det[keep]
        self.codes = codes[keep]
        self._index = np.full(M**4, -1, dtype=np.int64)
        self._index[self.codes] = np.arange(self.codes.size)
        inv = np.zeros(M, dtype=np.int64)
        for x in range(M):
            if x % p:
                inv[x] = pow(x, -1, M)
        self._inv = inv
        self._conj_cache = None

    @property
    def order(self) -> int:
        return int(self.codes.size)

    def expected_order(self) -> int:
        p, n = self.p, self.n
        return p ** (4 * n) * (p - 1) * (p * p - 1) // p**3

    def index(self, a, b, c, d):
        M = self.M
        return self._index[((np.asarray(a) % M * M + np.asarray(b) % M) * M + np.asarray(c) % M) * M + np.asarray(d) % M]

    @property
    def identity(self) -> int:
        return int(self.index(1, 0, 0, 1))

    # subgroup predicates
    def in_gamma0(self, k: int) -> np.ndarray:
        return self.c % self.p**k == 0

    def in_unipotent(self, k: int) -> np.ndarray:
        return (self.a == 1) & (self.d == 1) & (self.c == 0) & (self.b % self.p ** min(k, self.n) == 0)

    def in_diagonal(self) -> np.ndarray:
        return (self.b == 0) & (self.c == 0)

    def in_center(self) -> np.ndarray:
        return self.in_diagonal() & (self.a == self.d)

    def conjugate_by_all(self, g: int) -> np.ndarray:
        """Indices of x^-1 g x for every x (in element order)."""
        M = self.M
        ga, gb, gc, gd = self.a[g], self.b[g], self.c[g], self.d[g]
        a, b, c, d = self.a, self.b, self.c, self.d
        di = self._inv[self.det]
        # x^-1 = di * [[d, -b], [-c, a]]
        ta, tb = ga * a + gb * c, ga * b + gb * d
        tc, td = gc * a + gd * c, gc * b + gd * d
        na = di * (d * ta - b * tc) % M
        nb = di * (d * tb - b * td) % M
        nc = di * (-c * ta + a * tc) % M
        nd = di * (-c * tb + a * td) % M
        return self.index(na, nb, nc, nd)


@dataclass
class ClassFunction:
    """values[g] = (sum_k counts[g, k] zeta_order^k) / denom."""

    model: FiniteGroupModel
    order: int
    counts: np.ndarray
    denom: int = 1

    def at(self, g: int) -> Cyclo:
        return Cyclo.from_counts(self.order, self.counts[g], self.denom)

    def lift(self, order: int) -> "ClassFunction":
        if order == self.order:
            return self
        step = order // self.order
        out = np.zeros((self.counts.shape[0], order), dtype=np.int64)
        out[:, ::step] = self.counts
        return ClassFunction(self.model, order, out, self.denom)

    def _align(self, other: "ClassFunction"):
        m = self.order * other.order // math.gcd(self.order, other.order)
        a, b = self.lift(m), other.lift(m)
        den = a.denom * b.denom // math.gcd(a.denom, b.denom)
        return a.counts * (den // a.denom), b.counts * (den // b.denom), m, den

    def __add__(self, other):
        x, y, m, den = self._align(other)
        return ClassFunction(self.model, m, x + y, den)

    def __sub__(self, other):
        x, y, m, den = self._align(other)
        return ClassFunction(self.model, m, x - y, den)

    def scaled(self, num: int, den: int = 1) -> "ClassFunction":
        return ClassFunction(self.model, self.order, self.counts * num, self.denom * den)

    def conj(self) -> "ClassFunction":
        idx = (-np.arange(self.order)) % self.order
        out = np.zeros_like(self.counts)
        out[:, idx] = self.counts
        return ClassFunction(self.model, self.order, out, self.denom)

    @classmethod
    def constant(cls, model: FiniteGroupModel, value: int = 1) -> "ClassFunction":
        return cls(model, 1, np.full((model.order, 1), value, dtype=np.int64))

    @classmethod
    def from_exponents(cls, model, order: int, exps: np.ndarray) -> "ClassFunction":
        """A function with values zeta^exps (and 0 where exps < 0)."""
        counts = np.zeros((model.order, order), dtype=np.int64)
        ok = exps >= 0
        counts[np.nonzero(ok)[0], exps[ok] % order] = 1
        return cls(model, order, counts)


def brute_hom_dim(f: ClassFunction, g: ClassFunction, mask: Optional[np.ndarray] = None):
    """<f, g>_H = |H|^-1 sum_{h in H} f(h) conj g(h); an integer for characters."""
    x, y, m, den = f._align(g)
    if mask is not None:
        x, y = x[mask], y[mask]
    size = x.shape[0]
    gram = x.T @ y  # gram[i, j] multiplies zeta^(i - j)
    i, j = np.indices(gram.shape)
    acc = np.zeros(m, dtype=np.int64)
    np.add.at(acc, (i - j).ravel() % m, gram.ravel())
    val = as_exact(Cyclo.from_counts(m, acc, size * den * den))
    return int(val) if isinstance(val, Fraction) and val.denominator == 1 else val


def brute_invariants(f: ClassFunction, mask: np.ndarray):
    """dim of H-invariants: <f, 1>_H."""
    return brute_hom_dim(f, ClassFunction.constant(f.model), mask)


def induced_from_gamma0(model: FiniteGroupModel, R: int, mu: UnitCharacter) -> ClassFunction:
    """Character of Ind_{Gamma_0(p^R)} mu(a) by counting fixed lines of P^1(Z/p^R)."""
    if R > model.n:
        raise ValueError("R exceeds the model level")
    if mu.N > R:
        raise ValueError("mu must factor through the level")
    p = model.p
    order = mu.order
    table = mu.exp_table()
    counts = np.zeros((model.order, order), dtype=np.int64)
    if R == 0:
        counts[:, 0] = 1
        return ClassFunction(model, order, counts)
    MR = p**R
    a, b, c, d = model.a % MR, model.b % MR, model.c % MR, model.d % MR
    rows = np.arange(model.order)
    for v1, v2 in _lines(p, R):
        w1 = (a * v1 + b * v2) % MR
        w2 = (c * v1 + d * v2) % MR
        fixed = (w1 * v2 - w2 * v1) % MR == 0
        lam = w1 if v1 == 1 else w2
        e = table[lam[fixed] % p**mu.N] if mu.N else np.zeros(int(fixed.sum()), dtype=np.int64)
        np.add.at(counts, (rows[fixed], e), 1)
    return ClassFunction(model, order, counts)


def brute_induced_character(model: FiniteGroupModel, subgroup: np.ndarray, char: ClassFunction) -> ClassFunction:
    """Frobenius formula |H|^-1 sum_x char(x^-1 g x) [x^-1 g x in H], by enumeration.

    Quadratic in |G|; meant for GL2(F_p) and as a cross-check of the fast
    fixed-line route.
    """
    G = model.order
    if G > 5000:
        raise ValueError("the general induction oracle is limited to |G| <= 5000")
    H = int(subgroup.sum())
    if H == 0:
        raise ValueError("empty subgroup")
    counts = np.zeros((G, char.order), dtype=np.int64)
    for g in range(G):
        conj = model.conjugate_by_all(g)
        inside = subgroup[conj]
        counts[g] = char.counts[conj[inside]].sum(axis=0)
    return ClassFunction(model, char.order, counts, char.denom * H)


def brute_orbital_sum(model: FiniteGroupModel, f: ClassFunction, g: int) -> Cyclo:
    """Average of f over the conjugacy class of g.

    For a class function inflated from a finite quotient of GL2(o) and
    gamma elliptic mod p this equals the orbital integral (only the vertex
    fixed by gamma contributes, Z\\G_gamma of volume one).
    """
    conj = model.conjugate_by_all(g)
    tot = f.counts[conj].sum(axis=0)
    return as_exact(Cyclo.from_counts(f.order, tot, f.denom * model.order))


def rho_character(model: FiniteGroupModel, mu: UnitCharacter, R: int) -> ClassFunction:
    """Character of rho(mu, p^R) by telescoping induced characters."""
    N = mu.conductor()
    if R < N:
        raise ValueError("R below the conductor")
    ind = induced_from_gamma0(model, R, mu)
    if R == N and N >= 1:
        return ind
    if R == 0:
        return ind
    return ind - induced_from_gamma0(model, R - 1, mu)


def brute_depth_zero_character(model: FiniteGroupModel, theta_exp: int) -> ClassFunction:
    """Ind_{ZN} psi.theta minus Ind_{E^x} theta over GL2(F_p)."""
    if model.n != 1:
        raise ValueError("depth-zero characters live on GL2(F_p)")
    p = model.p
    typ = DepthZeroType(p, theta_exp)
    fld = typ.fld
    order = typ.root_order
    step = p  # zeta_{p^2-1} = zeta_order^p
    a, b, c, d = model.a, model.b, model.c, model.d
    # psi.theta on ZN: theta(z) psi(b/z), psi(x) = zeta_p^x = zeta_order^{(p^2-1) x}
    zn = (c == 0) & (a == d)
    e_zn = np.full(model.order, -1, dtype=np.int64)
    for i in np.nonzero(zn)[0]:
        z = int(a[i])
        x = int(b[i]) * pow(z, -1, p) % p
        e_zn[i] = (step * theta_exp * fld.log((z, 0)) + (p * p - 1) * x) % order
    # theta on E^x = {a + b C}
    _, c0, _, c1 = fld.companion()
    emb = (b == (c * c0) % p) & (d == (a + c * c1) % p)
    e_e = np.full(model.order, -1, dtype=np.int64)
    for i in np.nonzero(emb)[0]:
        e_e[i] = step * theta_exp * fld.log((int(a[i]), int(c[i]))) % order
    ind1 = brute_induced_character(model, zn, ClassFunction.from_exponents(model, order, e_zn))
    ind2 = brute_induced_character(model, emb, ClassFunction.from_exponents(model, order, e_e))
    return ind1 - ind2


# ---------------------------------------------------------------------------
# report


@dataclass(frozen=True)
class BruteRow:
    formula_id: str
    params: str
    closed_form: str
    brute_value: str
    match: bool


def _row(fid, params, closed, brute) -> BruteRow:
    return BruteRow(fid, params, str(closed), str(brute), closed == brute)


def characters_up_to(p: int, level: int) -> List[UnitCharacter]:
    out = [UnitCharacter.trivial(p)]
    for N in range(1, level + 1):
        try:
            out.append(UnitCharacter.primitive(p, N))
        except (ValueError, NotImplementedError):
            pass
    return out


def brute_force_report(p: int, level: int) -> List[BruteRow]:
    """Compare every closed form that the finite model can see at this level."""
    model = FiniteGroupModel(p, level)
    q = p
    rows = [_row("group_order", f"p={p},n={level}", model.expected_order(), model.order)]
    ident = model.identity
    big = model.order
    # Iwahori double coset volume
    w0cell = Fraction(int((model.c % p != 0).sum()), big)
    rows.append(_row("iwahori_volume", f"q={q},cell=Iw0I", iwahori_volume(q, "Iw0I"), w0cell))
    chars = characters_up_to(p, level)
    rho_cache = {}
    for mu in chars:
        N = mu.conductor()
        for R in range(max(N, 0), level + 1):
            chi = rho_character(model, mu, R)
            rho_cache[(N, R)] = chi
            rows.append(_row("ktype_dim", f"q={q},N={N},R={R}", ktype_dim(q, N, R), chi.at(ident).to_fraction()))
            rows.append(_row("ktype_irreducible", f"q={q},N={N},R={R}", 1, brute_hom_dim(chi, chi)))
    for mu in chars:
        N = mu.conductor()
        kinds = [("rho_mu", N)] if N >= 1 else ([("rho_1p", 1)] if level >= 1 else [])
        for kind, R in kinds:
            chi = rho_cache[(N, R)]
            for k in range(0, level + 1):
                closed = hom_dim_unipotent(q, kind, k, max(N, 1))
                rows.append(_row("hom_dim_unipotent", f"q={q},{kind},N={N},k={k}", closed, brute_invariants(chi, model.in_unipotent(k))))
    # identity of phi_mu: dim / (unipotent invariants) at k = 0
    for mu in chars:
        N = mu.conductor()
        chi = rho_cache[(N, N)]
        h0 = brute_invariants(chi, model.in_unipotent(0))
        brute = Fraction(chi.at(ident).to_fraction()) / h0
        rows.append(_row("identity_phi_mu", f"q={q},N={N}", identity_padic(TestKind.phi_mu(N), q), brute))
    # Abel transform of phi_mu on diag(u, 1)
    for mu in chars[1:]:
        N = mu.conductor()
        phi = rho_cache[(N, N)].conj().scaled(1, phi_mu_normalizer(q, N))
        for u in [x for x in range(2, p**level) if x % p][:3]:
            nsub = np.nonzero(model.in_unipotent(0))[0]
            bs = model.b[nsub]
            tgt = model.index(np.full_like(bs, u), (u * bs) % model.M, 0, 1)
            tot = phi.counts[tgt].sum(axis=0)
            brute = as_exact(Cyclo.from_counts(phi.order, tot, phi.denom * bs.size))
            closed = as_exact((1 + mu(u).conj()) / 2)
            rows.append(_row("abel_phi_mu", f"q={q},N={N},u={u}", closed, brute))
    # unramified elliptic orbital integrals
    ell = first_unramified_elliptic(p)
    ga, gb, gc, gd = ell.matrix(p)
    g = int(model.index(ga, gb, gc, gd))
    one = ClassFunction.constant(model)
    rows.append(_row("elliptic_phi_1", f"q={q},t={ell.trace},u={ell.unit}", elliptic_padic(TestKind.phi_mu(0), q, ell), brute_orbital_sum(model, one, g)))
    if level >= 1:
        st = rho_cache[(0, 1)] - one
        rows.append(_row("elliptic_steinberg", f"q={q},t={ell.trace},u={ell.unit}", elliptic_padic(TestKind.phi_steinberg(), q, ell), brute_orbital_sum(model, st, g)))
    for mu in chars[1:]:
        N = mu.conductor()
        phi = rho_cache[(N, N)].conj().scaled(1, phi_mu_normalizer(q, N))
        rows.append(_row("elliptic_phi_mu", f"q={q},N={N}", elliptic_padic(TestKind.phi_mu(N, mu), q, ell), brute_orbital_sum(model, phi, g)))
    rows.extend(depth_zero_rows(p))
    return rows


def depth_zero_rows(p: int) -> List[BruteRow]:
    """Closed-form cuspidal characters against the induced construction."""
    model = _gl2_fp(p)
    rows = []
    ell = first_unramified_elliptic(p)
    g_ell = int(model.index(*[x % p for x in ell.matrix(p)]))
    for j in regular_theta_exponents(p):
        typ = DepthZeroType(p, j)
        brute = brute_depth_zero_character(model, j)
        rows.append(_row("depth_zero_dim", f"q={p},theta={j}", typ.dim(), brute.at(model.identity).to_fraction()))
        rows.append(_row("depth_zero_irreducible", f"q={p},theta={j}", 1, brute_hom_dim(brute, brute)))
        rows.append(_row("depth_zero_elliptic", f"q={p},theta={j}", typ.elliptic_value(ell), brute.at(g_ell)))
        mismatches = sum(
            1
            for i in range(model.order)
            if typ.character(int(model.a[i]), int(model.b[i]), int(model.c[i]), int(model.d[i])) != brute.at(i)
        )
        rows.append(_row("depth_zero_character_table", f"q={p},theta={j}", 0, mismatches))
    return rows


@lru_cache(maxsize=8)
def _gl2_fp(p: int) -> FiniteGroupModel:
    return FiniteGroupModel(p, 1)


def write_brute_csv(rows: Sequence[BruteRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["formula_id", "params", "closed_form", "brute_value", "match_flag"])
        for r in rows:
            w.writerow([r.formula_id, r.params, r.closed_form, r.brute_value, int(r.match)])
