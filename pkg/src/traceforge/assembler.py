"""Global assembly over Q: configuration, the geometric terms, the spectral
side over an external eigenvalue table, and Weyl-law estimates.

All real-place test functions are weight-0 (or weight-1 for a ramified
principal series) functions on GL2(R)^+, so the Maass forms of both parities
contribute.  Quantities that the local modules compute exactly are turned
into floats only at the end of each term.
"""

from __future__ import annotations

import cmath
import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import padic_local as pl
from .real_local import (
    PseudoCoefficientDS,
    RealRepDescriptor,
    char_value_real,
    elliptic_real,
    hyperbolic_real,
    identity_real,
    parabolic_real,
)
from .special import (
    EULER_GAMMA,
    completed_zeta_laurent,
    digamma,
    dirichlet_L_log_deriv,
    quad,
    quad_levels,
    zeta_log_deriv,
)
from .testfn import (
    SumSeed,
    TestFunctionQuadruple,
    make_bump,
    quadruple_from_g,
    zero_quadruple,
)

TERM_NAMES = ("identity", "parabolic", "elliptic", "hyperbolic", "scattering", "residual", "one_dim")
ARCH_ENTRIES = ("ups", "rps", "ds")
FINITE_ENTRIES = ("ups", "rps", "st", "sc")
SPEC_KEYS = ("volume", "archimedean", "finite", "hecke_set", "elliptic_classes")
SL2Z_VOLUME = math.pi / 3
# length of the shortest closed geodesic on SL2(Z)\H
SL2Z_MIN_GEODESIC = 2.0 * math.acosh(1.5)
HYPERBOLIC_NORMALIZATION = -0.5
# rotation classes of SL2(Z) with weights 1/(2 |centraliser mod +-1|)
SL2Z_ELLIPTIC = (
    (math.pi / 2, 0.25),
    (math.pi / 3, 1 / 6),
    (2 * math.pi / 3, 1 / 6),
)
DEFAULT_TOL = 1e-8


class SpecError(ValueError):
    """A malformed similarity-class configuration."""


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ArchimedeanEntry:
    kind: str
    entry: str
    weight: int = 0


@dataclass(frozen=True)
class FiniteEntry:
    q: int
    entry: str
    conductor: int = 0


@dataclass(frozen=True)
class EllipticClass:
    theta: float
    weight: float


@dataclass
class SimilarityClassSpec:
    volume: float
    archimedean: List[ArchimedeanEntry]
    finite: List[FiniteEntry] = field(default_factory=list)
    hecke_set: List[int] = field(default_factory=list)
    elliptic_classes: List[EllipticClass] = field(default_factory=list)
    source: str = "<memory>"

    # -- parsing
    @classmethod
    def from_json(cls, text: str, source: str = "<string>") -> "SimilarityClassSpec":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        return cls.from_dict(raw, source)

    @classmethod
    def load(cls, path) -> "SimilarityClassSpec":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read(), str(path))

    @classmethod
    def from_dict(cls, raw, source: str = "<dict>") -> "SimilarityClassSpec":
        if not isinstance(raw, dict):
            raise SpecError(f"{source}: top level must be an object")
        extra = set(raw) - set(SPEC_KEYS)
        missing = set(SPEC_KEYS) - set(raw)
        if extra or missing:
            raise SpecError(f"{source}: unexpected keys {sorted(extra)}, missing keys {sorted(missing)}")
        try:
            arch = [
                ArchimedeanEntry(str(a["kind"]), str(a["entry"]), int(a.get("weight", 0)))
                for a in raw["archimedean"]
            ]
            fin = [FiniteEntry(int(f["q"]), str(f["entry"]), int(f.get("conductor", 0))) for f in raw["finite"]]
            ell = [EllipticClass(float(e["theta"]), float(e["weight"])) for e in raw["elliptic_classes"]]
            spec = cls(float(raw["volume"]), arch, fin, [int(x) for x in raw["hecke_set"]], ell, source)
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecError(f"{source}: bad entry ({exc})") from None
        spec.validate()
        return spec

    def to_dict(self) -> dict:
        return {
            "volume": self.volume,
            "archimedean": [asdict(a) for a in self.archimedean],
            "finite": [asdict(f) for f in self.finite],
            "hecke_set": list(self.hecke_set),
            "elliptic_classes": [asdict(e) for e in self.elliptic_classes],
        }

    # -- checks
    def validate(self) -> None:
        if not self.volume > 0:
            raise SpecError("volume must be positive")
        for a in self.archimedean:
            if a.kind not in ("real", "complex"):
                raise SpecError(f"unknown archimedean kind {a.kind!r}")
            if a.entry not in ARCH_ENTRIES:
                raise SpecError(f"unknown archimedean entry {a.entry!r}")
            if a.entry == "ds" and a.weight < 2:
                raise SpecError("a discrete series entry needs weight >= 2")
        qs = [f.q for f in self.finite]
        if len(set(qs)) != len(qs):
            raise SpecError("each finite place may appear once")
        for f in self.finite:
            if f.q < 2:
                raise SpecError("residue cardinality must be >= 2")
            if f.entry not in FINITE_ENTRIES:
                raise SpecError(f"unknown finite entry {f.entry!r}")
            if f.entry == "rps" and f.conductor < 1:
                raise SpecError("a ramified principal series needs conductor >= 1")
        ps = {f.q for f in self.finite if f.entry in ("ups", "rps")}
        for q in self.hecke_set:
            if q not in ps:
                raise SpecError(f"Hecke place {q} must be a principal-series finite place")
        for e in self.elliptic_classes:
            if not e.weight > 0:
                raise SpecError("elliptic class weights must be positive")
            if abs(math.sin(e.theta)) < 1e-12:
                raise SpecError("elliptic angles must avoid 0 and pi")

    def check_rational(self) -> ArchimedeanEntry:
        """Assembly over Q needs exactly one real place and no complex place."""
        real = [a for a in self.archimedean if a.kind == "real"]
        if len(real) != 1 or len(real) != len(self.archimedean):
            raise SpecError("assembly over Q needs exactly one (real) archimedean place")
        for f in self.finite:
            if not pl.is_prime(f.q):
                raise SpecError(f"finite places over Q have prime residue fields, got {f.q}")
        return real[0]

    @property
    def real_entry(self) -> ArchimedeanEntry:
        return self.check_rational()

    @property
    def square_integrable_count(self) -> int:
        n = sum(1 for a in self.archimedean if a.entry == "ds")
        return n + sum(1 for f in self.finite if f.entry in ("st", "sc"))

    @property
    def all_principal(self) -> bool:
        return self.square_integrable_count == 0

    @property
    def is_full_level(self) -> bool:
        """The SL2(Z) configuration: unramified everywhere, no Hecke operators."""
        return (
            all(a.entry == "ups" for a in self.archimedean)
            and all(f.entry == "ups" for f in self.finite)
            and not self.hecke_set
        )


def sl2z_spec() -> SimilarityClassSpec:
    """Weight zero, full level, with the classical elliptic data."""
    return SimilarityClassSpec(
        SL2Z_VOLUME,
        [ArchimedeanEntry("real", "ups", 0)],
        [],
        [],
        [EllipticClass(t, w) for t, w in SL2Z_ELLIPTIC],
        "sl2z",
    )


# ---------------------------------------------------------------------------
# the global test function


@dataclass
class FinitePlace:
    entry: FiniteEntry
    test: pl.TestKind
    hecke: bool


@dataclass
class GlobalTestFunction:
    """The factorisable test function attached to a spec and a seed g."""

    spec: SimilarityClassSpec
    real: object  # TestFunctionQuadruple or PseudoCoefficientDS
    finite: List[FinitePlace]
    zero: bool = False

    @property
    def is_ds(self) -> bool:
        return isinstance(self.real, PseudoCoefficientDS)

    @property
    def pair(self) -> TestFunctionQuadruple:
        """The quadruple carrying g (shared by both halves of a pseudo-coefficient)."""
        return self.real.pair_k if self.is_ds else self.real

    @property
    def real_weight(self) -> int:
        return self.real.k if self.is_ds else int(round(self.real.weight))

    @property
    def support(self) -> float:
        return self.pair.support


def _sign_at_minus_one(mu: pl.UnitCharacter) -> int:
    return int(round(complex(mu(mu.p**mu.N - 1)).real))


def primitive_characters(q: int, N: int, parity: Optional[int] = None) -> List[pl.UnitCharacter]:
    """Characters of conductor exactly q^N in exponent order, optionally with mu(-1) = parity."""
    first = pl.UnitCharacter(q, N, 1)
    out = []
    for e in range(1, first.order):
        mu = pl.UnitCharacter(q, N, e)
        if mu.conductor() != N:
            continue
        if parity is None or _sign_at_minus_one(mu) == parity:
            out.append(mu)
    return out


def _real_parity(entry: ArchimedeanEntry) -> int:
    if entry.entry == "ups":
        return 1
    if entry.entry == "rps":
        return -1
    return (-1) ** entry.weight


def choose_characters(spec: SimilarityClassSpec) -> Dict[int, pl.UnitCharacter]:
    """One character per ramified principal-series place.

    The spec fixes only conductors.  Each place gets its first even primitive
    character; if the archimedean entry needs an odd central character, the
    first place that admits one is switched to its first odd character.
    """
    real = spec.check_rational()
    want = _real_parity(real) * _fixed_parity(spec)
    chosen: Dict[int, pl.UnitCharacter] = {}
    rps = [f for f in spec.finite if f.entry == "rps"]
    for f in rps:
        even = primitive_characters(f.q, f.conductor, 1)
        chosen[f.q] = even[0] if even else primitive_characters(f.q, f.conductor)[0]
    parity = 1
    for mu in chosen.values():
        parity *= _sign_at_minus_one(mu)
    if parity != want:
        for f in rps:
            cur = _sign_at_minus_one(chosen[f.q])
            alt = primitive_characters(f.q, f.conductor, -cur)
            if alt:
                chosen[f.q] = alt[0]
                parity = -parity
                break
    if parity != want:
        raise SpecError("no global central character matches the local data")
    return chosen


def _sc_type(q: int) -> pl.DepthZeroType:
    return pl.DepthZeroType(q, pl.regular_theta_exponents(q)[0])


def _fixed_parity(spec: SimilarityClassSpec) -> int:
    """Central character at -1 of the finite places other than rps."""
    sign = 1
    for f in spec.finite:
        if f.entry == "sc":
            t = _sc_type(f.q)
            val = complex(t.character(f.q - 1, 0, 0, f.q - 1)) / t.dim()
            sign *= int(round(val.real))
    return sign


def _finite_test(f: FiniteEntry, hecke: bool, mu: Optional[pl.UnitCharacter] = None) -> pl.TestKind:
    q = f.q
    if f.entry == "ups":
        return pl.TestKind.hecke_unram() if hecke else pl.TestKind.phi_mu(0)
    if f.entry == "rps":
        if hecke:
            return pl.TestKind.hecke_ram(f.conductor, mu)
        return pl.TestKind("phi_mu", N=f.conductor, mu=mu)
    if f.entry == "st":
        return pl.TestKind.phi_steinberg()
    # supercuspidal places use the first depth-zero type
    return _sc_type(q).test_kind()


def build_test_function(
    spec: SimilarityClassSpec,
    support: float = 1.0,
    normalization: str = "unit-mass",
    zero: bool = False,
    seed=None,
) -> GlobalTestFunction:
    """Seed g: a bump of the given support (or ``seed``), or g = 0 with ``zero``."""
    real = spec.check_rational()
    if real.entry == "ds":
        k = real.weight
        if zero:
            ptf = PseudoCoefficientDS(k, zero_quadruple(support, k), zero_quadruple(support, k - 2))
        elif seed is not None:
            ptf = PseudoCoefficientDS(k, quadruple_from_g(seed, k), quadruple_from_g(seed, k - 2))
        else:
            ptf = PseudoCoefficientDS.build(k, support)
        realpart = ptf
    else:
        n = 0 if real.entry == "ups" else 1
        if zero:
            realpart = zero_quadruple(support, n)
        else:
            realpart = quadruple_from_g(seed if seed is not None else make_bump(support, normalization), n)
    chars = choose_characters(spec)
    places = [
        FinitePlace(f, _finite_test(f, f.q in spec.hecke_set, chars.get(f.q)), f.q in spec.hecke_set)
        for f in spec.finite
    ]
    return GlobalTestFunction(spec, realpart, places, zero)


def combine(gtf1: GlobalTestFunction, gtf2: GlobalTestFunction, c1: float = 1.0, c2: float = 1.0) -> GlobalTestFunction:
    """c1 g1 + c2 g2 at the real place, same finite data."""
    s = SumSeed((gtf1.pair.seed, gtf2.pair.seed), (c1, c2))
    return build_test_function(gtf1.spec, seed=s)


# ---------------------------------------------------------------------------
# reports


@dataclass
class LocalTermReport:
    term: str
    value: complex
    err_estimate: float
    note: str = ""

    @property
    def finite(self) -> bool:
        return bool(np.isfinite(self.value.real) and np.isfinite(self.value.imag))


def _fmt(x: float) -> str:
    return f"{x + 0.0:.17g}"  # + 0.0 folds -0 into 0


def term_rows_csv(rows: Sequence[LocalTermReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["term", "value_re", "value_im", "err_estimate"])
    for r in rows:
        w.writerow([r.term, _fmt(r.value.real), _fmt(r.value.imag), _fmt(r.err_estimate)])
    return buf.getvalue()


def _c(x) -> complex:
    return complex(x)


def _finite_product(values) -> complex:
    out = 1 + 0j
    for v in values:
        out *= complex(v)
    return out


# ---------------------------------------------------------------------------
# identity


def identity_global(gtf: GlobalTestFunction, tol: float = DEFAULT_TOL) -> LocalTermReport:
    """vol * phi(1), with phi(1) the product of the local values."""
    if gtf.zero or gtf.spec.hecke_set:
        return LocalTermReport("identity", 0j, 0.0, "vanishes" if gtf.spec.hecke_set else "")
    if gtf.is_ds:
        real = gtf.real.identity()
    else:
        real = identity_real(gtf.real, tol=tol)
    fin = _finite_product(pl.identity_padic(p.test, p.entry.q) for p in gtf.finite)
    val = gtf.spec.volume * real * fin
    return LocalTermReport("identity", complex(val), 10 * tol * abs(gtf.spec.volume * fin))


# ---------------------------------------------------------------------------
# parabolic


def parabolic_global(gtf: GlobalTestFunction, tol: float = DEFAULT_TOL) -> LocalTermReport:
    """lambda_0 prod(values) + lambda_{-1} sum_w derivative_w prod_{v != w} values."""
    if gtf.zero:
        return LocalTermReport("parabolic", 0j, 0.0)
    lam_m1, lam_0, resid = completed_zeta_laurent()
    if gtf.is_ds:
        real = gtf.real.parabolic()
    else:
        real = parabolic_real(gtf.real, tol=tol)
    locals_ = [(complex(real[0]), complex(real[1]))]
    for p in gtf.finite:
        pv = pl.parabolic_padic(p.test, p.entry.q)
        locals_.append((complex(float(pv.value)), complex(pv.derivative)))
    vals = [v for v, _ in locals_]
    total = lam_0 * _finite_product(vals)
    for i, (_, d) in enumerate(locals_):
        total += lam_m1 * d * _finite_product(v for j, v in enumerate(vals) if j != i)
    return LocalTermReport("parabolic", complex(total), 10 * tol + resid * abs(total))


# ---------------------------------------------------------------------------
# elliptic classes (rotations at infinity) and closed geodesics


def _hensel_roots(t: int, p: int, N: int) -> List[int]:
    """Simple roots of x^2 - t x + 1 lifted to Z/p^N."""
    roots = [x for x in range(p) if (x * x - t * x + 1) % p == 0]
    out = []
    for r in roots:
        if (2 * r - t) % p == 0:
            continue
        x, mod = r, p
        for _ in range(1, N):
            mod *= p
            f = x * x - t * x + 1
            x = (x - f * pow(2 * x - t, -1, mod)) % mod
        out.append(x % p**N)
    return out


def _finite_elliptic_ratio(place: FinitePlace, theta: float):
    """Local orbital integral of the rotation class relative to phi_1."""
    if place.test.kind == "phi_mu" and place.test.N == 0:
        return 1
    t = 2 * math.cos(theta)
    if abs(t - round(t)) > 1e-9:
        raise NotImplementedError("elliptic classes over Q need an integral trace")
    t = int(round(t))
    q = place.entry.q
    disc = t * t - 4
    if disc % q == 0:
        raise NotImplementedError(f"the rotation class is ramified at {q}")
    irreducible = all((x * x - t * x + 1) % q for x in range(q))
    if irreducible:
        return pl.elliptic_padic(place.test, q, pl.EllipticElementData(t % q, 0, 1))
    N = max(1, place.test.N)
    r1, r2 = _hensel_roots(t, q, N)
    if place.test.kind == "phi_mu" and place.test.mu is not None:
        # diag(r1, r2) = r2 diag(m, 1) and the centre acts through conj(mu)
        mu = place.test.mu
        return complex((mu(r1).conj() + mu(r2).conj()) / 2)
    m = r1 * pow(r2, -1, q**N) % q**N
    # m = 1 mod q would force q | t^2 - 4, excluded above
    gamma = pl.HyperbolicElementData(0, m, one_minus_val=0)
    return pl.hyperbolic_padic(place.test, q, gamma)


def _zagier_reduced(D: int) -> List[Tuple[int, int, int]]:
    """Primitive forms [a, b, c] of discriminant D with a, c > 0 and b > a + c."""
    out = set()
    e_max = math.isqrt(D - 1) if D > 1 else 0
    for e in range(-e_max, e_max + 1):
        M = D - e * e
        if M <= 0:
            continue
        for m in range(1, math.isqrt(M) + 1):
            if M % m:
                continue
            n = M // m
            if (m + n) % 2 or (n - m) % 2:
                continue
            s = (n - m) // 2
            if (s + e) % 2:
                continue
            a, c = (s + e) // 2, (s - e) // 2
            b = (m + n) // 2
            if a > 0 and c > 0 and b > a + c and math.gcd(math.gcd(a, b), c) == 1:
                out.add((a, b, c))
    return sorted(out)


def _zagier_next(f: Tuple[int, int, int]) -> Tuple[int, int, int]:
    a, b, c = f
    # f(n x + y, -x) for the unique n that keeps the form reduced
    for n in range(1, 4 * (b + a + c) + 4):
        a2, b2 = a * n * n - b * n + c, 2 * a * n - b
        if a2 > 0 and b2 > a2 + a:
            return (a2, b2, a)
    raise ArithmeticError(f"no reduced successor for {f}")


def narrow_class_number(D: int) -> int:
    """h^+(D) for a non-square discriminant D > 0, by counting reduction cycles."""
    if D <= 0 or D % 4 not in (0, 1) or math.isqrt(D) ** 2 == D:
        raise ValueError("D must be a positive non-square discriminant")
    forms = set(_zagier_reduced(D))
    cycles = 0
    while forms:
        start = forms.pop()
        cycles += 1
        f = _zagier_next(start)
        while f != start:
            forms.discard(f)
            f = _zagier_next(f)
    return cycles


def fundamental_unit(D: int) -> float:
    """eps_D = (t + u sqrt D)/2 with t^2 - D u^2 = 4 minimal, t, u > 0."""
    u = 1
    while True:
        t2 = 4 + D * u * u
        t = math.isqrt(t2)
        if t * t == t2:
            return (t + u * math.sqrt(D)) / 2
        u += 1


def geodesic_classes(max_trace: int) -> List[Tuple[int, float]]:
    """(t, sum of log N(P_0)) over hyperbolic classes of PSL2(Z) with trace t."""
    out = []
    for t in range(3, max_trace + 1):
        total = 0.0
        T = t * t - 4
        for u in range(1, math.isqrt(T) + 1):
            if T % (u * u):
                continue
            D = T // (u * u)
            if D % 4 in (0, 1):
                total += narrow_class_number(D) * 2 * math.log(fundamental_unit(D))
        out.append((t, total))
    return out


def geodesic_sum(pair: TestFunctionQuadruple) -> float:
    """sum_P log N(P_0) g(log N P) / (N P^(1/2) - N P^(-1/2)) over traces with log N P < C."""
    C = pair.support
    if C <= SL2Z_MIN_GEODESIC:
        return 0.0
    # log N P = 2 arccosh(t/2) < C
    tmax = int(math.floor(2 * math.cosh(C / 2)))
    total = 0.0
    for t, lsum in geodesic_classes(tmax):
        lnp = 2 * math.acosh(t / 2)
        total += lsum * float(pair.g(lnp)) / math.sqrt(t * t - 4)
    return total


def elliptic_global(gtf: GlobalTestFunction, tol: float = DEFAULT_TOL) -> LocalTermReport:
    """Q-elliptic classes: the configured rotations plus the closed geodesics."""
    if gtf.zero:
        return LocalTermReport("elliptic", 0j, 0.0)
    spec = gtf.spec
    if spec.hecke_set and spec.elliptic_classes:
        raise NotImplementedError("elliptic classes with Hecke places need class data of odd determinant")
    total = 0j
    for cls in spec.elliptic_classes:
        if gtf.is_ds:
            real = gtf.real.elliptic(cls.theta)
        else:
            real = elliptic_real(gtf.real, theta=cls.theta, tol=tol)
        fin = _finite_product(_finite_elliptic_ratio(p, cls.theta) for p in gtf.finite)
        total += cls.weight * real * fin
    note = ""
    if gtf.is_ds:
        note = "closed geodesics cancel in the pseudo-coefficient"
    elif gtf.support > SL2Z_MIN_GEODESIC:
        if not spec.is_full_level:
            raise NotImplementedError("closed-geodesic terms are only assembled at full level")
        total += geodesic_sum(gtf.real)
        note = "includes closed geodesics"
    return LocalTermReport("elliptic", complex(total), 10 * tol * max(1, len(spec.elliptic_classes)), note)


# ---------------------------------------------------------------------------
# Q-split (hyperbolic) classes


def _split_candidates(spec: SimilarityClassSpec) -> List[Fraction]:
    """m in Q^x, m != 1, that are units away from the Hecke places and of valuation +-1 there."""
    hs = sorted(spec.hecke_set)
    out = []
    for signs in product((-1, 1), repeat=len(hs)):
        m = Fraction(1)
        for q, e in zip(hs, signs):
            m *= Fraction(q) ** e
        for sgn in (1, -1):
            mm = sgn * m
            if mm != 1:
                out.append(mm)
    return sorted(set(out))


def _padic_hyperbolic_data(m: Fraction, q: int) -> pl.HyperbolicElementData:
    num, den = m.numerator, m.denominator
    v = (pl.vp(abs(num), q) if num % q == 0 else 0) - (pl.vp(den, q) if den % q == 0 else 0)
    unit = Fraction(num, den) / Fraction(q) ** v
    mod = q**12
    u = unit.numerator * pow(unit.denominator, -1, mod) % mod
    j = None
    if v == 0:
        diff = unit - 1
        j = pl.vp(abs(diff.numerator), q) if diff.numerator % q == 0 else 0
    return pl.HyperbolicElementData(v, u, one_minus_val=j)


def hyperbolic_global(gtf: GlobalTestFunction, tol: float = DEFAULT_TOL) -> LocalTermReport:
    """Weighted orbital integrals of diag(m, 1), m in Q^x.

    Away from the Hecke places m must be a unit everywhere, so m = -1 unless
    Hecke operators are present, and the real factor vanishes on det < 0.
    """
    if gtf.zero:
        return LocalTermReport("hyperbolic", 0j, 0.0, "")
    total = 0j
    for m in _split_candidates(gtf.spec):
        alpha = float(m)
        if gtf.is_ds:
            real_u = gtf.real.hyperbolic(alpha)
            real_w = gtf.real.hyperbolic(alpha, weighted=True) if alpha > 0 else 0.0
        else:
            real_u = hyperbolic_real(gtf.real, alpha=alpha)
            real_w = hyperbolic_real(gtf.real, alpha=alpha, weighted=True, tol=tol) if alpha > 0 else 0.0
        locs = [(complex(real_u), complex(real_w))]
        for p in gtf.finite:
            data = _padic_hyperbolic_data(m, p.entry.q)
            u = pl.hyperbolic_padic(p.test, p.entry.q, data)
            try:
                w = pl.hyperbolic_padic(p.test, p.entry.q, data, weighted=True)
            except NotImplementedError:
                w = 0
            locs.append((complex(u), complex(w)))
        uvals = [u for u, _ in locs]
        for i, (_, w) in enumerate(locs):
            total += w * _finite_product(u for j, u in enumerate(uvals) if j != i)
    note = "units of Z are +-1; det < 0 kills the real factor" if not gtf.spec.hecke_set else ""
    return LocalTermReport("hyperbolic", complex(HYPERBOLIC_NORMALIZATION * total), 10 * tol, note)


# ---------------------------------------------------------------------------
# scattering (Eisenstein) term


def _dlog_real_factor(entry: str, s: complex) -> complex:
    """d/ds log of the real factor of Lambda^X(2s)/Lambda^X(2s+1)."""
    if entry == "ups":
        return digamma(s) - digamma(s + 0.5)
    # i sqrt(pi) Gamma(s+1/2)/Gamma(s+1)
    return digamma(s + 0.5) - digamma(s + 1.0)


def _dlog_local_zeta_ratio(q: int, s: complex) -> complex:
    """d/ds log zeta_v(2s)/zeta_v(2s+1)."""
    lq = math.log(q)
    a = q ** (-2 * s)
    b = q ** (-2 * s - 1)
    return -2 * lq * a / (1 - a) + 2 * lq * b / (1 - b)


def _dlog_ds_ratio(k: int, s: complex) -> complex:
    """d/ds log lambda(s, k)/lambda(s, k-2) through digamma values."""

    def dl(n):
        return digamma(s) + digamma(s + 0.5) - digamma(s + 0.5 + n / 2) - digamma(s + 0.5 - n / 2)

    return dl(k) - dl(k - 2)


def _dlog_steinberg_ratio(q: int, s: complex) -> complex:
    """d/ds log zeta_v(2s+1)/zeta_v(2s-1)."""
    lq = math.log(q)
    a = q ** (1 - 2 * s)
    b = q ** (-1 - 2 * s)
    return 2 * lq * a / (1 - a) - 2 * lq * b / (1 - b)


def _hecke_shifts(gtf: GlobalTestFunction) -> List[float]:
    """Shifts L with prod_v (q_v^{it} + q_v^{-it}) = sum_L e^{i t L}."""
    logs = [math.log(p.entry.q) for p in gtf.finite if p.hecke]
    return [sum(e * l for e, l in zip(signs, logs)) for signs in product((-1, 1), repeat=len(logs))]


def _family_constant(gtf: GlobalTestFunction) -> float:
    """Eisenstein families times their finite traces.

    Each rps place doubles the number of inducing pairs, (mu, 1) and (1, mu),
    and phi_mu has trace 1/2 on either, so the product is 1.
    """
    c = 1.0
    for p in gtf.finite:
        if p.entry.entry == "rps":
            if p.hecke:
                raise NotImplementedError("Eisenstein term with a ramified Hecke operator")
            rep = pl.PAdicRepKind.principal(p.entry.conductor)
            c *= 2 * pl.trace_on_rep(p.test, rep, p.entry.q).at(0).real
    return c


def eisenstein_characters(gtf: GlobalTestFunction) -> List[List[complex]]:
    """Values mod M of the Dirichlet characters nu = prod mu_v^(+-1), one per conjugate pair."""
    places = [p for p in gtf.finite if p.entry.entry == "rps"]
    if not places:
        return []
    M = 1
    for p in places:
        M *= p.entry.q**p.entry.conductor
    out = []
    for signs in product((1, -1), repeat=len(places) - 1):
        eps = (1,) + signs
        vals = []
        for n in range(M):
            v = 1 + 0j
            for e, p in zip(eps, places):
                mod = p.entry.q**p.entry.conductor
                if n % p.entry.q == 0:
                    v = 0j
                    break
                c = complex(p.test.mu(n % mod))
                v *= c if e == 1 else c.conjugate()
            vals.append(v)
        out.append(vals)
    return out


def scattering_density(gtf: GlobalTestFunction, t: float, variant: str = "derived") -> float:
    """Real part of the log-derivative weight at s = i t (without h).

    With rps places the derived weight uses L(s, nu) for the inducing
    characters; ``variant='published'`` uses zeta with the rps Euler factors
    removed.
    """
    s = 1j * t
    spec = gtf.spec
    if gtf.is_ds:
        return _dlog_ds_ratio(gtf.real.k, s).real
    sts = [p for p in gtf.finite if p.entry.entry == "st"]
    if sts:
        return _dlog_steinberg_ratio(sts[0].entry.q, s).real
    d = _dlog_real_factor(spec.real_entry.entry, s)
    chars = eisenstein_characters(gtf)
    if variant == "published":
        d += 2 * zeta_log_deriv(2 * s) - 2 * zeta_log_deriv(2 * s + 1)
        for p in gtf.finite:
            if p.entry.entry == "rps":
                d -= _dlog_local_zeta_ratio(p.entry.q, s)
        return d.real
    if not chars:
        return (d + 2 * zeta_log_deriv(2 * s) - 2 * zeta_log_deriv(2 * s + 1)).real
    # average over the inducing pairs; L(s, nu) has no Euler factor at rps places
    acc = 0.0
    for chi in chars:
        acc += (2 * dirichlet_L_log_deriv(2 * s, chi) - 2 * dirichlet_L_log_deriv(2 * s + 1, chi)).real
    return d.real + acc / len(chars)


def _deriv_l1(seed, order: int) -> float:
    """||g^(order)||_1 for order in {0, 2, 4}, by sampling."""
    C = seed.C
    x = np.linspace(-C, C, 8001)
    dx = x[1] - x[0]
    if order == 0:
        y = seed.g(x)
    elif order == 2 and hasattr(seed, "d2g"):
        y = seed.d2g(x)
    else:
        step = 1e-3 * C
        base = (lambda z: seed.d2g(z)) if hasattr(seed, "d2g") else seed.g
        y = (base(x + step) - 2 * base(x) + base(x - step)) / step**2
        if not hasattr(seed, "d2g"):
            y = (np.roll(y, -1) - 2 * y + np.roll(y, 1)) / dx**2
    return float(np.sum(np.abs(y)) * dx)


def _scattering_tail(gtf: GlobalTestFunction, T: float) -> float:
    """Bound for (1/2pi) int_T^inf |h(t)| |density(t)| dt using |h| <= ||g''''||_1 / t^4."""
    c4 = _deriv_l1(gtf.pair.seed, 4)
    H = 2.0 ** len([p for p in gtf.finite if p.hecke])
    extra = sum(4 * math.log(p.entry.q) for p in gtf.finite) + 12.0
    # |density| <= 4 log t + extra for t >= 2
    tail = c4 * H * (4 * (3 * math.log(T) + 1) / (9 * T**3) + extra / (3 * T**3))
    return tail / (2 * math.pi)


def scattering_term(
    gtf: GlobalTestFunction,
    tol: float = DEFAULT_TOL,
    route: str = "contour",
    t_max: Optional[float] = None,
    variant: str = "derived",
) -> LocalTermReport:
    """(1/4 pi) int_R h(t) prod_{S^H} 2 cos(t log q) D(t) dt.

    ``route='contour'`` integrates the log-derivative weight D numerically.
    For a single square-integrable factor ``route='closed'`` evaluates the
    same integral through the Fourier transform of D, and
    ``route='published'`` returns the published residue formula.
    """
    spec = gtf.spec
    if gtf.zero:
        return LocalTermReport("scattering", 0j, 0.0)
    if any(p.entry.entry == "sc" for p in gtf.finite):
        return LocalTermReport("scattering", 0j, 0.0, "supercuspidal factor")
    if spec.square_integrable_count >= 2:
        return LocalTermReport("scattering", 0j, 0.0, "two square-integrable factors")
    pair = gtf.pair
    shifts = _hecke_shifts(gtf)
    const = _family_constant(gtf)
    sq = spec.square_integrable_count == 1
    if route in ("closed", "published"):
        if not sq:
            raise ValueError("closed forms exist only with one square-integrable factor")
        return _scattering_closed(gtf, shifts, const, route, tol)
    if route != "contour":
        raise ValueError(f"unknown route {route!r}")
    R = t_max if t_max is not None else _auto_tmax(gtf, tol)

    def f(t):
        t = np.atleast_1d(t)
        hv = pair.h_array(t).real
        hk = np.ones_like(t)
        if shifts != [0.0]:
            hk = np.zeros_like(t)
            for L in shifts:
                hk += np.cos(t * L)
        dens = np.array([scattering_density(gtf, float(x), variant) for x in t])
        return hv * hk * dens

    res = quad_levels(f, 0.0, R, tol, initial=32)
    val = 2.0 * res.value.real * const / (4 * math.pi)
    err = 2.0 * res.err_estimate / (4 * math.pi) + _scattering_tail(gtf, R) * abs(const)
    return LocalTermReport("scattering", complex(val), err, f"contour |t| <= {R:.6g}")


def _auto_tmax(gtf: GlobalTestFunction, tol: float) -> float:
    """Smallest T on a grid with the tail estimate below tol/2 (capped at the h cutoff)."""
    pair = gtf.pair
    cap = pair.spectral_cutoff
    grid = np.linspace(0.0, cap, 4001)[1:]
    env = np.abs(pair.h_array(grid)) * (4 * np.log(grid + 2) + 12)
    # tail of the numerically sampled envelope, integrated from the right
    dx = grid[1] - grid[0]
    tail = np.cumsum(env[::-1])[::-1] * dx / (2 * math.pi)
    ok = np.nonzero(tail < tol / 2)[0]
    T = float(grid[ok[0]]) if ok.size else cap
    return max(T, 10.0 / pair.support)


def _scattering_closed(gtf, shifts, const, route, tol) -> LocalTermReport:
    spec = gtf.spec
    pair = gtf.pair
    g = pair.g
    if gtf.is_ds:
        k = gtf.real.k
        a = (k - 1) / 2
        if route == "published":
            val = pair.h(1j * a).real / (4 * math.pi)
            for p in gtf.finite:
                if p.hecke:
                    val *= p.entry.q ** (-a) + p.entry.q ** a
            return LocalTermReport("scattering", complex(val * const), 0.0, "published residue form")
        C = pair.support
        total = 0.0
        for L in shifts:
            total += quad(lambda u: g(u) * np.exp(-a * np.abs(u + L)), -C, C, tol).value.real
        return LocalTermReport("scattering", complex(-0.5 * total * const), tol, "Fourier form")
    st = next(p for p in gtf.finite if p.entry.entry == "st")
    q = st.entry.q
    lq = math.log(q)
    if route == "published":
        val = 2 * lq / (4 * math.pi) * pair.h(0.5j).real
        for p in gtf.finite:
            if p.hecke:
                val *= p.entry.q ** -0.5 + p.entry.q**0.5
        return LocalTermReport("scattering", complex(val * const), 0.0, "published residue form")
    C = pair.support
    kmax = int(math.ceil((C + sum(abs(L) for L in shifts)) / (2 * lq))) + 1
    total = 0.0
    for kk in range(-kmax, kmax + 1):
        for L in shifts:
            total += q ** (-abs(kk)) * float(g(2 * kk * lq + L))
    return LocalTermReport("scattering", complex(-lq * total * const), 0.0, "Fourier form")


def scattering_phase_integral(T: float, tol: float = 1e-8) -> float:
    """(1/4 pi) int_{-T}^{T} Re d/ds log phi(1/2 + s) at s = i t, for SL2(Z)."""

    def f(t):
        t = np.atleast_1d(t)
        out = []
        for x in t:
            s = 1j * float(x)
            d = digamma(s) - digamma(s + 0.5) + 2 * zeta_log_deriv(2 * s) - 2 * zeta_log_deriv(2 * s + 1)
            out.append(d.real)
        return np.array(out)

    return 2.0 * quad(f, 0.0, T, tol).value.real / (4 * math.pi)


# ---------------------------------------------------------------------------
# residual and one-dimensional terms


def _residual_omega(gtf: GlobalTestFunction) -> float:
    """tr M(0) on the distinguished K-types, relative to the full-level value -1."""
    omega = -1.0
    for p in gtf.finite:
        if p.entry.entry == "rps":
            return 0.0
        if p.entry.entry == "sc":
            return 0.0
        if p.entry.entry == "st":
            # lambda_St/lambda_sph at 0 is zeta_v(1)/zeta_v(-1) = -q
            omega *= -p.entry.q - 1
    return omega


def residual_term(gtf: GlobalTestFunction) -> LocalTermReport:
    """-(1/4) 2^{|S^H|} Omega(0) h(0)."""
    if gtf.zero:
        return LocalTermReport("residual", 0j, 0.0)
    spec = gtf.spec
    real = spec.real_entry
    if real.entry == "rps":
        return LocalTermReport("residual", 0j, 0.0, "odd K-type: M(0) vanishes")
    if real.entry == "ds":
        # lambda(0, k) = lambda(0, k - 2) for even k, both vanish for odd k
        return LocalTermReport("residual", 0j, 0.0, "pseudo-coefficient halves cancel")
    omega = _residual_omega(gtf)
    val = -0.25 * 2 ** len(spec.hecke_set) * omega * gtf.real.h(0).real
    return LocalTermReport("residual", complex(val), 1e-15 * abs(val))


def one_dim_term(gtf: GlobalTestFunction) -> LocalTermReport:
    """Minus the product of the local characters of the trivial representation."""
    if gtf.zero:
        return LocalTermReport("one_dim", 0j, 0.0)
    triv = RealRepDescriptor.trivial()
    if gtf.is_ds:
        real = gtf.real.character(triv)
    else:
        real = char_value_real(triv, gtf.real)
    fin = _finite_product(pl.onedim_padic(p.test, p.entry.q) for p in gtf.finite)
    val = -complex(real) * fin
    return LocalTermReport("one_dim", val, 1e-15 * abs(val))


# ---------------------------------------------------------------------------
# the geometric side


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("TRACEFORGE_THREADS", "1")))
    except ValueError:
        return 1


def evaluate_term(name: str, gtf: GlobalTestFunction, tol: float = DEFAULT_TOL) -> LocalTermReport:
    fns = {
        "identity": lambda: identity_global(gtf, tol),
        "parabolic": lambda: parabolic_global(gtf, tol),
        "elliptic": lambda: elliptic_global(gtf, tol),
        "hyperbolic": lambda: hyperbolic_global(gtf, tol),
        "scattering": lambda: scattering_term(gtf, tol),
        "residual": lambda: residual_term(gtf),
        "one_dim": lambda: one_dim_term(gtf),
    }
    if name not in fns:
        raise ValueError(f"unknown term {name!r}; expected one of {TERM_NAMES}")
    try:
        return fns[name]()
    except NotImplementedError as exc:
        return LocalTermReport(name, complex(math.nan, 0.0), math.inf, f"not available: {exc}")


def geometric_side(gtf: GlobalTestFunction, tol: float = DEFAULT_TOL) -> Tuple[List[LocalTermReport], LocalTermReport]:
    """All seven rows in fixed order plus their sum."""
    workers = min(_threads(), len(TERM_NAMES))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(lambda n: evaluate_term(n, gtf, tol), TERM_NAMES))
    else:
        rows = [evaluate_term(n, gtf, tol) for n in TERM_NAMES]
    total = sum((r.value for r in rows), 0j)
    err = sum(r.err_estimate for r in rows)
    return rows, LocalTermReport("total", total, err)


# ---------------------------------------------------------------------------
# spectral side


@dataclass
class EigenvalueFixture:
    """Spectral parameters r_j (lambda = 1/4 + r^2) of Maass cusp forms."""

    r: np.ndarray
    parity: List[str]
    multiplicity: np.ndarray
    provenance: str = ""

    HEADER = ("r", "parity", "multiplicity")

    def __len__(self):
        return int(self.r.size)

    @classmethod
    def empty(cls, provenance: str = "") -> "EigenvalueFixture":
        return cls(np.zeros(0), [], np.zeros(0, dtype=int), provenance)

    @classmethod
    def from_csv(cls, text: str, provenance: str = "") -> "EigenvalueFixture":
        if "\r" in text:
            raise SpecError("eigenvalue file must use LF line endings")
        lines = text.split("\n")
        if not lines or tuple(lines[0].strip().split(",")) != cls.HEADER:
            raise SpecError("eigenvalue file header must be 'r,parity,multiplicity'")
        rs, par, mult = [], [], []
        for i, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise SpecError(f"line {i}: expected 3 fields")
            try:
                r = float(parts[0])
                m = int(parts[2])
            except ValueError:
                raise SpecError(f"line {i}: bad number") from None
            p = parts[1].strip()
            if p not in ("even", "odd"):
                raise SpecError(f"line {i}: parity must be even or odd")
            if r < 0 or m < 1:
                raise SpecError(f"line {i}: need r >= 0 and multiplicity >= 1")
            if rs and r < rs[-1]:
                raise SpecError(f"line {i}: r must be nondecreasing")
            rs.append(r)
            par.append(p)
            mult.append(m)
        return cls(np.array(rs, dtype=float), par, np.array(mult, dtype=int), provenance)

    @classmethod
    def load(cls, path) -> "EigenvalueFixture":
        with open(path, encoding="utf-8", newline="") as fh:
            return cls.from_csv(fh.read(), str(path))


def spectral_tail_bound(pair: TestFunctionQuadruple, r_max: float) -> float:
    """Bound for sum_{r_j > r_max} |h(r_j)|.

    Uses |h| <= min(||g||_1, ||g''''||_1 / r^4) and the Weyl density r/6,
    doubled for the lower-order counting terms.
    """
    if pair.is_zero:
        return 0.0
    B0 = _deriv_l1(pair.seed, 0)
    c4 = _deriv_l1(pair.seed, 4)
    rstar = (c4 / B0) ** 0.25
    R = max(r_max, 0.0)
    if R < rstar:
        val = B0 * (rstar**2 - R**2) / 12 + c4 / (12 * rstar**2)
    else:
        val = c4 / (12 * R**2)
    return 2.0 * val


def spectral_side(pair: TestFunctionQuadruple, fixture: EigenvalueFixture, parity: str = "all") -> Tuple[float, float]:
    """(sum of multiplicity * h(r_j), tail bound beyond the last r_j)."""
    if pair.is_zero:
        return 0.0, 0.0
    if len(fixture) == 0:
        return 0.0, spectral_tail_bound(pair, 0.0)
    keep = np.array([parity == "all" or p == parity for p in fixture.parity])
    r = fixture.r[keep]
    m = fixture.multiplicity[keep]
    total = float(np.sum(m * pair.h_array(r).real)) if r.size else 0.0
    return total, spectral_tail_bound(pair, float(fixture.r[-1]))


# ---------------------------------------------------------------------------
# Weyl law


def c_x(spec: SimilarityClassSpec) -> float:
    """vol / (4 pi) * prod C_v * prod over discrete series (k - 1)/2."""
    real = spec.check_rational()
    c = spec.volume / (4 * math.pi)
    if real.entry == "ds":
        c *= (real.weight - 1) / 2
    chars = choose_characters(spec)
    for f in spec.finite:
        test = _finite_test(f, False, chars.get(f.q))
        c *= float(pl.identity_padic(test, f.q))
    return c


def weyl_estimate(spec: SimilarityClassSpec, T: float, band_constant: float = 1.0) -> Tuple[float, float, float]:
    """(main, secondary, error band) for the counting function at height T."""
    if T < 1:
        raise ValueError("T must be >= 1")
    C = c_x(spec)
    main = C * T * T
    secondary = -(2 / math.pi) * T * math.log(T) if spec.all_principal else 0.0
    return main, secondary, band_constant * C * T
