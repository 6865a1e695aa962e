"""Local distributions of GL2(R) on bi-K-finite test functions.

Every function here takes a :class:`~traceforge.testfn.TestFunctionQuadruple`
of weight ``n`` at a real place.  The group function behind the
quadruple is

    phi(g) = Phi(tr(g^T g)/det g - 2) * cos(n * alpha(g))      (det g > 0)

with alpha(g) the rotation angle of the polar decomposition, and zero on
negative determinant.  Several quantities admit more than one closed
form; the alternative forms are kept callable so the tests can play them
against each other and against direct quadrature on the group.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .special import (
    EULER_GAMMA,
    PoleError,
    cheb_T_array,
    digamma,
    log_gamma,
    quad,
)
from .testfn import TestFunctionQuadruple, make_bump, quadruple_from_g

TOL = 1e-10


# ---------------------------------------------------------------------------
# Representations


@dataclass(frozen=True)
class RealRepDescriptor:
    """An irreducible admissible representation of GL2(R), up to twist.

    kind is ``principal-series`` (with ``parity`` and ``s``),
    ``discrete-series`` (with ``k``) or ``one-dimensional``.
    """

    kind: str
    parity: str = "even"
    s: complex = 0j
    k: int = 2

    def __post_init__(self):
        if self.kind not in ("principal-series", "discrete-series", "one-dimensional"):
            raise ValueError(f"unknown representation kind {self.kind!r}")
        if self.parity not in ("even", "odd"):
            raise ValueError("parity must be 'even' or 'odd'")
        if self.kind == "discrete-series" and self.k < 2:
            raise ValueError("discrete series needs k >= 2")

    @classmethod
    def principal(cls, s, parity: str = "even") -> "RealRepDescriptor":
        return cls("principal-series", parity=parity, s=complex(s))

    @classmethod
    def discrete(cls, k: int) -> "RealRepDescriptor":
        return cls("discrete-series", k=int(k))

    @classmethod
    def trivial(cls) -> "RealRepDescriptor":
        return cls("one-dimensional")


def _weight(pair: TestFunctionQuadruple, n: Optional[int]) -> int:
    if pair.place_kind != "real":
        raise ValueError("expected a quadruple at a real place")
    return int(round(pair.weight)) if n is None else int(n)


def char_value_real(rep: RealRepDescriptor, pair: TestFunctionQuadruple, n: Optional[int] = None) -> complex:
    """Trace of pi(phi) for the weight-n function attached to ``pair``."""
    n = _weight(pair, n)
    if rep.kind == "principal-series":
        want = 0 if rep.parity == "even" else 1
        if n % 2 != want:
            return 0j
        return pair.h(1j * rep.s)
    if rep.kind == "discrete-series":
        k = rep.k
        if n >= k and (n - k) % 2 == 0:
            return pair.h(0.5j * (k - 1))
        return 0j
    return pair.h(0.5j) if n == 0 else 0j


# ---------------------------------------------------------------------------
# Group-side evaluation (used by the direct oracles)


def rotation_angle(a, b, c, d):
    """Rotation angle of the polar part of [[a, b], [c, d]] (det > 0)."""
    return np.arctan2(np.asarray(b) - c, np.asarray(a) + d)


def group_function(pair: TestFunctionQuadruple, a, b, c, d, n: Optional[int] = None, complex_char: bool = False):
    """phi evaluated entrywise on arrays of 2x2 matrices."""
    n = _weight(pair, n)
    a, b, c, d = (np.asarray(v, dtype=float) for v in (a, b, c, d))
    det = a * d - b * c
    pos = det > 0
    safe = np.where(pos, det, 1.0)
    u = np.maximum((a * a + b * b + c * c + d * d) / safe - 2.0, 0.0)
    alpha = rotation_angle(a, b, c, d)
    weight = np.exp(1j * n * alpha) if complex_char else np.cos(n * alpha)
    inside = pos & (u < pair.u_support)
    vals = np.zeros(u.shape, dtype=complex if complex_char else float)
    if np.any(inside):
        vals[inside] = pair.Phi(u[inside]) * weight[inside]
    return vals


# ---------------------------------------------------------------------------
# Identity


def _tanh_kernel(r, odd: bool):
    r = np.asarray(r, dtype=float)
    if not odd:
        return r * np.tanh(math.pi * r)
    small = np.abs(r) < 1e-8
    safe = np.where(small, 1.0, r)
    return np.where(small, 1.0 / math.pi, safe / np.tanh(math.pi * safe))


def identity_real(pair: TestFunctionQuadruple, n: Optional[int] = None, tol: float = TOL) -> float:
    """phi(1) on the spectral side: discrete sum plus the Plancherel integral."""
    n = _weight(pair, n)
    if pair.is_zero:
        return 0.0
    odd = n % 2 == 1
    total = 0.0
    for l in range(1, n + 1):
        if (l - (n - 1)) % 2 == 0:
            total += l / (4 * math.pi) * pair.h(0.5j * l).real
    val = pair.spectral_integral(lambda r: _tanh_kernel(r, odd), tol).real
    return total + 2.0 * val / (4 * math.pi)


def identity_real_direct(pair: TestFunctionQuadruple) -> float:
    """phi(1) = Phi(0) straight from the Abel inversion."""
    return float(pair.Phi(0.0))


# ---------------------------------------------------------------------------
# Parabolic


def _cosh_gap_over_sinh(u, n: int):
    """(1 - cosh(n u/2)) / (2 sinh(u/2)) with the series near u = 0."""
    u = np.asarray(u, dtype=float)
    small = u < 1e-3
    us = np.where(small, 1.0, u)
    exact = (1.0 - np.cosh(n * us / 2.0)) / (2.0 * np.sinh(us / 2.0))
    # numerator -n^2 u^2/8 - n^4 u^4/384, denominator u + u^3/24
    series = -(n * n) * u / 8.0 * (1.0 + (n * n) * u * u / 48.0) / (1.0 + u * u / 24.0)
    return np.where(small, series, exact)


def _re_digamma(a: float, r):
    """Re psi(a + i r) on an array."""
    return np.array([digamma(complex(a, x)).real for x in np.atleast_1d(r)])


def parabolic_real(pair: TestFunctionQuadruple, n: Optional[int] = None, route: str = "spectral", tol: float = TOL):
    """(value, derivative) of the local zeta integral at 1.

    ``route='spectral'`` uses the h/psi form, ``route='direct'`` integrates
    Phi against log v on the group side.  Both must agree.
    """
    n = _weight(pair, n)
    g0 = float(pair.g(0.0))
    if pair.is_zero:
        return 0.0, 0.0
    if route == "spectral":
        psi = pair.spectral_integral(lambda r: 2.0 * _re_digamma(1.0, r), tol).real
        tail = 0.0
        if n:
            tail = quad(lambda u: pair.g(u) * _cosh_gap_over_sinh(u, n), 0.0, pair.support, tol).value.real
        deriv = (math.log(math.pi) - EULER_GAMMA) / 2 * g0 + pair.h(0).real / 4 - psi / (2 * math.pi) + tail
        return g0, deriv
    if route == "direct":
        # v = w^2 removes the v^{-1/2} endpoint singularity
        def f(w):
            v = w * w
            vs = np.where(v > 0, v, 1.0)
            return 2.0 * pair.Phi(v) * np.where(v > 0, np.log(vs), 0.0) * cheb_T_array(n, 2.0 / np.sqrt(4.0 + v))

        R = 0.5 * quad(f, 0.0, math.sqrt(pair.u_support), tol).value.real
        deriv = ((EULER_GAMMA + math.log(math.pi)) / 2 + math.log(2.0)) * g0 + R
        return g0, deriv
    raise ValueError(f"unknown route {route!r}")


# ---------------------------------------------------------------------------
# Hyperbolic

HYPERBOLIC_FORMS = ("derived", "prop", "lemma", "direct")


def hyperbolic_real(
    pair: TestFunctionQuadruple,
    n: Optional[int] = None,
    alpha: float = 2.0,
    weighted: bool = False,
    form: str = "derived",
    tol: float = TOL,
) -> float:
    """Orbital integral of diag(alpha, 1), optionally with the log(1+x^2) weight.

    Unweighted forms: ``derived`` is g(log a)/|a^{1/2} - a^{-1/2}|, which
    direct quadrature confirms; ``prop`` and ``lemma`` are the two
    published variants, kept for comparison.  The weighted integral is
    always evaluated by quadrature over N.
    """
    n = _weight(pair, n)
    if alpha == 1.0 or alpha == 0.0:
        raise ValueError("alpha must differ from 0 and 1")
    if alpha < 0 or pair.is_zero:
        return 0.0
    la = math.log(alpha)
    if pair.support <= abs(la) / 2:
        return 0.0
    if weighted or form == "direct":
        return _hyperbolic_direct(pair, n, alpha, weighted, tol)
    if form == "derived":
        return float(pair.g(la)) / abs(math.sqrt(alpha) - 1 / math.sqrt(alpha))
    if form == "prop":
        return float(pair.g(la / 2)) / math.cosh(la / 2)
    if form == "lemma":
        return float(pair.g(la / 2)) / abs(math.sqrt(alpha) - 1 / math.sqrt(alpha))
    raise ValueError(f"unknown form {form!r}")


def _hyperbolic_direct(pair, n, alpha, weighted, tol):
    # n(-x) diag(alpha,1) n(x) = [[alpha, (alpha-1) x], [0, 1]]
    c = alpha + 1 / alpha - 2
    if c >= pair.u_support:
        return 0.0
    xmax = math.sqrt((pair.u_support - c) * alpha) / abs(alpha - 1)

    def f(x):
        vals = group_function(pair, np.full_like(x, alpha), (alpha - 1) * x, np.zeros_like(x), np.ones_like(x), n)
        return vals * (np.log1p(x * x) if weighted else 1.0)

    return quad(f, -xmax, xmax, tol).value.real


# ---------------------------------------------------------------------------
# Elliptic


def _reduce_cosh_ratio(m: int, cphi: float):
    """Write c_m = cosh(m u/2)/(cosh u - cos phi) as a0 c_0 + a1 c_1 + sum b_j cosh(j u/2)."""
    m = abs(m)
    if m == 0:
        return 1.0, 0.0, {}
    if m == 1:
        return 0.0, 1.0, {}
    if m == 2:
        return cphi, 0.0, {0: 1.0}
    a0, a1, da = _reduce_cosh_ratio(m - 2, cphi)
    b0, b1, db = _reduce_cosh_ratio(m - 4, cphi)
    d = {j: 2 * cphi * v for j, v in da.items()}
    for j, v in db.items():
        d[j] = d.get(j, 0.0) - v
    d[m - 2] = d.get(m - 2, 0.0) + 2.0
    return 2 * cphi * a0 - b0, 2 * cphi * a1 - b1, d


def _check_theta(theta: float) -> float:
    s = math.sin(theta)
    if abs(s) < 1e-12:
        raise ValueError("theta must avoid 0 and pi")
    return s


def _elliptic_u(pair, n, theta, tol):
    s = _check_theta(theta)
    D2 = 2 * s * s
    e1 = cmath.exp(1j * (n - 1) * theta)
    e2 = cmath.exp(1j * (n + 1) * theta)

    def f(u):
        num = e1 * np.cosh((n + 1) * u / 2) - e2 * np.cosh((n - 1) * u / 2)
        return pair.g(u) * num / (np.cosh(u) - 1 + D2)

    return 1j / abs(s) * quad(f, 0.0, pair.support, tol).value


def _elliptic_h(pair, n, theta, tol):
    s = _check_theta(theta)
    phi = 2 * theta
    cphi = math.cos(phi)
    sphi = math.sin(phi)

    def F0(r):
        # Fourier transform of 1/(cosh u - cos phi); exponentials keep it finite
        r = np.asarray(r, dtype=float)
        rs = np.where(r == 0, 1.0, r)
        if abs(sphi) < 1e-12:
            val = 2 * rs * np.exp(-math.pi * rs) / (-np.expm1(-2 * math.pi * rs))
            return 2 * math.pi * np.where(r == 0, 1 / math.pi, val)
        num = np.exp(-rs * phi) - np.exp(-rs * (2 * math.pi - phi))
        val = num / (sphi * -np.expm1(-2 * math.pi * rs))
        return 2 * math.pi * np.where(r == 0, (math.pi - phi) / (math.pi * sphi), val)

    def F1(r):
        # Fourier transform of cosh(u/2)/(cosh u - cos phi)
        r = np.asarray(r, dtype=float)
        num = np.exp(-r * phi) + np.exp(-r * (2 * math.pi - phi))
        return math.pi * num / (math.sin(theta) * (1 + np.exp(-2 * math.pi * r)))

    need0 = need1 = False
    terms = []
    for m, coef in ((n + 1, cmath.exp(1j * (n - 1) * theta)), (n - 1, -cmath.exp(1j * (n + 1) * theta))):
        red = _reduce_cosh_ratio(m, cphi)
        need0 |= red[0] != 0
        need1 |= red[1] != 0
        terms.append((coef, red))
    I0 = I1 = 0.0
    if need0:
        I0 = pair.spectral_integral(F0, tol).real / math.pi
    if need1:
        I1 = pair.spectral_integral(F1, tol).real / math.pi
    total = 0j
    for coef, (a0, a1, d) in terms:
        val = a0 * I0 + a1 * I1 + sum(v * pair.h(0.5j * j).real for j, v in d.items())
        total += coef * val
    return 0.5j / abs(s) * total


def _elliptic_group(pair, n, theta, tol, complex_char=True):
    """pi/|sin t| int Phi(s) e^{i n beta(s)} / sqrt(s + 4 sin^2 t) ds, beta the rotation angle."""
    s = _check_theta(theta)
    s2 = 4 * s * s
    c = 2 * math.cos(theta)

    def f(v):
        x = v * v
        w = np.sqrt(x + s2)
        beta = np.angle(c + 1j * w)
        wt = np.exp(1j * n * beta) if complex_char else np.cos(n * beta)
        return pair.Phi(x) * wt / w * 2 * v

    return math.pi / abs(s) * quad(f, 0.0, math.sqrt(pair.u_support), tol).value


ELLIPTIC_FORMS = ("h", "u", "group")


def elliptic_real(
    pair: TestFunctionQuadruple,
    n: Optional[int] = None,
    theta: float = math.pi / 2,
    form: str = "h",
    character: str = "complex",
    tol: float = TOL,
) -> complex:
    """Orbital integral of the rotation by theta.

    With ``character='complex'`` the K-type enters as e^{i n alpha}; the
    real part is the orbital integral of the cosine-weighted function and
    is returned for ``character='real'``.
    """
    n = _weight(pair, n)
    if pair.is_zero:
        _check_theta(theta)
        return 0j
    if form == "h":
        val = _elliptic_h(pair, n, theta, tol)
    elif form == "u":
        val = _elliptic_u(pair, n, theta, tol)
    elif form == "group":
        val = _elliptic_group(pair, n, theta, tol)
    else:
        raise ValueError(f"unknown form {form!r}")
    if character == "real":
        return complex(val.real, 0.0)
    if character != "complex":
        raise ValueError("character must be 'complex' or 'real'")
    return complex(val)


# ---------------------------------------------------------------------------
# Intertwiner


def intertwiner_real(s, n: int = 0) -> complex:
    """i^n sqrt(pi) Gamma(s) Gamma(s+1/2) / (Gamma(s+1/2+n/2) Gamma(s+1/2-n/2))."""
    s = complex(s)
    try:
        num = log_gamma(s) + log_gamma(s + 0.5)
    except PoleError:
        raise
    out = 0.5 * math.log(math.pi) + num
    den = 0j
    for z in (s + 0.5 + n / 2, s + 0.5 - n / 2):
        zr = round(z.real)
        if abs(z.imag) < 1e-14 and abs(z.real - zr) < 1e-14 and zr <= 0:
            return 0j  # 1/Gamma vanishes
        den += log_gamma(z)
    return (1j ** n) * cmath.exp(out - den)


def intertwiner_real_normalized(s, n: int = 0) -> complex:
    """lambda(s, n) divided by the archimedean L-factor ratio of its parity.

    Even n: sqrt(pi) Gamma(s)/Gamma(s+1/2); odd n: sqrt(pi) Gamma(s+1/2)/Gamma(s+1).
    The quotient is a rational function of s of modulus 1 on Re s = 0.
    """
    s = complex(s)
    if n % 2 == 0:
        ratio = cmath.exp(0.5 * math.log(math.pi) + log_gamma(s) - log_gamma(s + 0.5))
    else:
        ratio = cmath.exp(0.5 * math.log(math.pi) + log_gamma(s + 0.5) - log_gamma(s + 1))
    return intertwiner_real(s, n) / ratio


# ---------------------------------------------------------------------------
# Discrete-series pseudo-coefficient


@dataclass
class PseudoCoefficientDS:
    """phi_{D,k} = phi_k - phi_{k-2} built on one shared g with h(i(k-1)/2) = 1."""

    k: int
    pair_k: TestFunctionQuadruple
    pair_km2: TestFunctionQuadruple
    _memo: dict = field(default_factory=dict, repr=False)

    @classmethod
    def build(cls, k: int, C: float = 1.0) -> "PseudoCoefficientDS":
        if k < 2:
            raise ValueError("k must be >= 2")
        seed = make_bump(C, "ds-weight", k)
        return cls(k, quadruple_from_g(seed, k), quadruple_from_g(seed, k - 2))

    def character(self, rep: RealRepDescriptor) -> complex:
        return char_value_real(rep, self.pair_k) - char_value_real(rep, self.pair_km2)

    def identity(self, route: str = "spectral") -> float:
        if route == "direct":
            return identity_real_direct(self.pair_k) - identity_real_direct(self.pair_km2)
        return identity_real(self.pair_k) - identity_real(self.pair_km2)

    def parabolic(self, route: str = "spectral"):
        a = parabolic_real(self.pair_k, route=route)
        b = parabolic_real(self.pair_km2, route=route)
        return a[0] - b[0], a[1] - b[1]

    def parabolic_derivative_closed(self) -> float:
        """-int_0^C g(u) sinh((k-1)u/2) du, the exact difference of derivatives."""
        p = self.pair_k
        c = (self.k - 1) / 2
        return -quad(lambda u: p.g(u) * np.sinh(c * u), 0.0, p.support, TOL).value.real

    def hyperbolic(self, alpha: float, weighted: bool = False) -> float:
        return hyperbolic_real(self.pair_k, alpha=alpha, weighted=weighted) - hyperbolic_real(
            self.pair_km2, alpha=alpha, weighted=weighted
        )

    def elliptic(self, theta: float, form: str = "h") -> complex:
        return elliptic_real(self.pair_k, theta=theta, form=form) - elliptic_real(
            self.pair_km2, theta=theta, form=form
        )


def ds_elliptic_closed(k: int, theta: float) -> complex:
    """i e^{i(k-1)theta}/|sin theta|, independent of the test function."""
    return 1j * cmath.exp(1j * (k - 1) * theta) / abs(math.sin(theta))


def ds_elliptic_published(k: int, theta: float) -> complex:
    """The published closed form 2 pi i e^{i(k-1)theta}/(k |sin theta|)."""
    return 2j * math.pi * cmath.exp(1j * (k - 1) * theta) / (k * abs(math.sin(theta)))
