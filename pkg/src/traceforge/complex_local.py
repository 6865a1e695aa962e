"""Local distributions of GL2(C), mainly for bi-invariant test functions.

The quadruple has place_kind ``complex``: g(x) = Q(e^{x/2} + e^{-x/2} - 2)
and Q' = -Phi.  On the group, a bi-invariant function is
phi(g) = Phi(tr(g* g)/|det g| - 2) / (2 pi), and N(C) carries the measure
d+z = 2 dx dy.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .special import EULER_GAMMA, cheb_U, digamma, quad, quad_levels
from .testfn import TestFunctionQuadruple

TOL = 1e-10
LOG_2PI = math.log(2 * math.pi)
RHO_SQUARED = 2500.0  # r^2 h(r) needs a longer range


@dataclass(frozen=True)
class ComplexRepDescriptor:
    """Principal series J(eps_n, s) or a one-dimensional representation."""

    kind: str
    n: int = 0
    s: complex = 0j

    def __post_init__(self):
        if self.kind not in ("principal-series", "one-dimensional"):
            raise ValueError(f"unknown representation kind {self.kind!r}")
        if self.n < 0:
            raise ValueError("n must be >= 0")

    @classmethod
    def principal(cls, s, n: int = 0) -> "ComplexRepDescriptor":
        return cls("principal-series", n=int(n), s=complex(s))

    @classmethod
    def trivial(cls) -> "ComplexRepDescriptor":
        return cls("one-dimensional")


def _check(pair: TestFunctionQuadruple, bi_invariant: bool = False) -> int:
    if pair.place_kind != "complex":
        raise ValueError("expected a quadruple at a complex place")
    n = int(round(pair.weight))
    if bi_invariant and n != 0:
        raise NotImplementedError("only bi-invariant (n = 0) test functions are supported here")
    return n


def char_value_complex(rep: ComplexRepDescriptor, pair: TestFunctionQuadruple) -> complex:
    """Trace of the representation on the weight-n test function."""
    n = _check(pair)
    if pair.is_zero:
        return 0j
    if rep.kind == "principal-series":
        # the K-type Sym^n occurs in J(eps_m, s) iff n >= m and n = m mod 2
        if n >= rep.n and (n - rep.n) % 2 == 0:
            return pair.h(1j * rep.s)
        return 0j
    return pair.h(0.5j) if n == 0 else 0j


def identity_complex(pair: TestFunctionQuadruple, route: str = "spectral", tol: float = TOL) -> float:
    """Phi(0) = -Q'(0).

    ``spectral``: (1/pi) int_R h(r) r^2 dr.  ``direct``: the Abel inversion.
    """
    _check(pair, True)
    if pair.is_zero:
        return 0.0
    if route == "direct":
        return float(pair.Phi(0.0))
    if route != "spectral":
        raise ValueError(f"unknown route {route!r}")
    return 2.0 * _r2_integral(pair, tol) / math.pi


def _r2_integral(pair, tol):
    """int_0^R r^2 h(r) dr, with r^2 h taken as the transform of -g''."""
    R = RHO_SQUARED / pair.support
    noise = 4.0 * np.finfo(float).eps * abs(pair.h2_array([0.0])[0]) + 1e-300
    res = quad_levels(lambda r: pair.h2_array(r), 0.0, R, tol, initial=64, noise=lambda r: np.full(np.shape(r), noise))
    return res.value.real


def identity_complex_published(pair: TestFunctionQuadruple, tol: float = TOL) -> float:
    """The published constant (1/8 pi^2) int_R h r^2, kept for comparison."""
    _check(pair, True)
    return 2.0 * _r2_integral(pair, tol) / (8 * math.pi**2)


def _re_digamma_line(r):
    return np.array([digamma(complex(1.0, 2.0 * x)).real for x in np.atleast_1d(r)])


def parabolic_complex(pair: TestFunctionQuadruple, route: str = "spectral", tol: float = TOL):
    """(value, derivative) at s = 1 of the normalised zeta integral.

    ``spectral``: h(0)/4 + (log 2pi - gamma) g(0) - (1/pi) int_R h(t) psi(1+2it) dt.
    ``direct``: int_0^inf Phi(r) log r dr + (log 2pi + gamma) g(0).
    ``published``: as ``spectral`` but over the half line with psi(1-2it);
    complex valued in general.
    """
    _check(pair, True)
    if pair.is_zero:
        return 0.0, 0.0
    g0 = float(pair.g(0.0))
    if route == "spectral":
        psi = 2.0 * pair.spectral_integral(_re_digamma_line, tol).real
        return g0, pair.h(0).real / 4 + (LOG_2PI - EULER_GAMMA) * g0 - psi / math.pi
    if route == "published":
        wt = lambda r: np.array([digamma(complex(1.0, -2.0 * x)) for x in np.atleast_1d(r)])
        psi = pair.spectral_integral(wt, tol)
        return g0, pair.h(0).real / 4 + (LOG_2PI - EULER_GAMMA) * g0 - psi / math.pi
    if route == "direct":
        # r = w^2 keeps the log endpoint tame
        def f(w):
            r = w * w
            rs = np.where(r > 0, r, 1.0)
            return pair.Phi(r) * np.where(r > 0, np.log(rs), 0.0) * 2 * w

        val = quad(f, 0.0, math.sqrt(pair.u_support), tol).value.real
        return g0, val + (LOG_2PI + EULER_GAMMA) * g0
    raise ValueError(f"unknown route {route!r}")


def _lambda_sq(alpha: complex) -> float:
    return abs(alpha) * abs(1 - 1 / alpha) ** 2


def hyperbolic_complex(
    pair: TestFunctionQuadruple,
    alpha: complex,
    n: Optional[int] = None,
    m: int = 0,
    weighted: bool = False,
    form: str = "derived",
    tol: float = TOL,
) -> complex:
    """Orbital integral of diag(alpha, 1) in GL2(C).

    Unweighted ``derived`` form:
        e^{i m arg(alpha)/2} U_n(cos(arg(alpha)/2)) g(2 log|alpha|) / (|alpha| |1 - 1/alpha|^2),
    confirmed against quadrature over N(C) for n = 0.  ``prop`` and
    ``lemma`` are the published variants.  The weighted integral (n = m = 0)
    uses the closed form by default and ``form='direct'`` for quadrature.
    """
    alpha = complex(alpha)
    if alpha == 0 or alpha == 1:
        raise ValueError("alpha must differ from 0 and 1")
    nn = _check(pair) if n is None else int(n)
    if pair.is_zero:
        return 0j
    la = math.log(abs(alpha))
    lam2 = _lambda_sq(alpha)
    if weighted:
        if nn or m:
            raise NotImplementedError("weighted integral only for bi-invariant functions")
        if form == "direct":
            return complex(_weighted_direct(pair, alpha, tol))
        return complex(_weighted_closed(pair, alpha, tol))
    arg = cmath.phase(alpha)
    ktype = cmath.exp(0.5j * m * arg) * cheb_U(nn, math.cos(arg / 2))
    if form == "derived":
        return ktype * float(pair.g(2 * la)) / lam2
    if form == "prop":
        return ktype * float(pair.g(la)) / (abs(alpha) ** 2 * abs(1 - 1 / alpha) ** 2)
    if form == "lemma":
        return ktype * float(pair.g(4 * la)) / lam2
    if form == "direct":
        if nn or m:
            raise NotImplementedError("direct quadrature only for bi-invariant functions")
        return complex(_unweighted_direct(pair, alpha, tol))
    raise ValueError(f"unknown form {form!r}")


def _unweighted_direct(pair, alpha, tol):
    # phi(n^-1 gamma n) = Phi(c - 2 + lam2 |x|^2)/(2 pi); polar coordinates over C
    c = abs(alpha) + 1 / abs(alpha)
    lam2 = _lambda_sq(alpha)
    top = (pair.u_support - (c - 2)) / lam2
    if top <= 0:
        return 0.0
    # int_C F(|x|^2) 2 dx dy = 2 pi int_0^inf F(s) ds
    val = quad(lambda s: pair.Phi(c - 2 + lam2 * s), 0.0, top, tol).value.real
    return val


def _weighted_direct(pair, alpha, tol):
    c = abs(alpha) + 1 / abs(alpha)
    lam2 = _lambda_sq(alpha)
    top = (pair.u_support - (c - 2)) / lam2
    if top <= 0:
        return 0.0
    # weight log|1 + |x|^2|_C = 2 log(1 + |x|^2)
    return quad(lambda s: 2.0 * pair.Phi(c - 2 + lam2 * s) * np.log1p(s), 0.0, top, tol).value.real


def _weighted_closed(pair, alpha, tol):
    """(2/lam^2) int_{x0}^inf g(x) sinh(x/2) / (lam^2 + 2 cosh(x/2) - c) dx, x0 = 2|log|alpha||."""
    c = abs(alpha) + 1 / abs(alpha)
    lam2 = _lambda_sq(alpha)
    x0 = 2 * abs(math.log(abs(alpha)))
    if x0 >= pair.support:
        return 0.0

    def f(x):
        return pair.g(x) * np.sinh(x / 2) / (lam2 + 2 * np.cosh(x / 2) - c)

    return 2.0 / lam2 * quad(f, x0, pair.support, tol).value.real


def hyperbolic_complex_unitary_published(pair: TestFunctionQuadruple, theta: float, tol: float = TOL) -> float:
    """The published weighted value for alpha = e^{i theta}, kept for comparison."""
    s2 = math.sin(theta / 2) ** 2

    def f(x):
        return pair.g(x) * 2 * np.sinh(x / 2) / (2 * np.cosh(x / 2) + 2 * math.cos(theta))

    return quad(f, 0.0, pair.support, tol).value.real / s2


def intertwiner_complex(s) -> complex:
    """Scalar 1/(2s) on the spherical vector."""
    s = complex(s)
    if s == 0:
        raise ZeroDivisionError("intertwiner has a pole at s = 0")
    return 1.0 / (2.0 * s)
