"""Archimedean test functions: the linked quadruple (Phi, Q, g, h).

Real place, weight lam::

    g(x) = Q(e^x + e^-x - 2),   Q = A_lam Phi,   h(r) = int g(u) e^{iru} du

Complex place (bi-invariant)::

    g(x) = Q(e^{x/2} + e^{-x/2} - 2),   Q' = -Phi

The Abel transform and its inverse are evaluated by quadrature; the inverse
is only ever applied to Q', so the chain g -> Q -> Phi needs g' as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .special import cheb_T_array, cheb_U, quad, quad_levels, quad_vec

Array = np.ndarray
H_TOL = 1e-10
ABEL_TOL = 1e-10
IM_GUARD = 50.0
SPECTRAL_RHO = 1200.0
SPECTRAL_PANELS = 64


# ---------------------------------------------------------------------------
# seeds: the even function g with its derivative


@dataclass(frozen=True)
class BumpSeed:
    """g(x) = a * exp(-1/(1-(x/C)^2)) on (-C, C).

    ``dg_over_x`` is g'(x)/x, which is smooth at 0 and lets Q'(u) be
    evaluated without a 0/0 at the origin.
    """

    C: float
    a: float
    label: str = "bump"

    def g(self, x):
        x = np.asarray(x, dtype=float)
        y = (x / self.C) ** 2
        out = np.zeros_like(x)
        m = y < 1.0
        out[m] = self.a * np.exp(-1.0 / (1.0 - y[m]))
        return out

    def dg_over_x(self, x):
        x = np.asarray(x, dtype=float)
        y = (x / self.C) ** 2
        out = np.zeros_like(x)
        m = y < 1.0
        one = 1.0 - y[m]
        out[m] = -2.0 * self.a * np.exp(-1.0 / one) / (self.C**2 * one * one)
        return out

    def dg(self, x):
        x = np.asarray(x, dtype=float)
        return x * self.dg_over_x(x)

    def d2g(self, x):
        x = np.asarray(x, dtype=float)
        y = (x / self.C) ** 2
        out = np.zeros_like(x)
        m = y < 1.0
        one = 1.0 - y[m]
        q = -2.0 * self.a * np.exp(-1.0 / one) / (self.C**2 * one * one)
        out[m] = q * (1.0 + x[m] ** 2 * (2.0 / self.C**2) * (2.0 / one - 1.0 / (one * one)))
        return out

    def scaled(self, c: float) -> "BumpSeed":
        return BumpSeed(self.C, self.a * c, self.label)


@dataclass(frozen=True)
class GenericSeed:
    """User supplied even g with support radius C; derivatives by stencil."""

    func: Callable[[Array], Array]
    C: float
    label: str = "generic"

    def g(self, x):
        x = np.asarray(x, dtype=float)
        out = np.asarray(self.func(np.abs(x)), dtype=float)
        return np.where(np.abs(x) < self.C, out, 0.0)

    def dg(self, x):
        x = np.asarray(x, dtype=float)
        step = 1e-5 * self.C
        f = self.g
        return (f(x - 2 * step) - 8 * f(x - step) + 8 * f(x + step) - f(x + 2 * step)) / (12 * step)

    def dg_over_x(self, x):
        x = np.asarray(x, dtype=float)
        step = 1e-5 * self.C
        small = np.abs(x) < 10 * step
        safe = np.where(small, 1.0, x)
        second = (self.g(2 * step) - 2 * self.g(0.0 * step) + self.g(-2 * step)) / (4 * step * step)
        return np.where(small, second, self.dg(x) / safe)


@dataclass(frozen=True)
class ZeroSeed:
    C: float = 1.0
    label: str = "zero"

    def g(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    dg = g
    dg_over_x = g
    d2g = g


@dataclass(frozen=True)
class SumSeed:
    """Linear combination sum_i c_i g_i of seeds; transforms act termwise."""

    parts: tuple
    coeffs: tuple

    @property
    def C(self) -> float:
        return max(p.C for p in self.parts)

    @property
    def label(self) -> str:
        return "+".join(getattr(p, "label", "seed") for p in self.parts)

    def _combine(self, name, x):
        x = np.asarray(x, dtype=float)
        return sum(c * getattr(p, name)(x) for p, c in zip(self.parts, self.coeffs))

    def g(self, x):
        return self._combine("g", x)

    def dg(self, x):
        return self._combine("dg", x)

    def dg_over_x(self, x):
        return self._combine("dg_over_x", x)

    def d2g(self, x):
        return self._combine("d2g", x)


def _bump_integral(C: float, weight_fn=None) -> float:
    def f(x):
        y = (x / C) ** 2
        base = np.where(y < 1.0, np.exp(-1.0 / np.maximum(1.0 - y, 1e-300)), 0.0)
        return base if weight_fn is None else base * weight_fn(x)

    return 2.0 * quad(f, 0.0, C, tol=1e-13 * max(1.0, C), rtol=1e-13).value.real


def make_bump(C: float, normalization: str = "unit-g0", k: Optional[int] = None) -> BumpSeed:
    """Smooth bump of support radius C.

    ``unit-g0`` sets g(0) = 1, ``unit-mass`` sets h(0) = int g = 1 and
    ``ds-weight`` (with k) sets int g(x) e^{-(k-1)x/2} dx = 1, i.e.
    h(i(k-1)/2) = 1.
    """
    if C <= 0:
        raise ValueError("support radius must be positive")
    if normalization == "unit-g0":
        a = math.e
    elif normalization == "unit-mass":
        a = 1.0 / _bump_integral(C)
    elif normalization == "ds-weight":
        if k is None or k < 2:
            raise ValueError("ds-weight normalisation needs k >= 2")
        c = (k - 1) / 2.0
        a = 1.0 / _bump_integral(C, lambda x: np.cosh(c * x))
    else:
        raise ValueError(f"unknown normalization {normalization!r}")
    return BumpSeed(C, a, f"bump[{normalization}{'' if k is None else k}]")


# ---------------------------------------------------------------------------
# Fourier transform


_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)
_RULE_CACHE: dict = {}


def _bump_rule(seed: BumpSeed, panels: int):
    """Composite 20-point Gauss-Legendre rule on [0, C]: nodes, 2 g w and -2 g'' w."""
    key = (seed.C, seed.a, panels)
    if key not in _RULE_CACHE:
        e = np.linspace(0.0, seed.C, panels + 1)
        c = 0.5 * (e[:-1] + e[1:])
        r = 0.5 * (e[1] - e[0])
        u = (c[:, None] + r * _GL_X[None, :]).ravel()
        w = np.tile(_GL_W * r, panels) * 2.0
        if len(_RULE_CACHE) > 64:
            _RULE_CACHE.clear()
        _RULE_CACHE[key] = (u, w * seed.g(u), -w * seed.d2g(u))
    return _RULE_CACHE[key]


def h_transform_array(seed, xi) -> Array:
    """h(xi) = int_{-C}^{C} g(u) e^{i xi u} du for an array of xi.

    Bumps go through a fixed composite Gauss-Legendre rule sized to the
    largest oscillation count (the flat endpoints make it converge
    super-algebraically); other seeds use adaptive quadrature.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=complex))
    if np.any(np.abs(xi.imag) > IM_GUARD):
        raise OverflowError("|Im xi| above the overflow guard")
    if isinstance(seed, ZeroSeed):
        return np.zeros(xi.shape, dtype=complex)
    if isinstance(seed, SumSeed):
        return sum(c * h_transform_array(p, xi) for p, c in zip(seed.parts, seed.coeffs))
    if isinstance(seed, BumpSeed):
        out = np.empty(xi.shape, dtype=complex)
        need = np.maximum(np.abs(xi) * seed.C / 6.0, 64.0)
        level = np.ceil(np.log2(need)).astype(int)
        for lev in np.unique(level):
            idx = np.nonzero(level == lev)[0]
            u, w, _ = _bump_rule(seed, int(2**lev))
            for i in range(0, idx.size, 256):
                part = idx[i : i + 256]
                out[part] = np.cos(np.outer(xi[part], u)) @ w
        return out
    return h_transform_adaptive(seed, xi)


def h2_transform_array(seed, xi) -> Array:
    """xi^2 h(xi), computed as the transform of -g'' (no amplified rounding)."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if isinstance(seed, ZeroSeed):
        return np.zeros(xi.shape, dtype=complex)
    if isinstance(seed, SumSeed):
        return sum(c * h2_transform_array(p, xi) for p, c in zip(seed.parts, seed.coeffs))
    if not isinstance(seed, BumpSeed):
        return xi**2 * h_transform_array(seed, xi)
    out = np.empty(xi.shape, dtype=complex)
    need = np.maximum(np.abs(xi) * seed.C / 6.0, 64.0)
    level = np.ceil(np.log2(need)).astype(int)
    for lev in np.unique(level):
        idx = np.nonzero(level == lev)[0]
        u, _, w2 = _bump_rule(seed, int(2**lev))
        for i in range(0, idx.size, 256):
            part = idx[i : i + 256]
            out[part] = np.cos(np.outer(xi[part], u)) @ w2
    return out


def h_transform_adaptive(seed, xi) -> Array:
    """Adaptive-quadrature Fourier transform, also used as an oracle."""
    xi = np.atleast_1d(np.asarray(xi, dtype=complex))
    if isinstance(seed, ZeroSeed):
        return np.zeros(xi.shape, dtype=complex)
    C = seed.C
    # split by oscillation count so each batch gets a sensible panel grid
    out = np.empty(xi.shape, dtype=complex)
    scale = np.abs(xi.real) * C
    for lo, hi in ((0, 8), (8, 40), (40, 160), (160, 640), (640, np.inf)):
        m = (scale >= lo) & (scale < hi)
        if not m.any():
            continue
        z = xi[m]
        panels = max(4, int(min(hi, 4 * np.max(scale[m]) + 1) // 2) + 4)

        def f(u, z=z):
            return 2.0 * seed.g(u)[None, :] * np.cos(np.outer(z, u))

        val, _ = quad_vec(f, 0.0, C, tol=H_TOL, initial=min(panels, 2048))
        out[m] = val
    return out


def h_transform(seed, xi) -> complex:
    """Scalar Fourier transform of the seed."""
    return complex(h_transform_array(seed, [xi])[0])


# ---------------------------------------------------------------------------
# Abel transform, real place


def _kernel_forward(lam: float, x: Array, xi: Array) -> Array:
    """2 T_lam(sqrt(x+4)/sqrt(x+4+xi^2)), argument in (0, 1]."""
    c = np.sqrt((x + 4.0) / (x + 4.0 + xi * xi))
    return 2.0 * np.cos(lam * np.arccos(np.minimum(c, 1.0)))


def _kernel_forward_dx(lam: float, x: Array, xi: Array) -> Array:
    """d/dx of the forward kernel, written without the 1/sin singularity."""
    d = x + 4.0 + xi * xi
    c = np.sqrt((x + 4.0) / d)
    theta = np.arccos(np.minimum(c, 1.0))
    # T'(c) dc/dx = lam sin(lam th)/sin(th) * xi^2/(2 c d^2), sin th = xi/sqrt(d)
    return 2.0 * lam * np.sin(lam * theta) * xi / (2.0 * c * d**1.5)


def _kernel_inverse(lam: float, x: Array, eta: Array) -> Array:
    """2 T_lam(sqrt((x+4+eta^2)/(x+4))), argument >= 1."""
    c = np.sqrt((x + 4.0 + eta * eta) / (x + 4.0))
    return 2.0 * np.cosh(lam * np.arccosh(np.maximum(c, 1.0)))


def abel_forward_array(Phi, lam: float, x, X0: float, dPhi=None, tol: float = ABEL_TOL):
    """A_lam Phi on an array of x, with Phi supported in [0, X0].

    Returns (A, A') when ``dPhi`` is given, else A.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    length = np.sqrt(np.maximum(X0 - x, 0.0))

    def f(tau):
        xi = length[:, None] * tau[None, :]
        xx = x[:, None]
        arg = xx + xi * xi
        val = Phi(arg) * _kernel_forward(lam, xx, xi) * length[:, None]
        if dPhi is None:
            return val
        der = (dPhi(arg) * _kernel_forward(lam, xx, xi) + Phi(arg) * _kernel_forward_dx(lam, xx, xi))
        return np.stack([val, der * length[:, None]])

    val, _ = quad_vec(f, 0.0, 1.0, tol=tol)
    if dPhi is None:
        return val
    return val[0], val[1]


def abel_forward(Phi, lam: float, x: float, X0: float, tol: float = ABEL_TOL) -> float:
    """Real-place Abel transform at one point."""
    return float(abel_forward_array(Phi, lam, [x], X0, tol=tol)[0])


def abel_forward_alt(Phi, lam: float, x: float, X0: float, tol: float = 1e-10) -> float:
    """Second kernel: int_R Phi(x+xi^2) ((sqrt(x+4)+i xi)/(sqrt(x+4)-i xi))^{lam/2} dxi."""
    L = math.sqrt(max(X0 - x, 0.0))
    sq = math.sqrt(x + 4.0)

    def f(xi):
        ratio = (sq + 1j * xi) / (sq - 1j * xi)
        # principal power; the ratio stays on the unit circle away from -1
        return Phi(x + xi * xi) * np.exp(0.5 * lam * np.log(ratio))

    return quad(f, -L, L, tol=tol).value.real


def abel_zero_kernel(Phi, x: float, X0: float, tol: float = 1e-10) -> float:
    """lam = 0 form int_x^inf Phi(t)/sqrt(t-x) dt, via t = x + v^2."""
    L = math.sqrt(max(X0 - x, 0.0))
    return quad(lambda v: 2.0 * Phi(x + v * v), 0.0, L, tol=tol).value.real


def abel_inverse_array(dQ, lam: float, x, U0: float, tol: float = ABEL_TOL) -> Array:
    """Hat-A_lam applied to Q': -(1/pi) int_0^inf Q'(x+eta^2) 2T_lam(...) d eta.

    ``dQ`` must vanish beyond U0.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    length = np.sqrt(np.maximum(U0 - x, 0.0))

    def f(tau):
        eta = length[:, None] * tau[None, :]
        xx = x[:, None]
        return dQ(xx + eta * eta) * _kernel_inverse(lam, xx, eta) * length[:, None]

    val, _ = quad_vec(f, 0.0, 1.0, tol=tol)
    return -val / math.pi


def abel_inverse(dQ, lam: float, x: float, U0: float, tol: float = ABEL_TOL) -> float:
    return float(abel_inverse_array(dQ, lam, [x], U0, tol)[0])


def phi_bump(R: float):
    """Group-side bump Phi(x) = exp(-1/(1 - (x/R)^2)) on [0, R) and its derivative."""
    if R <= 0:
        raise ValueError("support radius must be positive")

    def Phi(x):
        x = np.asarray(x, dtype=float)
        y = (x / R) ** 2
        inside = y < 1.0
        one = np.where(inside, 1.0 - y, 1.0)
        return np.where(inside, np.exp(-1.0 / one), 0.0)

    def dPhi(x):
        x = np.asarray(x, dtype=float)
        y = (x / R) ** 2
        inside = y < 1.0
        one = np.where(inside, 1.0 - y, 1.0)
        return np.where(inside, np.exp(-1.0 / one) * (-2.0 * x / R**2) / one**2, 0.0)

    return Phi, dPhi


def abel_round_trip(Phi, dPhi, lam: float, X0: float, x, tol: float = ABEL_TOL) -> Array:
    """Hat-A_lam((A_lam Phi)') at the points x; recovers Phi."""

    def dQ(u):
        u = np.asarray(u, dtype=float)
        _, da = abel_forward_array(Phi, lam, u.ravel(), X0, dPhi=dPhi, tol=tol)
        return da.reshape(u.shape)

    return abel_inverse_array(dQ, lam, x, X0, tol)


# ---------------------------------------------------------------------------
# Abel transform, complex place


def abel_forward_complex(Phi, n: int, y: float, X0: float, tol: float = ABEL_TOL) -> float:
    """A_n Phi(y) = int_0^inf Phi(y+t) U_n(sqrt((y+4)/(t+y+4))) dt."""
    L = max(X0 - y, 0.0)

    def f(t):
        return Phi(y + t) * cheb_U(n, np.sqrt((y + 4.0) / (t + y + 4.0)))

    return quad(f, 0.0, L, tol=tol).value.real


def abel_inverse_complex(dQ, y, n: int = 0):
    """Bi-invariant inverse: Phi = -Q'."""
    if n != 0:
        raise NotImplementedError("complex Abel inversion is only available for n = 0")
    return -np.asarray(dQ(np.asarray(y, dtype=float)))


# ---------------------------------------------------------------------------
# the quadruple


def _bump_cache_key(x) -> tuple:
    x = np.asarray(x, dtype=float)
    return (x.shape,) + tuple(np.round(x.ravel(), 15))


@dataclass(frozen=True)
class TestFunctionQuadruple:
    """Linked (Phi, Q, g, h) for one archimedean place.

    ``weight`` is lam at a real place and n at a complex place.
    """

    seed: object
    weight: float = 0.0
    place_kind: str = "real"
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    __test__ = False  # not a pytest class

    @property
    def support(self) -> float:
        return self.seed.C

    @property
    def is_zero(self) -> bool:
        return isinstance(self.seed, ZeroSeed)

    # coordinates
    def _x_of_u(self, u):
        u = np.maximum(np.asarray(u, dtype=float), 0.0)
        base = np.arccosh(1.0 + u / 2.0)
        return base if self.place_kind == "real" else 2.0 * base

    @property
    def u_support(self) -> float:
        C = self.support
        return 2.0 * math.cosh(C) - 2.0 if self.place_kind == "real" else 2.0 * math.cosh(C / 2.0) - 2.0

    def g(self, x):
        return self.seed.g(x)

    def dg(self, x):
        return self.seed.dg(x)

    def Q(self, u):
        return self.seed.g(self._x_of_u(u))

    def dQ(self, u):
        """Q'(u) = g'(x) dx/du, stable at u = 0 through g'(x)/x."""
        x = self._x_of_u(u)
        if self.place_kind == "real":
            # du/dx = 2 sinh x
            shx = np.where(x > 1e-8, np.sinh(x) / np.where(x > 1e-8, x, 1.0), 1.0)
            return self.seed.dg_over_x(x) / (2.0 * shx)
        # complex: du/dx = sinh(x/2)
        half = x / 2.0
        shx = np.where(half > 1e-8, np.sinh(half) / np.where(half > 1e-8, half, 1.0), 1.0)
        return self.seed.dg_over_x(x) * 2.0 / shx

    def Phi(self, x):
        """Phi via the Abel inversion (real) or -Q' (complex)."""
        x = np.asarray(x, dtype=float)
        if self.is_zero:
            return np.zeros_like(x)
        if self.place_kind == "complex":
            return abel_inverse_complex(self.dQ, x, int(self.weight))
        key = ("Phi",) + _bump_cache_key(x)
        if key not in self._cache:
            self._cache[key] = abel_inverse_array(self.dQ, self.weight, np.atleast_1d(x).ravel(), self.u_support)
        val = self._cache[key]
        return val.reshape(x.shape) if x.shape else float(val[0])

    def h(self, xi) -> complex:
        return complex(self.h_array([xi])[0])

    def h_array(self, xi) -> Array:
        xi = np.atleast_1d(np.asarray(xi, dtype=complex))
        return h_transform_array(self.seed, xi)

    @property
    def spectral_cutoff(self) -> float:
        """Radius beyond which h is negligible (|h| below 1e-15 h(0) for bumps)."""
        return SPECTRAL_RHO / self.support

    def spectral_integral(self, weight_fn, tol: float = 1e-10, rho: float = SPECTRAL_RHO) -> complex:
        """int_0^R h(r) w(r) dr over the numerically relevant range R = rho/C.

        Polynomially growing weights need a larger ``rho``.
        """
        if self.is_zero:
            return 0j
        R = rho / self.support
        # h carries an absolute rounding error of about eps * int|g|
        h_noise = 4.0 * np.finfo(float).eps * abs(self.h(0.0))

        res = quad_levels(
            lambda r: self.h_array(r) * weight_fn(r),
            0.0,
            R,
            tol,
            initial=SPECTRAL_PANELS,
            noise=lambda r: h_noise * np.abs(weight_fn(r)),
        )
        return res.value

    def h2_array(self, xi) -> Array:
        """r^2 h(r) on real r."""
        return h2_transform_array(self.seed, xi)

    def with_weight(self, weight: float) -> "TestFunctionQuadruple":
        return TestFunctionQuadruple(self.seed, weight, self.place_kind)


def quadruple_from_g(seed, weight: float = 0.0, place_kind: str = "real") -> TestFunctionQuadruple:
    """Build the linked quadruple from an admissible even seed."""
    if place_kind not in ("real", "complex"):
        raise ValueError("place_kind must be 'real' or 'complex'")
    return TestFunctionQuadruple(seed, float(weight), place_kind)


def zero_quadruple(C: float = 1.0, weight: float = 0.0, place_kind: str = "real") -> TestFunctionQuadruple:
    return TestFunctionQuadruple(ZeroSeed(C), float(weight), place_kind)
