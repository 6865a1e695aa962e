import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from traceforge.testfn import (
    BumpSeed,
    GenericSeed,
    SumSeed,
    abel_forward,
    abel_forward_alt,
    abel_forward_complex,
    abel_round_trip,
    abel_zero_kernel,
    make_bump,
    phi_bump,
    quadruple_from_g,
    zero_quadruple,
)


def _mp_bump(seed):
    C, a = seed.C, seed.a
    return lambda x: a * mpmath.exp(-1 / (1 - (x / C) ** 2)) if abs(x) < C else mpmath.mpf(0)


def _mp_h(seed, xi):
    g = _mp_bump(seed)
    return complex(2 * mpmath.quad(lambda u: g(u) * mpmath.cos(xi * u), [0, seed.C]))


def test_bump_normalisations():
    assert float(make_bump(1.3, "unit-g0").g(0.0)) == pytest.approx(1.0, abs=1e-15)
    pair = quadruple_from_g(make_bump(0.8, "unit-mass"))
    assert pair.h(0.0).real == pytest.approx(1.0, abs=1e-12)
    for k in (2, 3, 6):
        pair = quadruple_from_g(make_bump(1.0, "ds-weight", k))
        assert pair.h(0.5j * (k - 1)).real == pytest.approx(1.0, abs=1e-11)


def test_bump_rejects_bad_input():
    with pytest.raises(ValueError):
        make_bump(0.0)
    with pytest.raises(ValueError):
        make_bump(1.0, "ds-weight")
    with pytest.raises(ValueError):
        make_bump(1.0, "nope")


@pytest.mark.parametrize("C", [0.6, 1.0, 2.5])
@pytest.mark.parametrize("xi", [0.0, 1.7, 12.0, 0.5j, 1.5j])
def test_h_against_mpmath(C, xi):
    seed = make_bump(C, "unit-g0")
    pair = quadruple_from_g(seed)
    assert abs(pair.h(xi) - _mp_h(seed, xi)) < 1e-11


def test_derivatives_of_bump():
    seed = make_bump(1.2, "unit-mass")
    x = np.linspace(-1.1, 1.1, 13)
    step = 1e-5
    fd = (seed.g(x + step) - seed.g(x - step)) / (2 * step)
    assert np.max(np.abs(seed.dg(x) - fd)) < 1e-8
    fd2 = (seed.dg(x + step) - seed.dg(x - step)) / (2 * step)
    assert np.max(np.abs(seed.d2g(x) - fd2)) < 1e-7


def test_generic_seed_matches_bump():
    b = make_bump(1.0, "unit-g0")
    gen = GenericSeed(lambda x: b.g(x), 1.0)
    x = np.array([0.0, 0.2, 0.5, 0.9])
    assert np.max(np.abs(gen.dg(x) - b.dg(x))) < 1e-7
    assert np.max(np.abs(gen.dg_over_x(x) - b.dg_over_x(x))) < 1e-5


@pytest.mark.parametrize("lam", [0, 1, 2, 3, 5])
def test_abel_round_trip(lam):
    Phi, dPhi = phi_bump(2.0)
    x = np.linspace(0.0, 2.0, 50)
    back = abel_round_trip(Phi, dPhi, lam, 2.0, x)
    assert np.max(np.abs(back - Phi(x))) < 1e-9


@pytest.mark.parametrize("lam", [0, 1, 2, 4])
def test_abel_kernels_agree(lam):
    Phi, _ = phi_bump(1.5)
    for x in (0.0, 0.4, 1.1):
        a = abel_forward(Phi, lam, x, 1.5)
        b = abel_forward_alt(Phi, lam, x, 1.5)
        assert abs(a - b) < 1e-9
        if lam == 0:
            assert abs(a - abel_zero_kernel(Phi, x, 1.5)) < 1e-9


@pytest.mark.parametrize("lam", [0, 1, 2])
def test_quadruple_chain_closes(lam):
    # A_lam applied to Phi (built from g by the inversion) gives back Q
    pair = quadruple_from_g(make_bump(0.9, "unit-g0"), lam)
    U = pair.u_support
    for u in (0.0, 0.2, 0.6):
        assert abs(abel_forward(pair.Phi, lam, u, U, tol=1e-9) - float(pair.Q(u))) < 1e-7


def test_complex_chain_closes():
    pair = quadruple_from_g(make_bump(1.2, "unit-g0"), 0, "complex")
    U = pair.u_support
    for y in (0.0, 0.1, 0.3):
        assert abs(abel_forward_complex(pair.Phi, 0, y, U) - float(pair.Q(y))) < 1e-9


def test_zero_quadruple():
    z = zero_quadruple(1.0)
    assert z.is_zero
    assert z.h(3.0) == 0
    assert float(np.max(np.abs(z.Phi(np.linspace(0, 1, 5))))) == 0.0


def test_place_kind_checked():
    with pytest.raises(ValueError):
        quadruple_from_g(make_bump(1.0), 0, "quaternion")


@settings(max_examples=20, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.0, 30.0))
def test_h_is_linear(c1, c2, r):
    s1 = make_bump(1.0, "unit-g0")
    s2 = make_bump(0.5, "unit-mass")
    combo = quadruple_from_g(SumSeed((s1, s2), (c1, c2)))
    lhs = combo.h(r)
    rhs = c1 * quadruple_from_g(s1).h(r) + c2 * quadruple_from_g(s2).h(r)
    assert abs(lhs - rhs) < 1e-10 * (1 + abs(c1) + abs(c2))


@settings(max_examples=20, deadline=None)
@given(st.floats(0.3, 3.0), st.floats(0.0, 50.0))
def test_h_real_even_bounded(C, r):
    pair = quadruple_from_g(make_bump(C, "unit-mass"))
    v = pair.h(r)
    assert abs(v.imag) < 1e-12
    assert abs(v - pair.h(-r)) < 1e-12
    assert abs(v) <= 1 + 1e-12  # |h| <= ||g||_1 = h(0) = 1
