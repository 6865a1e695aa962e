import cmath
import math

import pytest

from traceforge.complex_local import (
    ComplexRepDescriptor,
    char_value_complex,
    hyperbolic_complex,
    hyperbolic_complex_unitary_published,
    identity_complex,
    identity_complex_published,
    intertwiner_complex,
    parabolic_complex,
)
from traceforge.testfn import make_bump, quadruple_from_g, zero_quadruple


@pytest.fixture(scope="module")
def pair():
    return quadruple_from_g(make_bump(1.2, "unit-g0"), 0, "complex")


def test_identity_routes_agree(pair):
    assert abs(identity_complex(pair) - identity_complex(pair, route="direct")) < 1e-8


def test_identity_published_constant_is_off(pair):
    ratio = identity_complex_published(pair) / identity_complex(pair)
    assert ratio == pytest.approx(1 / (8 * math.pi), rel=1e-10)


def test_parabolic_routes_agree(pair):
    v1, d1 = parabolic_complex(pair)
    v2, d2 = parabolic_complex(pair, route="direct")
    assert v1 == v2 == pytest.approx(1.0)
    assert abs(d1 - d2) < 1e-8


@pytest.mark.parametrize("alpha", [1.4, 0.5 + 0.5j, cmath.exp(0.3 + 1.0j), -1.6])
def test_hyperbolic_derived_matches_quadrature(pair, alpha):
    closed = hyperbolic_complex(pair, alpha)
    direct = hyperbolic_complex(pair, alpha, form="direct")
    assert abs(closed - direct) < 1e-9


@pytest.mark.parametrize("alpha", [1.4, 0.5 + 0.5j, cmath.exp(0.2 + 2.0j)])
def test_weighted_closed_matches_quadrature(pair, alpha):
    closed = hyperbolic_complex(pair, alpha, weighted=True)
    direct = hyperbolic_complex(pair, alpha, weighted=True, form="direct")
    assert abs(closed - direct) < 1e-8


def test_weighted_unitary_against_published(pair):
    theta = 1.1
    ours = hyperbolic_complex(pair, cmath.exp(1j * theta), weighted=True).real
    pub = hyperbolic_complex_unitary_published(pair, theta)
    # recorded for comparison; the two differ
    assert abs(ours - pub) > 1e-3


def test_hyperbolic_support_vanishing(pair):
    assert hyperbolic_complex(pair, 5.0) == 0
    assert hyperbolic_complex(pair, 5.0, weighted=True) == 0


def test_hyperbolic_guards(pair):
    with pytest.raises(ValueError):
        hyperbolic_complex(pair, 1.0)
    with pytest.raises(NotImplementedError):
        hyperbolic_complex(pair, 2.0, m=1, weighted=True)


def test_character_values(pair):
    rep = ComplexRepDescriptor.principal(0.4j)
    assert char_value_complex(rep, pair) == pair.h(-0.4)
    assert char_value_complex(ComplexRepDescriptor.principal(0.4j, 2), pair) == 0
    assert char_value_complex(ComplexRepDescriptor.trivial(), pair) == pair.h(0.5j)


def test_zero_pair():
    z = zero_quadruple(1.0, 0, "complex")
    assert identity_complex(z) == 0.0
    assert parabolic_complex(z) == (0.0, 0.0)


def test_intertwiner():
    assert intertwiner_complex(0.25) == 2.0
    assert abs(abs(intertwiner_complex(0.5 + 3j) * 2 * (0.5 + 3j)) - 1) < 1e-15
    with pytest.raises(ZeroDivisionError):
        intertwiner_complex(0)


def test_rejects_real_pair():
    with pytest.raises(ValueError):
        identity_complex(quadruple_from_g(make_bump(1.0)))
