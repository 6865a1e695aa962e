import cmath
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from traceforge.cyclo import Cyclo
from traceforge.padic_local import (
    DepthZeroType,
    EllipticElementData,
    HyperbolicElementData,
    PAdicRepKind,
    PadicValue,
    QPowerSum,
    SupercuspidalData,
    TestKind,
    UnitCharacter,
    brute_force_report,
    elliptic_padic,
    first_unramified_elliptic,
    hom_dim_unipotent,
    hyperbolic_padic,
    identity_padic,
    induced_dim,
    intertwiner_padic,
    intertwiner_spherical_series,
    is_prime,
    ktype_dim,
    onedim_padic,
    parabolic_padic,
    regular_theta_exponents,
    trace_on_rep,
    vp,
    write_brute_csv,
    zeta_ratio_laurent,
)


# -- brute force over GL2(Z/p^n)


@pytest.mark.parametrize("p,level", [(2, 1), (3, 1), (5, 1), (2, 2), (3, 2)])
def test_brute_force_matches_closed_forms(p, level):
    rows = brute_force_report(p, level)
    assert rows
    bad = [(r.formula_id, r.params, r.closed, r.brute) for r in rows if not r.match]
    assert bad == []


def test_brute_csv_columns(tmp_path):
    path = tmp_path / "brute.csv"
    write_brute_csv(brute_force_report(2, 1), path)
    lines = path.read_text().splitlines()
    assert lines[0] == "formula_id,params,closed_form,brute_value,match_flag"
    assert len(lines) == 16


# -- K-types and unipotent invariants


def test_ktype_dims_sum_to_induced_dim():
    # Ind_{Gamma_0(p^R)}^K 1 is the sum of rho(1, p^r) for r <= R
    for q in (2, 3, 5, 7):
        for R in range(5):
            assert sum(ktype_dim(q, 0, r) for r in range(R + 1)) == induced_dim(q, R)
        for N in (1, 2, 3):
            assert ktype_dim(q, N, N) == induced_dim(q, N)


def test_ktype_dim_guards():
    with pytest.raises(ValueError):
        ktype_dim(3, 2, 1)
    with pytest.raises(ValueError):
        ktype_dim(1, 0, 0)


@pytest.mark.parametrize("q", [2, 3, 5])
@pytest.mark.parametrize("N", [1, 2, 3])
def test_hom_dims_derived(q, N):
    assert [hom_dim_unipotent(q, "rho_mu", k, N) for k in range(N)] == [2 * q**k for k in range(N)]
    assert hom_dim_unipotent(q, "rho_mu", N + 2, N) == q**N + q ** (N - 1)
    assert hom_dim_unipotent(q, "rho_1p", 0) == 1
    assert hom_dim_unipotent(q, "rho_1p", 3) == q


def test_hom_dim_published_differs():
    assert hom_dim_unipotent(3, "rho_mu", 0, 2, variant="published") == 4
    assert hom_dim_unipotent(3, "rho_mu", 0, 2) == 2
    with pytest.raises(ValueError):
        hom_dim_unipotent(3, "rho_mu", 0, 0)
    with pytest.raises(ValueError):
        hom_dim_unipotent(3, "bogus", 0)


# -- spectral side


def test_trace_on_principal_series():
    t = trace_on_rep(TestKind.phi_mu(1), PAdicRepKind.principal(1), 3)
    assert t.at(0.4j) == pytest.approx(0.5)
    pub = trace_on_rep(TestKind.phi_mu(1), PAdicRepKind.principal(1), 3, variant="published")
    assert pub.at(0.4j) == pytest.approx(1.0)
    assert trace_on_rep(TestKind.phi_mu(1), PAdicRepKind.principal(2), 3).is_zero()


def test_trace_steinberg_and_hecke():
    q = 5
    st_ = TestKind.phi_steinberg()
    assert trace_on_rep(st_, PAdicRepKind.steinberg(), q).at(0) == 1
    assert trace_on_rep(st_, PAdicRepKind.one_dim(), q).at(0) == -1
    T = trace_on_rep(TestKind.hecke_unram(), PAdicRepKind.principal(0), q)
    s = 0.3 + 1.1j
    assert abs(T.at(s) - (q**s + q**-s)) < 1e-12
    assert abs(T.reflect().at(s) - T.at(-s)) < 1e-12
    one = trace_on_rep(TestKind.hecke_unram(), PAdicRepKind.one_dim(), q).at(0)
    assert one.real == pytest.approx(q**0.5 + q**-0.5)
    assert complex(onedim_padic(TestKind.hecke_unram(), q)) == pytest.approx(one)


def test_qpowersum_drops_zero_terms():
    assert QPowerSum.make(3, {(Fraction(0), 1): Fraction(0)}).is_zero()
    assert str(QPowerSum.make(3, {})) == "0"


# -- geometric side


@pytest.mark.parametrize("q", [2, 3, 5, 7])
def test_identity_phi_mu(q):
    assert identity_padic(TestKind.phi_mu(0), q) == 1
    assert identity_padic(TestKind.phi_mu(1), q) == Fraction(q + 1, 2)
    assert identity_padic(TestKind.phi_mu(2), q) == Fraction(q * q + q, 2)
    assert identity_padic(TestKind.phi_mu(2), q, "local") == Fraction(q * q + q, q + 1)
    assert identity_padic(TestKind.phi_steinberg(), q) == q - 1


def test_identity_global_variant_undefined_at_conductor_one():
    with pytest.raises(ZeroDivisionError):
        identity_padic(TestKind.phi_mu(1), 3, "global")
    assert identity_padic(TestKind.phi_mu(2), 3, "global") == Fraction(6, 2)


@pytest.mark.parametrize("q", [2, 3, 5])
def test_parabolic_values(q):
    # frozen from the unipotent profile; value 1 for phi_mu, 0 for Steinberg
    p1 = parabolic_padic(TestKind.phi_mu(1), q)
    assert (p1.value, p1.log_coeff) == (1, Fraction(-1, 2))
    p2 = parabolic_padic(TestKind.phi_mu(2), q)
    assert (p2.value, p2.log_coeff) == (1, Fraction(-3, 2))
    ps = parabolic_padic(TestKind.phi_steinberg(), q)
    assert (ps.value, ps.log_coeff) == (0, -1)
    assert parabolic_padic(TestKind.phi_steinberg(), q, "published").log_coeff == 1 - Fraction(1, q)
    p0 = parabolic_padic(TestKind.phi_mu(0), q)
    assert (p0.value, p0.log_coeff) == (1, 0)


def test_zeta_ratio_constant_profile():
    # a constant profile h_j = c gives c (1 - X) / (1 - X) = c
    poly, tail = zeta_ratio_laurent([Fraction(3), Fraction(3)], Fraction(3), 5)
    assert poly == {0: 3}
    assert tail == 3


def test_hyperbolic_values():
    q = 3
    unit4 = HyperbolicElementData(0, 4)
    assert hyperbolic_padic(TestKind.phi_mu(0), q, unit4) == 3
    assert hyperbolic_padic(TestKind.phi_mu(0), q, HyperbolicElementData(0, 2)) == 1
    w = hyperbolic_padic(TestKind.phi_mu(0), q, unit4, weighted=True)
    assert (w.coeff, w.log_power) == (-4, 1)
    T = hyperbolic_padic(TestKind.hecke_unram(), q, HyperbolicElementData(1))
    assert complex(T) == pytest.approx(q**-0.5)
    assert hyperbolic_padic(TestKind.hecke_unram(), q, HyperbolicElementData(-1), weighted=True) == 0
    assert hyperbolic_padic(TestKind.hecke_unram(), q, HyperbolicElementData(2)) == 0
    assert hyperbolic_padic(TestKind.phi_steinberg(), q, unit4) == 0
    with pytest.raises(ValueError):
        hyperbolic_padic(TestKind.phi_mu(0), q, HyperbolicElementData(0, 1))


def test_hyperbolic_ramified_character():
    mu = UnitCharacter.primitive(5, 1)
    # mu(-1) = -1, so (1 + conj mu(m)) / 2 vanishes at m = -1
    assert hyperbolic_padic(TestKind.phi_mu(mu=mu), 5, HyperbolicElementData(0, 4)) == 0
    v = hyperbolic_padic(TestKind.phi_mu(mu=mu), 5, HyperbolicElementData(0, 6))
    assert complex(v) == pytest.approx(5.0)


@pytest.mark.parametrize("q", [3, 5, 7])
def test_elliptic_values(q):
    gam = first_unramified_elliptic(q)
    assert elliptic_padic(TestKind.phi_mu(0), q, gam) == 1
    assert elliptic_padic(TestKind.phi_mu(1), q, gam) == 0
    assert elliptic_padic(TestKind.phi_steinberg(), q, gam) == -2
    assert elliptic_padic(TestKind.phi_steinberg(), q, gam, "published") == -1
    ram = EllipticElementData(0, 1, 1)
    assert elliptic_padic(TestKind.hecke_unram(), q, gam) == 0
    assert complex(elliptic_padic(TestKind.hecke_unram(), q, ram)) == pytest.approx(2 * q**-0.5)


def test_elliptic_validation():
    with pytest.raises(ValueError):
        elliptic_padic(TestKind.phi_mu(0), 5, EllipticElementData(0, 0, 4))  # x^2 + 4 splits mod 5
    with pytest.raises(ValueError):
        elliptic_padic(TestKind.phi_mu(0), 5, EllipticElementData(1, 1, 1))


def test_supercuspidal_needs_character():
    data = SupercuspidalData(dim=2, ramified=False)
    with pytest.raises(ValueError):
        elliptic_padic(TestKind.phi_supercuspidal(data), 3, first_unramified_elliptic(3))
    with pytest.raises(ValueError):
        TestKind("phi_supercuspidal")


# -- intertwiners


def test_intertwiner_exact_values():
    assert intertwiner_padic("steinberg", 3, 2) == Fraction(39, 40)
    assert intertwiner_padic("spherical", 3, 2) == Fraction(121, 120)
    assert intertwiner_padic("ramified", 7, 0.3j) == 1
    with pytest.raises(ZeroDivisionError):
        intertwiner_padic("spherical", 3, 0)
    with pytest.raises(ValueError):
        intertwiner_padic("bogus", 3, 1)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([2, 3, 5, 11]), st.floats(0.3, 3.0), st.floats(-5.0, 5.0))
def test_spherical_series_agrees(q, x, y):
    s = complex(x, y)
    assert abs(intertwiner_padic("spherical", q, s) - intertwiner_spherical_series(q, s)) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([2, 3, 5]), st.floats(0.05, 10.0))
def test_steinberg_is_zeta_ratio(q, t):
    s = complex(0.7, t)
    zeta = lambda z: 1 / (1 - q ** (-z))  # noqa: E731
    assert abs(intertwiner_padic("steinberg", q, s) - zeta(2 * s) / zeta(2 * s - 1)) < 1e-12


# -- characters, depth zero, helpers


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([(3, 1), (5, 1), (3, 2), (5, 2), (2, 2)]), st.integers(1, 200), st.integers(1, 200))
def test_unit_character_is_multiplicative(pN, a, b):
    p, N = pN
    if a % p == 0 or b % p == 0:
        return
    mu = UnitCharacter.primitive(p, N)
    assert mu(a * b) == mu(a) * mu(b)


def test_unit_character_conductors():
    assert UnitCharacter.trivial(3).conductor() == 0
    assert UnitCharacter.primitive(3, 2).conductor() == 2
    assert UnitCharacter.primitive(5, 1).order == 4
    with pytest.raises(ValueError):
        UnitCharacter.primitive(2, 1)
    mu = UnitCharacter.primitive(3, 1)
    with pytest.raises(ValueError):
        mu(3)


@pytest.mark.parametrize("q", [3, 5, 7])
def test_depth_zero_types(q):
    exps = regular_theta_exponents(q)
    assert len(exps) == (q * q - q) // 2
    dz = DepthZeroType(q, exps[0])
    assert dz.dim() == q - 1
    assert dz.dim("published") == q * q - q
    # identity character value
    assert dz.character(1, 0, 0, 1) == Cyclo.rational(q - 1)


def test_depth_zero_rejects_non_regular_theta():
    with pytest.raises(ValueError):
        DepthZeroType(3, 4)


def test_padic_value_arithmetic():
    v = PadicValue(Fraction(2), 3, Fraction(-1, 2))
    assert complex(v) == pytest.approx(2 / 3**0.5)
    assert PadicValue(Fraction(1), 3, Fraction(2)) == 9
    assert str(PadicValue(Fraction(-4), 3, Fraction(0), 1)) == "-4*log(3)"
    with pytest.raises(ValueError):
        float(PadicValue(Cyclo.root(4, 1), 3))


def test_small_number_theory():
    assert [n for n in range(20) if is_prime(n)] == [2, 3, 5, 7, 11, 13, 17, 19]
    assert vp(48, 2) == 4
    with pytest.raises(ValueError):
        vp(0, 3)
    assert cmath.isclose(complex(Cyclo.root(4, 1)), 1j, abs_tol=1e-15)
