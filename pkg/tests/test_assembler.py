import json
import math
from fractions import Fraction

import numpy as np
import pytest

from traceforge.assembler import (
    SL2Z_ELLIPTIC,
    SL2Z_VOLUME,
    TERM_NAMES,
    ArchimedeanEntry,
    EigenvalueFixture,
    EllipticClass,
    FiniteEntry,
    SimilarityClassSpec,
    SpecError,
    build_test_function,
    c_x,
    combine,
    fundamental_unit,
    geodesic_classes,
    geometric_side,
    narrow_class_number,
    scattering_term,
    sl2z_spec,
    spectral_side,
    term_rows_csv,
    weyl_estimate,
)
from traceforge.testfn import make_bump


def make_spec(arch, finite=(), hecke=()):
    return SimilarityClassSpec(
        SL2Z_VOLUME,
        [ArchimedeanEntry("real", *arch)],
        [FiniteEntry(*f) for f in finite],
        list(hecke),
        [EllipticClass(t, w) for t, w in SL2Z_ELLIPTIC],
    )


def total(spec, support=1.0):
    rows, tot = geometric_side(build_test_function(spec, support=support))
    return rows, tot.value


# -- dimension oracles


def dim_level_one(k):
    """dim S_k(SL2(Z)) for even k."""
    if k < 12:
        return 0
    return k // 12 - 1 if k % 12 == 2 else k // 12


def dim_gamma0(k, p):
    """dim S_k(Gamma_0(p)) for even k >= 2 and prime p."""
    leg = lambda a: 0 if a % p == 0 else (1 if pow(a % p, (p - 1) // 2, p) == 1 else -1)  # noqa: E731
    n2 = 1 + leg(-1) if p > 2 else 1
    n3 = 1 + leg(-3) if p != 3 else 1
    mu = p + 1
    if k == 2:
        return round(mu / 12 - n2 / 4 - n3 / 3)
    return round((k - 1) * mu / 12 + (k // 4 - (k - 1) / 4) * n2 + (k // 3 - (k - 1) / 3) * n3 - 1)


def cohen_oesterle(k, p, chi):
    """dim S_k(Gamma_0(p), chi) for a primitive chi mod p with chi(-1) = (-1)^k."""
    eps = {0: Fraction(1, 4), 2: Fraction(-1, 4), 1: Fraction(0), 3: Fraction(0)}[k % 4]
    mk = {0: Fraction(1, 3), 1: Fraction(0), 2: Fraction(-1, 3)}[k % 3]
    s2 = sum(chi(x) for x in range(p) if (x * x + 1) % p == 0)
    s3 = sum(chi(x) for x in range(p) if (x * x + x + 1) % p == 0)
    return Fraction(k - 1, 12) * (p + 1) - 1 + eps * s2 + mk * s3


def test_level_one_oracle_table():
    assert [dim_level_one(k) for k in (2, 4, 12, 14, 16, 24, 26)] == [0, 0, 1, 0, 1, 2, 1]


@pytest.mark.parametrize("k,expected", [(4, 0), (12, 1), (16, 1), (24, 2)])
def test_discrete_series_counts_level_one(k, expected):
    assert expected == dim_level_one(k)
    rows, tot = total(make_spec(("ds", k)))
    assert abs(tot - expected) < 1e-6


@pytest.mark.parametrize("p,k", [(11, 2), (5, 4), (5, 12), (13, 2)])
def test_steinberg_counts_newforms(p, k):
    new = dim_gamma0(k, p) - 2 * dim_level_one(k)
    _, tot = total(make_spec(("ds", k), [(p, "st")]))
    assert abs(tot - new) < 1e-6


@pytest.mark.parametrize("p,k", [(5, 3), (7, 3), (13, 3), (5, 5)])
def test_ramified_principal_series_half_counts(p, k):
    gtf = build_test_function(make_spec(("ds", k), [(p, "rps", 1)]))
    mu = gtf.finite[0].test.mu
    chi = lambda x: complex(mu(x)).real  # noqa: E731
    _, tot = geometric_side(gtf)
    assert abs(tot.value - float(cohen_oesterle(k, p, chi)) / 2) < 1e-6


def test_larger_support_keeps_count():
    _, tot = total(make_spec(("ds", 12)), support=3.0)
    assert abs(tot - 1) < 1e-6


# -- spec parsing


def test_shipped_spec_matches_builtin():
    from importlib.resources import files

    text = files("traceforge").joinpath("data/sl2z.json").read_text()
    spec = SimilarityClassSpec.from_json(text)
    assert spec.to_dict() == sl2z_spec().to_dict()
    assert spec.is_full_level


def test_spec_round_trip():
    spec = make_spec(("ds", 4), [(11, "st")])
    again = SimilarityClassSpec.from_dict(json.loads(json.dumps(spec.to_dict())))
    assert again.to_dict() == spec.to_dict()
    assert spec.square_integrable_count == 2


def test_spec_json_error_has_position():
    with pytest.raises(SpecError, match="line 2, column 1"):
        SimilarityClassSpec.from_json('{"volume": 1,\n}')


@pytest.mark.parametrize(
    "patch,msg",
    [
        ({"extra": 1}, "unexpected keys"),
        ({"volume": -1.0}, "volume"),
        ({"archimedean": [{"kind": "real", "entry": "ds", "weight": 1}]}, "weight"),
        ({"finite": [{"q": 5, "entry": "st"}, {"q": 5, "entry": "ups"}]}, "once"),
        ({"finite": [{"q": 5, "entry": "rps"}]}, "conductor"),
        ({"hecke_set": [7]}, "Hecke"),
        ({"elliptic_classes": [{"theta": 0.0, "weight": 1.0}]}, "angles"),
        ({"archimedean": [{"kind": "real"}]}, "bad entry"),
    ],
)
def test_spec_validation(patch, msg):
    raw = sl2z_spec().to_dict()
    raw.update(patch)
    with pytest.raises(SpecError, match=msg):
        SimilarityClassSpec.from_dict(raw)


def test_rational_assembly_needs_one_real_place():
    raw = sl2z_spec().to_dict()
    raw["archimedean"] = [{"kind": "complex", "entry": "ups", "weight": 0}]
    with pytest.raises(SpecError):
        build_test_function(SimilarityClassSpec.from_dict(raw))
    raw = sl2z_spec().to_dict()
    raw["finite"] = [{"q": 4, "entry": "ups", "conductor": 0}]
    with pytest.raises(SpecError, match="prime"):
        build_test_function(SimilarityClassSpec.from_dict(raw))


# -- SL2(Z) geometric side and invariants


@pytest.fixture(scope="module")
def sl2z_rows():
    return geometric_side(build_test_function(sl2z_spec(), support=1.0))


def test_sl2z_rows_are_finite(sl2z_rows):
    rows, tot = sl2z_rows
    assert [r.term for r in rows] == list(TERM_NAMES)
    assert all(r.finite for r in rows)
    assert tot.finite
    hyp = next(r for r in rows if r.term == "hyperbolic")
    assert hyp.value == 0


def test_term_csv(sl2z_rows):
    rows, _ = sl2z_rows
    lines = term_rows_csv(rows).splitlines()
    assert lines[0] == "term,value_re,value_im,err_estimate"
    assert [l.split(",")[0] for l in lines[1:]] == list(TERM_NAMES)


def test_zero_test_function_gives_zero():
    rows, tot = geometric_side(build_test_function(sl2z_spec(), zero=True))
    assert all(r.value == 0 for r in rows)
    assert tot.value == 0


def test_linearity():
    # the geometric side is linear in g
    spec = make_spec(("ds", 12))
    g1, g2 = make_bump(1.0, "unit-g0"), make_bump(0.8, "unit-g0")
    a = build_test_function(spec, seed=g1)
    b = build_test_function(spec, seed=g2)
    rng = np.random.default_rng(3)
    ta, tb = geometric_side(a)[1].value, geometric_side(b)[1].value
    for c1, c2 in rng.uniform(-2, 2, size=(2, 2)):
        tc = geometric_side(combine(a, b, c1, c2))[1].value
        assert abs(tc - (c1 * ta + c2 * tb)) < 1e-7


def test_support_monotonicity_of_geodesics():
    # below the shortest geodesic no closed-geodesic term appears
    spec = sl2z_spec()
    from traceforge.assembler import SL2Z_MIN_GEODESIC, elliptic_global

    small = elliptic_global(build_test_function(spec, support=SL2Z_MIN_GEODESIC - 0.1))
    assert "geodesic" not in small.note
    big = elliptic_global(build_test_function(spec, support=SL2Z_MIN_GEODESIC + 0.5))
    assert "geodesic" in big.note


# -- arithmetic helpers


@pytest.mark.parametrize(
    "D,h", [(5, 1), (8, 1), (12, 2), (13, 1), (17, 1), (21, 2), (24, 2), (28, 2), (60, 4)]
)
def test_narrow_class_numbers(D, h):
    assert narrow_class_number(D) == h


def test_fundamental_units():
    # smallest unit of norm +1, not the golden ratio
    assert fundamental_unit(5) == pytest.approx((3 + math.sqrt(5)) / 2)
    assert fundamental_unit(12) == pytest.approx(2 + math.sqrt(3))
    with pytest.raises(ValueError):
        narrow_class_number(9)


def test_shortest_geodesic_trace_three():
    (t, lsum), *_ = geodesic_classes(3)
    assert t == 3
    assert lsum == pytest.approx(2 * math.log((3 + math.sqrt(5)) / 2))


# -- scattering


@pytest.mark.parametrize("spec", [make_spec(("ds", 4)), make_spec(("ups",), [(3, "st")])], ids=["ds4", "st3"])
def test_scattering_contour_matches_fourier_form(spec):
    gtf = build_test_function(spec)
    contour = scattering_term(gtf, tol=1e-9).value.real
    closed = scattering_term(gtf, route="closed").value.real
    assert abs(contour - closed) < 1e-6
    published = scattering_term(gtf, route="published").value.real
    assert abs(published - closed) > 1e-3


def test_scattering_closed_needs_square_integrable_factor():
    with pytest.raises(ValueError):
        scattering_term(build_test_function(sl2z_spec()), route="closed")


# -- spectral side


def test_fixture_parsing():
    fx = EigenvalueFixture.from_csv("r,parity,multiplicity\n9.5,even,1\n12.1,odd,2\n")
    assert len(fx) == 2
    assert fx.parity == ["even", "odd"]
    assert list(fx.multiplicity) == [1, 2]


@pytest.mark.parametrize(
    "text,msg",
    [
        ("r,parity,multiplicity\r\n1,even,1\r\n", "LF"),
        ("r,parity\n", "header"),
        ("r,parity,multiplicity\n1,both,1\n", "parity"),
        ("r,parity,multiplicity\n2,even,1\n1,even,1\n", "nondecreasing"),
        ("r,parity,multiplicity\nx,even,1\n", "bad number"),
        ("r,parity,multiplicity\n1,even\n", "3 fields"),
    ],
)
def test_fixture_errors(text, msg):
    with pytest.raises(SpecError, match=msg):
        EigenvalueFixture.from_csv(text)


def test_spectral_side_empty_and_zero():
    pair = build_test_function(sl2z_spec()).pair
    val, tail = spectral_side(pair, EigenvalueFixture.empty())
    assert val == 0 and tail > 0
    zpair = build_test_function(sl2z_spec(), zero=True).pair
    assert spectral_side(zpair, EigenvalueFixture.empty()) == (0.0, 0.0)


def test_spectral_side_sums_h():
    pair = build_test_function(sl2z_spec()).pair
    fx = EigenvalueFixture.from_csv("r,parity,multiplicity\n9.5,even,1\n12.1,odd,2\n")
    val, _ = spectral_side(pair, fx)
    assert val == pytest.approx(pair.h(9.5).real + 2 * pair.h(12.1).real, abs=1e-14)
    even, _ = spectral_side(pair, fx, parity="even")
    assert even == pytest.approx(pair.h(9.5).real, abs=1e-14)


# -- Weyl law


def test_weyl_sl2z():
    assert c_x(sl2z_spec()) == pytest.approx(1 / 12, rel=1e-15)
    main, sec, band = weyl_estimate(sl2z_spec(), 12.0)
    assert main == pytest.approx(12.0, rel=1e-14)
    assert sec == pytest.approx(-(2 / math.pi) * 12 * math.log(12))
    assert weyl_estimate(sl2z_spec(), 1.0)[0] == pytest.approx(1 / 12)
    with pytest.raises(ValueError):
        weyl_estimate(sl2z_spec(), 0.5)


def test_weyl_discrete_series_has_no_secondary_term():
    main, sec, _ = weyl_estimate(make_spec(("ds", 12)), 10.0)
    assert sec == 0
    assert main == pytest.approx(100 * (11 / 2) / 12)
