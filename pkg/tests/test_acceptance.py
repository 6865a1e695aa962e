"""Acceptance checks, one per criterion, at the pinned tolerances.

Each test prints a single ``ACCEPTANCE <n> PASS|FAIL`` line with the measured
numbers and then asserts the criterion as stated.  Criteria that the
implementation cannot meet fail here on purpose.
"""

import math
import os
import time
from fractions import Fraction

import numpy as np
import pytest

from traceforge import assembler as asm
from traceforge import padic_local as pl
from traceforge.real_local import (
    PseudoCoefficientDS,
    RealRepDescriptor,
    ds_elliptic_closed,
    elliptic_real,
    intertwiner_real,
    intertwiner_real_normalized,
)
from traceforge.special import EULER_GAMMA, completed_zeta_laurent, scattering_ratio
from traceforge.testfn import abel_round_trip, make_bump, phi_bump, quadruple_from_g


@pytest.fixture
def announce(capsys):
    def _say(n, passed, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {n} {'PASS' if passed else 'FAIL'}: {detail}")

    return _say


def test_c1_abel_round_trip(announce):
    R = 2.0
    Phi, dPhi = phi_bump(R)
    x = np.linspace(0.0, R, 50)
    start = time.perf_counter()
    errs = {lam: float(np.max(np.abs(abel_round_trip(Phi, dPhi, lam, R, x) - Phi(x)))) for lam in (0, 1, 2, 3, 5)}
    elapsed = time.perf_counter() - start
    ok = max(errs.values()) <= 1e-6 and elapsed <= 10.0
    announce(1, ok, f"max err {max(errs.values()):.2e} (<= 1e-6), {elapsed:.2f} s (<= 10 s)")
    assert ok


def test_c2_fudge_factors(announce):
    lam_m1, lam_0, _ = completed_zeta_laurent()
    e1 = abs(lam_m1 - 1.0)
    e0 = abs(lam_0 - 0.5 * (EULER_GAMMA - math.log(4 * math.pi)))
    er = abs(scattering_ratio(1e-4) + 1.0)
    ok = e1 <= 1e-8 and e0 <= 1e-8 and er <= 1e-3
    announce(2, ok, f"|lam_-1 - 1| {e1:.1e}, |lam_0 - ref| {e0:.1e} (<= 1e-8); |ratio + 1| {er:.1e} (<= 1e-3)")
    assert ok


def test_c3_discrete_series_pseudo_coefficient(announce):
    rng = np.random.default_rng(2024)
    theta = math.pi / 3
    parts = []
    ok = True
    for k in (2, 3, 4):
        ds = PseudoCoefficientDS.build(k, 1.0)
        parity = "even" if k % 2 == 0 else "odd"
        char_err = abs(ds.character(RealRepDescriptor.discrete(k)) - 1)
        ps_max = max(abs(ds.character(RealRepDescriptor.principal(1j * t, parity))) for t in rng.uniform(0, 20, 10))
        id_err = abs(ds.identity() - (k - 1) / (4 * math.pi))
        _, der = ds.parabolic()
        par_err = abs(der - 1.0)
        target = 2j * math.pi * np.exp(1j * (k - 1) * theta) / (k * abs(math.sin(theta)))
        ell_err = abs(ds.elliptic(theta) - target)
        # the value the pseudo-coefficient actually has, for the record
        own_err = abs(ds.elliptic(theta) - ds_elliptic_closed(k, theta))
        k_ok = char_err <= 1e-8 and ps_max <= 1e-8 and id_err <= 1e-6 and par_err <= 1e-6 and ell_err <= 1e-6
        ok &= k_ok
        parts.append(
            f"k={k}: char {char_err:.0e}/{ps_max:.0e}, id {id_err:.0e}, "
            f"parabolic' {der:.6f} (want 1), elliptic err {ell_err:.3f} (own closed form {own_err:.0e})"
        )
    announce(3, ok, "; ".join(parts))
    assert ok


def test_c4_real_elliptic_dual_forms(announce):
    seed = make_bump(1.0, "unit-g0")
    start = time.perf_counter()
    worst = 0.0
    for n in (0, 1, 2, 3):
        pair = quadruple_from_g(seed, n)
        for th in (math.pi / 6, math.pi / 3, math.pi / 2, 2 * math.pi / 3):
            worst = max(worst, abs(elliptic_real(pair, theta=th, form="u") - elliptic_real(pair, theta=th, form="h")))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-6 and elapsed <= 30.0
    announce(4, ok, f"max |u - h| {worst:.1e} (<= 1e-6), {elapsed:.2f} s (<= 30 s)")
    assert ok


REQUIRED_FAMILIES = {
    "ktype_dim",
    "hom_dim_unipotent",
    "identity_phi_mu",
    "elliptic_steinberg",
    "elliptic_phi_1",
    "depth_zero_character_table",
}


def test_c5_padic_exactness(announce):
    parts, ok = [], True
    for p in (2, 3, 5):
        for level in (1, 2):
            start = time.perf_counter()
            rows = pl.brute_force_report(p, level)
            elapsed = time.perf_counter() - start
            bad = [r.formula_id for r in rows if not r.match]
            missing = REQUIRED_FAMILIES - {r.formula_id for r in rows}
            run_ok = not bad and not missing and elapsed <= 120.0
            ok &= run_ok
            parts.append(f"p={p},n={level}: {len(rows)} rows, {len(bad)} mismatches, {elapsed:.1f} s")
            if missing:
                parts.append(f"missing {sorted(missing)}")
    announce(5, ok, "; ".join(parts))
    assert ok


def test_c6_intertwiners(announce):
    raw = max(abs(abs(intertwiner_real(1j * t, n)) - 1) for n in (0, 1, 2) for t in (0.5, 2.0, 7.5))
    norm = max(abs(abs(intertwiner_real_normalized(1j * t, n)) - 1) for n in (0, 1, 2) for t in (0.5, 2.0, 7.5))
    sph = abs(complex(pl.intertwiner_padic("spherical", 3, 2)) - pl.intertwiner_spherical_series(3, 2))
    zeta_v = lambda x: 1 / (1 - Fraction(3) ** (-x))  # noqa: E731
    st_ok = pl.intertwiner_padic("steinberg", 3, 2) == zeta_v(4) / zeta_v(3)
    ok = raw <= 1e-9 and sph <= 1e-12 and st_ok
    announce(
        6,
        ok,
        f"max ||lambda(it,n)| - 1| {raw:.3f} (<= 1e-9; normalised scalar {norm:.0e}), "
        f"spherical vs series {sph:.0e} (<= 1e-12), Steinberg exact {st_ok}",
    )
    assert ok


def _fixture_path():
    return os.environ.get("TRACEFORGE_EIGEN")


def test_c7_trace_formula_consistency(announce):
    spec = asm.sl2z_spec()
    gtf = asm.build_test_function(spec, support=1.0)
    rows, tot = asm.geometric_side(gtf)
    path = _fixture_path()
    if path:
        fixture = asm.EigenvalueFixture.load(path)
        spec_sum, tail = asm.spectral_side(gtf.pair, fixture)
        diff = abs(tot.value.real - spec_sum)
        ok = len(fixture) >= 50 and diff <= tail + 1e-3
        announce(7, ok, f"fixture {len(fixture)} rows, |geom - spec| {diff:.2e} <= tail {tail:.2e} + 1e-3")
        assert ok
        return
    # no fixture: the property suite stands in
    finite = all(r.finite for r in rows)
    hyp = next(r for r in rows if r.term == "hyperbolic").value == 0
    other = asm.build_test_function(spec, seed=make_bump(0.8, "unit-g0"))
    t2 = asm.geometric_side(other)[1].value
    c1, c2 = 0.7, -1.3
    t12 = asm.geometric_side(asm.combine(gtf, other, c1, c2))[1].value
    lin = abs(t12 - (c1 * tot.value + c2 * t2))
    # geodesic classes enter one by one as the support grows
    counts = []
    for C in (1.0, asm.SL2Z_MIN_GEODESIC + 0.01, 3.5, 4.5):
        tmax = int(math.floor(2 * math.cosh(C / 2)))
        counts.append(len(asm.geodesic_classes(tmax)) if C > asm.SL2Z_MIN_GEODESIC else 0)
    small = asm.elliptic_global(asm.build_test_function(spec, support=asm.SL2Z_MIN_GEODESIC - 0.05))
    mono = counts == sorted(counts) and counts[0] == 0 and counts[-1] > counts[1] and "geodesic" not in small.note
    ok = finite and hyp and lin <= 1e-8 and mono
    announce(
        7,
        ok,
        f"no eigenvalue fixture, property suite: terms finite {finite}, hyperbolic == 0 {hyp}, "
        f"linearity err {lin:.1e} (<= 1e-8), support monotone {mono} {counts}",
    )
    assert ok


def test_c8_weyl_shape(announce):
    spec = asm.sl2z_spec()
    main_err = max(abs(asm.weyl_estimate(spec, T)[0] - T * T / 12) / (T * T / 12) for T in (10, 20, 30))
    sec_err = max(abs(asm.weyl_estimate(spec, T)[1] + (2 / math.pi) * T * math.log(T)) for T in (10, 20, 30))
    T = 30.0
    contour = asm.scattering_phase_integral(T)
    ref = -(1 / math.pi) * T * math.log(T)
    ratio = contour / ref
    ok = main_err <= 1e-15 and sec_err <= 1e-12 and abs(ratio - 1) <= 0.15
    announce(
        8,
        ok,
        f"main rel err {main_err:.0e}, secondary err {sec_err:.0e}; "
        f"contour {contour:.4f} vs -(1/pi) T log T {ref:.4f}, ratio {ratio:.3f} (within 15% of 1)",
    )
    assert ok


def test_c9_scattering_cross_validation(announce):
    spec = asm.SimilarityClassSpec(
        asm.SL2Z_VOLUME,
        [asm.ArchimedeanEntry("real", "ds", 4)],
        [],
        [],
        [asm.EllipticClass(t, w) for t, w in asm.SL2Z_ELLIPTIC],
    )
    gtf = asm.build_test_function(spec)
    contour = asm.scattering_term(gtf, tol=1e-10).value.real
    published = asm.scattering_term(gtf, route="published").value.real
    fourier = asm.scattering_term(gtf, route="closed").value.real
    diff = abs(contour - published)
    ok = diff <= 1e-6
    announce(
        9,
        ok,
        f"contour {contour:.9f} vs residue closed form {published:.9f}: diff {diff:.2e} (<= 1e-6); "
        f"Fourier form {fourier:.9f} agrees to {abs(contour - fourier):.1e}",
    )
    assert ok
