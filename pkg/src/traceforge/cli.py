"""Command line interface: ``traceforge <command> [flags]``.

Commands write a JSON RunReport (sorted keys, no timestamps, effective
configuration embedded).  With ``--out PATH`` the report goes to
``<stem>.json`` and the companion CSV and PNG to ``<stem>.csv`` and
``<stem>.png``; without it the JSON (or, for ``eval``, the CSV) is printed.
The exit code is 0 iff every check row passes; configuration errors exit 2.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Callable, List, Optional

import numpy as np

from . import assembler as asm
from . import padic_local as pl
from .cyclo import Cyclo
from .real_local import elliptic_real, intertwiner_real, intertwiner_real_normalized
from .special import EULER_GAMMA, completed_zeta_laurent, digamma, gamma, riemann_zeta, scattering_ratio
from .testfn import abel_round_trip, make_bump, phi_bump, quadruple_from_g

SUITES = ("abel", "special", "padic-brute", "elliptic-real", "intertwiners")
EVAL_TERMS = asm.TERM_NAMES + ("all",)
DEFAULT_TOL = 1e-8
DEFAULT_SUPPORT = 1.0
ABEL_LAMBDAS = (0.0, 1.0, 2.0, 3.0, 5.0)
ABEL_POINTS = 50
COMPARE_BUDGET = 1e-4
SCATTERING_LIMIT = 1e-3


# ---------------------------------------------------------------------------
# reports


@dataclass
class CheckRow:
    name: str
    passed: bool
    measured: object
    threshold: object
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "status": "pass" if self.passed else "fail",
            "measured": _jsonable(self.measured),
            "threshold": _jsonable(self.threshold),
            "detail": self.detail,
        }


def within(name: str, measured: float, threshold: float, detail: str = "") -> CheckRow:
    """Pass iff measured < threshold, so a zero threshold can never pass."""
    m = float(measured)
    return CheckRow(name, bool(np.isfinite(m) and m < threshold), m, float(threshold), detail)


def exact(name: str, closed, reference, detail: str = "") -> CheckRow:
    ok = closed == reference
    return CheckRow(name, bool(ok), 0 if ok else 1, "exact", detail or f"closed={closed} reference={reference}")


@dataclass
class RunReport:
    command: List[str]
    config: dict
    rows: List[CheckRow] = field(default_factory=list)
    values: dict = field(default_factory=dict)
    csv_text: Optional[str] = None
    figure: Optional[Callable] = None

    @property
    def exit_code(self) -> int:
        return 0 if self.rows and all(r.passed for r in self.rows) else 1

    def to_json(self) -> str:
        payload = {
            "command": list(self.command),
            "config": _jsonable(self.config),
            "rows": [r.to_dict() for r in self.rows],
            "values": _jsonable(self.values),
            "exit_code": self.exit_code,
        }
        return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, str)) or x is None:
        return x
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (Fraction, Cyclo)):
        return str(x)
    if isinstance(x, complex):
        return {"re": _jsonable(x.real), "im": _jsonable(x.imag)}
    x = float(x)
    if not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return x


def _stem(out: str) -> Path:
    p = Path(out)
    return p.with_suffix("") if p.suffix in (".json", ".csv", ".png") else p


def write_outputs(report: RunReport, out: Optional[str], primary: str = "json") -> List[Path]:
    """Write the report files; print to stdout when ``out`` is None."""
    if out is None:
        sys.stdout.write(report.csv_text if primary == "csv" and report.csv_text else report.to_json())
        return []
    stem = _stem(out)
    stem.parent.mkdir(parents=True, exist_ok=True)
    written = [stem.with_suffix(".json")]
    written[0].write_text(report.to_json(), encoding="utf-8")
    if report.csv_text is not None:
        path = stem.with_suffix(".csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(report.csv_text)
        written.append(path)
    if report.figure is not None:
        from . import plotting

        path = stem.with_suffix(".png")
        plotting.save(report.figure(), path)
        written.append(path)
    return written


def _rows_csv(rows: List[CheckRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", "status", "measured", "threshold", "detail"])
    for r in rows:
        d = r.to_dict()
        w.writerow([d["name"], d["status"], d["measured"], d["threshold"], d["detail"]])
    return buf.getvalue()


def _check_plot(rows: List[CheckRow]):
    numeric = [r for r in rows if isinstance(r.threshold, float)]

    def make():
        from . import plotting

        return plotting.check_figure([r.name for r in numeric], [r.measured for r in numeric], [r.threshold for r in numeric])

    return make if numeric else None


# ---------------------------------------------------------------------------
# verify suites


def verify_abel(lam: Optional[float], support: float, tol: float):
    """Round trip Hat-A((A Phi)') = Phi for a bump Phi of radius ``support``."""
    lams = ABEL_LAMBDAS if lam is None else (float(lam),)
    Phi, dPhi = phi_bump(support)
    x = np.linspace(0.0, support, ABEL_POINTS)
    target = Phi(x)
    rows, errors = [], {}
    for la in lams:
        back = abel_round_trip(Phi, dPhi, la, support, x)
        err = np.abs(back - target)
        errors[la] = err
        rows.append(within(f"abel_round_trip[lam={la:g}]", float(err.max()), tol, f"{x.size} points on [0, {support:g}]"))

    def fig():
        from . import plotting

        return plotting.abel_figure(x, errors)

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "Phi"] + [f"err_lam_{la:g}" for la in lams])
    for i, xi in enumerate(x):
        w.writerow([repr(float(xi)), repr(float(target[i]))] + [repr(float(errors[la][i])) for la in lams])
    return rows, {}, buf.getvalue(), fig


def verify_special(tol: float):
    """Laurent data of Lambda at 1, the scattering limit, and classical values."""
    lam_m1, lam_0, resid = completed_zeta_laurent()
    ref_0 = 0.5 * (EULER_GAMMA - math.log(4 * math.pi))
    rows = [
        within("lambda_minus1", abs(lam_m1 - 1.0), tol, f"value={lam_m1!r} residual={resid:.3g}"),
        within("lambda_0", abs(lam_0 - ref_0), tol, f"value={lam_0!r}"),
    ]
    ratio = scattering_ratio(1e-4)
    rows.append(within("scattering_ratio_near_0", abs(ratio - (-1.0)), SCATTERING_LIMIT, f"value={ratio.real!r}"))
    spot = [
        ("gamma(1/2)", gamma(0.5).real, math.sqrt(math.pi)),
        ("gamma(5)", gamma(5.0).real, 24.0),
        ("digamma(1)", digamma(1.0).real, -EULER_GAMMA),
        ("zeta(2)", riemann_zeta(2.0).real, math.pi**2 / 6),
        ("zeta(4)", riemann_zeta(4.0).real, math.pi**4 / 90),
        ("zeta(0)", riemann_zeta(0.0).real, -0.5),
        ("zeta(-1)", riemann_zeta(-1.0).real, -1.0 / 12),
    ]
    for name, val, ref in spot:
        rows.append(within(name, abs(val - ref), tol, f"value={val!r}"))
    values = {"lambda_minus1": lam_m1, "lambda_0": lam_0, "scattering_ratio_1e-4": ratio}
    return rows, values, _rows_csv(rows), _check_plot(rows)


def verify_padic_brute(p: int, level: int):
    """Closed forms against enumeration over GL2(Z/p^level)."""
    brute = pl.brute_force_report(p, level)
    rows = [
        CheckRow(f"{b.formula_id}[{b.params}]", b.match, 0 if b.match else 1, "exact", f"closed={b.closed_form} brute={b.brute_value}")
        for b in brute
    ]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["formula_id", "params", "closed_form", "brute_value", "match_flag"])
    for b in brute:
        w.writerow([b.formula_id, b.params, b.closed_form, b.brute_value, int(b.match)])

    def fig():
        from . import plotting

        return plotting.brute_figure([b.formula_id for b in brute], [b.match for b in brute])

    return rows, {"rows": len(brute), "mismatches": sum(1 for b in brute if not b.match)}, buf.getvalue(), fig


ELLIPTIC_WEIGHTS = (0, 1, 2, 3)
ELLIPTIC_ANGLES = (math.pi / 6, math.pi / 3, math.pi / 2, 2 * math.pi / 3)


def verify_elliptic_real(support: float, tol: float):
    """u-integral against h-integral for the real elliptic orbital integral."""
    seed = make_bump(support, "unit-g0")
    rows, values = [], {}
    for n in ELLIPTIC_WEIGHTS:
        pair = quadruple_from_g(seed, n)
        for th in ELLIPTIC_ANGLES:
            vu = elliptic_real(pair, theta=th, form="u")
            vh = elliptic_real(pair, theta=th, form="h")
            label = f"n={n},theta={th:.6f}"
            values[label] = {"u": vu, "h": vh}
            rows.append(within(f"elliptic_u_vs_h[{label}]", abs(vu - vh), tol))
    return rows, values, _rows_csv(rows), _check_plot(rows)


INTERTWINER_POINTS = (0.5, 2.0, 7.5)


def verify_intertwiners(q: int, tol: float):
    """Unitarity of the normalised real scalar and the p-adic scalars at s = 2."""
    rows, raw = [], {}
    for n in (0, 1, 2):
        for t in INTERTWINER_POINTS:
            v = intertwiner_real_normalized(1j * t, n)
            rows.append(within(f"real_normalized_unitary[n={n},t={t:g}]", abs(abs(v) - 1.0), tol))
            # the unnormalised scalar is not unitary; keep its modulus for reference
            raw[f"n={n},t={t:g}"] = abs(intertwiner_real(1j * t, n))
    s = 2
    closed = complex(pl.intertwiner_padic("spherical", q, s))
    series = pl.intertwiner_spherical_series(q, s)
    rows.append(within(f"spherical_vs_series[q={q},s={s}]", abs(closed - series), tol))
    zeta_v = lambda x: 1 / (1 - Fraction(q) ** (-x))  # noqa: E731
    st = pl.intertwiner_padic("steinberg", q, s)
    rows.append(exact(f"steinberg_zeta_ratio[q={q},s={s}]", st, zeta_v(2 * s) / zeta_v(2 * s - 1)))
    values = {"spherical": closed, "steinberg": st, "real_raw_modulus": raw}
    return rows, values, _rows_csv(rows), _check_plot(rows)


def run_verify(suite: str, args) -> RunReport:
    config = {"suite": suite, "tol": args.tol, "support": args.support}
    if suite == "abel":
        config["lambda"] = args.lam
        result = verify_abel(args.lam, args.support, args.tol)
    elif suite == "special":
        result = verify_special(args.tol)
    elif suite == "padic-brute":
        config.update(p=args.p, level=args.level)
        result = verify_padic_brute(args.p, args.level)
    elif suite == "elliptic-real":
        result = verify_elliptic_real(args.support, args.tol)
    elif suite == "intertwiners":
        config["p"] = args.p
        result = verify_intertwiners(args.p, args.tol)
    else:
        raise ValueError(f"unknown suite {suite!r}; expected one of {SUITES}")
    rows, values, text, fig = result
    return RunReport(_argv(args), config, rows, values, text, fig)


# ---------------------------------------------------------------------------
# global commands


def load_spec(path: Optional[str]) -> asm.SimilarityClassSpec:
    """A file path, or the name of a shipped spec (``sl2z.json``); default SL2(Z)."""
    if path is None:
        return asm.sl2z_spec()
    p = Path(path)
    if not p.exists():
        shipped = resources.files("traceforge").joinpath("data", p.name)
        if shipped.is_file():
            return asm.SimilarityClassSpec.from_json(shipped.read_text(encoding="utf-8"), p.name)
        raise asm.SpecError(f"{path}: no such file")
    return asm.SimilarityClassSpec.load(p)


def _gtf(args):
    spec = load_spec(args.spec)
    return spec, asm.build_test_function(spec, support=args.support, zero=args.zero)


def _term_rows(rows: List[asm.LocalTermReport]) -> List[CheckRow]:
    return [
        CheckRow(f"{r.term}_finite", r.finite, r.err_estimate, "finite", r.note) for r in rows
    ]


def _term_figure(rows):
    def make():
        from . import plotting

        return plotting.term_figure([r.term for r in rows], [r.value.real for r in rows], [r.err_estimate for r in rows])

    return make


def _term_values(rows) -> dict:
    return {r.term: {"value": r.value, "err_estimate": r.err_estimate, "note": r.note} for r in rows}


def run_eval(term: str, args) -> RunReport:
    spec, gtf = _gtf(args)
    if term == "all":
        rows, _ = asm.geometric_side(gtf, args.tol)
    elif term in asm.TERM_NAMES:
        rows = [asm.evaluate_term(term, gtf, args.tol)]
    else:
        raise ValueError(f"unknown term {term!r}; expected one of {EVAL_TERMS}")
    config = {"term": term, "spec": spec.to_dict(), "support": args.support, "tol": args.tol, "zero": args.zero}
    return RunReport(_argv(args), config, _term_rows(rows), _term_values(rows), asm.term_rows_csv(rows), _term_figure(rows))


def run_assemble(args) -> RunReport:
    spec, gtf = _gtf(args)
    rows, total = asm.geometric_side(gtf, args.tol)
    config = {"spec": spec.to_dict(), "support": args.support, "tol": args.tol, "zero": args.zero}
    values = _term_values(rows)
    values["total"] = {"value": total.value, "err_estimate": total.err_estimate}
    checks = _term_rows(rows)
    checks.append(CheckRow("total_finite", total.finite, total.err_estimate, "finite"))
    return RunReport(_argv(args), config, checks, values, asm.term_rows_csv(rows + [total]), _term_figure(rows))


def run_compare(args) -> RunReport:
    spec, gtf = _gtf(args)
    if args.eigen is None:
        raise asm.SpecError("compare needs --eigen PATH")
    fixture = asm.EigenvalueFixture.load(args.eigen)
    config = {
        "spec": spec.to_dict(),
        "eigen": str(args.eigen),
        "rows_in_fixture": len(fixture),
        "support": args.support,
        "tol": args.tol,
        "zero": args.zero,
        "budget": COMPARE_BUDGET,
    }
    argv = _argv(args)
    if len(fixture) == 0 and not args.zero:
        row = CheckRow("fixture", False, 0, ">= 1 row", "empty fixture")
        return RunReport(argv, config, [row], {"error": "empty fixture"})
    rows, total = asm.geometric_side(gtf, args.tol)
    spec_sum, tail = asm.spectral_side(gtf.pair, fixture)
    diff = abs(total.value.real - spec_sum)
    budget = tail + COMPARE_BUDGET + total.err_estimate
    check = CheckRow("geometric_vs_spectral", bool(diff <= budget), diff, budget, "tail + budget + geometric error")
    values = {
        "geometric_total": total.value,
        "geometric_err": total.err_estimate,
        "spectral_sum": spec_sum,
        "tail_bound": tail,
        "difference": diff,
        "terms": _term_values(rows),
    }
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["r", "parity", "multiplicity", "h"])
    hs = gtf.pair.h_array(fixture.r).real if len(fixture) and not gtf.zero else np.zeros(len(fixture))
    for r, par, m, hv in zip(fixture.r, fixture.parity, fixture.multiplicity, hs):
        w.writerow([repr(float(r)), par, int(m), repr(float(hv))])

    def fig():
        from . import plotting

        cut = float(fixture.r[-1]) if len(fixture) else 0.0
        return plotting.compare_figure(fixture.r, hs, cut)

    return RunReport(argv, config, [check], values, buf.getvalue(), fig)


def run_padic(args) -> RunReport:
    """Brute-force report over GL2(Z/p^level), with the closed-form intertwiners."""
    rows, values, text, fig = verify_padic_brute(args.p, args.level)
    values["identity_phi_1"] = pl.identity_padic(pl.TestKind.phi_mu(0), args.p)
    values["identity_steinberg"] = pl.identity_padic(pl.TestKind.phi_steinberg(), args.p)
    values["intertwiner_spherical_s2"] = pl.intertwiner_padic("spherical", args.p, 2)
    values["intertwiner_steinberg_s2"] = pl.intertwiner_padic("steinberg", args.p, 2)
    config = {"p": args.p, "level": args.level}
    return RunReport(_argv(args), config, rows, values, text, fig)


WEYL_DEFAULT_T = 30.0


def run_weyl(args) -> RunReport:
    spec = load_spec(args.spec)
    T = WEYL_DEFAULT_T if args.T is None else float(args.T)
    main, secondary, band = asm.weyl_estimate(spec, T)
    C = asm.c_x(spec)
    rows = [within("main_is_CT2", abs(main - C * T * T), 1e-12 * max(1.0, main), f"C_X={C!r}")]
    values = {"T": T, "C_X": C, "main": main, "secondary": secondary, "error_band": band}
    grid = np.linspace(1.0, T, 200)
    est = np.array([asm.weyl_estimate(spec, float(t)) for t in grid])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["T", "main", "secondary", "error_band"])
    for t, (m, s, b) in zip(grid, est):
        w.writerow([repr(float(t)), repr(float(m)), repr(float(s)), repr(float(b))])

    def fig():
        from . import plotting

        return plotting.weyl_figure(grid, est[:, 0], est[:, 1], est[:, 2])

    config = {"spec": spec.to_dict(), "T": T}
    return RunReport(_argv(args), config, rows, values, buf.getvalue(), fig)


# ---------------------------------------------------------------------------
# argument parsing


def _argv(args) -> List[str]:
    return list(getattr(args, "argv", []))


def _common(p: argparse.ArgumentParser, spec=False, pair=False):
    p.add_argument("--out", help="report path; writes <stem>.json, <stem>.csv and <stem>.png")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="tolerance (default 1e-8)")
    if spec:
        p.add_argument("--spec", help="spec JSON (path or shipped name); default SL2(Z)")
    if pair:
        p.add_argument("--support", type=float, default=DEFAULT_SUPPORT, help="support radius C of g (default 1.0)")
        p.add_argument("--zero", action="store_true", help="use g = 0")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="traceforge", description="GL(2) trace formula terms and checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("suite", choices=SUITES)
    _common(v)
    v.add_argument("--support", type=float, default=None, help="support radius (default 2.0 for abel, 1.0 otherwise)")
    v.add_argument("--lambda", dest="lam", type=float, default=None, help="single Abel weight (default 0,1,2,3,5)")
    v.add_argument("--p", type=int, default=3, help="prime (default 3)")
    v.add_argument("--level", type=int, default=1, help="level n of GL2(Z/p^n) (default 1)")

    e = sub.add_parser("eval", help="evaluate one geometric term, or all")
    e.add_argument("term", choices=EVAL_TERMS)
    _common(e, spec=True, pair=True)

    a = sub.add_parser("assemble", help="the full geometric side")
    _common(a, spec=True, pair=True)

    c = sub.add_parser("compare", help="geometric side against an eigenvalue fixture")
    _common(c, spec=True, pair=True)
    c.add_argument("--eigen", help="eigenvalue CSV with header r,parity,multiplicity")

    pd = sub.add_parser("padic", help="p-adic closed forms against enumeration")
    _common(pd)
    pd.add_argument("--p", type=int, default=3)
    pd.add_argument("--level", type=int, default=1)

    w = sub.add_parser("weyl", help="Weyl-law main and secondary terms")
    _common(w, spec=True)
    w.add_argument("--T", type=float, default=None, help="height T (default 30)")
    return parser


def _validate(args):
    if args.tol < 0 or not math.isfinite(args.tol):
        raise asm.SpecError("--tol must be a finite number >= 0")
    if getattr(args, "p", None) is not None and not pl.is_prime(args.p):
        raise asm.SpecError(f"--p must be prime, got {args.p}")
    if getattr(args, "level", None) is not None and args.level < 1:
        raise asm.SpecError("--level must be >= 1")
    sup = getattr(args, "support", None)
    if sup is not None and not sup > 0:
        raise asm.SpecError("--support must be positive")


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = argv
    try:
        _validate(args)
        if args.command == "verify":
            if args.support is None:
                args.support = 2.0 if args.suite == "abel" else DEFAULT_SUPPORT
            report = run_verify(args.suite, args)
        elif args.command == "eval":
            report = run_eval(args.term, args)
        elif args.command == "assemble":
            report = run_assemble(args)
        elif args.command == "compare":
            report = run_compare(args)
        elif args.command == "padic":
            report = run_padic(args)
        else:
            report = run_weyl(args)
        write_outputs(report, args.out, "csv" if args.command == "eval" else "json")
    except (asm.SpecError, OSError) as exc:
        print(f"traceforge: error: {exc}", file=sys.stderr)
        return 2
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
