import json
import subprocess
import sys
from pathlib import Path

import pytest

from traceforge.cli import main

EMPTY_EIGEN = str(Path(__file__).resolve().parents[1] / "src" / "traceforge" / "data" / "sl2z-eigen-empty.csv")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_help_exits_cleanly():
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0


def test_module_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "traceforge", "weyl", "--T", "12"], capture_output=True, text=True, check=False
    )
    assert res.returncode == 0
    assert json.loads(res.stdout)["values"]["main"] == pytest.approx(12.0)


def test_verify_abel_single_lambda(capsys):
    code, out, _ = run(capsys, "verify", "abel", "--lambda", "2", "--support", "1.5", "--tol", "1e-6")
    assert code == 0
    data = json.loads(out)
    assert data["exit_code"] == 0
    assert data["config"]["lambda"] == 2.0
    assert all(r["status"] == "pass" for r in data["rows"])


def test_zero_tolerance_fails_honestly(capsys):
    code, out, _ = run(capsys, "verify", "abel", "--lambda", "0", "--tol", "0")
    assert code == 1
    assert any(r["status"] == "fail" for r in json.loads(out)["rows"])


@pytest.mark.parametrize("suite", ["special", "elliptic-real", "intertwiners"])
def test_verify_suites_pass(capsys, suite):
    code, out, _ = run(capsys, "verify", suite)
    assert code == 0, out


def test_verify_padic_brute(capsys, tmp_path):
    code, _, _ = run(capsys, "verify", "padic-brute", "--p", "2", "--level", "2", "--out", str(tmp_path / "b"))
    assert code == 0
    header = (tmp_path / "b.csv").read_text().splitlines()[0]
    assert header == "formula_id,params,closed_form,brute_value,match_flag"
    assert (tmp_path / "b.png").stat().st_size > 0


def test_eval_all_ds12(capsys):
    code, out, _ = run(capsys, "eval", "all", "--spec", "ds-weight12.json")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "term,value_re,value_im,err_estimate"
    rows = {l.split(",")[0]: l.split(",") for l in lines[1:]}
    assert len(rows) == 7
    assert rows["hyperbolic"][1] == "0"
    total = sum(float(r[1]) for r in rows.values())
    assert total == pytest.approx(1.0, abs=1e-6)


def test_eval_single_term(capsys):
    code, out, _ = run(capsys, "eval", "identity", "--spec", "ds-weight4.json")
    assert code == 0
    assert len(out.splitlines()) == 2


def test_assemble_zero(capsys):
    code, out, _ = run(capsys, "assemble", "--spec", "ds-weight4.json", "--zero")
    assert code == 0
    assert json.loads(out)["values"]["total"]["value"] == {"re": 0.0, "im": 0.0}


def test_compare_with_empty_fixture(capsys):
    code, out, _ = run(capsys, "compare", "--eigen", EMPTY_EIGEN)
    assert code == 1
    assert json.loads(out)["rows"][0]["detail"] == "empty fixture"


def test_compare_with_zero_function(capsys):
    code, out, _ = run(capsys, "compare", "--zero", "--eigen", EMPTY_EIGEN)
    assert code == 0


def test_padic_command(capsys):
    code, out, _ = run(capsys, "padic", "--p", "3")
    assert code == 0
    vals = json.loads(out)["values"]
    assert vals["intertwiner_steinberg_s2"] == "39/40"
    assert vals["intertwiner_spherical_s2"] == "121/120"


@pytest.mark.parametrize(
    "argv",
    [
        ["verify", "special", "--tol", "-1"],
        ["padic", "--p", "4"],
        ["padic", "--level", "0"],
        ["eval", "all", "--support", "0"],
        ["eval", "all", "--spec", "no-such-spec.json"],
        ["compare"],
    ],
)
def test_bad_input_exit_code_two(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert err.startswith("traceforge: error:")


def test_malformed_spec_reports_position(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"volume": 1,\n}')
    code, _, err = run(capsys, "eval", "all", "--spec", str(bad))
    assert code == 2
    assert "line 2, column 1" in err


def _twice(capsys, tmp_path, *argv):
    # the report records argv, so both runs write to the same stem
    stem = tmp_path / "report"
    first = {}
    for _ in range(2):
        run(capsys, *argv, "--out", str(stem))
        snap = {ext: stem.with_suffix(ext).read_bytes() for ext in (".json", ".csv", ".png")}
        first = first or snap
    return first, snap


def test_weyl_outputs_are_byte_identical(capsys, tmp_path):
    a, b = _twice(capsys, tmp_path, "weyl", "--T", "20")
    assert a == b


def test_eval_outputs_are_byte_identical(capsys, tmp_path):
    a, b = _twice(capsys, tmp_path, "eval", "all", "--spec", "ds-weight4.json")
    assert a == b
