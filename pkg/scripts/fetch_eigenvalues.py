"""Convert a user-supplied table of Maass cusp form eigenvalues to the fixture schema.

No eigenvalues ship with the package.  Download a table yourself (for
example from the LMFDB Maass form pages) and convert it:

    python scripts/fetch_eigenvalues.py raw.csv --column r --parity-column symmetry -o sl2z-eigen.csv

The input is any CSV with a header.  The spectral column holds either r
(``--column r``) or the Laplace eigenvalue lambda = 1/4 + r^2
(``--kind lambda``).  Parity comes from a column whose values are
even/odd, or 0/1 (0 = even), or is fixed with ``--parity``.  The output has
header ``r,parity,multiplicity``, LF line endings and rows sorted by r.
"""

import argparse
import csv
import math
import sys

PARITY_WORDS = {"even": "even", "odd": "odd", "0": "even", "1": "odd", "e": "even", "o": "odd"}


def convert(rows, column, kind="r", parity_column=None, parity=None, mult_column=None):
    out = []
    for i, row in enumerate(rows, start=2):
        try:
            x = float(row[column])
        except (KeyError, ValueError):
            raise SystemExit(f"line {i}: column {column!r} missing or not a number") from None
        if kind == "lambda":
            if x < 0.25:
                raise SystemExit(f"line {i}: lambda = {x} < 1/4 is not a cusp form parameter")
            x = math.sqrt(x - 0.25)
        if parity is not None:
            p = parity
        else:
            raw = str(row.get(parity_column, "")).strip().lower()
            if raw not in PARITY_WORDS:
                raise SystemExit(f"line {i}: unrecognised parity {raw!r}")
            p = PARITY_WORDS[raw]
        m = int(row[mult_column]) if mult_column else 1
        out.append((x, p, m))
    out.sort(key=lambda t: t[0])
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("input", help="CSV file with a header row")
    ap.add_argument("-o", "--output", help="output path (default stdout)")
    ap.add_argument("--column", default="r", help="spectral column (default r)")
    ap.add_argument("--kind", choices=("r", "lambda"), default="r")
    grp = ap.add_mutually_exclusive_group(required=True)
    grp.add_argument("--parity-column")
    grp.add_argument("--parity", choices=("even", "odd"))
    ap.add_argument("--mult-column", help="multiplicity column (default 1 per row)")
    args = ap.parse_args(argv)

    with open(args.input, newline="", encoding="utf-8") as fh:
        rows = convert(csv.DictReader(fh), args.column, args.kind, args.parity_column, args.parity, args.mult_column)
    dest = open(args.output, "w", newline="", encoding="utf-8") if args.output else sys.stdout
    try:
        w = csv.writer(dest, lineterminator="\n")
        w.writerow(["r", "parity", "multiplicity"])
        for r, p, m in rows:
            w.writerow([repr(r), p, m])
    finally:
        if dest is not sys.stdout:
            dest.close()
    print(f"{len(rows)} rows", file=sys.stderr)


if __name__ == "__main__":
    main()
