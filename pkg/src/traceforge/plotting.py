"""Figures for the CLI reports.

Everything renders through the Agg backend and is saved without the
software/date metadata, so identical data gives byte-identical PNGs.
"""

from __future__ import annotations

import math
from typing import Dict, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 100,
    "savefig.dpi": 100,
}


def _figure(width=6.0, height=None):
    golden = (math.sqrt(5) - 1.0) / 2.0
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(width, height or width * golden))
    return fig, ax


def save(fig, path) -> None:
    with plt.rc_context(STYLE):
        fig.savefig(path, format="png", metadata={"Software": None})
    plt.close(fig)


def _floor(values, eps=1e-18):
    return np.maximum(np.abs(np.asarray(values, dtype=float)), eps)


def abel_figure(x: np.ndarray, errors: Dict[float, np.ndarray]):
    """Pointwise round-trip error, one curve per lam."""
    fig, ax = _figure()
    for lam, err in errors.items():
        ax.semilogy(x, _floor(err), marker=".", lw=0.8, label=f"lam = {lam:g}")
    ax.set_xlabel("x")
    ax.set_ylabel("|round trip - Phi|")
    ax.legend(frameon=False)
    fig.tight_layout()
    return fig


def check_figure(names: Sequence[str], measured: Sequence[float], thresholds: Sequence[float]):
    """Measured error per check against its threshold (markers on a log axis)."""
    fig, ax = _figure(width=7.0)
    idx = np.arange(len(names))
    ax.semilogy(idx, _floor(measured), "o", ms=4, label="measured")
    ax.semilogy(idx, _floor(thresholds), "_", ms=10, color="k", label="threshold")
    ax.set_xticks(idx)
    ax.set_xticklabels(names, rotation=70, ha="right", fontsize=6)
    ax.legend(frameon=False)
    fig.tight_layout()
    return fig


def term_figure(terms: Sequence[str], values: Sequence[float], errors: Sequence[float]):
    """Signed bar chart of the geometric terms."""
    fig, ax = _figure()
    idx = np.arange(len(terms))
    vals = np.nan_to_num(np.asarray(values, dtype=float))
    errs = np.nan_to_num(np.asarray(errors, dtype=float), posinf=0.0)
    ax.bar(idx, vals, yerr=errs, color=["C0" if v >= 0 else "C3" for v in vals])
    ax.axhline(0.0, color="k", lw=0.6)
    ax.set_xticks(idx)
    ax.set_xticklabels(terms, rotation=30, ha="right")
    ax.set_ylabel("value")
    fig.tight_layout()
    return fig


def brute_figure(formula_ids: Sequence[str], matches: Sequence[bool]):
    """Matched and mismatched rows per formula id."""
    order = sorted(set(formula_ids), key=list(formula_ids).index)
    good = [sum(1 for f, m in zip(formula_ids, matches) if f == o and m) for o in order]
    bad = [sum(1 for f, m in zip(formula_ids, matches) if f == o and not m) for o in order]
    fig, ax = _figure()
    idx = np.arange(len(order))
    ax.bar(idx, good, color="C2", label="match")
    ax.bar(idx, bad, bottom=good, color="C3", label="mismatch")
    ax.set_xticks(idx)
    ax.set_xticklabels(order, rotation=40, ha="right", fontsize=7)
    ax.set_ylabel("rows")
    ax.legend(frameon=False)
    fig.tight_layout()
    return fig


def weyl_figure(T: np.ndarray, main: np.ndarray, secondary: np.ndarray, band: np.ndarray):
    """Main term, main plus secondary, and the error band."""
    fig, ax = _figure()
    total = main + secondary
    ax.plot(T, main, lw=1.0, label="main")
    ax.plot(T, total, lw=1.0, label="main + secondary")
    ax.fill_between(T, total - band, total + band, alpha=0.2, lw=0, label="band")
    ax.set_xlabel("T")
    ax.set_ylabel("N(T)")
    ax.legend(frameon=False)
    fig.tight_layout()
    return fig


def compare_figure(r: np.ndarray, h: np.ndarray, cut: float):
    """h(r_j) over the fixture with the truncation point marked."""
    fig, ax = _figure()
    if r.size:
        ax.plot(r, h, ".", ms=3)
    ax.axvline(cut, color="k", lw=0.6, ls="--")
    ax.set_xlabel("r")
    ax.set_ylabel("h(r)")
    fig.tight_layout()
    return fig
