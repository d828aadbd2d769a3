"""Figure rendering for the CLI report paths.

Every plotting function takes already-computed report data and writes one
PNG; nothing here recomputes. The CLI only calls these under --plot, so the
delimited outputs never depend on matplotlib.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _new_axes(xlabel: str, ylabel: str, title: str):
    fig, ax = plt.subplots(figsize=(6.4, 4.2), dpi=120)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title, fontsize=11)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _save(fig, path: str) -> str:
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": "gramian-bounds"})
    plt.close(fig)
    return path


def plot_capacity(estimate, closed_form, label: str, path: str) -> str:
    fig, ax = _new_axes("number of Fekete points n", "transfinite diameter d_n",
                        f"capacity estimate: {label}")
    ns = [n for n, _ in estimate.d_sequence]
    ds = [d for _, d in estimate.d_sequence]
    ax.plot(ns, ds, "o-", label="d_n sequence")
    ax.axhline(estimate.value, color="tab:orange", ls="--",
               label=f"extrapolated {estimate.value:.4f}")
    if closed_form is not None:
        ax.axhline(closed_form, color="tab:green", ls=":",
                   label=f"closed form {closed_form:.4f}")
    ax.legend()
    return _save(fig, path)


def plot_err_trend(trend, cap_value, label: str, path: str) -> str:
    fig, ax = _new_axes("degree l", "Err(l, X)^(1/l)",
                        f"approximation-error trend: {label}")
    ls = [l for l, _ in trend]
    roots = [r for _, r in trend]
    ax.plot(ls, roots, "o-", label="Err(l, X)^(1/l)")
    if cap_value is not None:
        ax.axhline(cap_value, color="tab:green", ls=":",
                   label=f"capacity {cap_value:.4f}")
    ax.legend()
    return _save(fig, path)


def plot_verify(rows, path: str, title: str = "bound verification") -> str:
    fig, ax = _new_axes("bound value", "empirical lambda_min", title)
    bounds = np.array([max(float(r["bound"]), 1e-320) for r in rows])
    empirical = np.array([max(float(r["lambda_min"]), 1e-320) for r in rows])
    ok = np.array([bool(r["holds"]) for r in rows])
    ax.loglog(bounds[ok], empirical[ok], "o", ms=4, label="holds")
    if np.any(~ok):
        ax.loglog(bounds[~ok], empirical[~ok], "rx", ms=6, label="violated")
    lims = [min(bounds.min(), empirical.min()), max(bounds.max(), empirical.max())]
    ax.loglog(lims, lims, "k--", lw=1, label="empirical = bound")
    ax.legend()
    return _save(fig, path)


def plot_conjecture(rows, path: str) -> str:
    fig, ax = _new_axes("t / n^2", "max lambda_min(W(t))", "stable-spectrum scan")
    by_n: dict = {}
    for r in rows:
        by_n.setdefault(r["n"], []).append((r["t"] / r["n"] ** 2, r["lambda_min_max"]))
    for n, pts in sorted(by_n.items()):
        pts.sort()
        ax.semilogy([x for x, _ in pts], [max(y, 1e-320) for _, y in pts],
                    "o-", label=f"n = {n}")
    ax.legend()
    return _save(fig, path)
