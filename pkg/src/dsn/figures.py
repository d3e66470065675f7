"""Matplotlib rendering of the CLI's delimited outputs.

Every function takes already-computed rows/reports and a destination
path, renders with the Agg backend, and returns the path.  Figures are
a convenience layer over the CSV/JSON artifacts: the delimited files
remain the canonical, byte-stable outputs.
"""

from __future__ import annotations

import math
from typing import Dict, List, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

_PSI_COLORS = ["#1f77b4", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2"]


def _psi_color(psi_values: Sequence[float], psi: float) -> str:
    ordered = sorted(set(psi_values))
    return _PSI_COLORS[ordered.index(psi) % len(_PSI_COLORS)]


def render_fig2(rows: List[Dict], path: str) -> str:
    """Tuning sweep: replica curves per coupling, simulated points, baseline."""
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    coupled = [r for r in rows if r["series"] == "coupled"]
    psis = [r["psi"] for r in coupled]
    for psi in sorted(set(r["psi"] for r in coupled if r["kind"] == "replica")):
        pts = [r for r in coupled if r["kind"] == "replica" and r["psi"] == psi]
        pts.sort(key=lambda r: r["lam"])
        ax.plot(
            [r["lam"] for r in pts],
            [r["mse_db"] for r in pts],
            color=_psi_color(psis, psi),
            label=f"prediction, coupling {psi:g}",
        )
    for psi in sorted(set(r["psi"] for r in coupled if r["kind"] == "simulated")):
        pts = [r for r in coupled if r["kind"] == "simulated" and r["psi"] == psi]
        pts.sort(key=lambda r: r["lam"])
        err = [
            10.0 / math.log(10.0) * r["stderr"] / r["mse"] if r["mse"] > 0 else 0.0
            for r in pts
        ]
        ax.errorbar(
            [r["lam"] for r in pts],
            [r["mse_db"] for r in pts],
            yerr=err,
            fmt="o",
            mfc="none",
            color=_psi_color(psis, psi),
            label=f"simulation, coupling {psi:g}",
        )
    baseline = [r for r in rows if r["series"] == "l21" and r["kind"] == "simulated"]
    if baseline:
        baseline.sort(key=lambda r: r["lam"])
        err = [
            10.0 / math.log(10.0) * r["stderr"] / r["mse"] if r["mse"] > 0 else 0.0
            for r in baseline
        ]
        ax.errorbar(
            [r["lam"] for r in baseline],
            [r["mse_db"] for r in baseline],
            yerr=err,
            fmt="s--",
            mfc="none",
            color="#7f7f7f",
            label="simulation, euclidean-norm baseline",
        )
    ax.set_xlabel("tuning factor")
    ax.set_ylabel("average MSE [dB]")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_fig3(rows: List[Dict], path: str) -> str:
    """Feasible-region boundaries: smallest second ratio achieving the target."""
    fig, ax = plt.subplots(figsize=(5.6, 5.2))
    psis = sorted(set(r["psi"] for r in rows))
    for psi in psis:
        pts = [r for r in rows if r["psi"] == psi and r["status"] == "ok"]
        pts.sort(key=lambda r: r["rho1"])
        ax.plot(
            [r["rho1"] for r in pts],
            [r["rho2"] for r in pts],
            marker="o",
            color=_psi_color(psis, psi),
            label=f"coupling {psi:g}",
        )
    ax.set_xlabel("compression ratio, terminal 1")
    ax.set_ylabel("smallest feasible ratio, terminal 2")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_trials(distortions_db: Sequence[float], mean_db: float, path: str) -> str:
    """Histogram of per-trial distortion with the aggregate marked."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    finite = [d for d in distortions_db if math.isfinite(d)]
    if finite:
        ax.hist(finite, bins=min(40, max(5, len(finite) // 5)), color="#1f77b4", alpha=0.8)
    if math.isfinite(mean_db):
        ax.axvline(mean_db, color="#d62728", linestyle="--", label=f"mean {mean_db:.2f} dB")
        ax.legend(fontsize=8)
    ax.set_xlabel("per-trial distortion [dB]")
    ax.set_ylabel("count")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_convergence(residual_trace: Sequence[float], path: str) -> str:
    """Fixed-point residual versus iteration on a log scale."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    trace = [max(r, 1e-300) for r in residual_trace]
    ax.semilogy(range(1, len(trace) + 1), trace, marker=".", color="#1f77b4")
    ax.set_xlabel("iteration")
    ax.set_ylabel("max relative update")
    ax.grid(True, alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
