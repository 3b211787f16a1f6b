"""SVG figure emitters: open-water diagram, parity plots, histogram panels
and the MRE-versus-training-size lines.  Output is deterministic (no
timestamps, fixed hash salt) so repeated runs produce identical files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluation import AugmentationTable, StudyReport
from .geometry import DESIGN_FIELDS
from .hydro import LABEL_FIELDS, OpenWaterCurve

LABEL_TEX = {"eta_star": r"$\eta^*$", "j_star": r"$J^*$", "kt_star": r"$k_T^*$"}


def save_svg(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context({"svg.hashsalt": "propforge"}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def open_water_diagram(curve: OpenWaterCurve, labels=None):
    """kT, 10*kQ and efficiency against advance ratio, peak point marked."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    j, kt, kq = curve.grid, curve.kt, curve.kq
    ax.plot(j, kt, label="$k_T$", color="tab:blue")
    ax.plot(j, 10.0 * kq, label="$10\\,k_Q$", color="tab:green")
    ok = (kt > 0) & (kq > 0)
    eta = np.where(ok, j * kt / (2 * np.pi * np.where(ok, kq, 1.0)), np.nan)
    ax.plot(j, eta, label="$\\eta$", color="tab:red")
    if labels is not None:
        ax.plot([labels.j_star], [labels.eta_star], "o", color="tab:orange")
        ax.annotate(f"({labels.j_star:.3f}, {labels.eta_star:.3f})",
                    (labels.j_star, labels.eta_star),
                    textcoords="offset points", xytext=(6, 6), fontsize=8)
    ax.set_xlabel("advance ratio $J$")
    ax.set_ylim(bottom=0)
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    return fig


def parity_plots(report: StudyReport, title: str = ""):
    """Three target-versus-achieved panels, one per performance label."""
    fig, axes = plt.subplots(1, 3, figsize=(12, 4))
    for k, (ax, name) in enumerate(zip(axes, LABEL_FIELDS)):
        t = report.targets[:, k] if report.valid_count else np.array([])
        g = report.achieved[:, k] if report.valid_count else np.array([])
        ax.scatter(t, g, s=6, alpha=0.5, color="tab:blue")
        if len(t):
            lo, hi = min(t.min(), g.min()), max(t.max(), g.max())
            ax.plot([lo, hi], [lo, hi], "k--", linewidth=0.8)
        mre_val = report.mres.get(name, float("nan"))
        ax.set_title(f"{LABEL_TEX[name]}  MRE={mre_val:.4f}")
        ax.set_xlabel("target")
        ax.set_ylabel("achieved")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    return fig


def parameter_histograms(designs, bins=20):
    """Histogram panel for each of the six design variables."""
    matrix = np.array([d.to_array() for d in designs])
    fig, axes = plt.subplots(2, 3, figsize=(12, 6))
    for k, (ax, name) in enumerate(zip(axes.ravel(), DESIGN_FIELDS)):
        if name == "n_blades":
            values, counts = np.unique(matrix[:, 0].astype(int), return_counts=True)
            ax.bar(values, counts, width=0.6, color="tab:blue")
            ax.set_xticks([2, 3, 4, 5])
        else:
            ax.hist(matrix[:, k], bins=bins, color="tab:blue", alpha=0.8)
        ax.set_title(name)
    fig.tight_layout()
    return fig


def label_histograms(achieved, targets=None, bins=20):
    """Histogram panel of achieved labels with optional target markers."""
    achieved = np.asarray(achieved)
    fig, axes = plt.subplots(1, 3, figsize=(12, 4))
    for k, (ax, name) in enumerate(zip(axes, LABEL_FIELDS)):
        ax.hist(achieved[:, k], bins=bins, color="tab:blue", alpha=0.8)
        if targets is not None and targets.get(name) is not None:
            ax.axvline(targets[name], color="tab:red", linestyle="--")
        ax.set_title(LABEL_TEX[name])
    fig.tight_layout()
    return fig


def mre_vs_size(table: AugmentationTable):
    """Per-label MRE lines over the restricted dataset size."""
    fig, axes = plt.subplots(1, 3, figsize=(12, 4))
    d = table.restricted_sizes
    for k, (ax, name) in enumerate(zip(axes, LABEL_FIELDS)):
        ax.plot(d, table.base_mres[:, k], "o-", label="restricted")
        for a, n_aug in enumerate(table.aug_sizes):
            ax.plot(d, table.aug_mres[:, a, k], "s--", label=f"augmented {n_aug}")
        ax.set_title(LABEL_TEX[name])
        ax.set_xlabel("initial dataset size")
        ax.set_ylabel("MRE")
        ax.legend(fontsize=8)
    fig.tight_layout()
    return fig
