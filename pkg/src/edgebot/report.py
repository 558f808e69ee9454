"""Figure rendering for the CLI report path.

The analysis modules emit plot data (CSV/JSON); this module turns that
data into PNG files written next to the delimited output. Matplotlib runs
on the Agg backend so everything works headless.
"""

from __future__ import annotations

from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .evaluate import ConfusionMatrix, EvalReport  # noqa: E402
from .features import CorrelationMatrix, ImportanceReport  # noqa: E402

plt.rcParams.update({
    "figure.dpi": 120,
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.grid": False,
})


def save_correlation_heatmap(corr: CorrelationMatrix, path) -> None:
    p = len(corr.feature_names)
    side = max(5.0, 0.38 * p)
    fig, ax = plt.subplots(figsize=(side, side * 0.9))
    matrix = np.ma.masked_invalid(corr.matrix)
    im = ax.imshow(matrix, vmin=-1.0, vmax=1.0, cmap="coolwarm")
    ax.set_xticks(range(p))
    ax.set_xticklabels(corr.feature_names, rotation=90)
    ax.set_yticks(range(p))
    ax.set_yticklabels(corr.feature_names)
    ax.set_title("Spearman rank correlation")
    fig.colorbar(im, ax=ax, fraction=0.046)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_importance_bars(report: ImportanceReport, path,
                         mode: Optional[str] = None) -> None:
    mode = mode or report.mode
    scores = getattr(report, mode)
    order = np.argsort(scores, kind="stable")
    names = [report.feature_names[i] for i in order]
    vals = scores[order]
    fig, ax = plt.subplots(figsize=(7, max(3.0, 0.28 * len(names))))
    ax.barh(range(len(names)), vals, color="#3b6ea5")
    ax.set_yticks(range(len(names)))
    ax.set_yticklabels(names)
    ax.set_xlabel(f"importance ({mode})")
    ax.set_title("Feature importance")
    for i, v in enumerate(vals):
        ax.text(v, i, f" {v:g}", va="center", fontsize=7)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_confusion_matrix(cm: ConfusionMatrix, path, title: str = "") -> None:
    grid = np.array([[cm.tn, cm.fp], [cm.fn, cm.tp]], dtype=float)
    fig, ax = plt.subplots(figsize=(4.2, 3.6))
    ax.imshow(grid, cmap="Blues")
    for i in range(2):
        for j in range(2):
            ax.text(j, i, f"{int(grid[i, j])}", ha="center", va="center",
                    color="black", fontsize=11)
    ax.set_xticks([0, 1])
    ax.set_xticklabels(["Benign", "Attack"])
    ax.set_yticks([0, 1])
    ax.set_yticklabels(["Benign", "Attack"])
    ax.set_xlabel("predicted")
    ax.set_ylabel("actual")
    ax.set_title(title or "Confusion matrix")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_model_comparison(reports: Sequence[EvalReport], path) -> None:
    """Grouped accuracy / detection-probability bars across models."""
    labels = [r.model + (" (noisy)" if r.noise else "") for r in reports]
    acc = [100.0 * (r.metrics.get("accuracy") or 0.0) for r in reports]
    det = [100.0 * (r.detection_probability or 0.0) for r in reports]
    x = np.arange(len(labels))
    width = 0.38
    fig, ax = plt.subplots(figsize=(max(4.5, 1.3 * len(labels)), 3.8))
    ax.bar(x - width / 2, acc, width, label="test accuracy %", color="#3b6ea5")
    ax.bar(x + width / 2, det, width, label="detection probability %", color="#b5533c")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=20)
    lo = min(acc + det + [95.0])
    ax.set_ylim(max(0.0, lo - 2.0), 100.5)
    ax.legend(loc="lower right")
    ax.set_title("Model comparison")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_noise_curve(sigmas: Sequence[float], accuracies: dict, path) -> None:
    """Accuracy vs noise level, one line per model kind."""
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    for kind, values in accuracies.items():
        ax.plot(sigmas, [100.0 * v for v in values], marker="o", label=kind)
    ax.set_xlabel("noise sigma (fraction of train std)")
    ax.set_ylabel("test accuracy %")
    ax.set_title("Robustness to Gaussian corruption")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
