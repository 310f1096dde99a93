"""Figure rendering for evaluation reports and sweeps. Uses the Agg backend
so report generation works headless; every figure lands next to its CSV."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .train_eval import EvalReport, SweepPoint, TrainHistory


def plot_confusion(report: EvalReport, path) -> Path:
    """Heatmap of the confusion matrix with per-cell counts."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    C = len(report.class_list)
    glyphs = [c.display_glyph for c in report.class_list]
    fig, ax = plt.subplots(figsize=(max(4.0, 0.6 * C + 2), max(3.5, 0.6 * C + 1.5)))
    im = ax.imshow(report.confusion, cmap="Blues")
    ax.set_xticks(range(C), labels=glyphs)
    ax.set_yticks(range(C), labels=glyphs)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    ax.set_title(f"accuracy {report.accuracy:.3f} (n={report.n_test})")
    vmax = report.confusion.max() if report.confusion.size else 1
    for i in range(C):
        for j in range(C):
            v = int(report.confusion[i, j])
            if v:
                color = "white" if v > 0.6 * vmax else "black"
                ax.text(j, i, str(v), ha="center", va="center", color=color, fontsize=8)
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_sweep(points: list[SweepPoint], path, xlabel: str = "x") -> Path:
    """Mean accuracy with a std band over the sweep variable."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    xs = [p.x for p in points]
    means = np.array([p.mean_accuracy for p in points])
    stds = np.array([p.std_accuracy for p in points])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(xs, means, yerr=stds, marker="o", capsize=3)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("accuracy")
    ax.set_ylim(0.0, 1.05)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_history(history: TrainHistory, path) -> Path:
    """Loss and accuracy curves for one training run."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    epochs = range(1, history.epochs + 1)
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    ax1.plot(epochs, history.losses)
    ax1.set_ylabel("training loss")
    ax1.grid(True, alpha=0.3)
    ax2.plot(epochs, history.train_accuracies, label="train")
    ax2.plot(epochs, history.val_accuracies, label="validation")
    ax2.axvline(history.best_epoch + 1, linestyle="--", alpha=0.5)
    ax2.set_xlabel("epoch")
    ax2.set_ylabel("accuracy")
    ax2.set_ylim(0.0, 1.05)
    ax2.legend()
    ax2.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
