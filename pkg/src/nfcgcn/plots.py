"""Matplotlib figure rendering for run and sweep reports.

Figures are written next to the delimited outputs so every results
directory is self-contained. The Agg backend keeps this headless-safe.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def save_curve_figure(curves, path, title: str = "training curves"):
    """Two-panel loss/accuracy figure from a list of EpochRecord."""
    epochs = [r.epoch for r in curves]
    fig, (ax_loss, ax_acc) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax_loss.plot(epochs, [r.train_loss for r in curves], label="train")
    ax_loss.plot(epochs, [r.val_loss for r in curves], label="val")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("cross-entropy")
    ax_loss.legend()
    ax_acc.plot(epochs, [r.train_acc for r in curves], label="train")
    ax_acc.plot(epochs, [r.val_acc for r in curves], label="val")
    ax_acc.set_xlabel("epoch")
    ax_acc.set_ylabel("accuracy")
    ax_acc.set_ylim(0.0, 1.0)
    ax_acc.legend()
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_sweep_figure(x_values, means, stds, xlabel, path,
                      ylabel: str = "test accuracy", title: str = ""):
    """Mean +/- std accuracy across one swept variable."""
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.errorbar(x_values, means, yerr=stds, marker="o", capsize=3)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_xticks(list(x_values))
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_series_figure(x_values, series: dict, xlabel, path,
                       ylabel: str = "test accuracy", title: str = ""):
    """Several labeled mean-accuracy series over a shared x axis."""
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for label, ys in series.items():
        ax.plot(x_values, ys, marker="o", label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_xticks(list(x_values))
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_bar_figure(labels, values, path, ylabel: str = "test accuracy",
                    title: str = ""):
    """Per-variant accuracy bars (ablation-style reports)."""
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.bar(range(len(labels)), values)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=15, ha="right")
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
