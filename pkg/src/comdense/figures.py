"""Matplotlib renderings written next to the delimited reports.

Each CLI report path drops a PNG beside its JSON/TSV output: training
curves per seed after `train`, the per-category metric bars after `eval`,
and metric-versus-axis lines after `sweep`.  Everything renders through
the Agg backend, so no display is needed.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def plot_training_curves(log_records: list[dict], path: str | Path) -> None:
    """Loss and validation MRR over epochs, one line pair per seed."""
    by_seed: dict[object, list[dict]] = {}
    for rec in log_records:
        by_seed.setdefault(rec.get("seed", 0), []).append(rec)
    fig, (ax_loss, ax_mrr) = plt.subplots(1, 2, figsize=(9, 3.5))
    for seed, rows in sorted(by_seed.items(), key=lambda kv: str(kv[0])):
        epochs = [r["epoch"] for r in rows]
        ax_loss.plot(epochs, [r["mean_loss"] for r in rows], label=f"seed {seed}")
        ax_mrr.plot(epochs, [r["val_mrr"] for r in rows], label=f"seed {seed}")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("mean training loss")
    ax_mrr.set_xlabel("epoch")
    ax_mrr.set_ylabel("validation MRR")
    ax_mrr.set_ylim(0.0, 1.05)
    if by_seed:
        ax_loss.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_category_metrics(category_table: dict, path: str | Path) -> None:
    """Grouped bars: filtered MRR per relation category, split by direction."""
    directions = list(category_table)
    categories = list(next(iter(category_table.values()))) if directions else []
    fig, ax = plt.subplots(figsize=(7, 3.5))
    width = 0.8 / max(len(directions), 1)
    for i, direction in enumerate(directions):
        values = [category_table[direction][c]["mrr"] or 0.0 for c in categories]
        positions = [j + i * width for j in range(len(categories))]
        ax.bar(positions, values, width=width, label=f"{direction} prediction")
    ax.set_xticks([j + width * (len(directions) - 1) / 2 for j in range(len(categories))])
    ax.set_xticklabels(categories)
    ax.set_ylabel("filtered MRR")
    ax.set_xlabel("relation category")
    ax.set_ylim(0.0, 1.05)
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_sweep(axis_name: str, rows: list[dict], path: str | Path) -> None:
    """Test metrics as a function of the swept axis value."""
    labels = [str(r["value"]) for r in rows]
    x = range(len(rows))
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for metric in ("mrr", "hits1", "hits10"):
        ax.plot(x, [r[metric] for r in rows], marker="o", label=metric.upper())
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels)
    ax.set_xlabel(axis_name)
    ax.set_ylabel("metric")
    ax.set_ylim(0.0, 1.05)
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
