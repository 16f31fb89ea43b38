"""Smoke coverage for the report figures: each renderer writes a real PNG."""

from comdense.figures import plot_category_metrics, plot_sweep, plot_training_curves

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def _is_png(path) -> bool:
    return path.read_bytes()[:8] == PNG_MAGIC


def test_training_curves(tmp_path):
    records = [
        {"seed": 0, "epoch": 1, "mean_loss": 0.7, "val_mrr": 0.1, "val_hits1": 0.0, "val_hits10": 0.2, "elapsed_s": 1.0},
        {"seed": 0, "epoch": 2, "mean_loss": 0.5, "val_mrr": 0.3, "val_hits1": 0.1, "val_hits10": 0.4, "elapsed_s": 2.0},
        {"seed": 1, "epoch": 1, "mean_loss": 0.8, "val_mrr": 0.2, "val_hits1": 0.0, "val_hits10": 0.3, "elapsed_s": 1.0},
    ]
    path = tmp_path / "curves.png"
    plot_training_curves(records, path)
    assert _is_png(path)


def test_category_metrics(tmp_path):
    cell = {"mrr": 0.5, "hits1": 0.4, "hits3": 0.5, "hits10": 0.7, "count": 10}
    empty = {"mrr": None, "hits1": None, "hits3": None, "hits10": None, "count": 0}
    table = {
        "tail": {"1:1": cell, "1:N": cell, "N:1": empty, "N:N": cell},
        "head": {"1:1": cell, "1:N": empty, "N:1": cell, "N:N": cell},
    }
    path = tmp_path / "categories.png"
    plot_category_metrics(table, path)
    assert _is_png(path)


def test_sweep(tmp_path):
    rows = [
        {"value": "1", "mrr": 0.30, "hits1": 0.20, "hits3": 0.33, "hits10": 0.45},
        {"value": "2", "mrr": 0.32, "hits1": 0.22, "hits3": 0.35, "hits10": 0.47},
    ]
    path = tmp_path / "sweep.png"
    plot_sweep("width", rows, path)
    assert _is_png(path)
