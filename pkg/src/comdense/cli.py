"""Command-line interface: prepare, train, eval, sweep, count-params.

Every run is driven by a single JSON config file (see config.py); the few
flags that exist override config keys.  Artifacts land under the output
directory: vocab.json, splits.bin, filter_map.bin, categories.json from
prepare; checkpoint-seed<K>.bin, log.jsonl, summary.json from train;
report.json (plus optional records.tsv) from eval; sweep.tsv from sweep.
Report-producing commands also render a PNG figure next to their
delimited output.  Exit codes: 0 success, 1 validation error (bad config,
bad input files), 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import data as kg
from .checkpoint import load_checkpoint, save_checkpoint
from .config import ConfigError, RunConfig
from .evaluation import category_report, evaluate, records_to_tsv, report_to_dict
from .model import VARIANT_COMBINED, VARIANTS, param_breakdown
from .training import fit

SPLITS_FORMAT_VERSION = 1
FILTER_MAP_FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# Prepared-artifact formats


def write_splits_bin(path: Path, dataset: kg.Dataset) -> None:
    """Encoded splits: JSON header line, then int32 little-endian (N, 3) rows."""
    header = {
        "format_version": SPLITS_FORMAT_VERSION,
        "counts": {name: len(dataset.split(name)) for name in ("train", "valid", "test")},
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        for name in ("train", "valid", "test"):
            arr = np.array(dataset.split(name), dtype="<i4").reshape(-1, 3)
            fh.write(arr.tobytes())


def read_splits_bin(path: Path) -> dict[str, list[kg.Triple]]:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        if header.get("format_version") != SPLITS_FORMAT_VERSION:
            raise ValueError(f"unsupported splits format version in {path}")
        splits: dict[str, list[kg.Triple]] = {}
        for name in ("train", "valid", "test"):
            count = header["counts"][name]
            arr = np.frombuffer(fh.read(count * 3 * 4), dtype="<i4").reshape(count, 3)
            splits[name] = [kg.Triple(int(s), int(r), int(o)) for s, r, o in arr]
    return splits


def write_filter_map_bin(path: Path, filter_map: dict[tuple[int, int], set[int]]) -> None:
    """Filter map: JSON header line, then per-key int32 runs (s, r, count, objects...)."""
    header = {"format_version": FILTER_MAP_FORMAT_VERSION, "num_keys": len(filter_map)}
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        for (s, r) in sorted(filter_map):
            objects = sorted(filter_map[(s, r)])
            run = np.array([s, r, len(objects), *objects], dtype="<i4")
            fh.write(run.tobytes())


def read_filter_map_bin(path: Path) -> dict[tuple[int, int], set[int]]:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        if header.get("format_version") != FILTER_MAP_FORMAT_VERSION:
            raise ValueError(f"unsupported filter map format version in {path}")
        data = np.frombuffer(fh.read(), dtype="<i4")
    fmap: dict[tuple[int, int], set[int]] = {}
    pos = 0
    for _ in range(header["num_keys"]):
        s, r, count = data[pos], data[pos + 1], data[pos + 2]
        fmap[(int(s), int(r))] = set(int(o) for o in data[pos + 3 : pos + 3 + count])
        pos += 3 + count
    return fmap


def load_prepared(data_dir: str | Path) -> kg.Dataset:
    """Load a prepared directory; fall back to raw triple files.

    A directory produced by `prepare` holds vocab.json and splits.bin
    (the filter map and categories rebuild cheaply from the splits).  A
    raw directory with train/valid/test.txt also works, so small
    experiments can skip the prepare step.
    """
    data_dir = Path(data_dir)
    vocab_path = data_dir / "vocab.json"
    splits_path = data_dir / "splits.bin"
    if vocab_path.exists() and splits_path.exists():
        vocab = kg.Vocabulary.from_json(vocab_path.read_text(encoding="utf-8"))
        splits = read_splits_bin(splits_path)
        fmap = kg.build_filter_map(splits["train"], splits["valid"], splits["test"])
        categories = kg.classify_relations(splits["train"], vocab)
        return kg.Dataset(
            vocab=vocab,
            train=splits["train"],
            valid=splits["valid"],
            test=splits["test"],
            filter_map=fmap,
            categories=categories,
        )
    return kg.load_dataset(data_dir)


# ---------------------------------------------------------------------------
# Commands


def cmd_prepare(args: argparse.Namespace) -> int:
    dataset = kg.load_dataset(args.data)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "vocab.json").write_text(dataset.vocab.to_json(), encoding="utf-8")
    write_splits_bin(out / "splits.bin", dataset)
    write_filter_map_bin(out / "filter_map.bin", dataset.filter_map)
    categories = {
        dataset.vocab.relations[r]: category.value for r, category in sorted(dataset.categories.items())
    }
    (out / "categories.json").write_text(json.dumps(categories, indent=2, sort_keys=True), encoding="utf-8")
    # Raw triple counts: encoded splits carry one inverse per triple.
    n_train = len(dataset.train) // 2
    n_valid = len(dataset.valid) // 2
    n_test = len(dataset.test) // 2
    print(
        f"{dataset.vocab.num_entities} entities, {dataset.vocab.num_base_relations} relations, "
        f"{n_train} train, {n_valid} valid, {n_test} test"
    )
    print(f"prepared artifacts written to {out}")
    return 0


def _resolved_config(args: argparse.Namespace, require_paths: bool = True) -> RunConfig:
    cfg = RunConfig.from_json_file(args.config)
    if getattr(args, "data", None):
        cfg.data_dir = args.data
    if getattr(args, "out", None):
        cfg.out_dir = args.out
    cfg.validate(require_paths=require_paths)
    return cfg


def _metric_stats(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    mean = float(arr.mean())
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return mean, std


def _run_seeds(cfg: RunConfig, dataset: kg.Dataset, out: Path) -> tuple[list[dict], list[dict]]:
    """Fit once per seed; returns (per-seed summaries, combined log records)."""
    per_seed: list[dict] = []
    log_records: list[dict] = []
    for seed in cfg.seeds:
        settings = replace(cfg.train, seed=seed)
        result = fit(dataset, cfg.model, settings, cfg.adam)
        name = f"checkpoint-seed{seed}.bin"
        save_checkpoint(out / name, cfg.model, result.params, result.adam_state)
        for rec in result.log:
            log_records.append({**rec, "seed": seed})
        per_seed.append(
            {
                "seed": seed,
                "best_epoch": result.best_epoch,
                "val_mrr": result.best_val.mrr,
                "val_hits1": result.best_val.hits1,
                "val_hits3": result.best_val.hits3,
                "val_hits10": result.best_val.hits10,
                "checkpoint": name,
            }
        )
        print(f"seed {seed}: best epoch {result.best_epoch}, validation MRR {result.best_val.mrr:.4f}")
    return per_seed, log_records


def cmd_train(args: argparse.Namespace) -> int:
    cfg = _resolved_config(args)
    dataset = load_prepared(cfg.data_dir)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    per_seed, log_records = _run_seeds(cfg, dataset, out)
    with open(out / "log.jsonl", "w", encoding="utf-8") as fh:
        for rec in log_records:
            fh.write(json.dumps(rec) + "\n")
    metrics = ("val_mrr", "val_hits1", "val_hits3", "val_hits10")
    stats = {name: _metric_stats([row[name] for row in per_seed]) for name in metrics}
    summary = {
        "config": cfg.to_dict(),
        "per_seed": per_seed,
        "mean": {name: stats[name][0] for name in metrics},
        "stddev": {name: stats[name][1] for name in metrics},
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True), encoding="utf-8")
    from . import figures

    figures.plot_training_curves(log_records, out / "training-curves.png")
    print(
        f"{len(per_seed)} run(s): mean validation MRR {summary['mean']['val_mrr']:.4f}"
        f" (stddev {summary['stddev']['val_mrr']:.4f})"
    )
    print(f"artifacts written to {out}")
    return 0


def _check_checkpoint_matches(params, dataset: kg.Dataset) -> None:
    if params.num_entities != dataset.num_entities or params.num_relations_stored != dataset.num_relations_stored:
        raise ConfigError(
            "checkpoint does not match the prepared data: "
            f"checkpoint has {params.num_entities} entities / {params.num_relations_stored} relations, "
            f"data has {dataset.num_entities} / {dataset.num_relations_stored}"
        )


def _print_category_table(table: dict) -> None:
    print(f"{'direction':<10} {'category':<8} {'count':>6} {'MRR':>7} {'HIT@1':>7} {'HIT@3':>7} {'HIT@10':>7}")
    for direction, row in table.items():
        for category, cell in row.items():
            if cell["count"] == 0:
                print(f"{direction:<10} {category:<8} {0:>6} {'':>7} {'':>7} {'':>7} {'':>7}")
                continue
            print(
                f"{direction:<10} {category:<8} {cell['count']:>6} "
                f"{cell['mrr']:>7.3f} {cell['hits1']:>7.3f} {cell['hits3']:>7.3f} {cell['hits10']:>7.3f}"
            )


def cmd_eval(args: argparse.Namespace) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    dataset = load_prepared(args.data)
    _check_checkpoint_matches(ckpt.params, dataset)
    report = evaluate(ckpt.params, ckpt.config, dataset, split=args.split, batch_size=args.batch_size)
    table = category_report(report.records, dataset.categories, dataset.vocab.num_base_relations)
    out = Path(args.out) if args.out else Path(args.checkpoint).parent
    out.mkdir(parents=True, exist_ok=True)
    report_dict = report_to_dict(report, table)
    (out / "report.json").write_text(json.dumps(report_dict, indent=2, sort_keys=True), encoding="utf-8")
    if args.records:
        (out / "records.tsv").write_text(records_to_tsv(report.records), encoding="utf-8")
    from . import figures

    figures.plot_category_metrics(table, out / "category-metrics.png")
    o = report.overall
    print(
        f"{args.split}: MRR {o.mrr:.4f}  HIT@1 {o.hits1:.4f}  HIT@3 {o.hits3:.4f}  "
        f"HIT@10 {o.hits10:.4f}  ({o.count} ranked queries)"
    )
    for direction, m in report.by_direction.items():
        print(f"  {direction} prediction: MRR {m.mrr:.4f}  HIT@1 {m.hits1:.4f}  HIT@10 {m.hits10:.4f}")
    _print_category_table(table)
    print(f"report written to {out / 'report.json'}")
    return 0


def format_delta(delta: float) -> str:
    """Signed three-decimal delta without a leading zero: (+.012), (-.003)."""
    sign = "+" if delta >= 0 else "-"
    mag = f"{abs(delta):.3f}"
    if mag.startswith("0."):
        mag = mag[1:]
    return f"({sign}{mag})"


def _sweep_config(cfg: RunConfig, axis: str, value: str) -> RunConfig:
    model = cfg.model
    if axis == "width":
        model = replace(model, width_n=int(value))
    elif axis == "depth":
        depth = int(value)
        changes = {"depth_common": depth}
        if model.variant == VARIANT_COMBINED:
            changes["depth_relation"] = depth
        model = replace(model, **changes)
    elif axis == "variant":
        if value not in VARIANTS:
            raise ConfigError(f"unknown variant {value!r}; expected one of {', '.join(VARIANTS)}")
        model = replace(model, variant=value)
    else:
        raise ConfigError(f"unknown sweep axis {axis!r}")
    clone = replace(cfg, model=model)
    clone.validate()
    return clone


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _resolved_config(args)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigError("--values must list at least one value")
    dataset = load_prepared(cfg.data_dir)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows: list[dict] = []
    for value in values:
        run_cfg = _sweep_config(cfg, args.axis, value)
        run_dir = out / f"sweep-{args.axis}-{value}"
        run_dir.mkdir(parents=True, exist_ok=True)
        per_seed, log_records = _run_seeds(run_cfg, dataset, run_dir)
        with open(run_dir / "log.jsonl", "w", encoding="utf-8") as fh:
            for rec in log_records:
                fh.write(json.dumps(rec) + "\n")
        # Test metrics per seed from the saved best checkpoints, then averaged.
        seed_metrics = []
        for row in per_seed:
            ckpt = load_checkpoint(run_dir / row["checkpoint"])
            report = evaluate(ckpt.params, ckpt.config, dataset, split="test")
            seed_metrics.append(report.overall)
        rows.append(
            {
                "value": value,
                "mrr": float(np.mean([m.mrr for m in seed_metrics])),
                "hits1": float(np.mean([m.hits1 for m in seed_metrics])),
                "hits3": float(np.mean([m.hits3 for m in seed_metrics])),
                "hits10": float(np.mean([m.hits10 for m in seed_metrics])),
            }
        )
    baseline = rows[0]
    header = ["axis", "value", "mrr", "hits1", "hits3", "hits10", "delta_mrr", "delta_hits1", "delta_hits10"]
    lines = ["\t".join(header)]
    for i, row in enumerate(rows):
        deltas = ["", "", ""]
        if i > 0:
            deltas = [
                format_delta(row["mrr"] - baseline["mrr"]),
                format_delta(row["hits1"] - baseline["hits1"]),
                format_delta(row["hits10"] - baseline["hits10"]),
            ]
        lines.append(
            "\t".join(
                [
                    args.axis,
                    row["value"],
                    f"{row['mrr']:.4f}",
                    f"{row['hits1']:.4f}",
                    f"{row['hits3']:.4f}",
                    f"{row['hits10']:.4f}",
                    *deltas,
                ]
            )
        )
    (out / "sweep.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    from . import figures

    figures.plot_sweep(args.axis, rows, out / "sweep.png")
    print(f"{'value':<28} {'MRR':>7} {'HIT@1':>7} {'HIT@10':>7}  vs baseline")
    for i, row in enumerate(rows):
        delta = "" if i == 0 else format_delta(row["mrr"] - baseline["mrr"])
        print(f"{row['value']:<28} {row['mrr']:>7.3f} {row['hits1']:>7.3f} {row['hits10']:>7.3f}  {delta}")
    print(f"sweep table written to {out / 'sweep.tsv'}")
    return 0


def cmd_count_params(args: argparse.Namespace) -> int:
    cfg = _resolved_config(args, require_paths=False)
    if args.entities is not None or args.relations is not None:
        if args.entities is None or args.relations is None:
            raise ConfigError("--entities and --relations must be given together")
        num_entities = args.entities
        num_relations_stored = 2 * args.relations
    else:
        if not cfg.data_dir:
            raise ConfigError("either set data_dir in the config or pass --entities/--relations")
        dataset = load_prepared(cfg.data_dir)
        num_entities = dataset.num_entities
        num_relations_stored = dataset.num_relations_stored
    breakdown = param_breakdown(cfg.model, num_entities, num_relations_stored)
    print(f"{num_entities} entities, {num_relations_stored} stored relations (inverses included)")
    for group in ("embeddings", "relation_aware", "common", "projection"):
        print(f"{group:<16}{breakdown[group]:>14,}")
    print(f"{'total':<16}{breakdown['total']:>14,}")
    return 0


# ---------------------------------------------------------------------------
# Parser


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # map usage errors to exit code 1
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="comdense", description="Knowledge-graph link prediction toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="encode raw triple files into reusable artifacts")
    p.add_argument("--data", required=True, help="directory with train.txt, valid.txt, test.txt")
    p.add_argument("--out", required=True, help="output directory for prepared artifacts")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("train", help="train one model per seed and summarize")
    p.add_argument("--config", required=True, help="JSON run config")
    p.add_argument("--data", help="override config data_dir")
    p.add_argument("--out", help="override config out_dir")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="rank a split with a trained checkpoint")
    p.add_argument("--checkpoint", required=True, help="checkpoint file from train")
    p.add_argument("--data", required=True, help="prepared data directory")
    p.add_argument("--split", default="test", choices=("train", "valid", "test"))
    p.add_argument("--out", help="report directory (default: checkpoint directory)")
    p.add_argument("--records", action="store_true", help="also write per-query records.tsv")
    p.add_argument("--batch-size", type=int, default=512, help="queries scored per forward pass")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="train and evaluate along one config axis")
    p.add_argument("--config", required=True, help="JSON run config (the baseline)")
    p.add_argument("--axis", required=True, choices=("width", "depth", "variant"))
    p.add_argument("--values", required=True, help="comma-separated axis values; first is the baseline")
    p.add_argument("--data", help="override config data_dir")
    p.add_argument("--out", help="override config out_dir")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("count-params", help="parameter totals per tensor group")
    p.add_argument("--config", required=True, help="JSON run config")
    p.add_argument("--entities", type=int, help="entity count (with --relations, skips loading data)")
    p.add_argument("--relations", type=int, help="base relation count before inverse augmentation")
    p.set_defaults(func=cmd_count_params)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit:
        raise
    except Exception as exc:  # runtime failure: distinct exit code for scripted sweeps
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
