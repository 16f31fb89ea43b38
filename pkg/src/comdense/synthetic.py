"""Deterministic toy knowledge graph for tests and demos.

30 entities and four relations, one per cardinality category:

* ``r_one_one``: a perfect matching over consecutive entity pairs (15 triples).
* ``r_one_many``: 5 heads fanning out to 30 distinct tails (6 each).
* ``r_many_one``: 30 heads funnelling into 5 tails.
* ``r_many_many``: 10 heads x 10 tails with 4-5 tails per head (45 triples).

120 triples total.  The split is built for memorization: every triple is
in the training file, and the valid/test files each sample 6 of them (a
roughly 90/5/5 weighting), so a model that fits the training set can
reach MRR 1.0 on evaluation.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .data import Dataset, RawTriple, load_dataset

NUM_ENTITIES = 30


def _entity(i: int) -> str:
    return f"e{i:02d}"


def toy_raw_triples() -> list[RawTriple]:
    """The fixed 120-triple toy graph (no randomness)."""
    triples: list[RawTriple] = []
    for i in range(0, NUM_ENTITIES, 2):
        triples.append(RawTriple(_entity(i), "r_one_one", _entity(i + 1)))
    for head in range(5):
        for k in range(6):
            triples.append(RawTriple(_entity(head), "r_one_many", _entity(head * 6 + k)))
    for head in range(NUM_ENTITIES):
        triples.append(RawTriple(_entity(head), "r_many_one", _entity(head % 5)))
    for head in range(10):
        for k in range(4):
            triples.append(RawTriple(_entity(head), "r_many_many", _entity(10 + (head * 3 + k) % 10)))
    for head in range(5):
        triples.append(RawTriple(_entity(head), "r_many_many", _entity(10 + (head * 3 + 7) % 10)))
    return triples


def write_toy_dataset(data_dir: str | Path, seed: int = 0) -> dict[str, int]:
    """Write train/valid/test files for the toy graph; returns raw counts."""
    data_dir = Path(data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    triples = toy_raw_triples()
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(triples), size=12, replace=False)
    valid = [triples[i] for i in picks[:6]]
    test = [triples[i] for i in picks[6:]]
    for name, rows in (("train.txt", triples), ("valid.txt", valid), ("test.txt", test)):
        with open(data_dir / name, "w", encoding="utf-8") as fh:
            for t in rows:
                fh.write(f"{t.subject}\t{t.relation}\t{t.object}\n")
    return {"train": len(triples), "valid": len(valid), "test": len(test)}


def toy_dataset(seed: int = 0, tmp_dir: str | Path | None = None) -> Dataset:
    """Build the toy dataset in memory (via a scratch directory)."""
    import tempfile

    if tmp_dir is not None:
        write_toy_dataset(tmp_dir, seed=seed)
        return load_dataset(tmp_dir)
    with tempfile.TemporaryDirectory() as tmp:
        write_toy_dataset(tmp, seed=seed)
        return load_dataset(tmp)
