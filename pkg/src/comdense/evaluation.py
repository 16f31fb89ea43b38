"""Filtered-ranking evaluation: MRR, HIT@k, direction and category slices.

Every encoded triple (s, r, o) is scored as a tail query: the model ranks
all entities for (s, r) and the rank of o is recorded.  Because splits are
inverse-augmented, head prediction appears as tail prediction under the
inverse relation; records with a base relation id count as tail
prediction, the rest as head prediction.

Ties break pessimistically: candidates scoring equal to the target rank
ahead of it, so a constant model earns rank E rather than rank 1.  The
filtered rank drops all other known-true objects (train, valid and test)
from consideration first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, RelationCategory
from .model import ModelConfig, Parameters, forward_batch

DIRECTION_TAIL = "tail"
DIRECTION_HEAD = "head"


@dataclass
class RankRecord:
    subject: int
    relation: int
    object: int
    direction: str
    filtered_rank: int
    raw_rank: int


@dataclass
class RankingMetrics:
    mrr: float
    hits1: float
    hits3: float
    hits10: float
    count: int

    def as_dict(self) -> dict:
        return {
            "mrr": self.mrr,
            "hits1": self.hits1,
            "hits3": self.hits3,
            "hits10": self.hits10,
            "count": self.count,
        }


@dataclass
class EvalReport:
    overall: RankingMetrics
    by_direction: dict[str, RankingMetrics]
    records: list[RankRecord]


def rank_of(scores: np.ndarray, target: int, filter_out: set[int]) -> tuple[int, int]:
    """Pessimistic rank of the target score, raw and filtered.

    raw_rank = 1 + #{j != target : scores[j] >= scores[target]}; the
    filtered rank additionally drops filter_out \\ {target} from the
    candidate pool.  The target itself is always scored even if it
    appears in filter_out.
    """
    scores = np.asarray(scores)
    if not 0 <= target < scores.shape[0]:
        raise IndexError(f"target index {target} out of range [0, {scores.shape[0]})")
    target_score = scores[target]
    # >= combines the strictly-greater and tie counts of the pessimistic policy.
    beaten = scores >= target_score
    beaten[target] = False
    raw_rank = 1 + int(np.count_nonzero(beaten))
    if filter_out:
        drop = np.fromiter((j for j in filter_out if j != target), dtype=np.int64)
        if drop.size:
            beaten[drop] = False
    filtered_rank = 1 + int(np.count_nonzero(beaten))
    return filtered_rank, raw_rank


def metrics_from_ranks(ranks: np.ndarray) -> RankingMetrics:
    """MRR and HIT@{1,3,10} over an array of filtered ranks."""
    ranks = np.asarray(ranks, dtype=np.float64)
    if ranks.size == 0:
        return RankingMetrics(mrr=0.0, hits1=0.0, hits3=0.0, hits10=0.0, count=0)
    return RankingMetrics(
        mrr=float(np.mean(1.0 / ranks)),
        hits1=float(np.mean(ranks <= 1)),
        hits3=float(np.mean(ranks <= 3)),
        hits10=float(np.mean(ranks <= 10)),
        count=int(ranks.size),
    )


def evaluate(
    params: Parameters,
    config: ModelConfig,
    dataset: Dataset,
    split: str = "test",
    batch_size: int = 512,
) -> EvalReport:
    """Rank every triple of the (inverse-augmented) split.

    Scores are computed in inference mode, so the result is a pure
    function of the parameters.  Records come back in split order.
    """
    triples = dataset.split(split)
    base = dataset.vocab.num_base_relations
    records: list[RankRecord] = []
    for start in range(0, len(triples), batch_size):
        chunk = triples[start : start + batch_size]
        subjects = np.array([t.subject for t in chunk], dtype=np.int64)
        relations = np.array([t.relation for t in chunk], dtype=np.int64)
        scores, _ = forward_batch(params, config, subjects, relations, training=False)
        for row, t in enumerate(chunk):
            filtered, raw = rank_of(scores[row], t.object, dataset.filter_objects(t.subject, t.relation))
            records.append(
                RankRecord(
                    subject=t.subject,
                    relation=t.relation,
                    object=t.object,
                    direction=DIRECTION_TAIL if t.relation < base else DIRECTION_HEAD,
                    filtered_rank=filtered,
                    raw_rank=raw,
                )
            )
    overall = metrics_from_ranks(np.array([rec.filtered_rank for rec in records]))
    by_direction = {
        direction: metrics_from_ranks(
            np.array([rec.filtered_rank for rec in records if rec.direction == direction])
        )
        for direction in (DIRECTION_TAIL, DIRECTION_HEAD)
    }
    return EvalReport(overall=overall, by_direction=by_direction, records=records)


def category_report(
    records: list[RankRecord],
    categories: dict[int, RelationCategory],
    num_base_relations: int,
) -> dict[str, dict[str, dict]]:
    """Metrics per (direction x relation category): 8 cells.

    The category of a record comes from its base relation (inverse ids
    map back by subtracting the base count).  Cells with no records hold
    a zero count and null metrics.
    """
    table: dict[str, dict[str, dict]] = {}
    for direction in (DIRECTION_TAIL, DIRECTION_HEAD):
        table[direction] = {}
        for category in RelationCategory:
            ranks = [
                rec.filtered_rank
                for rec in records
                if rec.direction == direction
                and categories[rec.relation if rec.relation < num_base_relations else rec.relation - num_base_relations]
                is category
            ]
            if ranks:
                table[direction][category.value] = metrics_from_ranks(np.array(ranks)).as_dict()
            else:
                table[direction][category.value] = {
                    "mrr": None,
                    "hits1": None,
                    "hits3": None,
                    "hits10": None,
                    "count": 0,
                }
    return table


def report_to_dict(report: EvalReport, category_table: dict | None = None) -> dict:
    """JSON-ready report: overall, per-direction, optional per-category."""
    out = {
        "overall": report.overall.as_dict(),
        "by_direction": {direction: m.as_dict() for direction, m in report.by_direction.items()},
    }
    if category_table is not None:
        out["by_category"] = category_table
    return out


def records_to_tsv(records: list[RankRecord]) -> str:
    """Per-record table: subject, relation, object, direction, ranks."""
    lines = ["subject\trelation\tobject\tdirection\tfiltered_rank\traw_rank"]
    for rec in records:
        lines.append(
            f"{rec.subject}\t{rec.relation}\t{rec.object}\t{rec.direction}\t{rec.filtered_rank}\t{rec.raw_rank}"
        )
    return "\n".join(lines) + "\n"
