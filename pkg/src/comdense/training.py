"""1:N training loop with validation-MRR early stopping.

Training triples are grouped into one example per distinct (subject,
relation) pair whose target is the multi-hot vector of all objects true
for that pair in the training split.  Each example's loss is mean binary
cross entropy over its E logits; the batch loss is the mean over
examples (equivalently, the mean over all B * E logits, since every row
has the same length), so the batch gradient is the mean of per-example
gradients and the learning rate is independent of batch size.  One
optimizer step runs per batch.

Determinism: the epoch shuffle and all dropout draws come from a
generator seeded by (seed, epoch), and gradient reductions happen in a
fixed order, so identical settings reproduce identical trajectories bit
for bit.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .adam import AdamHyper, AdamState, adam_step
from .data import Dataset, Triple
from .evaluation import RankingMetrics, evaluate
from .model import ModelConfig, Parameters, backward, forward_batch, init_parameters
from .numerics import bce_with_logits


@dataclass
class TrainExample:
    """One (subject, relation) query with all training-true objects."""

    subject: int
    relation: int
    targets: np.ndarray  # sorted object ids, at least one

    def __post_init__(self) -> None:
        self.targets = np.asarray(self.targets, dtype=np.int64)
        if self.targets.size == 0:
            raise ValueError("a training example needs at least one target object")


@dataclass
class TrainSettings:
    batch_size: int = 128
    epochs: int = 1000
    eval_every: int = 3
    patience: int = 10
    label_smoothing: float = 0.0
    seed: int = 0

    def validate(self) -> None:
        for name in ("batch_size", "epochs", "eval_every", "patience"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if not isinstance(self.label_smoothing, (int, float)) or not 0.0 <= float(self.label_smoothing) < 1.0:
            raise ValueError(f"label_smoothing must lie in [0, 1), got {self.label_smoothing!r}")
        if not isinstance(self.seed, int):
            raise ValueError(f"seed must be an integer, got {self.seed!r}")


def build_examples(train: list[Triple]) -> list[TrainExample]:
    """Group the encoded training split by (s, r), first-occurrence order."""
    grouped: dict[tuple[int, int], set[int]] = {}
    order: list[tuple[int, int]] = []
    for t in train:
        key = (t.subject, t.relation)
        if key not in grouped:
            grouped[key] = set()
            order.append(key)
        grouped[key].add(t.object)
    return [
        TrainExample(subject=s, relation=r, targets=np.array(sorted(grouped[(s, r)]), dtype=np.int64))
        for s, r in order
    ]


def _batch_targets(examples: list[TrainExample], num_entities: int, label_smoothing: float) -> np.ndarray:
    y = np.zeros((len(examples), num_entities))
    for i, ex in enumerate(examples):
        y[i, ex.targets] = 1.0
    if label_smoothing > 0.0:
        y = (1.0 - label_smoothing) * y + label_smoothing / num_entities
    return y


def batch_loss_and_grads(
    params: Parameters,
    config: ModelConfig,
    examples: list[TrainExample],
    label_smoothing: float,
    rng: np.random.Generator,
) -> tuple[float, Parameters]:
    """Mean per-example loss over the batch plus gradients of that mean.

    Per example the loss is binary cross entropy of its E logits against
    the (optionally smoothed) multi-hot target, so dlogits for a single
    example is (sigmoid(z) - y) / E; averaging across the batch scales
    by 1/B on top.
    """
    subjects = np.array([ex.subject for ex in examples], dtype=np.int64)
    relations = np.array([ex.relation for ex in examples], dtype=np.int64)
    scores, cache = forward_batch(params, config, subjects, relations, training=True, rng=rng)
    y = _batch_targets(examples, params.num_entities, label_smoothing)
    # Mean over all B*E logits = mean over examples of per-example means,
    # since every row has E logits; dlogits is likewise already the
    # gradient of the batch-mean loss.
    loss, dlogits = bce_with_logits(scores, y)
    grads = backward(params, config, cache, dlogits.astype(scores.dtype, copy=False))
    return loss, grads


def loss_for_example(
    params: Parameters,
    config: ModelConfig,
    ex: TrainExample,
    rng: np.random.Generator,
    label_smoothing: float = 0.0,
) -> tuple[float, Parameters]:
    """Loss and gradients for a single example (batch of one)."""
    return batch_loss_and_grads(params, config, [ex], label_smoothing, rng)


def train_epoch(
    params: Parameters,
    config: ModelConfig,
    state: AdamState,
    hyper: AdamHyper,
    examples: list[TrainExample],
    settings: TrainSettings,
    rng: np.random.Generator,
) -> float:
    """One shuffled pass: one adam_step per batch, returns mean example loss."""
    order = rng.permutation(len(examples))
    total = 0.0
    for start in range(0, len(examples), settings.batch_size):
        batch = [examples[i] for i in order[start : start + settings.batch_size]]
        loss, grads = batch_loss_and_grads(params, config, batch, settings.label_smoothing, rng)
        if not np.isfinite(loss):
            raise RuntimeError(
                f"non-finite loss {loss!r} in batch starting at example {start} (step {state.t + 1})"
            )
        adam_step(params, grads, state, hyper)
        total += loss * len(batch)
    return total / len(examples)


@dataclass
class FitResult:
    """Best-validation-MRR parameters plus the training log.

    ``log`` holds one record per completed evaluation: epoch, mean
    training loss, validation MRR / HIT@1 / HIT@10, and wall-clock
    seconds since fit started.
    """

    params: Parameters
    adam_state: AdamState
    best_epoch: int
    best_val: RankingMetrics
    log: list[dict] = field(default_factory=list)


def fit(
    dataset: Dataset,
    config: ModelConfig,
    settings: TrainSettings,
    hyper: AdamHyper | None = None,
    eval_batch_size: int = 512,
) -> FitResult:
    """Train with periodic filtered-MRR validation and patience stopping.

    Every ``eval_every`` epochs the filtered validation MRR is computed;
    the best parameters (and optimizer state) seen are kept.  Training
    stops at the epoch cap or after ``patience`` consecutive evaluations
    without MRR improvement.  Initialisation draws from a generator
    seeded with the settings seed; epoch e draws from one seeded with
    (seed, e).
    """
    config.validate()
    settings.validate()
    hyper = hyper or AdamHyper()
    hyper.validate()
    started = time.monotonic()
    init_rng = np.random.default_rng(settings.seed)
    params = init_parameters(config, dataset.vocab, init_rng)
    state = AdamState(params)
    examples = build_examples(dataset.train)
    if not examples:
        raise ValueError("training split is empty")

    log: list[dict] = []
    best_params = params.copy()
    best_state = _copy_state(state)
    best_epoch = 0
    best_val: RankingMetrics | None = None
    stale = 0
    for epoch in range(1, settings.epochs + 1):
        epoch_rng = np.random.default_rng([settings.seed, epoch])
        mean_loss = train_epoch(params, config, state, hyper, examples, settings, epoch_rng)
        if epoch % settings.eval_every != 0 and epoch != settings.epochs:
            continue
        report = evaluate(params, config, dataset, split="valid", batch_size=eval_batch_size)
        log.append(
            {
                "epoch": epoch,
                "mean_loss": float(mean_loss),
                "val_mrr": report.overall.mrr,
                "val_hits1": report.overall.hits1,
                "val_hits10": report.overall.hits10,
                "elapsed_s": time.monotonic() - started,
            }
        )
        if best_val is None or report.overall.mrr > best_val.mrr:
            best_val = report.overall
            best_params = params.copy()
            best_state = _copy_state(state)
            best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= settings.patience:
                break
    assert best_val is not None
    return FitResult(params=best_params, adam_state=best_state, best_epoch=best_epoch, best_val=best_val, log=log)


def _copy_state(state: AdamState) -> AdamState:
    clone = AdamState.__new__(AdamState)
    clone.t = state.t
    clone.m = {name: arr.copy() for name, arr in state.m.items()}
    clone.v = {name: arr.copy() for name, arr in state.v.items()}
    return clone
