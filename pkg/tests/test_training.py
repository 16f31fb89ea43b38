import numpy as np
import pytest

from comdense.adam import AdamHyper, AdamState
from comdense.data import Dataset, Triple
from comdense.evaluation import evaluate
from comdense.model import ModelConfig
from comdense.numerics import finite_diff_check
from comdense.training import (
    TrainExample,
    TrainSettings,
    batch_loss_and_grads,
    build_examples,
    fit,
    loss_for_example,
    train_epoch,
)
from conftest import randomized_params, tiny_config, zero_params

SIZES = (6, 4)
LN2 = float(np.log(2.0))


def _examples():
    return [
        TrainExample(subject=0, relation=1, targets=[2, 4]),
        TrainExample(subject=3, relation=0, targets=[5]),
        TrainExample(subject=1, relation=3, targets=[0, 1, 2]),
    ]


def _toy_fit_config(**overrides):
    base = dict(d_e=8, d_r=8, d_h=8, d_z=8, width_n=1, input_dropout=0.0, hidden_dropout=0.0)
    base.update(overrides)
    return ModelConfig(**base)


class TestTrainExample:
    def test_empty_targets_rejected(self):
        with pytest.raises(ValueError, match="target"):
            TrainExample(subject=0, relation=0, targets=[])

    def test_targets_coerced_to_int64(self):
        ex = TrainExample(subject=0, relation=0, targets=[3, 1])
        assert ex.targets.dtype == np.int64


class TestTrainSettings:
    @pytest.mark.parametrize(
        "field,value",
        [
            ("batch_size", 0),
            ("epochs", -1),
            ("eval_every", 0),
            ("patience", 0),
            ("label_smoothing", 1.0),
            ("label_smoothing", -0.2),
            ("seed", "zero"),
        ],
    )
    def test_bad_values_name_the_field(self, field, value):
        settings = TrainSettings(**{field: value})
        with pytest.raises(ValueError, match=field):
            settings.validate()

    def test_defaults_valid(self):
        TrainSettings().validate()


class TestBuildExamples:
    def test_groups_by_subject_relation(self):
        train = [
            Triple(0, 0, 1),
            Triple(0, 0, 2),
            Triple(1, 0, 3),
            Triple(0, 0, 1),  # duplicate triple collapses
        ]
        examples = build_examples(train)
        assert [(ex.subject, ex.relation) for ex in examples] == [(0, 0), (1, 0)]
        np.testing.assert_array_equal(examples[0].targets, [1, 2])
        np.testing.assert_array_equal(examples[1].targets, [3])

    def test_targets_sorted(self):
        examples = build_examples([Triple(0, 0, 5), Triple(0, 0, 1), Triple(0, 0, 3)])
        np.testing.assert_array_equal(examples[0].targets, [1, 3, 5])

    def test_first_occurrence_order(self):
        train = [Triple(2, 1, 0), Triple(0, 0, 1), Triple(2, 1, 4)]
        examples = build_examples(train)
        assert [(ex.subject, ex.relation) for ex in examples] == [(2, 1), (0, 0)]

    def test_covers_every_toy_triple(self, toy):
        examples = build_examples(toy.train)
        by_key = {(ex.subject, ex.relation): set(ex.targets.tolist()) for ex in examples}
        assert len(by_key) == len(examples)  # keys unique
        for t in toy.train:
            assert t.object in by_key[(t.subject, t.relation)]
        assert sum(len(v) for v in by_key.values()) == len(set(toy.train))


class TestBatchLossAndGrads:
    def test_zero_parameters_give_ln2(self):
        """All-zero logits make binary cross entropy exactly ln 2 per logit,
        whatever the targets, smoothed or not."""
        cfg = tiny_config()
        params = zero_params(cfg, SIZES)
        for ls in (0.0, 0.1):
            loss, _ = batch_loss_and_grads(params, cfg, _examples(), ls, np.random.default_rng(0))
            assert loss == pytest.approx(LN2, abs=1e-12)

    def test_batch_mean_equals_mean_of_singles(self):
        cfg = tiny_config()
        params = randomized_params(cfg, SIZES, np.random.default_rng(1))
        examples = _examples()
        batch_loss, _ = batch_loss_and_grads(params, cfg, examples, 0.0, np.random.default_rng(0))
        singles = [loss_for_example(params, cfg, ex, np.random.default_rng(0))[0] for ex in examples]
        assert batch_loss == pytest.approx(float(np.mean(singles)), abs=1e-12)

    def test_batch_grads_are_mean_of_single_grads(self):
        cfg = tiny_config()
        params = randomized_params(cfg, SIZES, np.random.default_rng(2))
        examples = _examples()
        _, batch_grads = batch_loss_and_grads(params, cfg, examples, 0.0, np.random.default_rng(0))
        batch_map = dict(batch_grads.named_tensors())
        mean_map = {name: np.zeros_like(arr) for name, arr in batch_map.items()}
        for ex in examples:
            _, g = loss_for_example(params, cfg, ex, np.random.default_rng(0))
            for name, arr in g.named_tensors():
                mean_map[name] += arr / len(examples)
        for name in batch_map:
            np.testing.assert_allclose(batch_map[name], mean_map[name], atol=1e-12, err_msg=name)

    def test_gradients_pass_finite_differences(self):
        cfg = tiny_config()
        params = randomized_params(cfg, SIZES, np.random.default_rng(3))
        examples = _examples()
        _, grads = batch_loss_and_grads(params, cfg, examples, 0.1, np.random.default_rng(0))
        grad_map = dict(grads.named_tensors())

        def loss_at(x, arr):
            saved = arr.copy()
            arr[...] = x
            loss, _ = batch_loss_and_grads(params, cfg, examples, 0.1, np.random.default_rng(0))
            arr[...] = saved
            return loss

        for name, arr in params.named_tensors():
            err = finite_diff_check(lambda x, arr=arr: loss_at(x, arr), arr, grad_map[name])
            assert err <= 1e-4, f"{name}: {err:.2e}"

    def test_label_smoothing_changes_the_loss(self):
        cfg = tiny_config()
        params = randomized_params(cfg, SIZES, np.random.default_rng(4))
        plain, _ = batch_loss_and_grads(params, cfg, _examples(), 0.0, np.random.default_rng(0))
        smoothed, _ = batch_loss_and_grads(params, cfg, _examples(), 0.2, np.random.default_rng(0))
        assert plain != smoothed


class TestTrainEpoch:
    def test_frozen_lr_returns_loss_without_moving(self):
        cfg = tiny_config()
        params = randomized_params(cfg, SIZES, np.random.default_rng(5))
        snapshot = params.copy()
        state = AdamState(params)
        settings = TrainSettings(batch_size=2)
        loss = train_epoch(params, cfg, state, AdamHyper(learning_rate=0.0), _examples(), settings, np.random.default_rng(0))
        assert np.isfinite(loss)
        assert state.t == 2  # ceil(3 / 2) batches
        for (name, a), (_, b) in zip(params.named_tensors(), snapshot.named_tensors()):
            np.testing.assert_array_equal(a, b, err_msg=name)

    def test_mean_loss_is_example_weighted(self):
        """With params frozen, the epoch loss equals the full-batch loss no
        matter how the batches split, because every example has E logits."""
        cfg = tiny_config()
        params = randomized_params(cfg, SIZES, np.random.default_rng(6))
        examples = _examples()
        full, _ = batch_loss_and_grads(params, cfg, examples, 0.0, np.random.default_rng(0))
        for batch_size in (1, 2, 3):
            state = AdamState(params)
            loss = train_epoch(
                params,
                cfg,
                state,
                AdamHyper(learning_rate=0.0),
                examples,
                TrainSettings(batch_size=batch_size),
                np.random.default_rng(0),
            )
            assert loss == pytest.approx(full, abs=1e-12)

    def test_non_finite_loss_raises(self):
        cfg = tiny_config()
        params = randomized_params(cfg, SIZES, np.random.default_rng(7))
        params.entity_emb[0, 0] = np.nan
        state = AdamState(params)
        with pytest.raises(RuntimeError, match="non-finite"):
            train_epoch(
                params, cfg, state, AdamHyper(), _examples(), TrainSettings(batch_size=3), np.random.default_rng(0)
            )

    def test_identical_rng_gives_identical_updates(self):
        results = []
        for _ in range(2):
            cfg = tiny_config()
            params = randomized_params(cfg, SIZES, np.random.default_rng(8))
            state = AdamState(params)
            train_epoch(
                params,
                cfg,
                state,
                AdamHyper(learning_rate=0.01),
                _examples(),
                TrainSettings(batch_size=2),
                np.random.default_rng(42),
            )
            results.append(params.copy())
        for (name, a), (_, b) in zip(results[0].named_tensors(), results[1].named_tensors()):
            np.testing.assert_array_equal(a, b, err_msg=name)


class TestFit:
    def test_log_schema_and_cadence(self, toy):
        settings = TrainSettings(epochs=4, eval_every=2, patience=10, seed=0)
        result = fit(toy, _toy_fit_config(), settings, AdamHyper(learning_rate=1e-3))
        assert [rec["epoch"] for rec in result.log] == [2, 4]
        for rec in result.log:
            assert set(rec) == {"epoch", "mean_loss", "val_mrr", "val_hits1", "val_hits10", "elapsed_s"}
        elapsed = [rec["elapsed_s"] for rec in result.log]
        assert elapsed == sorted(elapsed)

    def test_final_epoch_always_evaluated(self, toy):
        settings = TrainSettings(epochs=3, eval_every=2, patience=10, seed=0)
        result = fit(toy, _toy_fit_config(), settings, AdamHyper(learning_rate=1e-3))
        assert [rec["epoch"] for rec in result.log] == [2, 3]

    def test_frozen_model_stops_after_patience_plus_one_evaluations(self, toy):
        """With lr=0 the metric never improves after the first evaluation,
        so patience p halts training after exactly p+1 evaluations."""
        for patience in (1, 2):
            settings = TrainSettings(epochs=50, eval_every=1, patience=patience, seed=0)
            result = fit(toy, _toy_fit_config(), settings, AdamHyper(learning_rate=0.0))
            assert len(result.log) == patience + 1
            assert result.best_epoch == 1

    def test_best_params_reproduce_best_val(self, toy):
        """Re-evaluating the returned parameters gives back best_val exactly."""
        cfg = _toy_fit_config()
        settings = TrainSettings(epochs=6, eval_every=2, patience=10, seed=1)
        result = fit(toy, cfg, settings, AdamHyper(learning_rate=5e-3))
        report = evaluate(result.params, cfg, toy, split="valid")
        assert report.overall.mrr == result.best_val.mrr
        assert report.overall.hits10 == result.best_val.hits10
        assert result.best_val.mrr == max(rec["val_mrr"] for rec in result.log)

    def test_adam_state_snapshot_matches_best_epoch(self, toy):
        cfg = _toy_fit_config()
        examples_per_epoch = len(build_examples(toy.train))
        settings = TrainSettings(epochs=4, eval_every=1, patience=10, batch_size=128, seed=0)
        result = fit(toy, cfg, settings, AdamHyper(learning_rate=1e-3))
        batches_per_epoch = -(-examples_per_epoch // 128)
        assert result.adam_state.t == result.best_epoch * batches_per_epoch

    def test_empty_train_split_rejected(self, toy):
        empty = Dataset(
            vocab=toy.vocab,
            train=[],
            valid=toy.valid,
            test=toy.test,
            filter_map=toy.filter_map,
            categories=toy.categories,
        )
        with pytest.raises(ValueError, match="training split"):
            fit(empty, _toy_fit_config(), TrainSettings(epochs=1))

    def test_bit_identical_across_runs(self, toy):
        settings = TrainSettings(epochs=3, eval_every=1, patience=10, seed=3)
        results = [fit(toy, _toy_fit_config(), settings, AdamHyper(learning_rate=1e-3)) for _ in range(2)]
        for (name, a), (_, b) in zip(results[0].params.named_tensors(), results[1].params.named_tensors()):
            np.testing.assert_array_equal(a, b, err_msg=name)
        logs = [
            [{k: v for k, v in rec.items() if k != "elapsed_s"} for rec in r.log]
            for r in results
        ]
        assert logs[0] == logs[1]

    def test_invalid_settings_surface_before_training(self, toy):
        with pytest.raises(ValueError, match="epochs"):
            fit(toy, _toy_fit_config(), TrainSettings(epochs=0))
