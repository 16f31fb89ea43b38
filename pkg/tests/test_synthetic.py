from comdense.data import RelationCategory, load_dataset, load_triples
from comdense.synthetic import NUM_ENTITIES, toy_raw_triples, write_toy_dataset


class TestToyGraph:
    def test_shape(self):
        triples = toy_raw_triples()
        assert len(triples) == 120
        assert len(set(triples)) == 120  # no duplicates
        entities = {t.subject for t in triples} | {t.object for t in triples}
        assert len(entities) == NUM_ENTITIES == 30
        assert len({t.relation for t in triples}) == 4

    def test_generator_is_deterministic(self):
        assert toy_raw_triples() == toy_raw_triples()

    def test_spans_all_four_categories(self, toy):
        assert set(toy.categories.values()) == set(RelationCategory)


class TestWriteToyDataset:
    def test_counts(self, tmp_path):
        counts = write_toy_dataset(tmp_path, seed=0)
        assert counts == {"train": 120, "valid": 6, "test": 6}
        assert len(load_triples(tmp_path / "train.txt")) == 120
        assert len(load_triples(tmp_path / "valid.txt")) == 6
        assert len(load_triples(tmp_path / "test.txt")) == 6

    def test_eval_splits_are_memorized_training_facts(self, tmp_path):
        """valid/test sample from the training graph, so a model that
        memorizes the graph can rank them perfectly."""
        write_toy_dataset(tmp_path, seed=0)
        train = set(load_triples(tmp_path / "train.txt"))
        valid = load_triples(tmp_path / "valid.txt")
        test = load_triples(tmp_path / "test.txt")
        assert set(valid) <= train
        assert set(test) <= train
        assert not set(valid) & set(test)

    def test_same_seed_same_files(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        write_toy_dataset(a, seed=1)
        write_toy_dataset(b, seed=1)
        for name in ("train.txt", "valid.txt", "test.txt"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_different_seed_changes_sampling(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        write_toy_dataset(a, seed=1)
        write_toy_dataset(b, seed=2)
        assert (a / "valid.txt").read_text() != (b / "valid.txt").read_text()

    def test_loads_into_a_full_dataset(self, tmp_path):
        write_toy_dataset(tmp_path, seed=3)
        dataset = load_dataset(tmp_path)
        assert dataset.vocab.num_entities == 30
        assert dataset.vocab.num_base_relations == 4
        assert len(dataset.train) == 240  # inverse-augmented
