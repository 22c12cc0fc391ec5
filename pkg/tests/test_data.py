import numpy as np
import pytest

from decbayes.data import (
    AgentDataset,
    DataError,
    SyntheticSpec,
    generate_synthetic,
    generate_test_set,
    load_csv,
    partition_by_feature,
    pooled,
    sample_minibatch,
    train_test_split,
    write_datasets_csv,
)
from decbayes.likelihood import ObservationBatch


class TestSynthetic:
    def test_noiseless_labels_exact(self):
        spec = SyntheticSpec(theta_star=(2.0, -0.5), noise_std=0.0, samples_per_agent=20)
        for ds in generate_synthetic(spec, 3):
            x = ds.batch.features[:, 0]
            np.testing.assert_array_equal(ds.batch.labels, 2.0 + -0.5 * x)

    def test_deterministic(self):
        a = generate_synthetic(SyntheticSpec(seed=5), 4)
        b = generate_synthetic(SyntheticSpec(seed=5), 4)
        c = generate_synthetic(SyntheticSpec(seed=6), 4)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.batch.labels, y.batch.labels)
        assert not np.array_equal(a[1].batch.labels, c[1].batch.labels)

    def test_feature_ranges(self):
        sets = generate_synthetic(SyntheticSpec(samples_per_agent=50, informative_agent=3), 12)
        assert [len(d) for d in sets] == [50] * 12
        wide = [d.agent_id for d in sets if d.batch.features.max() > 85.0]
        assert wide == [3]
        for d in sets:
            lo, hi = (85.0, 120.0) if d.agent_id == 3 else (70.0, 85.0)
            assert lo <= d.batch.features.min() and d.batch.features.max() <= hi

    def test_agent_stream_independent_of_m(self):
        small = generate_synthetic(SyntheticSpec(seed=1), 3)
        large = generate_synthetic(SyntheticSpec(seed=1), 8)
        np.testing.assert_array_equal(small[2].batch.labels, large[2].batch.labels)

    def test_test_set_covers_union(self):
        test = generate_test_set(SyntheticSpec(), 500)
        x = test.features[:, 0]
        assert x.min() < 80 and x.max() > 100
        assert len(test) == 500

    def test_bad_spec(self):
        with pytest.raises(DataError):
            SyntheticSpec(informative_range=(5.0, 5.0))
        with pytest.raises(DataError):
            generate_synthetic(SyntheticSpec(informative_agent=4), 3)


class TestCsv:
    def test_reads_in_order(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,b,y\n1,10,0.5\n2,20,1.5\n3,30,2.5\n")
        batch = load_csv(p, ["a", "b"], "y")
        np.testing.assert_array_equal(batch.features, [[1, 10], [2, 20], [3, 30]])
        np.testing.assert_array_equal(batch.labels, [0.5, 1.5, 2.5])

    def test_header_only(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("x,y\n")
        with pytest.raises(DataError, match="empty batch"):
            load_csv(p, ["x"], "y")

    def test_non_numeric_row(self, tmp_path):
        p = tmp_path / "d.csv"
        rows = [f"{i},{i}" for i in range(6)] + ["abc,1"]
        p.write_text("x,y\n" + "\n".join(rows) + "\n")
        with pytest.raises(DataError, match=r"'abc'.*row 7 \(line 8\)"):
            load_csv(p, ["x"], "y")

    def test_missing_column_and_file(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("x,y\n1,2\n")
        with pytest.raises(DataError, match="'z'"):
            load_csv(p, ["z"], "y")
        with pytest.raises(DataError, match="not found"):
            load_csv(tmp_path / "nope.csv", ["x"], "y")

    def test_write_then_read(self, tmp_path):
        sets = generate_synthetic(SyntheticSpec(samples_per_agent=3), 2)
        p = tmp_path / "out.csv"
        write_datasets_csv(p, sets)
        back = load_csv(p, ["x"], "y")
        np.testing.assert_array_equal(back.labels, np.concatenate([d.batch.labels for d in sets]))


def _batch(xs):
    xs = np.asarray(xs, dtype=float)
    return ObservationBatch(xs[:, None], np.arange(len(xs), dtype=float))


class TestSplitAndPartition:
    def test_threshold_below_everything(self):
        with pytest.raises(DataError, match="restricted side empty"):
            partition_by_feature(_batch([5, 6, 7]), 3, 0, 1.0)

    def test_threshold_above_everything(self):
        with pytest.raises(DataError, match="informative side empty"):
            partition_by_feature(_batch([5, 6, 7]), 3, 0, 100.0)

    def test_two_agents(self):
        xs = list(range(20))
        parts = partition_by_feature(_batch(xs), 2, 0, 10.0)
        assert len(parts[0]) == 10 and len(parts[1]) == 10
        assert parts[0].batch.features.min() >= 10

    def test_round_robin(self):
        xs = [0, 1, 2, 3, 4, 5, 6, 7, 8, 50]
        parts = partition_by_feature(_batch(xs), 4, 0, 10.0)
        assert [len(p) for p in parts] == [1, 3, 3, 3]
        np.testing.assert_array_equal(parts[1].batch.features[:, 0], [0, 3, 6])
        assert [p.batch.agent_id for p in parts] == [0, 1, 2, 3]

    def test_partition_is_complete(self):
        xs = np.random.default_rng(0).uniform(0, 100, 57)
        parts = partition_by_feature(_batch(xs), 5, 2, 60.0)
        got = np.sort(np.concatenate([p.batch.labels for p in parts]))
        np.testing.assert_array_equal(got, np.arange(57))

    def test_too_many_agents(self):
        with pytest.raises(DataError, match="no samples"):
            partition_by_feature(_batch([0, 1, 50]), 5, 0, 10.0)

    def test_split(self):
        train, test = train_test_split(_batch(range(10)), 0.3, seed=1)
        assert len(train) == 7 and len(test) == 3
        assert set(train.labels) | set(test.labels) == set(range(10))
        again, _ = train_test_split(_batch(range(10)), 0.3, seed=1)
        np.testing.assert_array_equal(train.labels, again.labels)


class TestMinibatch:
    def test_pure_function(self):
        ds = AgentDataset(2, _batch(range(30)))
        a = sample_minibatch(ds, 5, 3, 0)
        b = sample_minibatch(ds, 5, 3, 0)
        np.testing.assert_array_equal(a.labels, b.labels)
        assert not np.array_equal(a.labels, sample_minibatch(ds, 5, 4, 0).labels)
        assert len(a) == 5

    def test_with_replacement(self):
        ds = AgentDataset(0, _batch([1.0]))
        assert len(sample_minibatch(ds, 4, 1, 0)) == 4

    def test_agents_differ(self):
        b = _batch(range(1000))
        a0 = sample_minibatch(AgentDataset(0, b), 8, 1, 0)
        a1 = sample_minibatch(AgentDataset(1, b), 8, 1, 0)
        assert not np.array_equal(a0.labels, a1.labels)

    def test_pooled(self):
        sets = generate_synthetic(SyntheticSpec(samples_per_agent=4), 3)
        assert len(pooled(sets)) == 12
