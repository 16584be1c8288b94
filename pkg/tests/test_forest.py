import math
import random

import numpy as np
import pytest

from freqforest.errors import DataError
from freqforest.forest import (
    Forest,
    ForestParams,
    FrequencyTree,
    Sample,
    _Leaf,
    _Split,
    entropy_bits,
    forest_to_text,
    load_forest,
    train_forest,
    tree_vote,
)


def make_tree(dim=1, **params):
    p = ForestParams(**{"capacity": 4, "max_leaf": 16, "entropy_threshold": 100.0,
                        **params})
    return FrequencyTree(dim, p, random.Random(0))


def leaves_of(node):
    if isinstance(node, _Split):
        return leaves_of(node.left) + leaves_of(node.right)
    return [node]


def splits_of(node):
    if isinstance(node, _Split):
        return [node] + splits_of(node.left) + splits_of(node.right)
    return []


class TestEntropyBits:
    def test_all_equal_is_zero(self):
        assert entropy_bits([3, 3, 3, 3]) == 0.0

    def test_uniform_occupancy(self):
        d = [0.05 + 0.1 * i for i in range(10)]
        np.testing.assert_allclose(entropy_bits(d, bins=10), math.log2(10), rtol=1e-12)

    def test_two_equal_clumps(self):
        np.testing.assert_allclose(entropy_bits([0, 0, 0, 0, 9, 9, 9, 9], bins=10), 1.0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            entropy_bits([])

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            entropy_bits([1.0, -0.5])

    def test_bounds(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            d = rng.uniform(0, 10, size=int(rng.integers(1, 50)))
            h = entropy_bits(d, bins=10)
            assert 0.0 <= h <= math.log2(10) + 1e-12


class TestTreeVote:
    def test_three_of_five_dominance(self):
        assert tree_vote([("A", 1), ("A", 2), ("A", 3), ("B", 4), ("C", 5)], 5) == "A"

    def test_no_dominant_label_abstains(self):
        assert tree_vote([("A", 1), ("A", 2), ("B", 3), ("B", 4), ("C", 5)], 5) is None

    def test_small_leaf_strict_majority(self):
        assert tree_vote([("A", 1), ("A", 2), ("B", 3)], 5) == "A"

    def test_small_leaf_no_majority_abstains(self):
        assert tree_vote([("A", 1), ("A", 2), ("B", 3), ("B", 4)], 5) is None

    def test_below_three_abstains(self):
        assert tree_vote([("A", 1), ("A", 2)], 5) is None
        assert tree_vote([], 5) is None

    def test_four_of_five(self):
        assert tree_vote([("A", 1), ("A", 2), ("A", 3), ("A", 4), ("B", 5)], 5) == "A"

    def test_too_many_neighbors_rejected(self):
        with pytest.raises(ValueError):
            tree_vote([("A", 1)] * 6, 5)


class TestTreeInsertSplit:
    def test_first_insert_makes_single_item_leaf(self):
        tree = make_tree()
        tree.insert([1.0], "a", "c1")
        assert isinstance(tree.root, _Leaf)
        assert len(tree.root.items) == 1
        assert tree.count == 1

    def test_bimodal_lower_median_split(self):
        # any pivot gives distances {0, 0, 10, 10}; lower median tau
        # splits the four items 2/2
        tree = make_tree(capacity=4)
        for i, x in enumerate([0.0, 0.0, 10.0, 10.0]):
            tree.insert([x], "a", f"c{i}")
        assert isinstance(tree.root, _Split)
        assert tree.root.tau == 0.0
        sizes = sorted(len(l.items) for l in leaves_of(tree.root))
        assert sizes == [2, 2]

    def test_identical_items_abort_split(self):
        tree = make_tree(capacity=4)
        for i in range(6):
            tree.insert([7.0], "a", f"c{i}")
        assert isinstance(tree.root, _Leaf)
        assert len(tree.root.items) == 6

    def test_entropy_gate_blocks_split(self):
        # uniform distances have entropy ~log2(bins) > threshold
        tree = make_tree(capacity=8, max_leaf=64, entropy_threshold=0.5)
        for i in range(40):
            tree.insert([float(i)], "a", f"c{i}")
        assert isinstance(tree.root, _Leaf)

    def test_max_leaf_forces_split(self):
        tree = make_tree(capacity=8, max_leaf=16, entropy_threshold=0.0)
        for i in range(16):
            tree.insert([float(i)], "a", f"c{i}")
        assert isinstance(tree.root, _Split)

    def test_split_children_nonempty_and_counts_add_up(self):
        rng = np.random.default_rng(8)
        tree = make_tree(dim=4, capacity=6, max_leaf=12, entropy_threshold=100.0)
        n = 300
        for i in range(n):
            tree.insert(rng.normal(size=4), rng.choice(["a", "b"]), f"c{i}")
        assert tree.count == n
        assert sum(len(l.items) for l in leaves_of(tree.root)) == n
        for split in splits_of(tree.root):
            assert len(leaves_of(split.left)) >= 1
            assert all(len(l.items) >= 1 for l in leaves_of(split.left))
            assert all(len(l.items) >= 1 for l in leaves_of(split.right))

    def test_routing_consistency_replay(self):
        from freqforest.forest import _dist

        rng = np.random.default_rng(9)
        tree = make_tree(dim=3, capacity=5, max_leaf=10)
        vectors = {}
        for i in range(200):
            vec = rng.normal(size=3)
            vectors[f"c{i}"] = vec
            tree.insert(vec, "a", f"c{i}")
        for clip_id, vec in vectors.items():
            node = tree.root
            while isinstance(node, _Split):
                node = node.left if _dist(vec, node.pivot) <= node.tau else node.right
            assert any(it.clip_id == clip_id for it in node.items)

    def test_dimension_mismatch_rejected(self):
        tree = make_tree(dim=3)
        with pytest.raises(ValueError):
            tree.insert([1.0], "a", "c1")

    def test_whitespace_ids_rejected(self):
        tree = make_tree()
        with pytest.raises(ValueError):
            tree.insert([1.0], "a", "bad id")


class TestQuery:
    def test_single_leaf_returns_all_sorted(self):
        tree = make_tree()
        tree.insert([5.0], "a", "far")
        tree.insert([1.0], "b", "near")
        tree.insert([3.0], "c", "mid")
        out = tree.query([0.0], 5)
        assert [nb.clip_id for nb in out] == ["near", "mid", "far"]
        assert [nb.distance for nb in out] == [1.0, 3.0, 5.0]

    def test_boundary_distance_routes_left(self):
        # hand-built 2-level tree
        from freqforest.forest import _Item

        left = _Leaf([_Item("l0", "a", np.array([0.0]), 0),
                      _Item("l1", "a", np.array([1.0]), 1)])
        right = _Leaf([_Item("r0", "b", np.array([10.0]), 2)])
        tree = make_tree(dim=1)
        tree.root = _Split(np.array([0.0]), 4.0, left, right)
        tree.count = 3
        out = tree.query([4.0], 2)  # d(q, pivot) == tau: goes left
        assert [nb.clip_id for nb in out] == ["l1", "l0"]

    def test_ties_break_by_insertion_order(self):
        tree = make_tree()
        tree.insert([2.0], "a", "first")
        tree.insert([-2.0], "b", "second")
        out = tree.query([0.0], 2)
        assert [nb.clip_id for nb in out] == ["first", "second"]

    def test_k_larger_than_leaf(self):
        tree = make_tree()
        tree.insert([1.0], "a", "c0")
        assert len(tree.query([0.0], 5)) == 1

    def test_empty_tree_rejected(self):
        with pytest.raises(DataError):
            make_tree().query([1.0], 5)

    def test_local_exactness_against_enumeration(self):
        from freqforest.forest import _dist

        rng = np.random.default_rng(10)
        tree = make_tree(dim=5, capacity=6, max_leaf=12)
        items = []
        for i in range(250):
            vec = rng.normal(size=5)
            items.append((f"c{i}", vec))
            tree.insert(vec, "a", f"c{i}")
        for _ in range(100):
            q = rng.normal(size=5)
            node = tree.root
            while isinstance(node, _Split):
                node = node.left if _dist(q, node.pivot) <= node.tau else node.right
            want = sorted(((_dist(it.vector, q), it.seq, it.clip_id) for it in node.items))
            got = tree.query(q, 5)
            assert [nb.clip_id for nb in got] == [cid for _, _, cid in want[:5]]


def synthetic_samples(n_per_class=20, n_features=6, dim=8, seed=0, classes=("a", "b", "c")):
    rng = np.random.default_rng(seed)
    names = [f"feat{i}" for i in range(n_features)]
    samples = []
    for ci, label in enumerate(classes):
        center = np.zeros(dim)
        center[ci % dim] = 10.0
        for i in range(n_per_class):
            feats = {name: center + rng.normal(scale=0.5, size=dim) for name in names}
            samples.append(Sample(clip_id=f"{label}{i}", label=label, features=feats))
    return samples


class TestForest:
    def test_one_tree_per_feature_with_all_items(self):
        samples = synthetic_samples()
        forest = train_forest(samples, ForestParams(seed=1))
        assert len(forest.trees) == 6
        for tree in forest.trees.values():
            assert tree.count == len(samples)

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValueError):
            train_forest([])

    def test_inconsistent_feature_sets_rejected(self):
        samples = synthetic_samples()
        bad = Sample(clip_id="x", label="a", features={"other": np.zeros(8)})
        with pytest.raises(ValueError):
            train_forest(samples + [bad])

    def test_deterministic_byte_identical(self):
        a = train_forest(synthetic_samples(), ForestParams(seed=42))
        b = train_forest(synthetic_samples(), ForestParams(seed=42))
        assert forest_to_text(a) == forest_to_text(b)

    def test_different_seed_may_differ_but_is_valid(self):
        a = train_forest(synthetic_samples(), ForestParams(seed=1))
        assert a.predict(synthetic_samples()[0].features)[0] == "a"

    def test_predicts_held_out_points(self):
        samples = synthetic_samples(n_per_class=30, seed=3)
        forest = train_forest(samples, ForestParams(seed=7))
        rng = np.random.default_rng(99)
        for ci, label in enumerate(("a", "b", "c")):
            center = np.zeros(8)
            center[ci] = 10.0
            query = {f"feat{i}": center + rng.normal(scale=0.5, size=8) for i in range(6)}
            pred, detail = forest.predict(query)
            assert pred == label
            assert not detail.fallback
            assert detail.counts[label] >= 4

    def test_missing_feature_rejected(self):
        forest = train_forest(synthetic_samples())
        with pytest.raises(ValueError):
            forest.predict({"feat0": np.zeros(8)})

    def test_plurality_over_voting_trees(self):
        # two features vote a, one votes b: prediction a
        samples = []
        for i in range(5):
            samples.append(Sample(f"a{i}", "a", {
                "f1": np.array([0.0 + 0.01 * i]),
                "f2": np.array([0.0 + 0.01 * i]),
                "f3": np.array([50.3 + 0.01 * i]),
            }))
            samples.append(Sample(f"b{i}", "b", {
                "f1": np.array([20.0 + 0.01 * i]),
                "f2": np.array([20.0 + 0.01 * i]),
                "f3": np.array([50.0 + 0.01 * i]),
            }))
        forest = train_forest(samples, ForestParams(k=5))
        query = {"f1": np.array([0.0]), "f2": np.array([0.0]), "f3": np.array([50.0])}
        pred, detail = forest.predict(query)
        assert pred == "a"
        assert detail.votes["f1"] == "a"
        assert detail.votes["f2"] == "a"
        assert detail.votes["f3"] == "b"
        assert detail.counts == {"a": 2, "b": 1}

    def test_global_abstain_falls_back_to_nearest_neighbor(self):
        # every tree sees a 2/2/1 label mix in its top five: all abstain
        samples = []
        vals = {"a": [0.0, 0.2], "b": [0.5, 0.7], "c": [0.4]}
        for label, xs in vals.items():
            for i, x in enumerate(xs):
                samples.append(Sample(f"{label}{i}", label, {"f1": np.array([x])}))
        forest = train_forest(samples, ForestParams(k=5))
        pred, detail = forest.predict({"f1": np.array([0.41])})
        assert detail.fallback
        assert pred == "c"  # nearest item is the c sample at 0.4


class TestSerialization:
    def test_round_trip_reproduces_predictions(self, tmp_path):
        samples = synthetic_samples(seed=5)
        forest = train_forest(samples, ForestParams(seed=11))
        path = tmp_path / "model.txt"
        forest.save(path)
        loaded = Forest.load(path)
        assert loaded.feature_names == forest.feature_names
        assert loaded.labels == forest.labels
        rng = np.random.default_rng(6)
        for _ in range(40):
            query = {name: rng.normal(scale=5, size=8) for name in forest.feature_names}
            assert loaded.predict(query)[0] == forest.predict(query)[0]

    def test_round_trip_is_byte_stable(self, tmp_path):
        forest = train_forest(synthetic_samples(), ForestParams(seed=2))
        path = tmp_path / "model.txt"
        forest.save(path)
        loaded = load_forest(path)
        assert forest_to_text(loaded) == forest_to_text(forest)

    def test_params_survive(self, tmp_path):
        params = ForestParams(k=3, entropy_threshold=2.5, capacity=8, max_leaf=32,
                              histogram_bins=7, seed=13)
        forest = train_forest(synthetic_samples(), params)
        forest.save(tmp_path / "m.txt")
        assert load_forest(tmp_path / "m.txt").params == params
