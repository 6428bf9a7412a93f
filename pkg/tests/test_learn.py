"""Model training: tree induction invariants, integer scoring systems, text form."""

import math
import random
import warnings

import numpy as np
import pytest

from steward.errors import (
    DegenerateFeatures,
    EmptyTrainingSet,
    NoModelForAssetType,
    SchemaMismatch,
    SingleClassWarning,
    ValidationError,
)
from steward.featurize import FeatureVector, schema_for
from steward.labeling import Label, LabeledExample
from steward.learn import (
    DEFAULT_WEIGHT_BOUND,
    INTERCEPT_BOUND,
    TrainConfig,
    accuracy_of,
    auc_of,
    candidate_thresholds,
    current_model,
    gini_from_counts,
    load_model,
    model_from_text,
    model_to_text,
    predict,
    round_half_away,
    store_model,
    train_for_asset_type,
    train_model,
    train_scoring_system,
    train_tree,
    weighted_gini,
)
from steward.model import AssetType, AttributionSource, Decision
from conftest import DAY, T0, small_world


def synthetic_examples(seed, n, asset_type=AssetType.SOURCE_FILE):
    """Plausible feature vectors with a noisy two-feature rule as label."""
    schema = schema_for(asset_type)
    rng = random.Random(seed)
    out = []
    for i in range(n):
        row = {}
        row["f_recency_days"] = rng.uniform(0.0, 365.0)
        row["f_touch_count_90d"] = float(rng.randrange(0, 40))
        row["f_authorship_share"] = rng.random()
        row["f_annotation_match"] = float(rng.random() < 0.3)
        row["f_org_distance"] = float(rng.randrange(0, 11))
        row["f_dependency_experience"] = rng.random()
        row["f_neighbor_ownership_share"] = rng.random()
        if "f_admin_actions_30d" in schema.feature_names:
            row["f_admin_actions_30d"] = float(rng.randrange(0, 12))
        engaged = row["f_touch_count_90d"] > 8 and row["f_recency_days"] < 90
        p = 0.92 if engaged else 0.08
        label = Label.POSITIVE if rng.random() < p else Label.NEGATIVE
        values = [(name, row[name]) for name in schema.feature_names]
        vec = FeatureVector("asset-x", f"cand-{i}", T0 + i, values)
        out.append(LabeledExample(vec, label, f"syn-{seed}-{i}"))
    return out


def bare_examples(rows, labels, names=("a", "b", "c")):
    """Examples with an arbitrary feature naming, for unit-level model tests."""
    out = []
    for i, (row, label) in enumerate(zip(rows, labels)):
        vec = FeatureVector("asset-x", f"c{i}", T0 + i, list(zip(names, row)))
        out.append(
            LabeledExample(vec, Label.POSITIVE if label else Label.NEGATIVE, f"e{i}")
        )
    return out


# ----------------------------------------------------------------------
# split mechanics
# ----------------------------------------------------------------------


def test_gini_helpers():
    assert gini_from_counts(0, 10) == 0.0
    assert gini_from_counts(10, 10) == 0.0
    assert gini_from_counts(5, 10) == 0.5
    assert gini_from_counts(0, 0) == 0.0
    assert weighted_gini(5, 10, 0, 10) == 0.25
    assert weighted_gini(0, 10, 10, 10) == 0.0


def test_candidate_thresholds():
    assert candidate_thresholds([1.0, 1.0, 1.0]) == []
    assert candidate_thresholds([0.0, 1.0]) == [0.5]
    assert candidate_thresholds([0.0, 1.0, 3.0]) == [0.5, 2.0]
    for mid in candidate_thresholds([0.0, 1e-320, 1.0]):
        assert 0.0 < mid <= 1.0


def test_round_half_away():
    assert round_half_away(2.5) == 3
    assert round_half_away(-2.5) == -3
    assert round_half_away(2.4) == 2
    assert round_half_away(-2.4) == -2
    assert round_half_away(0.0) == 0


def test_metric_helpers():
    assert accuracy_of([1, 0, 1], [0.9, 0.1, 0.2]) == pytest.approx(2 / 3)
    assert accuracy_of([], []) == 0.0
    assert auc_of([1, 1, 0, 0], [0.9, 0.8, 0.2, 0.1]) == 1.0
    assert auc_of([0, 1], [0.5, 0.5]) == 0.5  # ties average
    assert auc_of([1, 1], [0.9, 0.1]) == 0.5  # one class absent
    assert auc_of([1, 0, 1, 0], [0.8, 0.9, 0.7, 0.1]) == pytest.approx(0.5)


# ----------------------------------------------------------------------
# decision trees
# ----------------------------------------------------------------------


def test_tree_separable_data():
    rows = [[float(i), 0.0, 0.0] for i in range(20)]
    labels = [i >= 10 for i in range(20)]
    tree = train_tree(bare_examples(rows, labels), max_depth=3, min_leaf=5)
    assert tree.depth() == 1
    root = tree.nodes[0]
    assert root.kind == "split"
    assert root.feature_index == 0
    assert root.threshold == 9.5
    assert tree.predict_one([3.0, 0.0, 0.0]) == 0.0
    assert tree.predict_one([15.0, 0.0, 0.0]) == 1.0
    # boundary: value < threshold goes left
    assert tree.predict_one([9.5, 0.0, 0.0]) == 1.0


def test_tree_invariants_across_seeds():
    max_depth, min_leaf = 5, 20
    for seed in range(100):
        examples = synthetic_examples(seed, 160 + (seed % 3) * 40)
        tree = train_tree(examples, max_depth=max_depth, min_leaf=min_leaf, seed=seed)
        assert tree.depth() <= max_depth
        for node in tree.nodes:
            if node.kind == "leaf":
                assert node.sample_count >= min_leaf
            else:
                left, right = tree.nodes[node.left], tree.nodes[node.right]
                assert left.sample_count >= min_leaf
                assert right.sample_count >= min_leaf
                assert left.sample_count + right.sample_count == node.sample_count


def test_tree_deterministic_serialization():
    for seed in (0, 7, 42):
        a = train_tree(synthetic_examples(seed, 200), seed=seed)
        b = train_tree(synthetic_examples(seed, 200), seed=seed)
        model_a = train_model(
            synthetic_examples(seed, 200), [], AssetType.SOURCE_FILE,
            TrainConfig(seed=seed), trained_at=T0,
        )
        model_b = train_model(
            synthetic_examples(seed, 200), [], AssetType.SOURCE_FILE,
            TrainConfig(seed=seed), trained_at=T0,
        )
        assert a.nodes == b.nodes
        assert model_to_text(model_a) == model_to_text(model_b)


def test_tree_depth_zero_is_single_leaf():
    examples = synthetic_examples(1, 60)
    tree = train_tree(examples, max_depth=0, min_leaf=1)
    assert len(tree.nodes) == 1
    assert tree.nodes[0].kind == "leaf"
    share = sum(1 for e in examples if e.label is Label.POSITIVE) / len(examples)
    assert tree.predict_one([0.0] * 7) == pytest.approx(share)


def test_tree_min_leaf_blocks_tiny_splits():
    # 15 mixed rows with min_leaf=8: no cut can leave 8 on both sides
    rows = [[float(i)] for i in range(15)]
    labels = [i % 2 == 0 for i in range(15)]
    tree = train_tree(bare_examples(rows, labels, names=("a",)), max_depth=5, min_leaf=8)
    assert len(tree.nodes) == 1
    assert tree.nodes[0].kind == "leaf"


def test_tree_training_errors():
    with pytest.raises(EmptyTrainingSet):
        train_tree([])
    with pytest.raises(ValidationError):
        train_tree(synthetic_examples(0, 50), max_depth=-1)
    with pytest.raises(ValidationError):
        train_tree(synthetic_examples(0, 50), min_leaf=0)
    mixed = synthetic_examples(0, 30) + synthetic_examples(
        1, 30, AssetType.WAREHOUSE_TABLE
    )
    with pytest.raises(SchemaMismatch):
        train_tree(mixed)


def test_tree_single_class_warns():
    rows = [[float(i)] for i in range(30)]
    examples = bare_examples(rows, [True] * 30, names=("a",))
    with pytest.warns(SingleClassWarning):
        tree = train_tree(examples, min_leaf=5)
    assert len(tree.nodes) == 1
    assert tree.nodes[0].positive_fraction == 1.0


# ----------------------------------------------------------------------
# integer scoring systems
# ----------------------------------------------------------------------


def test_scoring_weights_are_bounded_integers():
    for seed in range(20):
        examples = synthetic_examples(seed, 150)
        scoring = train_scoring_system(examples, seed=seed)
        assert all(isinstance(w, int) for w in scoring.weights)
        assert all(abs(w) <= DEFAULT_WEIGHT_BOUND for w in scoring.weights)
        assert max(abs(w) for w in scoring.weights) == DEFAULT_WEIGHT_BOUND
        assert isinstance(scoring.intercept, int)
        assert abs(scoring.intercept) <= INTERCEPT_BOUND
        assert len(scoring.bin_edges) == len(scoring.feature_names)
        for edges in scoring.bin_edges:
            assert edges == sorted(edges) and len(edges) == 3


def test_scoring_drops_exactly_one_of_duplicated_column():
    rng = random.Random(3)
    rows, labels = [], []
    for _ in range(120):
        a = rng.uniform(0, 10)
        c = rng.uniform(0, 10)
        rows.append([a, a, c])  # b duplicates a exactly
        labels.append(a + rng.gauss(0, 1) > 5)
    scoring = train_scoring_system(bare_examples(rows, labels))
    assert scoring.dropped_features == ["b"]
    assert scoring.feature_names == ("a", "c")
    assert len(scoring.weights) == 2


def test_scoring_intercept_matches_exhaustive_scan():
    for seed in (0, 5, 9):
        examples = synthetic_examples(seed, 140)
        scoring = train_scoring_system(examples, seed=seed)
        X = np.array(
            [[e.features.value(n) for n in scoring.feature_names] for e in examples]
        )
        y = np.array([1.0 if e.label is Label.POSITIVE else 0.0 for e in examples])
        bins = np.stack(
            [
                np.searchsorted(np.asarray(scoring.bin_edges[pos]), X[:, pos], side="right")
                for pos in range(len(scoring.feature_names))
            ],
            axis=1,
        )
        base = bins @ np.asarray(scoring.weights)
        best_acc, best_i = -1.0, None
        for i in range(-INTERCEPT_BOUND, INTERCEPT_BOUND + 1):
            acc = float(((base + i >= 0).astype(float) == y).mean())
            if acc > best_acc:
                best_acc, best_i = acc, i
        assert scoring.intercept == best_i
        # and the model's own arithmetic agrees with the matrix form
        for k in (0, 17, 61):
            e = examples[k]
            assert scoring.total_points(dict(e.features.values)) == int(
                base[k] + scoring.intercept
            )


def test_scoring_predictions_are_sigmoid_of_points():
    examples = synthetic_examples(2, 120)
    scoring = train_scoring_system(examples)
    for e in examples[:20]:
        points = scoring.total_points(dict(e.features.values))
        assert scoring.predict_one(dict(e.features.values)) == pytest.approx(
            1.0 / (1.0 + math.exp(-points)), abs=1e-12
        )
        assert scoring.classify_one(dict(e.features.values)) == (1 if points >= 0 else 0)


def test_scoring_degenerate_and_empty():
    with pytest.raises(EmptyTrainingSet):
        train_scoring_system([])
    rows = [[1.0, 2.0]] * 40
    labels = [i % 2 == 0 for i in range(40)]
    with pytest.raises(DegenerateFeatures):
        train_scoring_system(bare_examples(rows, labels, names=("a", "b")))


def test_scoring_deterministic():
    a = train_scoring_system(synthetic_examples(4, 130))
    b = train_scoring_system(synthetic_examples(4, 130))
    assert a.weights == b.weights
    assert a.intercept == b.intercept
    assert a.bin_edges == b.bin_edges


# ----------------------------------------------------------------------
# the wrapper: training, metrics, text round trip, store integration
# ----------------------------------------------------------------------


def test_train_model_metrics_and_predict():
    train = synthetic_examples(10, 200)
    test = synthetic_examples(11, 60)
    model = train_model(train, test, AssetType.SOURCE_FILE, TrainConfig(), T0)
    for key in (
        "train_accuracy",
        "train_auc",
        "test_accuracy",
        "test_auc",
        "train_size",
        "test_size",
    ):
        assert key in model.metrics
    assert model.metrics["train_size"] == 200
    assert model.metrics["test_size"] == 60
    assert model.metrics["train_accuracy"] >= 0.8  # the rule is learnable
    score = predict(model, train[0].features)
    assert 0.0 <= score <= 1.0
    wrong_schema = synthetic_examples(0, 1, AssetType.WAREHOUSE_TABLE)[0]
    with pytest.raises(SchemaMismatch):
        predict(model, wrong_schema.features)


def test_train_model_unknown_kind():
    with pytest.raises(ValidationError):
        train_model(
            synthetic_examples(0, 50), [], AssetType.SOURCE_FILE,
            TrainConfig(model_kind="forest"), T0,
        )


def test_text_roundtrip_tree():
    model = train_model(
        synthetic_examples(21, 180), synthetic_examples(22, 40),
        AssetType.SOURCE_FILE, TrainConfig(seed=21), T0 + 3.5, window_days=90,
    )
    text = model_to_text(model)
    back = model_from_text(text)
    assert model_to_text(back) == text
    assert back.kind == "tree"
    assert back.window_days == 90
    assert back.trained_at == T0 + 3.5
    assert back.metrics == model.metrics
    for e in synthetic_examples(23, 50):
        assert predict(back, e.features) == predict(model, e.features)


def test_text_roundtrip_scoring():
    model = train_model(
        synthetic_examples(31, 150, AssetType.WAREHOUSE_TABLE), [],
        AssetType.WAREHOUSE_TABLE, TrainConfig(model_kind="scoring", seed=31), T0,
    )
    text = model_to_text(model)
    back = model_from_text(text)
    assert model_to_text(back) == text
    assert back.scoring.weights == model.scoring.weights
    assert back.scoring.bin_edges == model.scoring.bin_edges
    assert back.dropped_features == model.dropped_features
    for e in synthetic_examples(32, 50, AssetType.WAREHOUSE_TABLE):
        assert predict(back, e.features) == predict(model, e.features)


def test_model_text_rejects_garbage():
    with pytest.raises(ValidationError):
        model_from_text("not a model\n")
    with pytest.raises(ValidationError):
        model_from_text("")


def test_store_model_roundtrip(store):
    small_world(store)
    model = train_model(
        synthetic_examples(41, 120), [], AssetType.SOURCE_FILE, TrainConfig(seed=41), T0
    )
    model_id = store_model(store, model)
    assert model_id.startswith("model-")
    assert load_model(store, model_id) is model  # cache hit
    store.model_cache.clear()
    loaded = load_model(store, model_id)
    assert model_to_text(loaded) == model_to_text(model)
    assert current_model(store, AssetType.SOURCE_FILE).model_id == model_id
    with pytest.raises(NoModelForAssetType):
        current_model(store, AssetType.CONFIG_FILE)
    with pytest.raises(NoModelForAssetType):
        load_model(store, "model-99999999")


def test_train_for_asset_type_window(store):
    small_world(store)
    for day in range(1, 9):
        cand = "alice" if day % 2 else "carol"
        decision = Decision.ACCEPT.value if day % 2 else Decision.REJECT.value
        store.record_decision(
            None, "file-a", cand, decision, "bob", T0 + day * DAY
        )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SingleClassWarning)
        model = train_for_asset_type(
            store, AssetType.SOURCE_FILE, now=T0 + 30 * DAY,
            config=TrainConfig(min_leaf=1, split_fraction=0.75),
        )
    assert model.metrics["train_size"] + model.metrics["test_size"] == 8
    # a 2-day window sees only the day-7 and day-8 events
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SingleClassWarning)
        narrow = train_for_asset_type(
            store, AssetType.SOURCE_FILE, now=T0 + 9 * DAY,
            config=TrainConfig(min_leaf=1, split_fraction=0.75), window_days=2,
        )
    assert narrow.metrics["train_size"] + narrow.metrics["test_size"] == 2
    assert narrow.window_days == 2
    with pytest.raises(EmptyTrainingSet):
        train_for_asset_type(store, AssetType.CONFIG_FILE, now=T0 + 30 * DAY)
