"""Interpretable suitability models.

Two families, both auditable by hand:

* depth-limited binary decision trees, greedy Gini induction with midpoint
  thresholds and deterministic tie-breaks;
* integer scoring systems: small integer points per quartile bin of each
  feature, summed and thresholded at zero, derived by fitting a logistic
  model and rounding rescaled weights.

Training is deterministic: identical data, hyperparameters, and seed give a
structurally identical model. Predictions are probabilities in [0, 1].
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    DegenerateFeatures,
    EmptyTrainingSet,
    NoModelForAssetType,
    SchemaMismatch,
    SingleClassWarning,
    ValidationError,
)
from .featurize import SCHEMA_VERSION, FeatureVector, schema_for
from .labeling import Label, LabeledExample, build_dataset, extract_labeling_events
from .model import SECONDS_PER_DAY, AssetType
from .store import Store

DEFAULT_MAX_DEPTH = 5
DEFAULT_MIN_LEAF = 20
DEFAULT_WEIGHT_BOUND = 5
INTERCEPT_BOUND = 20
CORRELATION_LIMIT = 0.95
GD_EPOCHS = 500
GD_STEP = 0.1
DEFAULT_WINDOW_DAYS = 180

MODEL_TEXT_HEADER = "steward-model v1"


def gini_from_counts(positives: int, total: int) -> float:
    """Gini impurity 1 - p^2 - q^2 from integer class counts."""
    if total == 0:
        return 0.0
    p = positives / total
    q = 1.0 - p
    return 1.0 - (p * p + q * q)


def weighted_gini(
    pos_left: int, n_left: int, pos_right: int, n_right: int
) -> float:
    """Size-weighted impurity of a two-way split, from integer counts."""
    n = n_left + n_right
    return (n_left / n) * gini_from_counts(pos_left, n_left) + (
        n_right / n
    ) * gini_from_counts(pos_right, n_right)


@dataclass
class TreeNode:
    kind: str  # "leaf" or "split"
    sample_count: int
    positive_fraction: float
    feature_index: int = -1
    threshold: float = 0.0
    left: int = -1
    right: int = -1


@dataclass
class DecisionTreeModel:
    nodes: list[TreeNode]
    max_depth: int
    min_leaf: int
    feature_names: tuple[str, ...]
    schema_version: int = SCHEMA_VERSION
    trained_at: float = 0.0
    seed: int = 0

    def predict_one(self, values: list[float]) -> float:
        node = self.nodes[0]
        while node.kind == "split":
            if values[node.feature_index] < node.threshold:
                node = self.nodes[node.left]
            else:
                node = self.nodes[node.right]
        return node.positive_fraction

    def leaf_index(self, values: list[float]) -> int:
        index = 0
        node = self.nodes[0]
        while node.kind == "split":
            index = node.left if values[node.feature_index] < node.threshold else node.right
            node = self.nodes[index]
        return index

    def path(self, values: list[float]) -> list[int]:
        """Node indices from root to leaf, inclusive."""
        out = [0]
        node = self.nodes[0]
        while node.kind == "split":
            nxt = node.left if values[node.feature_index] < node.threshold else node.right
            out.append(nxt)
            node = self.nodes[nxt]
        return out

    def depth(self) -> int:
        def walk(index: int) -> int:
            node = self.nodes[index]
            if node.kind == "leaf":
                return 0
            return 1 + max(walk(node.left), walk(node.right))

        return walk(0)


def candidate_thresholds(sorted_values: list[float]) -> list[float]:
    """Midpoints between consecutive distinct values. A midpoint that
    collapses onto a neighbor under float arithmetic is discarded, so
    `value < threshold` always splits the two sides it came from."""
    out = []
    for i in range(1, len(sorted_values)):
        lo, hi = sorted_values[i - 1], sorted_values[i]
        if lo == hi:
            continue
        mid = (lo + hi) / 2.0
        if lo < mid <= hi:
            out.append(mid)
    return out


def _best_split(
    X: list[list[float]],
    y: list[int],
    indices: list[int],
    n_features: int,
    min_leaf: int,
) -> Optional[tuple[int, float, list[int], list[int]]]:
    best_score = math.inf
    best: Optional[tuple[int, float]] = None
    n = len(indices)
    total_pos = sum(y[i] for i in indices)
    for f in range(n_features):
        ordered = sorted(indices, key=lambda i: X[i][f])
        values = [X[i][f] for i in ordered]
        pos_prefix = 0
        # walk boundaries between positions; a boundary is usable when the
        # values on its two sides differ
        for cut in range(1, n):
            pos_prefix += y[ordered[cut - 1]]
            lo, hi = values[cut - 1], values[cut]
            if lo == hi:
                continue
            if cut < min_leaf or n - cut < min_leaf:
                continue
            mid = (lo + hi) / 2.0
            if not (lo < mid <= hi):
                continue
            score = weighted_gini(pos_prefix, cut, total_pos - pos_prefix, n - cut)
            if score < best_score:
                best_score = score
                best = (f, mid)
    if best is None:
        return None
    f, threshold = best
    left = [i for i in indices if X[i][f] < threshold]
    right = [i for i in indices if X[i][f] >= threshold]
    return f, threshold, left, right


def train_tree(
    train: list[LabeledExample],
    max_depth: int = DEFAULT_MAX_DEPTH,
    min_leaf: int = DEFAULT_MIN_LEAF,
    seed: int = 0,
) -> DecisionTreeModel:
    if not train:
        raise EmptyTrainingSet("no training examples")
    if max_depth < 0 or min_leaf < 1:
        raise ValidationError("max_depth must be >= 0 and min_leaf >= 1")
    feature_names = tuple(train[0].features.names())
    for example in train:
        if tuple(example.features.names()) != feature_names:
            raise SchemaMismatch("training examples mix feature schemas")
    X = [example.features.floats() for example in train]
    y = [1 if example.label is Label.POSITIVE else 0 for example in train]
    if len(set(y)) == 1:
        warnings.warn(
            "training set contains a single class; returning one leaf",
            SingleClassWarning,
        )
    nodes: list[TreeNode] = []

    def build(indices: list[int], depth: int) -> int:
        n = len(indices)
        pos = sum(y[i] for i in indices)
        index = len(nodes)
        if pos == 0 or pos == n or depth >= max_depth:
            nodes.append(TreeNode("leaf", n, pos / n))
            return index
        found = _best_split(X, y, indices, len(feature_names), min_leaf)
        if found is None:
            nodes.append(TreeNode("leaf", n, pos / n))
            return index
        f, threshold, left_idx, right_idx = found
        nodes.append(TreeNode("split", n, pos / n, feature_index=f, threshold=threshold))
        nodes[index].left = build(left_idx, depth + 1)
        nodes[index].right = build(right_idx, depth + 1)
        return index

    build(list(range(len(train))), 0)
    return DecisionTreeModel(
        nodes=nodes,
        max_depth=max_depth,
        min_leaf=min_leaf,
        feature_names=feature_names,
        seed=seed,
    )


# ----------------------------------------------------------------------
# integer scoring systems
# ----------------------------------------------------------------------


@dataclass
class ScoringSystemModel:
    feature_names: tuple[str, ...]  # kept features, schema order
    weights: list[int]
    intercept: int
    bin_edges: list[list[float]]  # three quartile edges per kept feature
    dropped_features: list[str] = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION
    trained_at: float = 0.0
    seed: int = 0

    def bin_of(self, feature_pos: int, value: float) -> int:
        return int(
            np.searchsorted(np.asarray(self.bin_edges[feature_pos]), value, side="right")
        )

    def total_points(self, values_by_name: dict[str, float]) -> int:
        total = self.intercept
        for pos, name in enumerate(self.feature_names):
            total += self.weights[pos] * self.bin_of(pos, values_by_name[name])
        return total

    def predict_one(self, values_by_name: dict[str, float]) -> float:
        return 1.0 / (1.0 + math.exp(-float(self.total_points(values_by_name))))

    def classify_one(self, values_by_name: dict[str, float]) -> int:
        return 1 if self.total_points(values_by_name) >= 0 else 0


def pearson_matrix(X: np.ndarray) -> np.ndarray:
    """Pairwise Pearson correlations; zero-variance columns correlate 0."""
    n, d = X.shape
    centered = X - X.mean(axis=0)
    stds = centered.std(axis=0)
    out = np.zeros((d, d))
    for i in range(d):
        for j in range(d):
            if stds[i] == 0.0 or stds[j] == 0.0:
                out[i, j] = 0.0
            else:
                out[i, j] = float(
                    (centered[:, i] * centered[:, j]).mean() / (stds[i] * stds[j])
                )
    return out


def round_half_away(value: float) -> int:
    """Round to nearest integer, halves away from zero (so 2.5 -> 3, -2.5 -> -3)."""
    return int(math.floor(value + 0.5)) if value >= 0 else int(math.ceil(value - 0.5))


def train_scoring_system(
    train: list[LabeledExample],
    weight_bound: int = DEFAULT_WEIGHT_BOUND,
    seed: int = 0,
) -> ScoringSystemModel:
    if not train:
        raise EmptyTrainingSet("no training examples")
    feature_names = tuple(train[0].features.names())
    X_full = np.array([e.features.floats() for e in train], dtype=float)
    y = np.array([1.0 if e.label is Label.POSITIVE else 0.0 for e in train])
    if np.all(X_full.std(axis=0) == 0.0):
        raise DegenerateFeatures("every feature is constant on the training set")
    if len(set(y.tolist())) == 1:
        warnings.warn(
            "training set contains a single class; scoring system degenerates",
            SingleClassWarning,
        )

    corr = pearson_matrix(X_full)
    kept: list[int] = []
    dropped: list[str] = []
    for j in range(X_full.shape[1]):
        if any(abs(corr[i, j]) > CORRELATION_LIMIT for i in kept):
            dropped.append(feature_names[j])
        else:
            kept.append(j)
    X = X_full[:, kept]
    kept_names = tuple(feature_names[j] for j in kept)

    # logistic fit on standardized features; zero-variance columns get unit
    # scale so they stay inert instead of dividing by zero
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std == 0.0, 1.0, std)
    Z = (X - mean) / std
    n = Z.shape[0]
    w = np.zeros(Z.shape[1])
    b = 0.0
    for _ in range(GD_EPOCHS):
        logits = Z @ w + b
        p = 1.0 / (1.0 + np.exp(-logits))
        err = p - y
        w -= GD_STEP * (Z.T @ err) / n
        b -= GD_STEP * float(err.mean())
    # b calibrated the real-valued fit; the integer intercept below replaces it

    max_abs = float(np.max(np.abs(w))) if w.size else 0.0
    if max_abs == 0.0:
        weights = [0] * len(kept)
    else:
        scale = weight_bound / max_abs
        weights = [round_half_away(float(wi) * scale) for wi in w]

    edges = [
        [float(q) for q in np.quantile(X[:, pos], [0.25, 0.5, 0.75])]
        for pos in range(len(kept))
    ]
    model = ScoringSystemModel(
        feature_names=kept_names,
        weights=weights,
        intercept=0,
        bin_edges=edges,
        dropped_features=dropped,
        seed=seed,
    )

    # brute-force integer intercept: maximize training accuracy, lowest wins ties
    bins = np.stack(
        [
            np.searchsorted(np.asarray(edges[pos]), X[:, pos], side="right")
            for pos in range(len(kept))
        ],
        axis=1,
    )
    base_points = bins @ np.asarray(weights)
    best_intercept = -INTERCEPT_BOUND
    best_accuracy = -1.0
    for intercept in range(-INTERCEPT_BOUND, INTERCEPT_BOUND + 1):
        predicted = (base_points + intercept >= 0).astype(float)
        accuracy = float((predicted == y).mean())
        if accuracy > best_accuracy:
            best_accuracy = accuracy
            best_intercept = intercept
    model.intercept = best_intercept
    return model


# ----------------------------------------------------------------------
# the trained-model wrapper and prediction
# ----------------------------------------------------------------------

KIND_TREE = "tree"
KIND_SCORING = "scoring"


@dataclass
class TrainedModel:
    kind: str
    asset_type: AssetType
    tree: Optional[DecisionTreeModel] = None
    scoring: Optional[ScoringSystemModel] = None
    metrics: dict = field(default_factory=dict)
    dropped_features: list[str] = field(default_factory=list)
    trained_at: float = 0.0
    window_days: Optional[int] = None
    model_id: str = ""

    @property
    def schema_version(self) -> int:
        inner = self.tree if self.kind == KIND_TREE else self.scoring
        return inner.schema_version


def predict(model: TrainedModel, features: FeatureVector) -> float:
    if features.schema_version != model.schema_version:
        raise SchemaMismatch(
            f"feature schema v{features.schema_version} vs model v{model.schema_version}"
        )
    expected = schema_for(model.asset_type).feature_names
    if tuple(features.names()) != expected:
        raise SchemaMismatch("feature vector does not match the model's asset type")
    if model.kind == KIND_TREE:
        return model.tree.predict_one(features.floats())
    return model.scoring.predict_one(dict(features.values))


def predict_many(model: TrainedModel, vectors: list[FeatureVector]) -> list[float]:
    return [predict(model, v) for v in vectors]


def accuracy_of(labels: list[int], scores: list[float], threshold: float = 0.5) -> float:
    if not labels:
        return 0.0
    hits = sum(1 for y, s in zip(labels, scores) if (1 if s >= threshold else 0) == y)
    return hits / len(labels)


def auc_of(labels: list[int], scores: list[float]) -> float:
    """Rank-based AUC with average ranks for ties; 0.5 when one class is absent."""
    pos = sum(labels)
    neg = len(labels) - pos
    if pos == 0 or neg == 0:
        return 0.5
    order = sorted(range(len(scores)), key=lambda i: scores[i])
    ranks = [0.0] * len(scores)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        avg_rank = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg_rank
        i = j + 1
    rank_sum = sum(r for r, y in zip(ranks, labels) if y == 1)
    return (rank_sum - pos * (pos + 1) / 2.0) / (pos * neg)


def _evaluate(model: TrainedModel, examples: list[LabeledExample]) -> tuple[float, float]:
    # the scoring system's >= 0 points rule maps to sigmoid >= 0.5, so one
    # threshold serves both model families
    labels = [1 if e.label is Label.POSITIVE else 0 for e in examples]
    scores = [predict(model, e.features) for e in examples]
    return accuracy_of(labels, scores), auc_of(labels, scores)


@dataclass
class TrainConfig:
    model_kind: str = KIND_TREE
    max_depth: int = DEFAULT_MAX_DEPTH
    min_leaf: int = DEFAULT_MIN_LEAF
    weight_bound: int = DEFAULT_WEIGHT_BOUND
    split_fraction: float = 0.8
    seed: int = 0

    def validate(self) -> None:
        if self.model_kind not in (KIND_TREE, KIND_SCORING):
            raise ValidationError(f"unknown model kind {self.model_kind!r}")


def train_model(
    train: list[LabeledExample],
    test: list[LabeledExample],
    asset_type: AssetType,
    config: TrainConfig,
    trained_at: float,
    window_days: Optional[int] = None,
) -> TrainedModel:
    config.validate()
    if config.model_kind == KIND_TREE:
        tree = train_tree(train, config.max_depth, config.min_leaf, config.seed)
        tree.trained_at = trained_at
        model = TrainedModel(
            kind=KIND_TREE,
            asset_type=asset_type,
            tree=tree,
            trained_at=trained_at,
            window_days=window_days,
        )
    else:
        scoring = train_scoring_system(train, config.weight_bound, config.seed)
        scoring.trained_at = trained_at
        model = TrainedModel(
            kind=KIND_SCORING,
            asset_type=asset_type,
            scoring=scoring,
            dropped_features=list(scoring.dropped_features),
            trained_at=trained_at,
            window_days=window_days,
        )
    train_acc, train_auc = _evaluate(model, train)
    metrics = {"train_accuracy": train_acc, "train_auc": train_auc}
    if test:
        test_acc, test_auc = _evaluate(model, test)
        metrics["test_accuracy"] = test_acc
        metrics["test_auc"] = test_auc
    metrics["train_size"] = len(train)
    metrics["test_size"] = len(test)
    model.metrics = metrics
    return model


def train_for_asset_type(
    store: Store,
    asset_type: AssetType,
    now: float,
    config: Optional[TrainConfig] = None,
    window_days: Optional[int] = None,
) -> TrainedModel:
    """Train one model for one asset type from the store's labeling events.

    With window_days set, only events in [now - window, now) participate."""
    config = config or TrainConfig()
    asset_type = AssetType(asset_type)
    since = now - window_days * SECONDS_PER_DAY if window_days is not None else 0.0
    events = extract_labeling_events(store, since, now)
    events = [
        e
        for e in events
        if e.asset_id in store.assets
        and store.assets[e.asset_id].asset_type is asset_type
    ]
    if not events:
        raise EmptyTrainingSet(
            f"no labeling events for {asset_type.value} in the window"
        )
    split = build_dataset(store, events, config.split_fraction, config.seed)
    if not split.train:
        raise EmptyTrainingSet(f"no joinable training examples for {asset_type.value}")
    return train_model(
        split.train, split.test, asset_type, config, trained_at=now, window_days=window_days
    )


def retrain_windowed(
    store: Store,
    asset_type: AssetType,
    now: float,
    window_days: int = DEFAULT_WINDOW_DAYS,
    config: Optional[TrainConfig] = None,
) -> TrainedModel:
    return train_for_asset_type(store, asset_type, now, config, window_days=window_days)


# ----------------------------------------------------------------------
# text serialization: the model card IS the storage format
# ----------------------------------------------------------------------


def model_to_text(model: TrainedModel) -> str:
    lines = [MODEL_TEXT_HEADER]
    lines.append(f"kind: {model.kind}")
    lines.append(f"asset_type: {model.asset_type.value}")
    lines.append(f"schema_version: {model.schema_version}")
    lines.append(f"trained_at: {model.trained_at!r}")
    lines.append(
        "window_days: " + ("none" if model.window_days is None else str(model.window_days))
    )
    metric_cells = " ".join(
        f"{key}={model.metrics[key]!r}" for key in sorted(model.metrics)
    )
    lines.append(f"metrics: {metric_cells}".rstrip())
    if model.kind == KIND_TREE:
        tree = model.tree
        lines.append(f"seed: {tree.seed}")
        lines.append(f"max_depth: {tree.max_depth}")
        lines.append(f"min_leaf: {tree.min_leaf}")
        lines.append("features: " + " ".join(tree.feature_names))
        lines.append("nodes:")
        for i, node in enumerate(tree.nodes):
            if node.kind == "leaf":
                lines.append(
                    f"  {i} leaf n={node.sample_count} pos={node.positive_fraction!r}"
                )
            else:
                lines.append(
                    f"  {i} split feature={tree.feature_names[node.feature_index]}"
                    f" threshold={node.threshold!r} left={node.left} right={node.right}"
                    f" n={node.sample_count} pos={node.positive_fraction!r}"
                )
    else:
        scoring = model.scoring
        lines.append(f"seed: {scoring.seed}")
        lines.append(f"intercept: {scoring.intercept}")
        lines.append(
            "dropped: " + (" ".join(scoring.dropped_features) if scoring.dropped_features else "-")
        )
        lines.append("points:")
        for pos, name in enumerate(scoring.feature_names):
            edges = ",".join(repr(e) for e in scoring.bin_edges[pos])
            lines.append(f"  {name} weight={scoring.weights[pos]} edges={edges}")
    return "\n".join(lines) + "\n"


def _parse_kv(line: str, key: str) -> str:
    prefix = key + ":"
    if not line.startswith(prefix):
        raise ValidationError(f"expected {key!r} line, got {line!r}")
    return line[len(prefix):].strip()


def model_from_text(text: str) -> TrainedModel:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines or lines[0].strip() != MODEL_TEXT_HEADER:
        raise ValidationError("unrecognized model text header")
    kind = _parse_kv(lines[1], "kind")
    asset_type = AssetType(_parse_kv(lines[2], "asset_type"))
    schema_version = int(_parse_kv(lines[3], "schema_version"))
    trained_at = float(_parse_kv(lines[4], "trained_at"))
    window_raw = _parse_kv(lines[5], "window_days")
    window_days = None if window_raw == "none" else int(window_raw)
    metrics: dict = {}
    metric_text = _parse_kv(lines[6], "metrics")
    for cell in metric_text.split():
        key, raw = cell.split("=", 1)
        value = float(raw)
        metrics[key] = int(value) if key.endswith("_size") else value
    seed = int(_parse_kv(lines[7], "seed"))
    if kind == KIND_TREE:
        max_depth = int(_parse_kv(lines[8], "max_depth"))
        min_leaf = int(_parse_kv(lines[9], "min_leaf"))
        feature_names = tuple(_parse_kv(lines[10], "features").split())
        if lines[11].strip() != "nodes:":
            raise ValidationError("expected nodes section")
        nodes: list[TreeNode] = []
        for line in lines[12:]:
            parts = line.split()
            index = int(parts[0])
            if index != len(nodes):
                raise ValidationError("node indices must be dense and ordered")
            fields = dict(cell.split("=", 1) for cell in parts[2:])
            if parts[1] == "leaf":
                nodes.append(
                    TreeNode("leaf", int(fields["n"]), float(fields["pos"]))
                )
            else:
                nodes.append(
                    TreeNode(
                        "split",
                        int(fields["n"]),
                        float(fields["pos"]),
                        feature_index=feature_names.index(fields["feature"]),
                        threshold=float(fields["threshold"]),
                        left=int(fields["left"]),
                        right=int(fields["right"]),
                    )
                )
        tree = DecisionTreeModel(
            nodes=nodes,
            max_depth=max_depth,
            min_leaf=min_leaf,
            feature_names=feature_names,
            schema_version=schema_version,
            trained_at=trained_at,
            seed=seed,
        )
        return TrainedModel(
            kind=KIND_TREE,
            asset_type=asset_type,
            tree=tree,
            metrics=metrics,
            trained_at=trained_at,
            window_days=window_days,
        )
    if kind != KIND_SCORING:
        raise ValidationError(f"unknown model kind {kind!r}")
    intercept = int(_parse_kv(lines[8], "intercept"))
    dropped_raw = _parse_kv(lines[9], "dropped")
    dropped = [] if dropped_raw == "-" else dropped_raw.split()
    if lines[10].strip() != "points:":
        raise ValidationError("expected points section")
    names: list[str] = []
    weights: list[int] = []
    edges: list[list[float]] = []
    for line in lines[11:]:
        parts = line.split()
        names.append(parts[0])
        fields = dict(cell.split("=", 1) for cell in parts[1:])
        weights.append(int(fields["weight"]))
        edges.append([float(v) for v in fields["edges"].split(",")])
    scoring = ScoringSystemModel(
        feature_names=tuple(names),
        weights=weights,
        intercept=intercept,
        bin_edges=edges,
        dropped_features=dropped,
        schema_version=schema_version,
        trained_at=trained_at,
        seed=seed,
    )
    return TrainedModel(
        kind=KIND_SCORING,
        asset_type=asset_type,
        scoring=scoring,
        metrics=metrics,
        dropped_features=dropped,
        trained_at=trained_at,
        window_days=window_days,
    )


# ----------------------------------------------------------------------
# store integration
# ----------------------------------------------------------------------


def store_model(store: Store, model: TrainedModel) -> str:
    meta = {
        "kind": model.kind,
        "asset_type": model.asset_type.value,
        "schema_version": model.schema_version,
        "metrics": model.metrics,
        "window_days": model.window_days,
        "dropped_features": model.dropped_features,
    }
    model_id = store.record_model(meta, model_to_text(model), model.trained_at)
    model.model_id = model_id
    store.model_cache[model_id] = model
    return model_id


def current_model(store: Store, asset_type: AssetType) -> TrainedModel:
    payload = store.models_current.get(AssetType(asset_type).value)
    if payload is None:
        raise NoModelForAssetType(AssetType(asset_type).value)
    return load_model(store, payload["model_id"])


def load_model(store: Store, model_id: str) -> TrainedModel:
    cached = store.model_cache.get(model_id)
    if cached is not None:
        return cached
    payload = store.models_by_id.get(model_id)
    if payload is None:
        raise NoModelForAssetType(f"no model {model_id!r}")
    model = model_from_text(payload["blob"])
    model.model_id = model_id
    store.model_cache[model_id] = model
    return model
