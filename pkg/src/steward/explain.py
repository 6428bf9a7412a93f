"""Explanation artifacts: global importance, per-prediction attribution,
and counterfactual sentences.

Three complementary views of the same model:

* permutation importance says which features the model leans on globally;
* path/points attribution decomposes one prediction into additive
  per-feature contributions;
* counterfactuals state the smallest actionable single-feature change that
  would alter the outcome, rendered as a plain sentence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import EmptyTestSet, SchemaMismatch
from .featurize import FeatureVector, schema_for
from .labeling import Label, LabeledExample
from .learn import KIND_SCORING, KIND_TREE, TrainedModel, accuracy_of, predict
from .model import AssetType

RECENCY_MENU = [1.0, 2.0, 7.0, 30.0, 90.0]
COUNT_MENU = [1.0, 5.0, 20.0]

# which features a person can plausibly act on; shares, similarity, and org
# position are outcomes of history or structure, not direct actions
_ACTIONABLE = {
    "f_recency_days": "recency",
    "f_touch_count_90d": "count",
    "f_admin_actions_30d": "count",
    "f_annotation_match": "binary",
}


@dataclass
class ImportanceEntry:
    feature_name: str
    mean_drop: float
    std_dev: float


@dataclass
class GlobalImportanceReport:
    entries: list[ImportanceEntry]
    repeats: int
    seed: int
    baseline_accuracy: float
    metric: str = "accuracy"

    def by_name(self, name: str) -> ImportanceEntry:
        for entry in self.entries:
            if entry.feature_name == name:
                return entry
        raise KeyError(name)


def permutation_importance(
    model: TrainedModel,
    test: list[LabeledExample],
    repeats: int = 10,
    seed: int = 0,
) -> GlobalImportanceReport:
    """Shuffle one feature column at a time across the test set and measure
    the accuracy drop. Permutations draw from one seeded generator, features
    in schema order, repeats innermost."""
    if not test:
        raise EmptyTestSet("permutation importance needs a non-empty test set")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    names = list(test[0].features.names())
    labels = [1 if e.label is Label.POSITIVE else 0 for e in test]
    baseline_scores = [predict(model, e.features) for e in test]
    baseline = accuracy_of(labels, baseline_scores)
    matrix = [list(e.features.floats()) for e in test]
    n = len(test)
    rng = np.random.default_rng(seed)
    entries = []
    for column, name in enumerate(names):
        drops = []
        for _ in range(repeats):
            perm = rng.permutation(n)
            scores = []
            for row in range(n):
                values = list(matrix[row])
                values[column] = matrix[int(perm[row])][column]
                shuffled = FeatureVector(
                    asset_id=test[row].features.asset_id,
                    candidate_id=test[row].features.candidate_id,
                    as_of=test[row].features.as_of,
                    values=list(zip(names, values)),
                    schema_version=test[row].features.schema_version,
                )
                scores.append(predict(model, shuffled))
            drops.append(baseline - accuracy_of(labels, scores))
        mean = float(np.mean(drops))
        std = float(np.std(drops))
        entries.append(ImportanceEntry(name, mean, std))
    return GlobalImportanceReport(entries, repeats, seed, baseline)


@dataclass
class PredictionAttribution:
    base_value: float
    contributions: list[tuple[str, float]]
    final_score: float
    score_kind: str  # "probability" for trees, "points" for scoring systems
    probability: float  # final prediction in [0,1] for either family

    def total(self) -> float:
        acc = self.base_value
        for _, contribution in self.contributions:
            acc += contribution
        return acc


def attribute_prediction(model: TrainedModel, features: FeatureVector) -> PredictionAttribution:
    _check_schema(model, features)
    if model.kind == KIND_TREE:
        tree = model.tree
        values = features.floats()
        path = tree.path(values)
        base = tree.nodes[0].positive_fraction
        merged: dict[str, float] = {}
        order: list[str] = []
        for parent_index, child_index in zip(path, path[1:]):
            parent = tree.nodes[parent_index]
            child = tree.nodes[child_index]
            name = tree.feature_names[parent.feature_index]
            if name not in merged:
                merged[name] = 0.0
                order.append(name)
            merged[name] += child.positive_fraction - parent.positive_fraction
        contributions = [(name, merged[name]) for name in order]
        final = tree.nodes[path[-1]].positive_fraction
        return PredictionAttribution(base, contributions, final, "probability", final)
    scoring = model.scoring
    by_name = dict(features.values)
    contributions = []
    total = scoring.intercept
    for pos, name in enumerate(scoring.feature_names):
        points = scoring.weights[pos] * scoring.bin_of(pos, by_name[name])
        contributions.append((name, float(points)))
        total += points
    probability = 1.0 / (1.0 + math.exp(-float(total)))
    return PredictionAttribution(
        float(scoring.intercept), contributions, float(total), "points", probability
    )


@dataclass(frozen=True)
class FlipLabel:
    pass


@dataclass(frozen=True)
class EnterTopK:
    k: int


Target = Union[FlipLabel, EnterTopK]


@dataclass
class Counterfactual:
    feature_name: str
    original_value: float
    counterfactual_value: float
    resulting_score: float
    resulting_rank: Optional[int]
    sentence: str


def _check_schema(model: TrainedModel, features: FeatureVector) -> None:
    if features.schema_version != model.schema_version:
        raise SchemaMismatch(
            f"feature schema v{features.schema_version} vs model v{model.schema_version}"
        )
    expected = schema_for(model.asset_type).feature_names
    if tuple(features.names()) != expected:
        raise SchemaMismatch("feature vector does not match the model's asset type")


def _menu_for(kind: str, value: float) -> list[float]:
    """Replacement values, smallest change first."""
    if kind == "recency":
        options = [v for v in RECENCY_MENU if v != value]
        options.sort(key=lambda v: (abs(v - value), v))
        return options
    if kind == "count":
        return [value + delta for delta in COUNT_MENU]
    if kind == "binary":
        return [0.0 if value != 0.0 else 1.0]
    raise AssertionError(kind)


def _with_value(features: FeatureVector, name: str, new_value: float) -> FeatureVector:
    values = [
        (feature_name, new_value if feature_name == name else value)
        for feature_name, value in features.values
    ]
    return FeatureVector(
        features.asset_id,
        features.candidate_id,
        features.as_of,
        values,
        features.schema_version,
    )


def _rank_within(
    context: list[tuple[str, float]], candidate_id: str, new_score: float
) -> int:
    """1-based rank after replacing candidate_id's score; ties order by id."""
    rows = [
        (candidate_id, new_score) if cid == candidate_id else (cid, score)
        for cid, score in context
    ]
    rows.sort(key=lambda row: (-row[1], row[0]))
    for position, (cid, _) in enumerate(rows, start=1):
        if cid == candidate_id:
            return position
    raise ValueError(f"candidate {candidate_id!r} missing from context")


def _achieves(
    model: TrainedModel,
    features: FeatureVector,
    target: Target,
    context: Optional[list[tuple[str, float]]],
    baseline_positive: bool,
) -> tuple[bool, float, Optional[int]]:
    score = predict(model, features)
    if isinstance(target, FlipLabel):
        return ((score >= 0.5) != baseline_positive, score, None)
    rank = _rank_within(context, features.candidate_id, score)
    return (rank <= target.k, score, rank)


def find_counterfactual(
    model: TrainedModel,
    features: FeatureVector,
    target: Target,
    context: Optional[list[tuple[str, float]]] = None,
) -> Optional[Counterfactual]:
    """Greedy single-feature search over the fixed perturbation menu.

    Features are tried in schema order, each feature's replacements in order
    of increasing change; the first perturbation achieving the target wins.
    Returns None when no single-feature change from the menu suffices."""
    _check_schema(model, features)
    if isinstance(target, EnterTopK):
        if context is None:
            raise ValueError("EnterTopK needs the recommendation context")
        if target.k < 1:
            raise ValueError("k must be >= 1")
        # nothing to explain when the entry already sits inside the top k
        unchanged = predict(model, features)
        if _rank_within(context, features.candidate_id, unchanged) <= target.k:
            return None
    baseline_positive = predict(model, features) >= 0.5
    for name, value in features.values:
        kind = _ACTIONABLE.get(name)
        if kind is None:
            continue
        for new_value in _menu_for(kind, value):
            changed = _with_value(features, name, new_value)
            achieved, score, rank = _achieves(
                model, changed, target, context, baseline_positive
            )
            if achieved:
                sentence = render_sentence(
                    model.asset_type, name, new_value, value, target, score, rank
                )
                return Counterfactual(name, value, new_value, score, rank, sentence)
    return None


def _fmt_number(value: float) -> str:
    if value == int(value):
        return str(int(value))
    return f"{value:g}"


def _noun(asset_type: AssetType) -> str:
    return "table" if asset_type is AssetType.WAREHOUSE_TABLE else "file"


def render_sentence(
    asset_type: AssetType,
    feature_name: str,
    new_value: float,
    old_value: float,
    target: Target,
    score: float,
    rank: Optional[int],
) -> str:
    noun = _noun(asset_type)
    if feature_name == "f_recency_days":
        condition = f"Had you touched the {noun} in the last {_fmt_number(new_value)} days"
    elif feature_name == "f_touch_count_90d":
        delta = _fmt_number(new_value - old_value)
        condition = (
            f"Had you interacted with the {noun} {delta} more times in the last 90 days"
        )
    elif feature_name == "f_admin_actions_30d":
        delta = _fmt_number(new_value - old_value)
        condition = (
            f"Had you performed {delta} more administrative actions on the {noun} "
            f"in the last 30 days"
        )
    elif feature_name == "f_annotation_match":
        if new_value != 0.0:
            condition = f"Had an ownership annotation on the {noun} named you"
        else:
            condition = f"Had no ownership annotation on the {noun} named you"
    else:
        condition = f"Had {feature_name} been {_fmt_number(new_value)}"
    if isinstance(target, FlipLabel):
        if score >= 0.5:
            outcome = "you would have been recommended as owner"
        else:
            outcome = "you would not have been recommended as owner"
    else:
        outcome = f"you would have ranked in the top {target.k}"
    return f"{condition}, {outcome}"


def importance_to_text(report: GlobalImportanceReport) -> str:
    lines = [
        f"permutation importance ({report.metric}, baseline "
        f"{report.baseline_accuracy:.4f}, {report.repeats} repeats, seed {report.seed})"
    ]
    width = max((len(e.feature_name) for e in report.entries), default=0)
    for entry in sorted(report.entries, key=lambda e: -e.mean_drop):
        lines.append(
            f"  {entry.feature_name.ljust(width)}  {entry.mean_drop:+.4f}"
            f" +/- {entry.std_dev:.4f}"
        )
    return "\n".join(lines) + "\n"


def attribution_to_text(attribution: PredictionAttribution) -> str:
    unit = "points" if attribution.score_kind == "points" else ""
    lines = [f"base {attribution.base_value:+.4f} {unit}".rstrip()]
    for name, contribution in attribution.contributions:
        lines.append(f"  {name}  {contribution:+.4f}")
    lines.append(
        f"= {attribution.final_score:+.4f} {unit}".rstrip()
        + f" (probability {attribution.probability:.4f})"
    )
    return "\n".join(lines) + "\n"
