"""Point-in-time feature extraction for (asset, candidate) pairs.

Every feature is computed from events and attribution records strictly
before `as_of`, so a labeling event can never leak into its own features.
Missing signals are encoded as caps (365 recency days, org distance 10)
rather than sentinels, which keeps thresholds monotone.

Cosine and norm summations iterate keys in sorted order. That makes the
float result a deterministic function of the inputs, independent of dict
insertion history.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .errors import UnknownAsset, UnknownCandidate
from .model import AssetType, InteractionAction, SECONDS_PER_DAY
from .store import Store

SCHEMA_VERSION = 1

RECENCY_CAP_DAYS = 365.0
ORG_DISTANCE_CAP = 10
TOUCH_WINDOW_DAYS = 90
ADMIN_WINDOW_DAYS = 30

_FEATURE_DOCS = {
    "f_recency_days": (
        "Days since the candidate last interacted with the asset, capped at 365."
    ),
    "f_touch_count_90d": (
        "Number of the candidate's interactions with the asset in the last 90 days."
    ),
    "f_authorship_share": (
        "Fraction of all modifications to the asset made by the candidate."
    ),
    "f_annotation_match": (
        "1 when an ownership or oncall directive on the asset names the candidate."
    ),
    "f_admin_actions_30d": (
        "Number of the candidate's administrative actions on the table in the last 30 days."
    ),
    "f_org_distance": (
        "Org-tree hops between the candidate and the current owner, capped at 10; "
        "10 when the asset is unowned."
    ),
    "f_dependency_experience": (
        "Cosine similarity between the candidate's per-asset interaction counts and "
        "the asset's dependency neighborhood."
    ),
    "f_neighbor_ownership_share": (
        "Fraction of the asset's dependency neighbors currently owned by the candidate."
    ),
}

_BASE_FEATURES = [
    "f_recency_days",
    "f_touch_count_90d",
    "f_authorship_share",
    "f_annotation_match",
    "f_org_distance",
    "f_dependency_experience",
    "f_neighbor_ownership_share",
]

_TABLE_FEATURES = [
    "f_recency_days",
    "f_touch_count_90d",
    "f_authorship_share",
    "f_annotation_match",
    "f_admin_actions_30d",
    "f_org_distance",
    "f_dependency_experience",
    "f_neighbor_ownership_share",
]


@dataclass(frozen=True)
class FeatureSchema:
    asset_type: AssetType
    feature_names: tuple[str, ...]

    def doc(self, name: str) -> str:
        return _FEATURE_DOCS[name]

    def index_of(self, name: str) -> int:
        return self.feature_names.index(name)

    def __len__(self) -> int:
        return len(self.feature_names)


_SCHEMAS = {
    AssetType.SOURCE_FILE: FeatureSchema(AssetType.SOURCE_FILE, tuple(_BASE_FEATURES)),
    AssetType.CONFIG_FILE: FeatureSchema(AssetType.CONFIG_FILE, tuple(_BASE_FEATURES)),
    AssetType.WAREHOUSE_TABLE: FeatureSchema(
        AssetType.WAREHOUSE_TABLE, tuple(_TABLE_FEATURES)
    ),
}


def schema_for(asset_type: AssetType) -> FeatureSchema:
    return _SCHEMAS[AssetType(asset_type)]


@dataclass
class FeatureVector:
    asset_id: str
    candidate_id: str
    as_of: float
    values: list[tuple[str, float]]
    schema_version: int = SCHEMA_VERSION

    def value(self, name: str) -> float:
        for feature_name, value in self.values:
            if feature_name == name:
                return value
        raise KeyError(name)

    def floats(self) -> list[float]:
        return [value for _, value in self.values]

    def names(self) -> list[str]:
        return [name for name, _ in self.values]


def compute_features(
    store: Store,
    asset_id: str,
    candidate_id: str,
    as_of: float,
    cache: Optional[dict] = None,
) -> FeatureVector:
    """All eight signals for one (asset, candidate) pair at one instant.

    Only history strictly before `as_of` participates. An optional caller
    owned `cache` dict memoizes per-candidate experience vectors across
    calls that share an unchanged store."""
    asset = store.assets.get(asset_id)
    if asset is None:
        raise UnknownAsset(asset_id)
    candidate = store.candidates.get(candidate_id)
    if candidate is None:
        raise UnknownCandidate(candidate_id)
    schema = schema_for(asset.asset_type)
    pair = store.pair_activity(asset_id, candidate_id)
    values: list[tuple[str, float]] = []
    for name in schema.feature_names:
        if name == "f_recency_days":
            last = pair.all.last_before(as_of)
            if last is None:
                v = RECENCY_CAP_DAYS
            else:
                v = min(RECENCY_CAP_DAYS, (as_of - last) / SECONDS_PER_DAY)
        elif name == "f_touch_count_90d":
            lo = as_of - TOUCH_WINDOW_DAYS * SECONDS_PER_DAY
            v = float(pair.all.count_in(lo, as_of))
        elif name == "f_authorship_share":
            mine = pair.action_times(InteractionAction.MODIFY.value).count_before(as_of)
            total = (
                store.asset_activity(asset_id)
                .action_times(InteractionAction.MODIFY.value)
                .count_before(as_of)
            )
            v = mine / total if total else 0.0
        elif name == "f_annotation_match":
            v = 1.0 if candidate_id in store.annotation_names(asset_id, as_of) else 0.0
        elif name == "f_admin_actions_30d":
            lo = as_of - ADMIN_WINDOW_DAYS * SECONDS_PER_DAY
            v = float(
                pair.action_times(InteractionAction.ADMIN_ACTION.value).count_in(lo, as_of)
            )
        elif name == "f_org_distance":
            owner_id = store.owner_before(asset_id, as_of)
            if owner_id is None:
                v = float(ORG_DISTANCE_CAP)
            else:
                v = float(
                    store.org_distance(
                        store.org_node_before(candidate_id, as_of),
                        store.org_node_before(owner_id, as_of),
                        ORG_DISTANCE_CAP,
                    )
                )
        elif name == "f_dependency_experience":
            v = _dependency_experience(store, asset_id, candidate_id, as_of, cache)
        elif name == "f_neighbor_ownership_share":
            neighbors = store.dependency_neighbors(asset_id, before=as_of)
            if not neighbors:
                v = 0.0
            else:
                owned = sum(
                    1
                    for n in neighbors
                    if store.owner_before(n, as_of) == candidate_id
                )
                v = owned / len(neighbors)
        else:
            raise AssertionError(f"unhandled feature {name}")
        values.append((name, v))
    return FeatureVector(asset_id, candidate_id, as_of, values)


def _experience_vector(
    store: Store, candidate_id: str, as_of: float, cache: Optional[dict]
) -> tuple[dict[str, int], float]:
    """Per-asset interaction counts before `as_of`, plus the vector norm.
    The norm sums squares in sorted asset order for reproducibility."""
    key = ("experience", candidate_id, as_of)
    if cache is not None and key in cache:
        return cache[key]
    experience: dict[str, int] = {}
    norm_sq = 0.0
    for touched in sorted(store.assets_touched_by(candidate_id)):
        count = store.pair_activity(touched, candidate_id).all.count_before(as_of)
        if count:
            experience[touched] = count
            norm_sq += float(count) ** 2
    result = (experience, math.sqrt(norm_sq))
    if cache is not None:
        cache[key] = result
    return result


def _dependency_experience(
    store: Store,
    asset_id: str,
    candidate_id: str,
    as_of: float,
    cache: Optional[dict] = None,
) -> float:
    """Cosine between the candidate's experience counts and a uniform vector
    over the asset plus its dependency neighbors. Keys iterate in sorted
    order so the summations are reproducible bit for bit."""
    requirement = sorted(
        set(store.dependency_neighbors(asset_id, before=as_of)) | {asset_id}
    )
    experience, norm_e = _experience_vector(store, candidate_id, as_of, cache)
    if not experience:
        return 0.0
    dot = 0.0
    for key in requirement:
        dot += float(experience.get(key, 0))
    if dot == 0.0:
        return 0.0
    norm_r = math.sqrt(float(len(requirement)))
    return dot / (norm_e * norm_r)


def compute_feature_matrix(
    store: Store, pairs: list[tuple[str, str, float]]
) -> list[FeatureVector]:
    cache: dict = {}
    return [
        compute_features(store, asset_id, candidate_id, as_of, cache)
        for asset_id, candidate_id, as_of in pairs
    ]


def matrix_to_tsv(vectors: list[FeatureVector]) -> str:
    """Tab-separated export with a header row; one vector per line."""
    if not vectors:
        return "asset_id\tcandidate_id\tas_of\n"
    names = vectors[0].names()
    lines = ["\t".join(["asset_id", "candidate_id", "as_of"] + names)]
    for vec in vectors:
        if vec.names() != names:
            raise ValueError("mixed feature schemas in one matrix")
        cells = [vec.asset_id, vec.candidate_id, repr(vec.as_of)]
        cells.extend(repr(v) for v in vec.floats())
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"
