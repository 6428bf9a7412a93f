"""Shortlisting, ranking, and the human decision loop.

A recommendation is a ranked shortlist of owner candidates for one asset at
one instant, each entry carrying its score, an additive attribution, and
(for the nearly-recommended entry) a counterfactual sentence. Confidence
bands gate what happens next: AutoEligible results may be applied without
review when that is explicitly enabled, Inconclusive ones are surfaced but
flagged, everything else queues for a human.

Accepting is the only path that changes attribution, and it lands as a
single decision event; rejecting records the judgment and nothing else.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .errors import (
    CandidateNotInRecommendation,
    StaleRecommendation,
    UnknownAsset,
    UnknownCandidate,
    UnknownRecommendation,
    ValidationError,
)
from .explain import (
    Counterfactual,
    EnterTopK,
    PredictionAttribution,
    attribute_prediction,
    find_counterfactual,
)
from .featurize import compute_features
from .learn import TrainedModel, predict
from .model import (
    SECONDS_PER_DAY,
    AttributionSource,
    CandidateType,
    Decision,
)
from .store import RecommendationState, Store

SHORTLIST_MIN = 3
SHORTLIST_MAX = 100
SHORTLIST_WINDOW_DAYS = 365


class Band(str, Enum):
    AUTO_ELIGIBLE = "AutoEligible"
    NEEDS_REVIEW = "NeedsReview"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class BandThresholds:
    auto_score: float = 0.9
    auto_margin: float = 0.2
    abstain_below: float = 0.5


@dataclass
class RecommendationEntry:
    candidate_id: str
    score: float
    attribution: PredictionAttribution
    counterfactual: Optional[Counterfactual] = None


@dataclass
class Recommendation:
    asset_id: str
    as_of: float
    entries: list[RecommendationEntry]
    band: Band
    model_id: str
    recommendation_id: str = ""


def _touch_count_365d(store: Store, asset_id: str, candidate_id: str, as_of: float) -> int:
    lo = as_of - SHORTLIST_WINDOW_DAYS * SECONDS_PER_DAY
    return store.pair_activity(asset_id, candidate_id).all.count_in(lo, as_of)


def shortlist(store: Store, asset_id: str, as_of: float) -> list[str]:
    """Candidate pool for one asset: recent participants, annotated names,
    and owners of dependency neighbors; capped to [3, 100] where the active
    pool allows. Only active candidates are eligible."""
    if asset_id not in store.assets:
        raise UnknownAsset(asset_id)

    def active(candidate_id: str) -> bool:
        candidate = store.candidates.get(candidate_id)
        return candidate is not None and candidate.active

    chosen: set[str] = set()
    for candidate_id in store.candidates:
        if active(candidate_id) and _touch_count_365d(store, asset_id, candidate_id, as_of):
            chosen.add(candidate_id)
    for name in store.annotation_names(asset_id, before=as_of):
        if active(name):
            chosen.add(name)
    for neighbor in store.dependency_neighbors(asset_id, before=as_of):
        owner = store.owner_before(neighbor, as_of)
        if owner is not None and active(owner):
            chosen.add(owner)

    if len(chosen) > SHORTLIST_MAX:
        ranked = sorted(
            chosen,
            key=lambda c: (-_touch_count_365d(store, asset_id, c, as_of), c),
        )
        return sorted(ranked[:SHORTLIST_MAX])

    if len(chosen) < SHORTLIST_MIN:
        owner = store.owner_before(asset_id, as_of)
        backfill: list[str] = []
        if owner is not None and owner in store.candidates:
            owner_node = store.org_node_before(owner, as_of)
            backfill.extend(
                candidate_id
                for candidate_id in sorted(store.candidates)
                if active(candidate_id)
                and store.org_node_before(candidate_id, as_of) == owner_node
            )
        backfill.extend(
            candidate_id for candidate_id in sorted(store.candidates) if active(candidate_id)
        )
        for candidate_id in backfill:
            if len(chosen) >= SHORTLIST_MIN:
                break
            chosen.add(candidate_id)

    return sorted(chosen)


def band_of(entries: list[RecommendationEntry], thresholds: BandThresholds) -> Band:
    if not entries:
        return Band.INCONCLUSIVE
    top = entries[0].score
    second = entries[1].score if len(entries) > 1 else 0.0
    if top >= thresholds.auto_score and top - second >= thresholds.auto_margin:
        return Band.AUTO_ELIGIBLE
    if top < thresholds.abstain_below:
        return Band.INCONCLUSIVE
    return Band.NEEDS_REVIEW


def recommend_owner(
    store: Store,
    asset_id: str,
    as_of: float,
    model: TrainedModel,
    thresholds: BandThresholds = BandThresholds(),
    cache: Optional[dict] = None,
) -> Recommendation:
    candidates = shortlist(store, asset_id, as_of)
    scored = []
    for candidate_id in candidates:
        features = compute_features(store, asset_id, candidate_id, as_of, cache)
        score = predict(model, features)
        scored.append((candidate_id, score, features))
    scored.sort(key=lambda row: (-row[1], row[0]))
    entries = [
        RecommendationEntry(candidate_id, score, attribute_prediction(model, features))
        for candidate_id, score, features in scored
    ]
    if len(scored) > SHORTLIST_MIN:
        # the nearly-recommended entry: best score outside the top 3
        context = [(candidate_id, score) for candidate_id, score, _ in scored]
        nearly = scored[SHORTLIST_MIN]
        entries[SHORTLIST_MIN].counterfactual = find_counterfactual(
            model, nearly[2], EnterTopK(SHORTLIST_MIN), context
        )
    return Recommendation(
        asset_id=asset_id,
        as_of=as_of,
        entries=entries,
        band=band_of(entries, thresholds),
        model_id=model.model_id,
    )


# ----------------------------------------------------------------------
# persistence and the decision loop
# ----------------------------------------------------------------------


def _attribution_payload(attribution: PredictionAttribution) -> dict:
    return {
        "base_value": attribution.base_value,
        "contributions": [[name, value] for name, value in attribution.contributions],
        "final_score": attribution.final_score,
        "score_kind": attribution.score_kind,
        "probability": attribution.probability,
    }


def _counterfactual_payload(counterfactual: Optional[Counterfactual]) -> Optional[dict]:
    if counterfactual is None:
        return None
    return {
        "feature_name": counterfactual.feature_name,
        "original_value": counterfactual.original_value,
        "counterfactual_value": counterfactual.counterfactual_value,
        "resulting_score": counterfactual.resulting_score,
        "resulting_rank": counterfactual.resulting_rank,
        "sentence": counterfactual.sentence,
    }


def recommendation_payload_entries(recommendation: Recommendation) -> list[dict]:
    return [
        {
            "candidate_id": entry.candidate_id,
            "score": entry.score,
            "attribution": _attribution_payload(entry.attribution),
            "counterfactual": _counterfactual_payload(entry.counterfactual),
        }
        for entry in recommendation.entries
    ]


def issue(store: Store, recommendation: Recommendation) -> str:
    """Persist a recommendation so decisions can reference it."""
    rec_id = store.issue_recommendation(
        recommendation.asset_id,
        recommendation.as_of,
        recommendation.model_id,
        recommendation.band.value,
        recommendation_payload_entries(recommendation),
    )
    recommendation.recommendation_id = rec_id
    return rec_id


@dataclass
class DecisionResult:
    decision_id: str
    recommendation_id: Optional[str]
    asset_id: str
    candidate_id: str
    decision: Decision
    new_owner: Optional[str] = None


def _require_individual(store: Store, candidate_id: str, role: str) -> None:
    candidate = store.candidates.get(candidate_id)
    if candidate is None:
        raise UnknownCandidate(candidate_id)
    if candidate.candidate_type is not CandidateType.INDIVIDUAL:
        raise ValidationError(f"{role} must be an Individual, got {candidate_id!r}")


def apply_decision(
    store: Store,
    recommendation_id: str,
    candidate_id: str,
    decision: Decision,
    decided_by: str,
    at: float,
    delegate_to: Optional[str] = None,
) -> DecisionResult:
    """Record one human judgment on an issued recommendation.

    Accept transfers ownership to the candidate (unless they already own the
    asset, in which case the judgment is recorded as a confirming label and
    attribution stays untouched). First decision wins; anything later sees
    StaleRecommendation.
    """
    state = store.get_recommendation(recommendation_id)
    if state is None:
        raise UnknownRecommendation(recommendation_id)
    if not any(entry["candidate_id"] == candidate_id for entry in state.entries):
        raise CandidateNotInRecommendation(
            f"{candidate_id!r} not in recommendation {recommendation_id!r}"
        )
    if state.status != "pending":
        raise StaleRecommendation(
            f"recommendation {recommendation_id!r} already {state.status}"
        )
    _require_individual(store, decided_by, "decided_by")
    decision = Decision(decision)
    new_owner = None
    if decision is Decision.ACCEPT:
        already_owner = store.current_owner(state.asset_id, at) == candidate_id
        apply_transfer = not already_owner
        if apply_transfer:
            store._validate_transfer(state.asset_id, candidate_id, at)
            new_owner = candidate_id
        decision_id = store.record_decision(
            recommendation_id,
            state.asset_id,
            candidate_id,
            decision.value,
            decided_by,
            at,
            apply_transfer=apply_transfer,
        )
    elif decision is Decision.DELEGATE:
        if delegate_to is None:
            raise ValidationError("Delegate requires delegate_to")
        _require_individual(store, delegate_to, "delegate_to")
        decision_id = store.record_decision(
            recommendation_id,
            state.asset_id,
            candidate_id,
            decision.value,
            decided_by,
            at,
            delegate_to=delegate_to,
        )
    else:
        decision_id = store.record_decision(
            recommendation_id,
            state.asset_id,
            candidate_id,
            decision.value,
            decided_by,
            at,
        )
    return DecisionResult(
        decision_id=decision_id,
        recommendation_id=recommendation_id,
        asset_id=state.asset_id,
        candidate_id=candidate_id,
        decision=decision,
        new_owner=new_owner,
    )


def auto_apply(store: Store, recommendation_id: str, at: float) -> Optional[str]:
    """Apply an AutoEligible recommendation without a human in the loop.

    Gated behind an explicit call because machine applications are not
    reliable human judgments and never become labels. Returns the new owner,
    or None when the top candidate already owns the asset."""
    state = store.get_recommendation(recommendation_id)
    if state is None:
        raise UnknownRecommendation(recommendation_id)
    if state.status != "pending":
        raise StaleRecommendation(
            f"recommendation {recommendation_id!r} already {state.status}"
        )
    if state.band != Band.AUTO_ELIGIBLE.value:
        raise ValidationError("only AutoEligible recommendations can be auto-applied")
    top = state.entries[0]["candidate_id"]
    if store.current_owner(state.asset_id, at) == top:
        return None
    store.transfer_owner(
        state.asset_id,
        top,
        at,
        AttributionSource.AUTO_APPLIED,
        actor_id=None,
        recommendation_id=recommendation_id,
    )
    return top


def render_text(recommendation: Recommendation) -> str:
    lines = [
        f"asset {recommendation.asset_id} as of {recommendation.as_of!r}"
        f"  band={recommendation.band.value}  model={recommendation.model_id or '-'}"
    ]
    for position, entry in enumerate(recommendation.entries, start=1):
        lines.append(f"  {position:3d}. {entry.candidate_id}  score={entry.score:.4f}")
        if entry.counterfactual is not None:
            lines.append(f"       {entry.counterfactual.sentence}")
    return "\n".join(lines) + "\n"
