"""Materialized state: a deterministic fold of the event log.

A `Store` owns one `EventLog`. Every mutation validates against current
state, appends exactly one event (bulk ingestion appends one event per
record), and folds it into the indexes. `replay` rebuilds an identical store
from the log alone, so any snapshot is reproducible from bytes.

Reads are pure functions of the folded state; the single-writer discipline
lives in the log's advisory lock.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Iterable, Optional

from . import persist
from .errors import (
    InactiveCandidate,
    NonMonotonicTimestamp,
    RedundantTransfer,
    UnknownAsset,
    UnknownCandidate,
    UnknownOrgNode,
    ValidationError,
)
from .model import (
    AnnotationKind,
    Asset,
    AssetType,
    AttributionRecord,
    AttributionSource,
    CandidateType,
    Direction,
    EdgeKind,
    InteractionAction,
    InteractionEvent,
    OrgNode,
    OrgNodeKind,
    OrgTree,
    OwnerCandidate,
    OwnershipAnnotation,
)

AUTO_ROOT_NODE = "org-auto-root"
UNASSIGNED_NODE = "org-unassigned"


class SortedTimes:
    """Append-friendly multiset of timestamps with lazy sorting."""

    __slots__ = ("_times", "_dirty")

    def __init__(self):
        self._times: list[float] = []
        self._dirty = False

    def add(self, ts: float) -> None:
        if self._times and ts < self._times[-1]:
            self._dirty = True
        self._times.append(ts)

    def _ensure(self) -> list[float]:
        if self._dirty:
            self._times.sort()
            self._dirty = False
        return self._times

    def count_before(self, ts: float) -> int:
        return bisect.bisect_left(self._ensure(), ts)

    def count_in(self, lo: float, hi: float) -> int:
        """Count of timestamps in the half-open window [lo, hi)."""
        times = self._ensure()
        return bisect.bisect_left(times, hi) - bisect.bisect_left(times, lo)

    def last_before(self, ts: float) -> Optional[float]:
        times = self._ensure()
        i = bisect.bisect_left(times, ts)
        return times[i - 1] if i else None

    def __len__(self) -> int:
        return len(self._times)


@dataclass
class _PairActivity:
    """Interaction history for one (asset, candidate) pair."""

    all: SortedTimes = field(default_factory=SortedTimes)
    by_action: dict[str, SortedTimes] = field(default_factory=dict)

    def action_times(self, action: str) -> SortedTimes:
        times = self.by_action.get(action)
        if times is None:
            times = self.by_action[action] = SortedTimes()
        return times


@dataclass
class RecommendationState:
    recommendation_id: str
    asset_id: str
    as_of: float
    model_id: str
    band: str
    entries: list[dict]
    issue_seq: int
    status: str = "pending"  # pending | decided
    assignee: Optional[str] = None
    decided_by: Optional[str] = None
    decided_at: Optional[float] = None
    decision: Optional[str] = None
    decided_candidate: Optional[str] = None


@dataclass
class DecisionLogEntry:
    decision_id: str
    recommendation_id: Optional[str]
    asset_id: str
    candidate_id: str
    decision: str
    delegate_to: Optional[str]
    decided_by: str
    at: float


@dataclass
class TransferLogEntry:
    at: float
    asset_id: str
    owner_id: str
    source: str
    actor_id: Optional[str]
    from_decision: bool = False


class Store:
    def __init__(self, log: Optional[persist.EventLog] = None):
        self.log = log if log is not None else persist.EventLog()
        self.assets: dict[str, Asset] = {}
        self.asset_by_path: dict[str, str] = {}
        self.candidates: dict[str, OwnerCandidate] = {}
        self.candidate_org_history: dict[str, list[tuple[float, str]]] = {}
        self.org = OrgTree()
        self.attribution: dict[str, list[AttributionRecord]] = {}
        self._open_record: dict[str, AttributionRecord] = {}
        self.transfers: list[TransferLogEntry] = []
        self._deps_out: dict[str, list[tuple[str, EdgeKind, float]]] = {}
        self._deps_in: dict[str, list[tuple[str, EdgeKind, float]]] = {}
        self._dep_keys: set[tuple[str, str, str]] = set()
        self._seen_interactions: set[str] = set()
        self._pair_activity: dict[tuple[str, str], _PairActivity] = {}
        self._asset_activity: dict[str, _PairActivity] = {}
        self.actor_assets: dict[str, set[str]] = {}
        self.annotations: dict[str, list[tuple[float, OwnershipAnnotation]]] = {}
        self.recommendations: dict[str, RecommendationState] = {}
        self._recommendation_order: list[str] = []
        self.decisions: list[tuple[int, DecisionLogEntry]] = []
        self.models_current: dict[str, dict] = {}
        self.models_by_id: dict[str, dict] = {}
        self.model_cache: dict[str, object] = {}
        self.quarantine: list[str] = []
        self.max_event_ts: float = 0.0
        if len(self.log):
            for event in self.log.events():
                self._apply(event.kind, event.payload)

    # ------------------------------------------------------------------
    # event plumbing
    # ------------------------------------------------------------------

    def _append(self, kind: str, payload: dict, recorded_at: float) -> int:
        event = self.log.append(kind, payload, recorded_at)
        self._apply(kind, payload)
        return event.sequence_number

    def _append_many(self, items: list[tuple[str, dict, float]]) -> list[int]:
        events = self.log.append_many(items)
        for event in events:
            self._apply(event.kind, event.payload)
        return [e.sequence_number for e in events]

    def _apply(self, kind: str, payload: dict) -> None:
        handler = _FOLD[kind]
        handler(self, payload)
        ts = payload.get("at") or payload.get("valid_from") or payload.get("created_at")
        if ts is not None and ts > self.max_event_ts:
            self.max_event_ts = ts

    # ------------------------------------------------------------------
    # org tree and candidates
    # ------------------------------------------------------------------

    def add_org_node(
        self,
        node_id: str,
        parent_id: Optional[str],
        kind: OrgNodeKind,
        at: float = 0.0,
    ) -> None:
        if node_id in self.org.nodes:
            raise ValidationError(f"org node {node_id!r} already exists")
        if parent_id is None:
            if self.org.root is not None:
                raise ValidationError("org tree already has a root")
        elif parent_id not in self.org.nodes:
            raise UnknownOrgNode(parent_id)
        payload = {"node_id": node_id, "parent_id": parent_id, "kind": OrgNodeKind(kind).value}
        self._append(persist.KIND_ORG_NODE_ADDED, payload, at)

    def register_candidate(
        self,
        candidate_id: str,
        candidate_type: CandidateType,
        display_name: str,
        org_node_id: str,
        active: bool = True,
        at: float = 0.0,
    ) -> OwnerCandidate:
        candidate_type = CandidateType(candidate_type)
        if org_node_id not in self.org.nodes:
            raise UnknownOrgNode(org_node_id)
        existing = self.candidates.get(candidate_id)
        if existing is not None and existing.candidate_type != candidate_type:
            raise ValidationError(
                f"candidate {candidate_id!r} exists with type {existing.candidate_type.value}"
            )
        if candidate_type is CandidateType.INDIVIDUAL and not self.org.is_leaf(org_node_id):
            raise ValidationError("individuals must reference a leaf org node")
        payload = {
            "candidate_id": candidate_id,
            "candidate_type": candidate_type.value,
            "display_name": display_name,
            "org_node_id": org_node_id,
            "active": bool(active),
            "at": at,
        }
        self._append(persist.KIND_CANDIDATE_REGISTERED, payload, at)
        return self.candidates[candidate_id]

    def _ensure_unassigned_node(self) -> str:
        """Org slot for actors auto-registered from logs before the registry knew them."""
        if self.org.root is None:
            self.add_org_node(AUTO_ROOT_NODE, None, OrgNodeKind.COMPANY)
        if UNASSIGNED_NODE not in self.org.nodes:
            self.add_org_node(UNASSIGNED_NODE, self.org.root, OrgNodeKind.TEAM)
        return UNASSIGNED_NODE

    def auto_register_actor(self, actor_id: str, at: float) -> OwnerCandidate:
        node = self._ensure_unassigned_node()
        candidate = self.register_candidate(
            actor_id,
            CandidateType.INDIVIDUAL,
            actor_id,
            node,
            active=False,
            at=at,
        )
        self.quarantine.append(
            f"actor {actor_id!r} auto-registered (inactive) from log traffic"
        )
        return candidate

    # ------------------------------------------------------------------
    # assets and dependencies
    # ------------------------------------------------------------------

    def register_asset(
        self,
        asset_id: str,
        asset_type: AssetType,
        path_or_name: str,
        created_at: float,
    ) -> Asset:
        if asset_id in self.assets:
            raise ValidationError(f"asset {asset_id!r} already exists")
        payload = {
            "asset_id": asset_id,
            "asset_type": AssetType(asset_type).value,
            "path_or_name": path_or_name,
            "created_at": created_at,
        }
        self._append(persist.KIND_ASSET_REGISTERED, payload, created_at)
        return self.assets[asset_id]

    def delete_asset(self, asset_id: str, deleted_at: float) -> None:
        asset = self._asset(asset_id)
        if asset.deleted_at is not None:
            raise ValidationError(f"asset {asset_id!r} already deleted")
        if deleted_at < asset.created_at:
            raise ValidationError("deleted_at precedes created_at")
        payload = {"asset_id": asset_id, "deleted_at": deleted_at, "at": deleted_at}
        self._append(persist.KIND_ASSET_DELETED, payload, deleted_at)

    def add_dependency(
        self,
        from_asset_id: str,
        to_asset_id: str,
        edge_kind: EdgeKind,
        at: float = 0.0,
    ) -> bool:
        self._asset(from_asset_id)
        self._asset(to_asset_id)
        if from_asset_id == to_asset_id:
            raise ValidationError("dependency self-loops are not allowed")
        kind = EdgeKind(edge_kind)
        key = (from_asset_id, to_asset_id, kind.value)
        if key in self._dep_keys:
            return False
        payload = {
            "from_asset_id": from_asset_id,
            "to_asset_id": to_asset_id,
            "edge_kind": kind.value,
            "at": at,
        }
        self._append(persist.KIND_DEPENDENCY_RECORDED, payload, at)
        return True

    def _asset(self, asset_id: str) -> Asset:
        asset = self.assets.get(asset_id)
        if asset is None:
            raise UnknownAsset(asset_id)
        return asset

    def _candidate(self, candidate_id: str) -> OwnerCandidate:
        candidate = self.candidates.get(candidate_id)
        if candidate is None:
            raise UnknownCandidate(candidate_id)
        return candidate

    # ------------------------------------------------------------------
    # attribution
    # ------------------------------------------------------------------

    def current_owner(self, asset_id: str, at: float) -> Optional[str]:
        """Owner whose half-open interval contains `at`; None when unowned."""
        self._asset(asset_id)
        records = self.attribution.get(asset_id, ())
        # sorted by valid_from and non-overlapping, so only the rightmost
        # interval starting at or before `at` can contain it; empty intervals
        # [t, t) never contain anything, so walk past them
        i = bisect.bisect_right([r.valid_from for r in records], at) - 1
        while i >= 0:
            rec = records[i]
            if rec.contains(at):
                return rec.owner_id
            if rec.valid_to is None or rec.valid_to > rec.valid_from:
                return None
            i -= 1
        return None

    def owner_before(self, asset_id: str, as_of: float) -> Optional[str]:
        """Owner in the instant just before `as_of` (a record starting at
        `as_of` exactly does not count)."""
        self._asset(asset_id)
        records = self.attribution.get(asset_id, ())
        i = bisect.bisect_left([r.valid_from for r in records], as_of) - 1
        while i >= 0:
            rec = records[i]
            if rec.valid_to is None or rec.valid_to >= as_of:
                return rec.owner_id
            if rec.valid_to > rec.valid_from:
                return None
            i -= 1
        return None

    def transfer_owner(
        self,
        asset_id: str,
        new_owner: str,
        at: float,
        source: AttributionSource,
        actor_id: Optional[str] = None,
        recommendation_id: Optional[str] = None,
    ) -> AttributionRecord:
        self._validate_transfer(asset_id, new_owner, at)
        payload = {
            "asset_id": asset_id,
            "owner_id": new_owner,
            "valid_from": at,
            "valid_to": None,
            "source": AttributionSource(source).value,
            "actor_id": actor_id,
            "closes_open": self._open_record.get(asset_id) is not None,
        }
        if recommendation_id is not None:
            payload["recommendation_id"] = recommendation_id
        self._append(persist.KIND_OWNER_CHANGED, payload, at)
        return self._open_record[asset_id]

    def _validate_transfer(self, asset_id: str, new_owner: str, at: float) -> None:
        self._asset(asset_id)
        candidate = self._candidate(new_owner)
        if not candidate.active:
            raise InactiveCandidate(new_owner)
        open_rec = self._open_record.get(asset_id)
        if open_rec is not None:
            if at < open_rec.valid_from:
                raise NonMonotonicTimestamp(
                    f"transfer at {at} precedes open interval start {open_rec.valid_from}"
                )
            if open_rec.owner_id == new_owner:
                raise RedundantTransfer(
                    f"{new_owner!r} already owns {asset_id!r}"
                )
        records = self.attribution.get(asset_id, ())
        if records and records[-1].valid_to is not None and records[-1].valid_to > at:
            raise NonMonotonicTimestamp(
                "transfer would overlap a closed historical interval"
            )

    def can_transfer(self, asset_id: str, new_owner: str, at: float) -> bool:
        try:
            self._validate_transfer(asset_id, new_owner, at)
            return True
        except (NonMonotonicTimestamp, RedundantTransfer):
            return False

    def import_attribution_record(self, record: AttributionRecord) -> None:
        """Insert one validated historical record (overlap checks are the caller's)."""
        payload = {
            "asset_id": record.asset_id,
            "owner_id": record.owner_id,
            "valid_from": record.valid_from,
            "valid_to": record.valid_to,
            "source": AttributionSource(record.source).value,
            "actor_id": None,
            "closes_open": False,
        }
        self._append(persist.KIND_OWNER_CHANGED, payload, record.valid_from)

    def unowned_assets(self, at: float) -> list[str]:
        out = [
            asset_id
            for asset_id, asset in self.assets.items()
            if asset.is_live(at) and self.current_owner(asset_id, at) is None
        ]
        out.sort()
        return out

    # ------------------------------------------------------------------
    # dependencies
    # ------------------------------------------------------------------

    def dependency_neighbors(
        self,
        asset_id: str,
        kinds: Optional[Iterable[EdgeKind]] = None,
        direction: Direction = Direction.BOTH,
        before: Optional[float] = None,
    ) -> list[str]:
        """Distinct neighbors across matching edges; `before` restricts to
        edges recorded strictly earlier, for point-in-time reads."""
        self._asset(asset_id)
        wanted = None if kinds is None else {EdgeKind(k) for k in kinds}
        direction = Direction(direction)
        found: set[str] = set()
        if direction in (Direction.OUT, Direction.BOTH):
            for other, kind, at in self._deps_out.get(asset_id, ()):
                if (wanted is None or kind in wanted) and (before is None or at < before):
                    found.add(other)
        if direction in (Direction.IN, Direction.BOTH):
            for other, kind, at in self._deps_in.get(asset_id, ()):
                if (wanted is None or kind in wanted) and (before is None or at < before):
                    found.add(other)
        return sorted(found)

    def dependency_edges(self, asset_id: str) -> list[dict]:
        """Every edge touching the asset, with direction, kind, and time."""
        self._asset(asset_id)
        edges = [
            {"direction": "Out", "asset_id": other, "edge_kind": kind.value, "at": at}
            for other, kind, at in self._deps_out.get(asset_id, ())
        ]
        edges.extend(
            {"direction": "In", "asset_id": other, "edge_kind": kind.value, "at": at}
            for other, kind, at in self._deps_in.get(asset_id, ())
        )
        edges.sort(key=lambda e: (e["direction"], e["asset_id"], e["edge_kind"]))
        return edges

    # ------------------------------------------------------------------
    # interactions and annotations
    # ------------------------------------------------------------------

    def record_interaction(self, event: InteractionEvent) -> bool:
        accepted = self.record_interactions([event])
        return accepted == 1

    def record_interactions(self, events: list[InteractionEvent]) -> int:
        """Merge parsed events; content-derived IDs make this idempotent."""
        items = []
        for event in events:
            if event.event_id in self._seen_interactions:
                continue
            self._asset(event.asset_id)
            if event.actor_id not in self.candidates:
                self.auto_register_actor(event.actor_id, event.at)
            payload = {
                "event_id": event.event_id,
                "actor_id": event.actor_id,
                "asset_id": event.asset_id,
                "action": InteractionAction(event.action).value,
                "at": event.at,
                "attributes": event.attributes,
            }
            items.append((persist.KIND_INTERACTION_INGESTED, payload, event.at))
            # reserve the id so duplicates inside one batch collapse too
            self._seen_interactions.add(event.event_id)
        if items:
            for item in items:
                self._seen_interactions.discard(item[1]["event_id"])
            self._append_many(items)
        return len(items)

    def record_annotation(self, annotation: OwnershipAnnotation, at: float) -> bool:
        self._asset(annotation.asset_id)
        if annotation.named_candidate not in self.candidates:
            self.quarantine.append(
                f"annotation at {annotation.source_location} names unknown "
                f"candidate {annotation.named_candidate!r}"
            )
            return False
        payload = {
            "asset_id": annotation.asset_id,
            "named_candidate": annotation.named_candidate,
            "annotation_kind": AnnotationKind(annotation.annotation_kind).value,
            "source_location": annotation.source_location,
            "at": at,
        }
        self._append(persist.KIND_ANNOTATION_RECORDED, payload, at)
        return True

    # ------------------------------------------------------------------
    # activity queries used by feature extraction
    # ------------------------------------------------------------------

    def pair_activity(self, asset_id: str, candidate_id: str) -> _PairActivity:
        pair = self._pair_activity.get((asset_id, candidate_id))
        return pair if pair is not None else _EMPTY_ACTIVITY

    def asset_activity(self, asset_id: str) -> _PairActivity:
        activity = self._asset_activity.get(asset_id)
        return activity if activity is not None else _EMPTY_ACTIVITY

    def assets_touched_by(self, candidate_id: str) -> set[str]:
        return self.actor_assets.get(candidate_id, set())

    def annotations_for(self, asset_id: str) -> list[tuple[float, OwnershipAnnotation]]:
        return self.annotations.get(asset_id, [])

    def annotation_names(self, asset_id: str, before: Optional[float] = None) -> set[str]:
        names = set()
        for at, annotation in self.annotations.get(asset_id, ()):
            if before is None or at < before:
                names.add(annotation.named_candidate)
        return names

    def org_distance(self, node_a: str, node_b: str, cap: int = 10) -> int:
        return min(cap, self.org.distance(node_a, node_b))

    def org_node_before(self, candidate_id: str, as_of: float) -> str:
        """Org node the candidate sat in just before `as_of`. A candidate
        first registered at or after `as_of` reports its earliest node."""
        history = self.candidate_org_history.get(candidate_id)
        if not history:
            raise UnknownCandidate(candidate_id)
        node = history[0][1]
        for at, node_id in history:
            if at < as_of:
                node = node_id
            else:
                break
        return node

    # ------------------------------------------------------------------
    # recommendations, decisions, models
    # ------------------------------------------------------------------

    def issue_recommendation(
        self,
        asset_id: str,
        as_of: float,
        model_id: str,
        band: str,
        entries: list[dict],
    ) -> str:
        self._asset(asset_id)
        rec_id = f"rec-{self.log.next_sequence:08d}"
        payload = {
            "recommendation_id": rec_id,
            "asset_id": asset_id,
            "as_of": as_of,
            "model_id": model_id,
            "band": band,
            "entries": entries,
        }
        self._append(persist.KIND_RECOMMENDATION_ISSUED, payload, as_of)
        return rec_id

    def get_recommendation(self, rec_id: str) -> Optional[RecommendationState]:
        return self.recommendations.get(rec_id)

    def list_recommendations(
        self,
        status: Optional[str] = None,
        cursor: int = -1,
        limit: Optional[int] = None,
    ) -> list[RecommendationState]:
        out = []
        for rec_id in self._recommendation_order:
            state = self.recommendations[rec_id]
            if state.issue_seq <= cursor:
                continue
            if status is not None and state.status != status:
                continue
            out.append(state)
            if limit is not None and len(out) >= limit:
                break
        return out

    def latest_recommendation(self, asset_id: str, as_of: Optional[float] = None):
        latest = None
        for rec_id in self._recommendation_order:
            state = self.recommendations[rec_id]
            if state.asset_id != asset_id:
                continue
            if as_of is not None and state.as_of > as_of:
                continue
            latest = state
        return latest

    def record_decision(
        self,
        recommendation_id: Optional[str],
        asset_id: str,
        candidate_id: str,
        decision: str,
        decided_by: str,
        at: float,
        delegate_to: Optional[str] = None,
        apply_transfer: bool = False,
        transfer_source: str = AttributionSource.HUMAN_DECISION.value,
    ) -> str:
        decision_id = f"dec-{self.log.next_sequence:08d}"
        payload = {
            "decision_id": decision_id,
            "recommendation_id": recommendation_id,
            "asset_id": asset_id,
            "candidate_id": candidate_id,
            "decision": decision,
            "delegate_to": delegate_to,
            "decided_by": decided_by,
            "at": at,
            "apply_transfer": apply_transfer,
            "transfer_source": transfer_source,
        }
        self._append(persist.KIND_DECISION_RECORDED, payload, at)
        return decision_id

    def record_model(self, meta: dict, blob: str, trained_at: float) -> str:
        model_id = f"model-{self.log.next_sequence:08d}"
        payload = dict(meta)
        payload["model_id"] = model_id
        payload["blob"] = blob
        payload["trained_at"] = trained_at
        payload["at"] = trained_at
        self._append(persist.KIND_MODEL_TRAINED, payload, trained_at)
        return model_id

    # ------------------------------------------------------------------
    # fold handlers (state updates only; no validation, no IO)
    # ------------------------------------------------------------------

    def _fold_org_node(self, p: dict) -> None:
        self.org.add(OrgNode(p["node_id"], p["parent_id"], OrgNodeKind(p["kind"])))

    def _fold_candidate(self, p: dict) -> None:
        self.candidates[p["candidate_id"]] = OwnerCandidate(
            p["candidate_id"],
            CandidateType(p["candidate_type"]),
            p["display_name"],
            p["org_node_id"],
            p["active"],
        )
        history = self.candidate_org_history.setdefault(p["candidate_id"], [])
        history.append((p.get("at", 0.0), p["org_node_id"]))

    def _fold_asset(self, p: dict) -> None:
        asset = Asset(
            p["asset_id"], AssetType(p["asset_type"]), p["path_or_name"], p["created_at"]
        )
        self.assets[asset.asset_id] = asset
        self.asset_by_path[asset.path_or_name] = asset.asset_id

    def _fold_asset_deleted(self, p: dict) -> None:
        self.assets[p["asset_id"]].deleted_at = p["deleted_at"]

    def _fold_dependency(self, p: dict) -> None:
        kind = EdgeKind(p["edge_kind"])
        src, dst = p["from_asset_id"], p["to_asset_id"]
        at = p.get("at", 0.0)
        self._dep_keys.add((src, dst, kind.value))
        self._deps_out.setdefault(src, []).append((dst, kind, at))
        self._deps_in.setdefault(dst, []).append((src, kind, at))

    def _fold_interaction(self, p: dict) -> None:
        event_id, actor, asset, at = p["event_id"], p["actor_id"], p["asset_id"], p["at"]
        action = p["action"]
        self._seen_interactions.add(event_id)
        key = (asset, actor)
        pair = self._pair_activity.get(key)
        if pair is None:
            pair = self._pair_activity[key] = _PairActivity()
        pair.all.add(at)
        pair.action_times(action).add(at)
        asset_act = self._asset_activity.get(asset)
        if asset_act is None:
            asset_act = self._asset_activity[asset] = _PairActivity()
        asset_act.all.add(at)
        asset_act.action_times(action).add(at)
        touched = self.actor_assets.get(actor)
        if touched is None:
            touched = self.actor_assets[actor] = set()
        touched.add(asset)

    def _fold_annotation(self, p: dict) -> None:
        annotation = OwnershipAnnotation(
            p["asset_id"],
            p["named_candidate"],
            AnnotationKind(p["annotation_kind"]),
            p["source_location"],
        )
        self.annotations.setdefault(p["asset_id"], []).append((p["at"], annotation))

    def _fold_owner_changed(self, p: dict) -> None:
        self._insert_attribution(
            p["asset_id"],
            p["owner_id"],
            p["valid_from"],
            p["valid_to"],
            p["source"],
            p.get("actor_id"),
            p.get("closes_open", False),
        )
        rec_id = p.get("recommendation_id")
        if rec_id is not None:
            rec = self.recommendations.get(rec_id)
            if rec is not None and rec.status == "pending":
                rec.status = "auto_applied"
                rec.decided_at = p["valid_from"]
                rec.decided_candidate = p["owner_id"]

    def _insert_attribution(
        self,
        asset_id: str,
        owner_id: str,
        valid_from: float,
        valid_to: Optional[float],
        source: str,
        actor_id: Optional[str],
        closes_open: bool,
        from_decision: bool = False,
    ) -> None:
        records = self.attribution.setdefault(asset_id, [])
        if closes_open:
            open_rec = self._open_record.get(asset_id)
            if open_rec is not None:
                open_rec.valid_to = valid_from
                self._open_record.pop(asset_id, None)
        record = AttributionRecord(
            asset_id, owner_id, valid_from, valid_to, AttributionSource(source)
        )
        keys = [r.valid_from for r in records]
        records.insert(bisect.bisect_right(keys, valid_from), record)
        if valid_to is None:
            self._open_record[asset_id] = record
        self.transfers.append(
            TransferLogEntry(
                valid_from, asset_id, owner_id, source, actor_id, from_decision
            )
        )

    def _fold_recommendation(self, p: dict) -> None:
        state = RecommendationState(
            recommendation_id=p["recommendation_id"],
            asset_id=p["asset_id"],
            as_of=p["as_of"],
            model_id=p["model_id"],
            band=p["band"],
            entries=p["entries"],
            issue_seq=len(self._recommendation_order),
        )
        self.recommendations[state.recommendation_id] = state
        self._recommendation_order.append(state.recommendation_id)

    def _fold_decision(self, p: dict) -> None:
        entry = DecisionLogEntry(
            decision_id=p["decision_id"],
            recommendation_id=p["recommendation_id"],
            asset_id=p["asset_id"],
            candidate_id=p["candidate_id"],
            decision=p["decision"],
            delegate_to=p["delegate_to"],
            decided_by=p["decided_by"],
            at=p["at"],
        )
        self.decisions.append((len(self.decisions), entry))
        rec = (
            self.recommendations.get(p["recommendation_id"])
            if p["recommendation_id"]
            else None
        )
        if rec is not None:
            if p["decision"] == "Delegate":
                rec.assignee = p["delegate_to"]
            else:
                rec.status = "decided"
                rec.decided_by = p["decided_by"]
                rec.decided_at = p["at"]
                rec.decision = p["decision"]
                rec.decided_candidate = p["candidate_id"]
        if p.get("apply_transfer"):
            self._insert_attribution(
                p["asset_id"],
                p["candidate_id"],
                p["at"],
                None,
                p.get("transfer_source", AttributionSource.HUMAN_DECISION.value),
                p["decided_by"],
                closes_open=self._open_record.get(p["asset_id"]) is not None,
                from_decision=True,
            )

    def _fold_model(self, p: dict) -> None:
        self.models_by_id[p["model_id"]] = p
        self.models_current[p["asset_type"]] = p


_EMPTY_ACTIVITY = _PairActivity()

_FOLD = {
    persist.KIND_ORG_NODE_ADDED: Store._fold_org_node,
    persist.KIND_CANDIDATE_REGISTERED: Store._fold_candidate,
    persist.KIND_ASSET_REGISTERED: Store._fold_asset,
    persist.KIND_ASSET_DELETED: Store._fold_asset_deleted,
    persist.KIND_DEPENDENCY_RECORDED: Store._fold_dependency,
    persist.KIND_INTERACTION_INGESTED: Store._fold_interaction,
    persist.KIND_ANNOTATION_RECORDED: Store._fold_annotation,
    persist.KIND_OWNER_CHANGED: Store._fold_owner_changed,
    persist.KIND_RECOMMENDATION_ISSUED: Store._fold_recommendation,
    persist.KIND_DECISION_RECORDED: Store._fold_decision,
    persist.KIND_MODEL_TRAINED: Store._fold_model,
}


def replay(log: persist.EventLog, up_to: Optional[int] = None) -> Store:
    """Fold a log (or its prefix) into a fresh store."""
    if up_to is None:
        return Store(log)
    snapshot = persist.EventLog.from_bytes(
        "".join(
            persist.encode_line(e) for e in log.events(up_to)
        ).encode("utf-8")
    )
    return Store(snapshot)
