"""Synthetic ownership worlds with a known answer key.

The generator builds an org chart, a portfolio of assets with hidden true
owners, and months of activity sampled around that truth: raw log lines,
header annotations, review decisions, reorg transfers. Everything enters
the store through the same ingest paths production data would take, so the
pipeline under test is the real one end to end.

`evaluate` scores recommendations against the answer key.
`drift_experiment` stages an ownership handoff mid-history and compares a
windowed model against one trained on all history.

All randomness flows from a single seeded generator and timestamps are
integer seconds, so one (config, seed) pair reproduces the event log byte
for byte.
"""

from __future__ import annotations

import bisect
import json
import math
import os
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import InvalidConfig, ValidationError
from .featurize import TOUCH_WINDOW_DAYS
from .ingest import LogIngestor, parse_log_lines
from .labeling import extract_labeling_events, join_examples, Label
from .learn import (
    TrainConfig,
    TrainedModel,
    accuracy_of,
    auc_of,
    predict_many,
    train_for_asset_type,
    train_model,
)
from .model import (
    SECONDS_PER_DAY,
    AssetType,
    AttributionSource,
    CandidateType,
    Decision,
    EdgeKind,
    OrgNodeKind,
)
from .recommend import Band, BandThresholds, recommend_owner
from .store import Store

# midnight UTC, 2024-01-01; day d of a run starts at SIM_EPOCH + d * 86400
SIM_EPOCH = 1704067200

DEFAULT_ASSET_MIX = {
    AssetType.SOURCE_FILE.value: 700,
    AssetType.WAREHOUSE_TABLE.value: 650,
    AssetType.CONFIG_FILE.value: 650,
}

TEAMS_PER_DIVISION = 5

# raw log file names; the basename keys event ids, so a rerun with the same
# seed merges as a no-op instead of duplicating traffic
LOG_FILES = {
    "commitlog": "commits.commitlog",
    "reviewlog": "reviews.reviewlog",
    "adminlog": "admin.adminlog",
}

_REVIEW_VERDICTS = np.array(["approved", "commented"])
_ADMIN_ACTIONS = np.array(["grant", "repair", "schema_change"])

# dependency flavor is dictated by what the target is
_EDGE_KIND_FOR_TARGET = {
    AssetType.SOURCE_FILE: EdgeKind.BUILD,
    AssetType.WAREHOUSE_TABLE: EdgeKind.USAGE,
    AssetType.CONFIG_FILE: EdgeKind.PRODUCT_MAPPING,
}

_COMMENT_LEADER = {
    AssetType.SOURCE_FILE: "#",
    AssetType.CONFIG_FILE: "#",
    AssetType.WAREHOUSE_TABLE: "--",
}


@dataclass
class SimConfig:
    seed: int = 0
    teams: int = 20
    individuals_per_team: int = 8
    assets_per_type: dict = field(default_factory=lambda: dict(DEFAULT_ASSET_MIX))
    horizon_days: int = 180
    lambda_own: float = 1.0
    lambda_other: float = 0.05
    collaborators_per_asset: int = 4
    annotation_coverage: float = 0.8
    annotation_noise: float = 0.05
    decisions_per_asset: float = 2.0
    delegate_fraction: float = 0.05
    label_noise: float = 0.0
    creation_spread_days: int = 30
    deletion_fraction: float = 0.01
    reorg_schedule: list = field(default_factory=list)
    drift_switch_day: Optional[int] = None
    decision_start_day: Optional[int] = None

    def validate(self) -> None:
        if self.teams < 1 or self.individuals_per_team < 1:
            raise InvalidConfig("need at least one team with one individual")
        if self.horizon_days < 1:
            raise InvalidConfig("horizon_days must be positive")
        if not self.assets_per_type:
            raise InvalidConfig("assets_per_type is empty")
        for type_name, count in self.assets_per_type.items():
            try:
                AssetType(type_name)
            except ValueError:
                raise InvalidConfig(f"unknown asset type {type_name!r}") from None
            if int(count) < 0:
                raise InvalidConfig(f"negative asset count for {type_name!r}")
        if self.lambda_own < 0 or self.lambda_other < 0:
            raise InvalidConfig("activity rates must be non-negative")
        for name in (
            "annotation_coverage",
            "annotation_noise",
            "delegate_fraction",
            "label_noise",
            "deletion_fraction",
        ):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidConfig(f"{name} must lie in [0, 1], got {value}")
        if self.collaborators_per_asset < 0 or self.decisions_per_asset < 0:
            raise InvalidConfig("per-asset counts must be non-negative")
        if not 0 <= self.creation_spread_days <= self.horizon_days:
            raise InvalidConfig("creation_spread_days must fit inside the horizon")
        for day, fraction in self.reorg_schedule:
            if not 0 < int(day) < self.horizon_days:
                raise InvalidConfig(f"reorg day {day} outside (0, horizon)")
            if not 0.0 <= float(fraction) <= 1.0:
                raise InvalidConfig("reorg fraction must lie in [0, 1]")
        if self.reorg_schedule and self.teams < 2:
            raise InvalidConfig("reorgs need at least two teams")
        if self.drift_switch_day is not None:
            if not 0 < self.drift_switch_day < self.horizon_days:
                raise InvalidConfig("drift_switch_day outside (0, horizon)")
            if self.reorg_schedule:
                raise InvalidConfig("drift and reorg modes cannot be combined")
        if self.decision_start_day is not None:
            if not 0 <= self.decision_start_day < self.horizon_days:
                raise InvalidConfig("decision_start_day outside [0, horizon)")

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "teams": self.teams,
            "individuals_per_team": self.individuals_per_team,
            "assets_per_type": dict(self.assets_per_type),
            "horizon_days": self.horizon_days,
            "lambda_own": self.lambda_own,
            "lambda_other": self.lambda_other,
            "collaborators_per_asset": self.collaborators_per_asset,
            "annotation_coverage": self.annotation_coverage,
            "annotation_noise": self.annotation_noise,
            "decisions_per_asset": self.decisions_per_asset,
            "delegate_fraction": self.delegate_fraction,
            "label_noise": self.label_noise,
            "creation_spread_days": self.creation_spread_days,
            "deletion_fraction": self.deletion_fraction,
            "reorg_schedule": [[int(d), float(f)] for d, f in self.reorg_schedule],
            "drift_switch_day": self.drift_switch_day,
            "decision_start_day": self.decision_start_day,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        config = cls()
        for key, value in data.items():
            if not hasattr(config, key):
                raise InvalidConfig(f"unknown config key {key!r}")
            setattr(config, key, value)
        config.reorg_schedule = [(int(d), float(f)) for d, f in config.reorg_schedule]
        config.validate()
        return config


class GroundTruth:
    """Answer key: per asset, the true owner as a step function of time."""

    def __init__(self):
        self.timeline: dict[str, list[tuple[float, str]]] = {}

    def record(self, asset_id: str, at: float, owner_id: str) -> None:
        entries = self.timeline.setdefault(asset_id, [])
        if entries and at < entries[-1][0]:
            raise ValidationError("ground truth entries must be appended in time order")
        entries.append((float(at), owner_id))

    def owner_at(self, asset_id: str, at: float) -> Optional[str]:
        entries = self.timeline.get(asset_id)
        if not entries:
            return None
        times = [t for t, _ in entries]
        idx = bisect.bisect_right(times, at) - 1
        if idx < 0:
            return None
        return entries[idx][1]

    def to_json(self) -> str:
        body = {
            asset_id: [[t, owner] for t, owner in entries]
            for asset_id, entries in sorted(self.timeline.items())
        }
        return json.dumps({"version": 1, "timeline": body}, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "GroundTruth":
        data = json.loads(text)
        truth = cls()
        for asset_id, entries in data["timeline"].items():
            for at, owner in entries:
                truth.record(asset_id, float(at), owner)
        return truth


@dataclass
class _SimAsset:
    index: int
    asset_id: str
    asset_type: AssetType
    path: str
    team: int
    owner: str
    created: int
    deleted: Optional[int] = None
    collaborators: list = field(default_factory=list)
    successor: Optional[str] = None
    annotated: Optional[str] = None


# ----------------------------------------------------------------------
# generation phases
# ----------------------------------------------------------------------


def _build_org(store: Store, config: SimConfig, t0: int):
    store.add_org_node("org-root", None, OrgNodeKind.COMPANY, at=float(t0))
    n_div = (config.teams + TEAMS_PER_DIVISION - 1) // TEAMS_PER_DIVISION
    for d in range(n_div):
        store.add_org_node(f"org-div-{d:02d}", "org-root", OrgNodeKind.ORG, at=float(t0))
    team_nodes: list[str] = []
    individuals: list[str] = []
    members: list[list[str]] = []
    team_of: dict[str, int] = {}
    uid = 0
    for t in range(config.teams):
        node = f"org-team-{t:03d}"
        store.add_org_node(node, f"org-div-{t // TEAMS_PER_DIVISION:02d}", OrgNodeKind.TEAM, at=float(t0))
        team_nodes.append(node)
        row = []
        for _ in range(config.individuals_per_team):
            cid = f"u{uid:04d}"
            uid += 1
            store.register_candidate(
                cid, CandidateType.INDIVIDUAL, f"User {cid[1:]}", node, at=float(t0)
            )
            row.append(cid)
            team_of[cid] = t
            individuals.append(cid)
        members.append(row)
        store.register_candidate(
            f"team-{t:03d}", CandidateType.TEAM, f"Team {t:03d}", node, at=float(t0)
        )
    return individuals, members, team_nodes, team_of


def _asset_path(asset_type: AssetType, team: int, idx: int) -> str:
    if asset_type is AssetType.SOURCE_FILE:
        return f"src/pkg_{team:02d}/file_{idx:04d}.py"
    if asset_type is AssetType.WAREHOUSE_TABLE:
        return f"warehouse.db{team % 8}.tbl_{idx:04d}"
    return f"config/svc_{team:02d}/cfg_{idx:04d}.ini"


_ID_PREFIX = {
    AssetType.SOURCE_FILE: "src",
    AssetType.WAREHOUSE_TABLE: "tbl",
    AssetType.CONFIG_FILE: "cfg",
}


def _build_assets(store, config, rng, t0, individuals, members, truth):
    spread = max(1, config.creation_spread_days * SECONDS_PER_DAY)
    assets: list[_SimAsset] = []
    for asset_type in (AssetType.SOURCE_FILE, AssetType.WAREHOUSE_TABLE, AssetType.CONFIG_FILE):
        count = int(config.assets_per_type.get(asset_type.value, 0))
        for idx in range(count):
            team = int(rng.integers(0, config.teams))
            owner = members[team][int(rng.integers(0, len(members[team])))]
            created = t0 + int(rng.integers(0, spread))
            asset_id = f"{_ID_PREFIX[asset_type]}-{idx:04d}"
            path = _asset_path(asset_type, team, idx)
            sim = _SimAsset(len(assets), asset_id, asset_type, path, team, owner, created)
            store.register_asset(asset_id, asset_type, path, float(created))
            store.transfer_owner(asset_id, owner, float(created), AttributionSource.IMPORT)
            truth.record(asset_id, created, owner)

            if config.drift_switch_day is not None:
                other_team = int(rng.integers(0, config.teams - 1))
                if other_team >= team:
                    other_team += 1
                pool = members[other_team]
                sim.successor = pool[int(rng.integers(0, len(pool)))]
                truth.record(asset_id, t0 + config.drift_switch_day * SECONDS_PER_DAY, sim.successor)

            if rng.random() < config.deletion_fraction:
                created_day = (created - t0) // SECONDS_PER_DAY
                lo = max(created_day + 2, int(config.horizon_days * 0.6))
                if lo < config.horizon_days:
                    deleted_day = int(rng.integers(lo, config.horizon_days))
                    sim.deleted = t0 + deleted_day * SECONDS_PER_DAY
                    store.delete_asset(asset_id, float(sim.deleted))

            sim.collaborators = _pick_collaborators(config, rng, individuals, members, sim)
            assets.append(sim)
    if not assets:
        raise InvalidConfig("configuration yields zero assets")
    return assets


def _pick_collaborators(config, rng, individuals, members, sim: _SimAsset) -> list[str]:
    k = config.collaborators_per_asset
    if k <= 0:
        return []
    exclude = {sim.owner, sim.successor}
    same_team = [m for m in members[sim.team] if m not in exclude]
    n_same = min(int(rng.binomial(k, 0.6)), len(same_team))
    picked: list[str] = []
    if n_same:
        picked.extend(str(c) for c in rng.choice(same_team, size=n_same, replace=False))
    others = [c for c in individuals if c not in exclude and c not in picked]
    n_rest = min(k - len(picked), len(others))
    if n_rest > 0:
        picked.extend(str(c) for c in rng.choice(others, size=n_rest, replace=False))
    return picked


def _build_dependencies(store, config, rng, assets: list[_SimAsset]) -> None:
    by_team: dict[int, list[_SimAsset]] = {}
    for sim in assets:
        by_team.setdefault(sim.team, []).append(sim)
    for sim in assets:
        n_edges = int(rng.integers(0, 4))
        for _ in range(n_edges):
            if rng.random() < 0.7 and len(by_team[sim.team]) > 1:
                pool = by_team[sim.team]
            else:
                pool = assets
            target = pool[int(rng.integers(0, len(pool)))]
            if target.asset_id == sim.asset_id:
                continue
            at = float(max(sim.created, target.created))
            store.add_dependency(
                sim.asset_id, target.asset_id, _EDGE_KIND_FOR_TARGET[target.asset_type], at=at
            )


def _plan_reorgs(store, config, rng, t0, assets, individuals, members, team_nodes, team_of, truth):
    """Move a slice of people between teams and hand their assets to an old
    teammate. Returns attribution transfers to be applied later, merged with
    decisions in timestamp order."""
    owned_by: dict[str, list[str]] = {cid: [] for cid in individuals}
    for sim in assets:
        owned_by[sim.owner].append(sim.asset_id)
    by_id = {sim.asset_id: sim for sim in assets}
    transfers: list[tuple[int, str, str]] = []
    for day, fraction in sorted(config.reorg_schedule):
        ts = t0 + int(day) * SECONDS_PER_DAY
        n_movers = int(len(individuals) * float(fraction))
        if n_movers == 0:
            continue
        movers = [str(m) for m in rng.choice(individuals, size=n_movers, replace=False)]
        for mover in movers:
            old_team = team_of[mover]
            new_team = int(rng.integers(0, config.teams - 1))
            if new_team >= old_team:
                new_team += 1
            recipients = [m for m in members[old_team] if m != mover]
            members[old_team].remove(mover)
            members[new_team].append(mover)
            team_of[mover] = new_team
            store.register_candidate(
                mover,
                CandidateType.INDIVIDUAL,
                store.candidates[mover].display_name,
                team_nodes[new_team],
                at=float(ts),
            )
            if not recipients:
                recipients = [c for c in individuals if c != mover]
            for asset_id in sorted(owned_by[mover]):
                sim = by_id[asset_id]
                if sim.deleted is not None and sim.deleted <= ts:
                    continue
                recipient = recipients[int(rng.integers(0, len(recipients)))]
                transfers.append((ts, asset_id, recipient))
                truth.record(asset_id, ts, recipient)
                owned_by[recipient].append(asset_id)
            owned_by[mover] = []
    return transfers


def _annotate(store, config, rng, assets, individuals, ingestor: LogIngestor) -> None:
    for sim in assets:
        if rng.random() >= config.annotation_coverage:
            continue
        name = sim.successor if sim.successor is not None else sim.owner
        if config.annotation_noise and rng.random() < config.annotation_noise:
            alternates = [c for c in individuals if c != name]
            if alternates:
                name = alternates[int(rng.integers(0, len(alternates)))]
        lead = _COMMENT_LEADER[sim.asset_type]
        lines = [f"{lead} {sim.path}", f"{lead} OWNER: {name}"]
        if rng.random() < 0.3:
            lines.append(f"{lead} ONCALL: team-{sim.team:03d}")
        lines.append("")
        ingestor.ingest_annotation_payload(
            sim.asset_id,
            "\n".join(lines),
            source_name=sim.path,
            at=float(sim.created + 3600),
        )
        sim.annotated = name


def _owner_index_by_day(truth, sim: _SimAsset, day_starts, index_of) -> np.ndarray:
    entries = truth.timeline[sim.asset_id]
    times = np.array([t for t, _ in entries], dtype=np.float64)
    owners = np.array([index_of[o] for _, o in entries], dtype=np.int64)
    slots = np.searchsorted(times, day_starts, side="right") - 1
    return owners[np.maximum(slots, 0)]


def _emit_interactions(store, config, rng, t0, assets, individuals, truth, log_dir):
    index_of = {cid: i for i, cid in enumerate(individuals)}
    ind_arr = np.array(individuals)
    path_arr = np.array([sim.path for sim in assets])
    acc: dict[str, dict[str, list]] = {
        tag: {"ts": [], "actor": [], "asset": [], "attr": []} for tag in LOG_FILES
    }

    def push(tag, ts, actor, asset_idx, attr):
        if len(ts):
            acc[tag]["ts"].append(ts)
            acc[tag]["actor"].append(actor)
            acc[tag]["asset"].append(np.full(len(ts), asset_idx, dtype=np.int64))
            acc[tag]["attr"].append(attr)

    for sim in assets:
        first_day = (sim.created - t0) // SECONDS_PER_DAY + 1
        last_day = config.horizon_days
        if sim.deleted is not None:
            last_day = min(last_day, (sim.deleted - t0) // SECONDS_PER_DAY)
        days = np.arange(first_day, last_day, dtype=np.int64)
        if len(days) == 0:
            continue
        day_starts = (t0 + days * SECONDS_PER_DAY).astype(np.float64)

        day_rep: list[np.ndarray] = []
        actor_rep: list[np.ndarray] = []
        if sim.successor is not None:
            # handoff study: predecessor and successor stay equally active
            # the whole horizon so only the labels move, not the features
            for who in (sim.owner, sim.successor):
                counts = rng.poisson(config.lambda_own, len(days))
                day_rep.append(np.repeat(days, counts))
                actor_rep.append(np.full(int(counts.sum()), index_of[who], dtype=np.int64))
        else:
            owner_idx = _owner_index_by_day(truth, sim, day_starts, index_of)
            counts = rng.poisson(config.lambda_own, len(days))
            day_rep.append(np.repeat(days, counts))
            actor_rep.append(np.repeat(owner_idx, counts))
        for collaborator in sim.collaborators:
            counts = rng.poisson(config.lambda_other, len(days))
            day_rep.append(np.repeat(days, counts))
            actor_rep.append(np.full(int(counts.sum()), index_of[collaborator], dtype=np.int64))

        ev_days = np.concatenate(day_rep) if day_rep else np.zeros(0, dtype=np.int64)
        total = len(ev_days)
        if total == 0:
            continue
        ev_actor = np.concatenate(actor_rep)
        ev_ts = t0 + ev_days * SECONDS_PER_DAY + rng.integers(0, SECONDS_PER_DAY, total)

        if sim.asset_type is AssetType.SOURCE_FILE:
            is_commit = rng.random(total) < 0.7
            n_commit = int(is_commit.sum())
            push(
                "commitlog",
                ev_ts[is_commit],
                ev_actor[is_commit],
                sim.index,
                rng.integers(1, 401, n_commit),
            )
            push(
                "reviewlog",
                ev_ts[~is_commit],
                ev_actor[~is_commit],
                sim.index,
                rng.integers(0, 2, total - n_commit),
            )
        elif sim.asset_type is AssetType.CONFIG_FILE:
            push("commitlog", ev_ts, ev_actor, sim.index, rng.integers(1, 121, total))
        else:
            push("adminlog", ev_ts, ev_actor, sim.index, rng.integers(0, 3, total))

    ingestor = LogIngestor(store)
    total_merged = 0
    for tag in ("commitlog", "reviewlog", "adminlog"):
        parts = acc[tag]
        if not parts["ts"]:
            continue
        ts = np.concatenate(parts["ts"])
        actor = np.concatenate(parts["actor"])
        asset = np.concatenate(parts["asset"])
        attr = np.concatenate(parts["attr"])
        order = np.lexsort((asset, actor, ts))
        ts, actor, asset, attr = ts[order], actor[order], asset[order], attr[order]

        iso = np.datetime_as_string(ts.astype("datetime64[s]"), unit="s")
        actors = ind_arr[actor].tolist()
        refs = path_arr[asset].tolist()
        if tag == "reviewlog":
            attrs = _REVIEW_VERDICTS[attr].tolist()
        elif tag == "adminlog":
            attrs = _ADMIN_ACTIONS[attr].tolist()
        else:
            attrs = [str(v) for v in attr.tolist()]
        lines = [
            f"{stamp}Z\t{who}\t{ref}\t{value}"
            for stamp, who, ref, value in zip(iso.tolist(), actors, refs, attrs)
        ]

        source_id = LOG_FILES[tag]
        for start in range(0, len(lines), 50_000):
            chunk = lines[start : start + 50_000]
            events, diagnostics = parse_log_lines(
                chunk, tag, source_id, ingestor.resolve, first_line_number=start + 1
            )
            if diagnostics:
                raise RuntimeError(
                    f"generator emitted {len(diagnostics)} unparseable {tag} lines"
                )
            total_merged += store.record_interactions(events)
        if log_dir is not None:
            with open(os.path.join(log_dir, source_id), "w", encoding="utf-8") as fh:
                fh.write("\n".join(lines) + "\n")
    return total_merged


@dataclass
class _DecisionSpec:
    ts: int
    asset_id: str
    candidate_id: str
    decided_by: str
    decision: Decision
    delegate_to: Optional[str] = None


def _plan_decisions(config, rng, t0, assets, individuals, truth) -> list[_DecisionSpec]:
    horizon_end = t0 + config.horizon_days * SECONDS_PER_DAY
    drift = config.drift_switch_day is not None
    specs: list[_DecisionSpec] = []
    for sim in assets:
        lo = sim.created + 14 * SECONDS_PER_DAY
        if config.decision_start_day is not None:
            lo = max(lo, t0 + config.decision_start_day * SECONDS_PER_DAY)
        if lo >= horizon_end:
            continue
        n = int(rng.poisson(config.decisions_per_asset))
        if n == 0:
            continue
        times = np.sort(rng.integers(lo, horizon_end, n))
        for ts in times.tolist():
            r = rng.random()
            if drift:
                if r < 0.45:
                    proposal = sim.owner
                elif r < 0.9:
                    proposal = sim.successor
                else:
                    proposal = individuals[int(rng.integers(0, len(individuals)))]
            else:
                if r < 0.5:
                    proposal = truth.owner_at(sim.asset_id, ts)
                elif r < 0.7:
                    proposal = sim.annotated or truth.owner_at(sim.asset_id, ts)
                elif r < 0.85 and sim.collaborators:
                    proposal = sim.collaborators[int(rng.integers(0, len(sim.collaborators)))]
                else:
                    proposal = individuals[int(rng.integers(0, len(individuals)))]
            decided_by = individuals[int(rng.integers(0, len(individuals)))]
            if not drift and rng.random() < config.delegate_fraction:
                delegate_to = individuals[int(rng.integers(0, len(individuals)))]
                if delegate_to == proposal:
                    delegate_to = individuals[
                        (individuals.index(delegate_to) + 1) % len(individuals)
                    ]
                specs.append(
                    _DecisionSpec(ts, sim.asset_id, proposal, decided_by, Decision.DELEGATE, delegate_to)
                )
                continue
            accept = proposal == truth.owner_at(sim.asset_id, ts)
            if config.label_noise and rng.random() < config.label_noise:
                accept = not accept
            verdict = Decision.ACCEPT if accept else Decision.REJECT
            specs.append(_DecisionSpec(ts, sim.asset_id, proposal, decided_by, verdict))
    return specs


def _apply_timeline(store: Store, config: SimConfig, transfers, decisions) -> None:
    """Interleave reorg transfers and recorded decisions in timestamp order
    so per-asset attribution intervals stay monotone."""
    drift = config.drift_switch_day is not None
    actions: list[tuple[int, int, str, object]] = []
    for i, row in enumerate(transfers):
        actions.append((row[0], i, "transfer", row))
    for j, spec in enumerate(decisions):
        actions.append((spec.ts, len(transfers) + j, "decision", spec))
    actions.sort(key=lambda a: (a[0], a[1]))
    for ts, _, kind, payload in actions:
        if kind == "transfer":
            _, asset_id, new_owner = payload
            if store.current_owner(asset_id, float(ts)) != new_owner:
                store.transfer_owner(
                    asset_id, new_owner, float(ts), AttributionSource.AUTO_APPLIED
                )
            continue
        spec = payload
        asset = store.assets[spec.asset_id]
        apply_transfer = (
            spec.decision is Decision.ACCEPT
            and not drift
            and asset.is_live(float(spec.ts))
            and store.current_owner(spec.asset_id, float(spec.ts)) != spec.candidate_id
        )
        store.record_decision(
            None,
            spec.asset_id,
            spec.candidate_id,
            spec.decision.value,
            spec.decided_by,
            float(spec.ts),
            delegate_to=spec.delegate_to,
            apply_transfer=apply_transfer,
        )


def generate(
    config: SimConfig,
    store: Optional[Store] = None,
    log_dir: Optional[str] = None,
) -> tuple[Store, GroundTruth]:
    """Build a populated store and its answer key.

    With log_dir set, the raw activity logs are also written there as the
    three tab-separated files ingestion understands."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    store = store if store is not None else Store()
    truth = GroundTruth()
    t0 = SIM_EPOCH
    if log_dir is not None:
        os.makedirs(log_dir, exist_ok=True)

    individuals, members, team_nodes, team_of = _build_org(store, config, t0)
    assets = _build_assets(store, config, rng, t0, individuals, members, truth)
    _build_dependencies(store, config, rng, assets)
    transfers = _plan_reorgs(
        store, config, rng, t0, assets, individuals, members, team_nodes, team_of, truth
    )
    _annotate(store, config, rng, assets, individuals, LogIngestor(store))
    _emit_interactions(store, config, rng, t0, assets, individuals, truth, log_dir)
    decisions = _plan_decisions(config, rng, t0, assets, individuals, truth)
    _apply_timeline(store, config, transfers, decisions)
    return store, truth


# ----------------------------------------------------------------------
# scoring against the answer key
# ----------------------------------------------------------------------


def evaluate(
    store: Store,
    truth: GroundTruth,
    models: Union[TrainedModel, dict],
    as_of: float,
    thresholds: Optional[BandThresholds] = None,
) -> dict:
    """Recommend an owner for every live asset and score against truth.

    `models` is either one model or a dict keyed by asset type value.
    Returns top-1/top-3 hit rates, pooled AUC over shortlist scores, the
    inconclusive fraction, and the number of assets scored."""
    thresholds = thresholds or BandThresholds()
    cache: dict = {}
    top1 = top3 = scored = inconclusive = 0
    pool_labels: list[int] = []
    pool_scores: list[float] = []
    for asset_id in sorted(store.assets):
        asset = store.assets[asset_id]
        if not asset.is_live(as_of):
            continue
        want = truth.owner_at(asset_id, as_of)
        if want is None:
            continue
        if isinstance(models, TrainedModel):
            model = models
            if model.asset_type != asset.asset_type:
                continue
        else:
            model = models.get(asset.asset_type.value)
            if model is None:
                continue
        rec = recommend_owner(store, asset_id, as_of, model, thresholds, cache)
        ranked = [entry.candidate_id for entry in rec.entries]
        scored += 1
        if ranked[:1] == [want]:
            top1 += 1
        if want in ranked[:3]:
            top3 += 1
        if rec.band is Band.INCONCLUSIVE:
            inconclusive += 1
        for entry in rec.entries:
            pool_labels.append(1 if entry.candidate_id == want else 0)
            pool_scores.append(entry.score)
    if scored == 0:
        raise ValidationError("no live assets with ground truth to evaluate")
    return {
        "n_assets": scored,
        "top1": top1 / scored,
        "top3": top3 / scored,
        "auc": auc_of(pool_labels, pool_scores),
        "inconclusive_rate": inconclusive / scored,
    }


def accuracy_experiment(
    config: Optional[SimConfig] = None,
    train_config: Optional[TrainConfig] = None,
) -> tuple[Store, GroundTruth, dict, dict]:
    """End-to-end run: generate, train one model per asset type, evaluate."""
    config = config or SimConfig()
    store, truth = generate(config)
    end = float(SIM_EPOCH + config.horizon_days * SECONDS_PER_DAY)
    models: dict[str, TrainedModel] = {}
    for type_name in sorted(config.assets_per_type):
        if int(config.assets_per_type[type_name]) > 0:
            models[type_name] = train_for_asset_type(
                store, AssetType(type_name), end, train_config
            )
    metrics = evaluate(store, truth, models, end)
    return store, truth, models, metrics


def drift_experiment(
    seed: int,
    switch_day: int = 90,
    window_days: int = 90,
    test_days: int = 30,
    post_switch_days: int = 90,
    assets: int = 100,
    decisions_per_asset: float = 5.0,
) -> tuple[float, float]:
    """Stage an ownership handoff partway through a decision stream and
    compare a windowed retraining against training on all history.

    switch_day counts from the first day of the decision stream. The
    stream itself begins only after a warmup long enough to fill the
    rolling activity windows (everything is created on day zero), so
    activity features are stationary across the handoff and cannot act
    as a hidden clock; the two models can only differ through the labels
    they saw. Both are evaluated on the final test_days of decisions.
    Returns (windowed_accuracy, all_history_accuracy); after the handoff
    the stale early labels should drag the all-history model down."""
    warmup_days = int(TOUCH_WINDOW_DAYS)
    horizon_days = warmup_days + switch_day + post_switch_days
    config = SimConfig(
        seed=seed,
        teams=8,
        individuals_per_team=6,
        assets_per_type={AssetType.SOURCE_FILE.value: assets},
        horizon_days=horizon_days,
        lambda_own=1.0,
        lambda_other=0.05,
        collaborators_per_asset=2,
        annotation_coverage=1.0,
        annotation_noise=0.0,
        decisions_per_asset=decisions_per_asset,
        delegate_fraction=0.0,
        label_noise=0.0,
        creation_spread_days=0,
        deletion_fraction=0.0,
        drift_switch_day=warmup_days + switch_day,
        decision_start_day=warmup_days,
    )
    store, _ = generate(config)
    t0 = float(SIM_EPOCH)
    end = t0 + horizon_days * SECONDS_PER_DAY
    cut = end - test_days * SECONDS_PER_DAY
    events = extract_labeling_events(store, 0.0, end)

    def window(lo: float, hi: float):
        return [e for e in events if lo <= e.at < hi]

    cache: dict = {}
    test_examples, _ = join_examples(store, window(cut, end), cache)
    recent_examples, _ = join_examples(
        store, window(cut - window_days * SECONDS_PER_DAY, cut), cache
    )
    full_examples, _ = join_examples(store, window(0.0, cut), cache)

    train_config = TrainConfig()
    windowed = train_model(
        recent_examples, [], AssetType.SOURCE_FILE, train_config, cut, window_days
    )
    all_history = train_model(full_examples, [], AssetType.SOURCE_FILE, train_config, cut)

    labels = [1 if ex.label is Label.POSITIVE else 0 for ex in test_examples]
    vectors = [ex.features for ex in test_examples]
    windowed_accuracy = accuracy_of(labels, predict_many(windowed, vectors))
    full_accuracy = accuracy_of(labels, predict_many(all_history, vectors))
    return windowed_accuracy, full_accuracy
