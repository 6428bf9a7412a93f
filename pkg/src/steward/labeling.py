"""Labeling events and dataset construction.

A labeling event is a recorded human judgment: an explicit Accept/Reject on
a recommendation, or a direct human-initiated ownership transfer (which
counts as accepting the new owner). Auto-applied and imported transfers are
machine actions and never become labels. Delegations are kept as events but
yield no label, since handing a decision to someone else says nothing about
the candidate's suitability.

Joining an event with features AT the event's own timestamp uses only
strictly earlier history, so the example never sees its own outcome.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .errors import ValidationError
from .featurize import FeatureVector, compute_features
from .model import AttributionSource, Decision
from .store import Store


class Label(str, Enum):
    POSITIVE = "Positive"
    NEGATIVE = "Negative"


@dataclass(frozen=True)
class LabelingEvent:
    event_id: str
    asset_id: str
    candidate_id: str
    decision: Decision
    decided_by: str
    at: float


@dataclass
class LabeledExample:
    features: FeatureVector
    label: Label
    origin_event_id: str

    @property
    def as_of(self) -> float:
        return self.features.as_of


@dataclass(frozen=True)
class JoinFailure:
    event_id: str
    reason: str


@dataclass
class DatasetSplit:
    train: list[LabeledExample] = field(default_factory=list)
    test: list[LabeledExample] = field(default_factory=list)
    failures: list[JoinFailure] = field(default_factory=list)


def extract_labeling_events(
    store: Store, since: float, until: float
) -> list[LabelingEvent]:
    """Human decisions with timestamps in [since, until)."""
    if since > until:
        raise ValidationError("since must not exceed until")
    out: list[LabelingEvent] = []
    for _, entry in store.decisions:
        if not (since <= entry.at < until):
            continue
        out.append(
            LabelingEvent(
                event_id=entry.decision_id,
                asset_id=entry.asset_id,
                candidate_id=entry.candidate_id,
                decision=Decision(entry.decision),
                decided_by=entry.decided_by,
                at=entry.at,
            )
        )
    for index, transfer in enumerate(store.transfers):
        if transfer.source != AttributionSource.HUMAN_DECISION.value:
            continue
        if transfer.actor_id is None or transfer.from_decision:
            # decision-applied transfers already appear as decision events
            continue
        if not (since <= transfer.at < until):
            continue
        out.append(
            LabelingEvent(
                event_id=f"xfer-{index:08d}",
                asset_id=transfer.asset_id,
                candidate_id=transfer.owner_id,
                decision=Decision.ACCEPT,
                decided_by=transfer.actor_id,
                at=transfer.at,
            )
        )
    out.sort(key=lambda e: (e.at, e.event_id))
    return out


def join_examples(
    store: Store, events: list[LabelingEvent], cache: Optional[dict] = None
) -> tuple[list[LabeledExample], list[JoinFailure]]:
    """Join Accept/Reject events with point-in-time features. Delegates carry
    no label and are skipped silently; events whose asset or candidate cannot
    be joined become JoinFailure rows instead of examples."""
    examples: list[LabeledExample] = []
    failures: list[JoinFailure] = []
    for event in events:
        if event.decision is Decision.DELEGATE:
            continue
        asset = store.assets.get(event.asset_id)
        if asset is None:
            failures.append(JoinFailure(event.event_id, f"unknown asset {event.asset_id!r}"))
            continue
        if not asset.is_live(event.at):
            failures.append(
                JoinFailure(event.event_id, f"asset {event.asset_id!r} deleted at event time")
            )
            continue
        if event.candidate_id not in store.candidates:
            failures.append(
                JoinFailure(event.event_id, f"unknown candidate {event.candidate_id!r}")
            )
            continue
        features = compute_features(
            store, event.asset_id, event.candidate_id, event.at, cache
        )
        label = Label.POSITIVE if event.decision is Decision.ACCEPT else Label.NEGATIVE
        examples.append(LabeledExample(features, label, event.event_id))
    return examples, failures


def build_dataset(
    store: Store,
    events: list[LabelingEvent],
    split_fraction: float = 0.8,
    seed: int = 0,
) -> DatasetSplit:
    """Join Accept/Reject events with point-in-time features and split
    temporally: the earliest ceil(split_fraction * n) examples train, the
    rest test. The seed only breaks ties among equal timestamps."""
    if not (0.0 < split_fraction < 1.0):
        raise ValidationError("split_fraction must lie strictly between 0 and 1")
    rng = random.Random(seed)
    examples, failures = join_examples(store, events)
    joined = [
        (example.as_of, rng.random(), example.origin_event_id, example)
        for example in examples
    ]
    joined.sort(key=lambda item: item[:3])
    n = len(joined)
    k = math.ceil(split_fraction * n) if n else 0
    train = [item[3] for item in joined[:k]]
    test = [item[3] for item in joined[k:]]
    return DatasetSplit(train=train, test=test, failures=failures)


# ----------------------------------------------------------------------
# line-delimited dataset exchange format
# ----------------------------------------------------------------------


def example_to_line(example: LabeledExample) -> str:
    record = {
        "v": example.features.schema_version,
        "asset_id": example.features.asset_id,
        "candidate_id": example.features.candidate_id,
        "as_of": example.features.as_of,
        "values": example.features.values,
        "label": example.label.value,
        "origin_event_id": example.origin_event_id,
    }
    return json.dumps(record, separators=(",", ":"), sort_keys=True)


def example_from_line(line: str) -> LabeledExample:
    record = json.loads(line)
    features = FeatureVector(
        asset_id=record["asset_id"],
        candidate_id=record["candidate_id"],
        as_of=record["as_of"],
        values=[(name, float(value)) for name, value in record["values"]],
        schema_version=record["v"],
    )
    return LabeledExample(features, Label(record["label"]), record["origin_event_id"])


def dataset_to_lines(examples: list[LabeledExample]) -> str:
    return "".join(example_to_line(e) + "\n" for e in examples)


def dataset_from_lines(text: str) -> list[LabeledExample]:
    return [example_from_line(line) for line in text.splitlines() if line.strip()]
