"""Ownership health and churn metrics.

Everything here is a pure read over the store: recomputing any field from
the raw event log gives the same number. Days are UTC day numbers
(timestamp // 86400) so results do not depend on host timezone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import ValidationError
from .model import (
    SECONDS_PER_DAY,
    AssetType,
    InteractionAction,
    day_of,
    day_start,
)
from .store import Store

STALE_DAYS_DEFAULT = 180

INCONCLUSIVE_BAND = "Inconclusive"


@dataclass
class TypeHealth:
    asset_count: int = 0
    unowned_count: int = 0
    stale_owner_count: int = 0
    recommended_count: int = 0
    inconclusive_count: int = 0

    @property
    def inconclusive_rate(self) -> float:
        if self.recommended_count == 0:
            return 0.0
        return self.inconclusive_count / self.recommended_count


@dataclass
class HealthReport:
    as_of: float
    stale_days: int
    unowned_count: int = 0
    stale_owner_count: int = 0
    recommended_count: int = 0
    inconclusive_count: int = 0
    asset_count: int = 0
    per_type: dict[str, TypeHealth] = field(default_factory=dict)

    @property
    def inconclusive_rate(self) -> float:
        if self.recommended_count == 0:
            return 0.0
        return self.inconclusive_count / self.recommended_count


def is_stale_owner(store: Store, asset_id: str, as_of: float, stale_days: int) -> bool:
    """True when the asset has an owner who produced no interaction event on
    the asset within the staleness horizon."""
    owner = store.current_owner(asset_id, as_of)
    if owner is None:
        return False
    lo = as_of - stale_days * SECONDS_PER_DAY
    return store.pair_activity(asset_id, owner).all.count_in(lo, as_of) == 0


def health_report(
    store: Store, as_of: float, stale_days: int = STALE_DAYS_DEFAULT
) -> HealthReport:
    report = HealthReport(as_of=as_of, stale_days=stale_days)
    for type_name in (t.value for t in AssetType):
        report.per_type[type_name] = TypeHealth()
    for asset_id, asset in store.assets.items():
        if not asset.is_live(as_of):
            continue
        bucket = report.per_type[asset.asset_type.value]
        report.asset_count += 1
        bucket.asset_count += 1
        if store.current_owner(asset_id, as_of) is None:
            report.unowned_count += 1
            bucket.unowned_count += 1
        elif is_stale_owner(store, asset_id, as_of, stale_days):
            report.stale_owner_count += 1
            bucket.stale_owner_count += 1
        latest = store.latest_recommendation(asset_id, as_of)
        if latest is not None:
            report.recommended_count += 1
            bucket.recommended_count += 1
            if latest.band == INCONCLUSIVE_BAND:
                report.inconclusive_count += 1
                bucket.inconclusive_count += 1
    return report


@dataclass
class ChurnBucket:
    day: int
    added: int = 0
    deleted: int = 0
    changed: int = 0
    owner_changes: int = 0


@dataclass
class ChurnSeries:
    asset_type: AssetType
    from_day: int
    to_day: int
    buckets: list[ChurnBucket] = field(default_factory=list)

    def bucket(self, day: int) -> ChurnBucket:
        return self.buckets[day - self.from_day]


def churn(
    store: Store, asset_type: AssetType, from_day: int, to_day: int
) -> ChurnSeries:
    """Daily asset and owner churn for one asset type over [from_day, to_day],
    inclusive, in UTC day numbers."""
    if from_day > to_day:
        raise ValidationError("from_day must not exceed to_day")
    asset_type = AssetType(asset_type)
    series = ChurnSeries(asset_type, from_day, to_day)
    series.buckets = [ChurnBucket(day) for day in range(from_day, to_day + 1)]

    def in_range(day: int) -> bool:
        return from_day <= day <= to_day

    for asset_id, asset in store.assets.items():
        if asset.asset_type is not asset_type:
            continue
        created_day = day_of(asset.created_at)
        if in_range(created_day):
            series.bucket(created_day).added += 1
        if asset.deleted_at is not None:
            deleted_day = day_of(asset.deleted_at)
            if in_range(deleted_day):
                series.bucket(deleted_day).deleted += 1
        modify_times = store.asset_activity(asset_id).action_times(
            InteractionAction.MODIFY.value
        )
        for day in range(from_day, to_day + 1):
            if modify_times.count_in(day_start(day), day_start(day + 1)):
                series.bucket(day).changed += 1

    transferred: set[tuple[int, str]] = set()
    for transfer in store.transfers:
        asset = store.assets.get(transfer.asset_id)
        if asset is None or asset.asset_type is not asset_type:
            continue
        day = day_of(transfer.at)
        if in_range(day):
            transferred.add((day, transfer.asset_id))
    for day, _ in transferred:
        series.bucket(day).owner_changes += 1
    return series


def churn_to_tsv(series: ChurnSeries) -> str:
    lines = ["day\tadded\tdeleted\tchanged\towner_changes"]
    for bucket in series.buckets:
        lines.append(
            f"{bucket.day}\t{bucket.added}\t{bucket.deleted}"
            f"\t{bucket.changed}\t{bucket.owner_changes}"
        )
    return "\n".join(lines) + "\n"


def health_to_text(report: HealthReport) -> str:
    lines = [
        f"as_of {report.as_of!r}  assets {report.asset_count}",
        f"unowned {report.unowned_count}",
        f"stale_owner {report.stale_owner_count} (horizon {report.stale_days}d)",
        f"inconclusive_rate {report.inconclusive_rate:.4f}"
        f" ({report.inconclusive_count}/{report.recommended_count} recommended)",
    ]
    for type_name in sorted(report.per_type):
        bucket = report.per_type[type_name]
        lines.append(
            f"  {type_name}: assets {bucket.asset_count}, unowned {bucket.unowned_count},"
            f" stale {bucket.stale_owner_count},"
            f" inconclusive_rate {bucket.inconclusive_rate:.4f}"
        )
    return "\n".join(lines) + "\n"
