"""Health report and churn series, checked against flat-scan recomputation."""

import random

import pytest

from steward.errors import ValidationError
from steward.health import (
    STALE_DAYS_DEFAULT,
    churn,
    churn_to_tsv,
    health_report,
    health_to_text,
    is_stale_owner,
)
from steward.model import AssetType, AttributionSource, day_of
from conftest import DAY, T0, small_world
import oracles


def test_stale_owner_rule(store):
    small_world(store)
    # alice touched file-a on day 1; with a 3-day horizon she goes stale
    # after day 4
    assert is_stale_owner(store, "file-a", T0 + 2 * DAY, stale_days=3) is False
    assert is_stale_owner(store, "file-a", T0 + 1 * DAY + 3 * DAY, stale_days=3) is False
    assert is_stale_owner(store, "file-a", T0 + 5 * DAY, stale_days=3) is True
    # unowned assets are never stale-owned
    assert is_stale_owner(store, "file-b", T0 + 300 * DAY, stale_days=3) is False
    # bob's admin action on day 2 keeps tbl-a fresh at day 4
    assert is_stale_owner(store, "tbl-a", T0 + 4 * DAY, stale_days=3) is False


def test_health_report_small_world(store):
    small_world(store)
    store.issue_recommendation(
        "file-b", T0 + 3 * DAY, "m", "Inconclusive", [{"candidate_id": "bob", "score": 0.2}]
    )
    report = health_report(store, T0 + 6 * DAY, stale_days=3)
    assert report.asset_count == 3
    assert report.unowned_count == 1  # file-b
    assert report.stale_owner_count == 2  # alice idle since day 1, bob since day 2
    assert report.recommended_count == 1
    assert report.inconclusive_count == 1
    assert report.inconclusive_rate == 1.0
    src = report.per_type["SourceFile"]
    assert (src.asset_count, src.unowned_count) == (2, 1)
    tbl = report.per_type["WarehouseTable"]
    assert (tbl.asset_count, tbl.stale_owner_count) == (1, 1)
    assert report.per_type["ConfigFile"].asset_count == 0
    # day 11: file-b is deleted and drops out entirely
    later = health_report(store, T0 + 11 * DAY, stale_days=3)
    assert later.asset_count == 2
    assert later.unowned_count == 0
    assert later.recommended_count == 0  # its recommendation died with it


def test_inconclusive_rate_denominator():
    from steward.health import HealthReport

    empty = HealthReport(as_of=0.0, stale_days=1)
    assert empty.inconclusive_rate == 0.0


def test_churn_small_world(store):
    small_world(store)
    base_day = day_of(T0)
    series = churn(store, AssetType.SOURCE_FILE, base_day, base_day + 11)
    assert series.bucket(base_day).added == 2
    assert series.bucket(base_day).owner_changes == 1  # alice takes file-a
    assert series.bucket(base_day + 1).changed == 1  # alice modifies file-a
    assert series.bucket(base_day + 2).changed == 1  # bob modifies file-b
    assert series.bucket(base_day + 10).deleted == 1
    totals = [b.added + b.deleted + b.changed + b.owner_changes for b in series.buckets]
    assert sum(totals) == 6
    tables = churn(store, AssetType.WAREHOUSE_TABLE, base_day, base_day + 2)
    assert tables.bucket(base_day).added == 1
    assert tables.bucket(base_day).owner_changes == 1
    assert tables.bucket(base_day + 2).changed == 0  # admin action is not a modify
    with pytest.raises(ValidationError):
        churn(store, AssetType.SOURCE_FILE, 10, 9)


def test_churn_counts_distinct_assets_per_day(store):
    small_world(store)
    # two transfers of the same asset on one day count once
    store.transfer_owner("file-a", "carol", T0 + 20 * DAY, AttributionSource.HUMAN_DECISION)
    store.transfer_owner("file-a", "bob", T0 + 20 * DAY + 60, AttributionSource.HUMAN_DECISION)
    day = day_of(T0 + 20 * DAY)
    series = churn(store, AssetType.SOURCE_FILE, day, day)
    assert series.bucket(day).owner_changes == 1


def test_churn_tsv(store):
    small_world(store)
    base_day = day_of(T0)
    text = churn_to_tsv(churn(store, AssetType.SOURCE_FILE, base_day, base_day + 2))
    lines = text.strip().split("\n")
    assert lines[0] == "day\tadded\tdeleted\tchanged\towner_changes"
    assert len(lines) == 4
    assert lines[1].split("\t") == [str(base_day), "2", "0", "0", "1"]


def test_health_text(store):
    small_world(store)
    text = health_to_text(health_report(store, T0 + 6 * DAY))
    assert "assets 3" in text
    assert "unowned 1" in text
    assert "SourceFile" in text


# ----------------------------------------------------------------------
# reference equality on the large simulated store
# ----------------------------------------------------------------------


def test_health_matches_reference(oracle_store, oracle_world):
    rng = random.Random(17)
    hi = oracle_store.max_event_ts + DAY
    for _ in range(25):
        as_of = rng.uniform(T0, hi)
        report = health_report(oracle_store, as_of)
        want = oracles.health(oracle_world, as_of, STALE_DAYS_DEFAULT)
        assert report.asset_count == want["asset_count"], as_of
        assert report.unowned_count == want["unowned_count"], as_of
        assert report.stale_owner_count == want["stale_owner_count"], as_of
        assert report.recommended_count == want["recommended_count"], as_of
        assert report.inconclusive_count == want["inconclusive_count"], as_of


def test_churn_matches_reference(oracle_store, oracle_world):
    lo_day = day_of(T0)
    hi_day = day_of(oracle_store.max_event_ts) + 1
    for type_name in ("SourceFile", "WarehouseTable", "ConfigFile"):
        series = churn(store=oracle_store, asset_type=AssetType(type_name),
                       from_day=lo_day, to_day=hi_day)
        want = oracles.churn(oracle_world, type_name, lo_day, hi_day)
        for bucket in series.buckets:
            expect = want[bucket.day]
            got = {
                "added": bucket.added,
                "deleted": bucket.deleted,
                "changed": bucket.changed,
                "owner_changes": bucket.owner_changes,
            }
            assert got == expect, (type_name, bucket.day)
