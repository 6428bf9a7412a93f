import pytest

from steward.model import (
    AnnotationKind,
    AssetType,
    AttributionSource,
    CandidateType,
    EdgeKind,
    InteractionAction,
    InteractionEvent,
    OrgNodeKind,
    OwnershipAnnotation,
)
from steward.persist import EventLog
from steward.store import Store
from steward import simulate

T0 = 1_700_000_000.0
DAY = 86400.0


@pytest.fixture
def store():
    return Store()


def build_org(store, teams=("team-a", "team-b")):
    store.add_org_node("root", None, OrgNodeKind.COMPANY, at=0.0)
    store.add_org_node("div-1", "root", OrgNodeKind.ORG, at=0.0)
    for team in teams:
        store.add_org_node(team, "div-1", OrgNodeKind.TEAM, at=0.0)


def small_world(store):
    """A compact fixed world with known owners, activity, and annotations.

    Timeline (days after T0):
      0   file-a, file-b, tbl-a created; alice owns file-a, bob owns tbl-a
      1   alice modifies file-a twice, carol reviews it
      2   bob modifies file-b; admin action by bob on tbl-a
      5   annotation on file-a naming carol
      10  file-b deleted
    """
    build_org(store)
    store.register_candidate("alice", CandidateType.INDIVIDUAL, "Alice", "team-a", at=0.0)
    store.register_candidate("bob", CandidateType.INDIVIDUAL, "Bob", "team-b", at=0.0)
    store.register_candidate("carol", CandidateType.INDIVIDUAL, "Carol", "team-a", at=0.0)
    store.register_candidate("team-cand-a", CandidateType.TEAM, "Team A", "team-a", at=0.0)

    store.register_asset("file-a", AssetType.SOURCE_FILE, "src/a.py", T0)
    store.register_asset("file-b", AssetType.SOURCE_FILE, "src/b.py", T0)
    store.register_asset("tbl-a", AssetType.WAREHOUSE_TABLE, "warehouse.db.t", T0)
    store.add_dependency("file-a", "tbl-a", EdgeKind.USAGE, at=T0)

    store.transfer_owner("file-a", "alice", T0, AttributionSource.IMPORT)
    store.transfer_owner("tbl-a", "bob", T0, AttributionSource.IMPORT)

    events = [
        InteractionEvent("e1", "alice", "file-a", InteractionAction.MODIFY, T0 + 1 * DAY),
        InteractionEvent("e2", "alice", "file-a", InteractionAction.MODIFY, T0 + 1 * DAY + 60),
        InteractionEvent("e3", "carol", "file-a", InteractionAction.REVIEW, T0 + 1 * DAY + 120),
        InteractionEvent("e4", "bob", "file-b", InteractionAction.MODIFY, T0 + 2 * DAY),
        InteractionEvent("e5", "bob", "tbl-a", InteractionAction.ADMIN_ACTION, T0 + 2 * DAY + 60),
    ]
    store.record_interactions(events)
    store.record_annotation(
        OwnershipAnnotation("file-a", "carol", AnnotationKind.OWNERS_DIRECTIVE, "src/a.py:1"),
        at=T0 + 5 * DAY,
    )
    store.delete_asset("file-b", T0 + 10 * DAY)
    return {"t0": T0}


ORACLE_SIM_CONFIG = simulate.SimConfig(
    seed=123,
    teams=7,
    individuals_per_team=5,
    assets_per_type={"SourceFile": 70, "WarehouseTable": 50, "ConfigFile": 40},
    horizon_days=100,
    decisions_per_asset=1.5,
    creation_spread_days=20,
    deletion_fraction=0.05,
    reorg_schedule=[(55, 0.15)],
)


@pytest.fixture(scope="session")
def oracle_log_bytes():
    """Serialized event log of a busy simulated world (>10k events)."""
    store, _ = simulate.generate(ORACLE_SIM_CONFIG)
    data = store.log.dump_bytes()
    assert len(store.log) >= 10_000
    return data


@pytest.fixture(scope="session")
def oracle_store(oracle_log_bytes):
    return Store(EventLog.from_bytes(oracle_log_bytes))


@pytest.fixture(scope="session")
def oracle_world(oracle_store):
    from oracles import world_from_store

    return world_from_store(oracle_store)
