"""Log parsing, annotation extraction, and historical attribution imports."""

import logging

import pytest

from steward.errors import UnknownFormatTag, UnreadableFile, ValidationError
from steward.ingest import (
    ImportDiagnostic,
    LogIngestor,
    extract_annotations,
    ingest_attribution_import,
    parse_log_file,
    parse_log_lines,
)
from steward.model import (
    AnnotationKind,
    AssetType,
    AttributionRecord,
    AttributionSource,
    CandidateType,
    InteractionAction,
)
from conftest import DAY, T0, build_org

GOOD_LINES = [
    "2024-01-05T10:00:00Z\talice\tsrc/a.py\t12\n",
    "# comment line\n",
    "\n",
    "2024-01-05T11:00:00+00:00\tbob\tsrc/b.py\t3\n",
]


def test_parse_commitlog_basics():
    events, diags = parse_log_lines(GOOD_LINES, "commitlog", "f.log")
    assert diags == []
    assert len(events) == 2
    first = events[0]
    assert first.actor_id == "alice"
    assert first.asset_id == "src/a.py"
    assert first.action is InteractionAction.MODIFY
    assert first.attributes == {"lines_changed": "12"}
    # Z suffix and explicit offset agree on the instant
    assert events[1].at - first.at == 3600.0


def test_format_tag_controls_action_and_attribute():
    line = ["2024-01-05T10:00:00Z\tal\tx\tv\n"]
    by_tag = {
        "commitlog": (InteractionAction.MODIFY, "lines_changed"),
        "reviewlog": (InteractionAction.REVIEW, "verdict"),
        "adminlog": (InteractionAction.ADMIN_ACTION, "tool_action"),
    }
    for tag, (action, attr) in by_tag.items():
        events, _ = parse_log_lines(line, tag, "f")
        assert events[0].action is action
        assert events[0].attributes == {attr: "v"}
    with pytest.raises(UnknownFormatTag):
        parse_log_lines(line, "syslog", "f")


def test_every_line_is_accounted_for():
    lines = GOOD_LINES + [
        "not tab separated\n",
        "2024-01-05\textra\tfields\there\tboom\n",
        "nonsense-date\ta\tb\tc\n",
        "2024-01-05T10:00:00Z\t\tb\tc\n",
    ]
    events, diags = parse_log_lines(lines, "commitlog", "f.log")
    blank_or_comment = 2
    assert len(events) + len(diags) + blank_or_comment == len(lines)
    reasons = [d.reason for d in diags]
    assert any("fields" in r for r in reasons)
    assert any("timestamp" in r for r in reasons)
    assert any("empty actor" in r for r in reasons)
    assert [d.line_number for d in diags] == sorted(d.line_number for d in diags)


def test_naive_timestamps_read_as_utc():
    events, _ = parse_log_lines(
        ["2024-01-05T10:00:00\ta\tx\t1\n", "2024-01-05T10:00:00Z\ta\ty\t1\n"],
        "commitlog",
        "f",
    )
    assert events[0].at == events[1].at


def test_event_ids_are_content_derived():
    line = "2024-01-05T10:00:00Z\talice\tsrc/a.py\t12\n"
    a1, _ = parse_log_lines([line], "commitlog", "f.log")
    a2, _ = parse_log_lines([line], "commitlog", "f.log")
    other_source, _ = parse_log_lines([line], "commitlog", "g.log")
    other_line, _ = parse_log_lines([line], "commitlog", "f.log", first_line_number=2)
    assert a1[0].event_id == a2[0].event_id
    assert a1[0].event_id != other_source[0].event_id
    assert a1[0].event_id != other_line[0].event_id
    assert a1[0].event_id.startswith("evt-")


def test_chunked_parse_matches_whole_file():
    lines = [f"2024-01-05T10:00:{i:02d}Z\tactor{i}\tasset\t1\n" for i in range(10)]
    whole, _ = parse_log_lines(lines, "commitlog", "big.log")
    head, _ = parse_log_lines(lines[:4], "commitlog", "big.log")
    tail, _ = parse_log_lines(lines[4:], "commitlog", "big.log", first_line_number=5)
    assert [e.event_id for e in head + tail] == [e.event_id for e in whole]


def test_resolver_failures_become_diagnostics():
    known = {"src/a.py": "asset-a"}
    events, diags = parse_log_lines(
        [
            "2024-01-05T10:00:00Z\ta\tsrc/a.py\t1\n",
            "2024-01-05T10:00:01Z\ta\tsrc/gone.py\t1\n",
        ],
        "commitlog",
        "f",
        resolve_asset=known.get,
    )
    assert [e.asset_id for e in events] == ["asset-a"]
    assert len(diags) == 1
    assert "gone.py" in diags[0].reason


def test_parse_log_file_uses_basename_for_ids(tmp_path):
    content = "2024-01-05T10:00:00Z\talice\tsrc/a.py\t12\n"
    p1 = tmp_path / "one" / "commits.log"
    p2 = tmp_path / "two" / "commits.log"
    for p in (p1, p2):
        p.parent.mkdir()
        p.write_text(content)
    e1, _ = parse_log_file(str(p1), "commitlog")
    e2, _ = parse_log_file(str(p2), "commitlog")
    assert e1[0].event_id == e2[0].event_id


def test_parse_log_file_errors(tmp_path):
    with pytest.raises(UnreadableFile):
        parse_log_file(str(tmp_path / "missing.log"), "commitlog")
    p = tmp_path / "x.log"
    p.write_text("")
    with pytest.raises(UnknownFormatTag):
        parse_log_file(str(p), "weird")


# ----------------------------------------------------------------------
# annotation extraction
# ----------------------------------------------------------------------


def test_extract_annotations_grammar():
    text = "\n".join(
        [
            "import os",
            "# OWNER: alice",
            "// ONCALL: rotation-7",
            "-- OWNER: bob",
            "OWNER: carol",
            "# just a comment mentioning OWNER somewhere",
            "",
        ]
    )
    found = extract_annotations(text, AssetType.SOURCE_FILE, "a", "src/a.py")
    assert [(a.named_candidate, a.annotation_kind) for a in found] == [
        ("alice", AnnotationKind.OWNERS_DIRECTIVE),
        ("rotation-7", AnnotationKind.ONCALL_DIRECTIVE),
        ("bob", AnnotationKind.OWNERS_DIRECTIVE),
        ("carol", AnnotationKind.OWNERS_DIRECTIVE),
    ]
    assert found[0].source_location == "src/a.py:2"
    assert all(a.asset_id == "a" for a in found)


def test_extract_annotations_warns_on_malformed(caplog):
    with caplog.at_level(logging.WARNING, logger="steward.ingest"):
        found = extract_annotations(
            "# OWNER: two names\n", AssetType.CONFIG_FILE, "a", "cfg"
        )
    assert found == []
    assert any("cfg:1" in rec.getMessage() for rec in caplog.records)


# ----------------------------------------------------------------------
# attribution import
# ----------------------------------------------------------------------


def import_setup(store):
    build_org(store)
    store.register_candidate("u", CandidateType.INDIVIDUAL, "U", "team-a", at=0.0)
    store.register_candidate("v", CandidateType.INDIVIDUAL, "V", "team-b", at=0.0)
    store.register_asset("a", AssetType.SOURCE_FILE, "a.py", T0)
    store.register_asset("b", AssetType.SOURCE_FILE, "b.py", T0)


def rec(asset, owner, lo_days, hi_days=None):
    hi = None if hi_days is None else T0 + hi_days * DAY
    return AttributionRecord(asset, owner, T0 + lo_days * DAY, hi, AttributionSource.IMPORT)


def test_import_accepts_disjoint_and_rejects_overlap(store):
    import_setup(store)
    records = [
        rec("a", "u", 0, 10),
        rec("a", "v", 10, 20),
        rec("a", "u", 15, 25),  # overlaps the second
        rec("b", "v", 0, None),
        rec("a", "u", 30, 29),  # inverted bounds
        AttributionRecord("zzz", "u", T0, None, AttributionSource.IMPORT),
        rec("b", "nobody", 40, 50),
    ]
    accepted, diags = ingest_attribution_import(store, records)
    assert accepted == 3
    by_index = {d.record_index: d.reason for d in diags}
    assert set(by_index) == {2, 4, 5, 6}
    assert "overlaps" in by_index[2]
    assert "valid_to precedes" in by_index[4]
    assert "unknown asset" in by_index[5]
    assert "unknown candidate" in by_index[6]
    assert store.current_owner("a", T0 + 5 * DAY) == "u"
    assert store.current_owner("a", T0 + 12 * DAY) == "v"
    assert store.current_owner("a", T0 + 22 * DAY) is None


def test_import_conflict_resolution_is_deterministic(store):
    import_setup(store)
    # same start: lexicographically smaller owner wins, the other overlaps
    records = [rec("a", "v", 0, 10), rec("a", "u", 0, 10)]
    accepted, diags = ingest_attribution_import(store, records)
    assert accepted == 1
    assert store.current_owner("a", T0 + DAY) == "u"
    assert diags[0].record_index == 0
    # earlier start beats later regardless of list order
    store2_records = [rec("b", "v", 5, 15), rec("b", "u", 0, 10)]
    accepted2, _ = ingest_attribution_import(store, store2_records)
    assert accepted2 == 1
    assert store.current_owner("b", T0 + 6 * DAY) == "u"


def test_import_respects_existing_intervals(store):
    import_setup(store)
    store.transfer_owner("a", "u", T0 + 5 * DAY, AttributionSource.HUMAN_DECISION)
    accepted, diags = ingest_attribution_import(store, [rec("a", "v", 0, None)])
    assert accepted == 0
    assert "overlaps" in diags[0].reason


# ----------------------------------------------------------------------
# ingestor end to end
# ----------------------------------------------------------------------


def test_ingestor_resolves_and_merges(store, tmp_path):
    import_setup(store)
    log_path = tmp_path / "commits.log"
    log_path.write_text(
        "2024-01-05T10:00:00Z\tu\ta.py\t12\n"
        "2024-01-05T11:00:00Z\tv\ta\t3\n"
        "2024-01-05T12:00:00Z\tu\tnot/registered.py\t1\n"
    )
    ingestor = LogIngestor(store)
    merged, diags = ingestor.ingest_file(str(log_path), "commitlog")
    assert merged == 2  # path form and id form both resolve
    assert len(diags) == 1 and "not/registered.py" in diags[0].reason
    again, diags2 = ingestor.ingest_file(str(log_path), "commitlog")
    assert again == 0
    assert len(diags2) == 1
    assert len(store.asset_activity("a").all) == 2


def test_ingestor_annotation_payload(store):
    import_setup(store)
    ingestor = LogIngestor(store)
    accepted, quarantined = ingestor.ingest_annotation_payload(
        "a", "# OWNER: u\n# OWNER: nobody\n", at=T0 + DAY
    )
    assert (accepted, quarantined) == (1, 1)
    assert store.annotation_names("a") == {"u"}
    with pytest.raises(ValidationError):
        ingestor.ingest_annotation_payload("zzz", "# OWNER: u\n")
