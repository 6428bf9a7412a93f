"""Log and annotation ingestion.

Three line-oriented, tab-separated log formats feed the interaction store:

    commitlog   <iso8601>\t<actor>\t<path>\t<lines_changed>
    reviewlog   <iso8601>\t<actor>\t<path>\t<verdict>
    adminlog    <iso8601>\t<actor>\t<table_name>\t<tool_action>

Parsing never aborts on a bad line; it yields a diagnostic instead, and
every input line is accounted for as event, diagnostic, or blank/comment.
Event IDs are content-derived so re-ingesting a file is a no-op.
"""

from __future__ import annotations

import hashlib
import logging
import os
import re
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Callable, Optional

from .errors import UnknownFormatTag, UnreadableFile, ValidationError
from .model import (
    AnnotationKind,
    AssetType,
    AttributionRecord,
    InteractionAction,
    InteractionEvent,
    OwnershipAnnotation,
)
from .store import Store

log = logging.getLogger(__name__)

FORMAT_ACTIONS = {
    "commitlog": InteractionAction.MODIFY,
    "reviewlog": InteractionAction.REVIEW,
    "adminlog": InteractionAction.ADMIN_ACTION,
}

FORMAT_ATTRIBUTE = {
    "commitlog": "lines_changed",
    "reviewlog": "verdict",
    "adminlog": "tool_action",
}


@dataclass(frozen=True)
class ParseDiagnostic:
    line_number: int
    reason: str


def _parse_timestamp(text: str) -> float:
    # fromisoformat in 3.10 rejects the Z suffix
    raw = text.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    dt = datetime.fromisoformat(raw)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def _event_id(source_id: str, line_number: int, line: str) -> str:
    digest = hashlib.sha256(
        f"{source_id}\x00{line_number}\x00{line}".encode("utf-8")
    ).hexdigest()
    return f"evt-{digest[:24]}"


def parse_log_lines(
    lines: list[str],
    format_tag: str,
    source_id: str,
    resolve_asset: Optional[Callable[[str], Optional[str]]] = None,
    first_line_number: int = 1,
) -> tuple[list[InteractionEvent], list[ParseDiagnostic]]:
    """Parse raw lines. With no resolver the asset field is kept verbatim.

    `first_line_number` lets a caller feed one logical file in chunks while
    keeping line numbers, and therefore event ids, identical to a single
    whole-file parse."""
    if format_tag not in FORMAT_ACTIONS:
        raise UnknownFormatTag(format_tag)
    action = FORMAT_ACTIONS[format_tag]
    attr_name = FORMAT_ATTRIBUTE[format_tag]
    events: list[InteractionEvent] = []
    diagnostics: list[ParseDiagnostic] = []
    for line_number, raw in enumerate(lines, start=first_line_number):
        line = raw.rstrip("\n").rstrip("\r")
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            diagnostics.append(
                ParseDiagnostic(line_number, f"expected 4 tab-separated fields, got {len(parts)}")
            )
            continue
        ts_text, actor, asset_ref, attr_value = (p.strip() for p in parts)
        if not actor or not asset_ref:
            diagnostics.append(ParseDiagnostic(line_number, "empty actor or asset field"))
            continue
        try:
            at = _parse_timestamp(ts_text)
        except ValueError:
            diagnostics.append(ParseDiagnostic(line_number, f"bad timestamp {ts_text!r}"))
            continue
        asset_id = asset_ref
        if resolve_asset is not None:
            resolved = resolve_asset(asset_ref)
            if resolved is None:
                diagnostics.append(
                    ParseDiagnostic(line_number, f"unknown asset {asset_ref!r}")
                )
                continue
            asset_id = resolved
        events.append(
            InteractionEvent(
                event_id=_event_id(source_id, line_number, line),
                actor_id=actor,
                asset_id=asset_id,
                action=action,
                at=at,
                attributes={attr_name: attr_value},
            )
        )
    return events, diagnostics


def parse_log_file(
    path: str,
    format_tag: str,
    resolve_asset: Optional[Callable[[str], Optional[str]]] = None,
) -> tuple[list[InteractionEvent], list[ParseDiagnostic]]:
    if format_tag not in FORMAT_ACTIONS:
        raise UnknownFormatTag(format_tag)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise UnreadableFile(f"{path}: {exc}") from exc
    # basename keys the event ids, so moving the log directory stays idempotent
    return parse_log_lines(lines, format_tag, os.path.basename(path), resolve_asset)


_ANNOTATION_RE = re.compile(
    r"^\s*(?:#|//|--)?\s*(OWNER|ONCALL):\s*(\S+)\s*$"
)

_DIRECTIVE_HINT_RE = re.compile(r"^\s*(?:#|//|--)?\s*(OWNER|ONCALL):")

_KIND_BY_WORD = {
    "OWNER": AnnotationKind.OWNERS_DIRECTIVE,
    "ONCALL": AnnotationKind.ONCALL_DIRECTIVE,
}


def extract_annotations(
    asset_payload: str,
    asset_type: AssetType,
    asset_id: str = "",
    source_name: str = "",
) -> list[OwnershipAnnotation]:
    """Pull OWNER:/ONCALL: directives out of an asset's text content.

    The asset_type parameter is accepted for symmetry across asset kinds;
    the directive grammar is the same for all three.
    """
    AssetType(asset_type)
    out = []
    for line_number, line in enumerate(asset_payload.splitlines(), start=1):
        match = _ANNOTATION_RE.match(line)
        if match is None:
            if _DIRECTIVE_HINT_RE.match(line):
                log.warning(
                    "unparseable ownership directive at %s:%d", source_name or "<payload>",
                    line_number,
                )
            continue
        word, candidate = match.groups()
        out.append(
            OwnershipAnnotation(
                asset_id=asset_id,
                named_candidate=candidate,
                annotation_kind=_KIND_BY_WORD[word],
                source_location=f"{source_name or asset_id}:{line_number}",
            )
        )
    return out


@dataclass(frozen=True)
class ImportDiagnostic:
    record_index: int
    reason: str


def ingest_attribution_import(
    store: Store, records: list[AttributionRecord]
) -> tuple[int, list[ImportDiagnostic]]:
    """Merge historical attribution records into the store.

    Conflicting overlaps resolve deterministically: earliest valid_from wins,
    ties break on lexicographic owner_id. Each record lands whole or not at
    all.
    """
    order = sorted(
        range(len(records)),
        key=lambda i: (records[i].valid_from, records[i].owner_id, i),
    )
    accepted = 0
    diagnostics = []
    accepted_by_asset: dict[str, list[AttributionRecord]] = {}
    for i in order:
        record = records[i]
        reason = _import_reject_reason(store, record, accepted_by_asset)
        if reason is not None:
            diagnostics.append(ImportDiagnostic(i, reason))
            continue
        store.import_attribution_record(record)
        accepted_by_asset.setdefault(record.asset_id, []).append(record)
        accepted += 1
    diagnostics.sort(key=lambda d: d.record_index)
    return accepted, diagnostics


def _import_reject_reason(
    store: Store,
    record: AttributionRecord,
    accepted_by_asset: dict[str, list[AttributionRecord]],
) -> Optional[str]:
    if record.asset_id not in store.assets:
        return f"unknown asset {record.asset_id!r}"
    if record.owner_id not in store.candidates:
        return f"unknown candidate {record.owner_id!r}"
    if record.valid_to is not None and record.valid_to < record.valid_from:
        return "valid_to precedes valid_from"
    existing = store.attribution.get(record.asset_id, [])
    for other in list(existing) + accepted_by_asset.get(record.asset_id, []):
        if record.overlaps(other):
            return (
                f"overlaps existing interval for {record.asset_id!r} "
                f"starting at {other.valid_from}"
            )
    return None


class LogIngestor:
    """Binds parsing to a store: resolves paths to assets and merges events."""

    def __init__(self, store: Store):
        self.store = store

    def resolve(self, path_or_name: str) -> Optional[str]:
        if path_or_name in self.store.assets:
            return path_or_name
        return self.store.asset_by_path.get(path_or_name)

    def ingest_file(self, path: str, format_tag: str) -> tuple[int, list[ParseDiagnostic]]:
        events, diagnostics = parse_log_file(path, format_tag, self.resolve)
        merged = self.store.record_interactions(events)
        return merged, diagnostics

    def ingest_annotation_payload(
        self,
        asset_id: str,
        payload: str,
        source_name: str = "",
        at: Optional[float] = None,
    ) -> tuple[int, int]:
        """Returns (accepted, quarantined) counts."""
        asset = self.store.assets.get(asset_id)
        if asset is None:
            raise ValidationError(f"unknown asset {asset_id!r}")
        annotations = extract_annotations(
            payload, asset.asset_type, asset_id, source_name or asset.path_or_name
        )
        if at is None:
            at = self.store.max_event_ts
        accepted = 0
        for annotation in annotations:
            if self.store.record_annotation(annotation, at):
                accepted += 1
        return accepted, len(annotations) - accepted
