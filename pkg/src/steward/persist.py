"""Append-only event log with deterministic replay.

Every mutation in the engine is one record in this log; materialized state
(see `store.Store`) is a pure fold over it. On-disk format is line-oriented
UTF-8, one record per line:

    <sequence>\t<kind>\t<crc32 checksum>\t<payload>

The payload is a JSON object carrying a format version (``"v"``), the
record's timestamp (``"recorded_at"``) and the kind-specific fields. The
checksum covers the payload bytes. A torn final line (partial write before a
crash) is truncated on open with a warning; corruption anywhere else raises
`CorruptLog`.
"""

from __future__ import annotations

import errno
import json
import logging
import os
import zlib
from dataclasses import dataclass
from typing import Iterator, Optional

from .errors import CorruptLog, StorageFull, StoreLocked, ValidationError

logger = logging.getLogger(__name__)

PAYLOAD_VERSION = 1

# Event kinds understood by the fold. Org nodes, asset deletions, and
# dependency edges need their own records so that replay can rebuild the
# full domain state.
KIND_ORG_NODE_ADDED = "OrgNodeAdded"
KIND_CANDIDATE_REGISTERED = "CandidateRegistered"
KIND_ASSET_REGISTERED = "AssetRegistered"
KIND_ASSET_DELETED = "AssetDeleted"
KIND_DEPENDENCY_RECORDED = "DependencyRecorded"
KIND_INTERACTION_INGESTED = "InteractionIngested"
KIND_ANNOTATION_RECORDED = "AnnotationRecorded"
KIND_OWNER_CHANGED = "OwnerChanged"
KIND_RECOMMENDATION_ISSUED = "RecommendationIssued"
KIND_DECISION_RECORDED = "DecisionRecorded"
KIND_MODEL_TRAINED = "ModelTrained"

EVENT_KINDS = frozenset(
    {
        KIND_ORG_NODE_ADDED,
        KIND_CANDIDATE_REGISTERED,
        KIND_ASSET_REGISTERED,
        KIND_ASSET_DELETED,
        KIND_DEPENDENCY_RECORDED,
        KIND_INTERACTION_INGESTED,
        KIND_ANNOTATION_RECORDED,
        KIND_OWNER_CHANGED,
        KIND_RECOMMENDATION_ISSUED,
        KIND_DECISION_RECORDED,
        KIND_MODEL_TRAINED,
    }
)


@dataclass
class StoredEvent:
    sequence_number: int
    kind: str
    payload: dict
    recorded_at: float


def encode_line(event: StoredEvent) -> str:
    body = dict(event.payload)
    body["v"] = PAYLOAD_VERSION
    body["recorded_at"] = event.recorded_at
    payload = json.dumps(body, sort_keys=True, separators=(",", ":"), allow_nan=False)
    checksum = zlib.crc32(payload.encode("utf-8")) & 0xFFFFFFFF
    return f"{event.sequence_number}\t{event.kind}\t{checksum:08x}\t{payload}\n"


def decode_line(line: str, position: int) -> StoredEvent:
    """Parse one log line; `position` is the 1-based line number for errors."""
    stripped = line.rstrip("\n")
    parts = stripped.split("\t", 3)
    if len(parts) != 4:
        raise CorruptLog("malformed record", position)
    seq_text, kind, checksum_text, payload_text = parts
    try:
        seq = int(seq_text)
        expected = int(checksum_text, 16)
    except ValueError:
        raise CorruptLog("malformed record header", position) from None
    actual = zlib.crc32(payload_text.encode("utf-8")) & 0xFFFFFFFF
    if actual != expected:
        raise CorruptLog("checksum mismatch", position)
    if kind not in EVENT_KINDS:
        raise CorruptLog(f"unknown event kind {kind!r}", position)
    try:
        body = json.loads(payload_text)
    except json.JSONDecodeError:
        raise CorruptLog("unparseable payload", position) from None
    if not isinstance(body, dict) or body.get("v") != PAYLOAD_VERSION:
        raise CorruptLog("unsupported payload version", position)
    recorded_at = body.pop("recorded_at", 0.0)
    body.pop("v")
    return StoredEvent(seq, kind, body, recorded_at)


class EventLog:
    """Dense, strictly increasing sequence of immutable events.

    In-memory by default; `EventLog.open` attaches a backing file that every
    append is flushed to before returning. Exactly one writer may hold a
    file-backed log at a time (advisory flock); concurrent readers replay
    immutable prefixes via `EventLog.read_file`.
    """

    def __init__(self):
        self._lines: list[str] = []
        self._fh = None
        self._fsync = False
        self.path: Optional[str] = None

    def __len__(self) -> int:
        return len(self._lines)

    @property
    def next_sequence(self) -> int:
        return len(self._lines)

    @classmethod
    def open(cls, path: str, fsync: bool = True) -> "EventLog":
        """Open (creating if needed) a file-backed log for writing."""
        import fcntl

        log = cls()
        log.path = path
        log._fsync = fsync
        fh = open(path, "a+", encoding="utf-8")
        try:
            fcntl.flock(fh.fileno(), fcntl.LOCK_EX | fcntl.LOCK_NB)
        except OSError:
            fh.close()
            raise StoreLocked(f"another writer holds {path}") from None
        log._fh = fh
        fh.seek(0)
        good_lines, truncate_at = _scan_lines(fh.read())
        log._lines = good_lines
        if truncate_at is not None:
            logger.warning(
                "truncating torn tail of %s at byte %d", path, truncate_at
            )
            fh.truncate(truncate_at)
            fh.flush()
        fh.seek(0, os.SEEK_END)
        return log

    @classmethod
    def read_file(cls, path: str) -> "EventLog":
        """Load a log snapshot without taking the writer lock."""
        log = cls()
        try:
            with open(path, "r", encoding="utf-8") as fh:
                content = fh.read()
        except OSError as exc:
            raise ValidationError(f"cannot read log {path}: {exc}") from exc
        log._lines, _ = _scan_lines(content)
        return log

    @classmethod
    def from_bytes(cls, data: bytes) -> "EventLog":
        log = cls()
        log._lines, _ = _scan_lines(data.decode("utf-8"))
        return log

    def append(self, kind: str, payload: dict, recorded_at: float) -> StoredEvent:
        return self.append_many([(kind, payload, recorded_at)])[0]

    def append_many(
        self, items: list[tuple[str, dict, float]]
    ) -> list[StoredEvent]:
        """Append a batch atomically-enough: one flush/fsync for the batch."""
        out = []
        chunk = []
        for kind, payload, recorded_at in items:
            if kind not in EVENT_KINDS:
                raise ValidationError(f"unknown event kind {kind!r}")
            event = StoredEvent(self.next_sequence, kind, payload, recorded_at)
            line = encode_line(event)
            self._lines.append(line)
            chunk.append(line)
            out.append(event)
        if self._fh is not None and chunk:
            try:
                self._fh.write("".join(chunk))
                self._fh.flush()
                if self._fsync:
                    os.fsync(self._fh.fileno())
            except OSError as exc:
                if exc.errno == errno.ENOSPC:
                    raise StorageFull(str(exc)) from exc
                raise
        return out

    def events(self, up_to: Optional[int] = None) -> Iterator[StoredEvent]:
        """Yield events with sequence < up_to (all when up_to is None)."""
        stop = len(self._lines) if up_to is None else min(up_to, len(self._lines))
        for i in range(stop):
            yield decode_line(self._lines[i], i + 1)

    def dump_bytes(self) -> bytes:
        return "".join(self._lines).encode("utf-8")

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


def _scan_lines(content: str) -> tuple[list[str], Optional[int]]:
    """Validate raw log content.

    Returns the good lines and, when the final line is torn, the byte offset
    to truncate at. The trailing newline is the commit marker: a final line
    without one (or one that fails checksum/parse) is dropped as a torn
    write. Corruption before the tail is not recoverable.
    """
    lines: list[str] = []
    offset = 0
    raw_lines = content.splitlines(keepends=True)
    for i, raw in enumerate(raw_lines):
        is_last = i == len(raw_lines) - 1
        if is_last and not raw.endswith("\n"):
            return lines, offset
        try:
            event = decode_line(raw, i + 1)
            if event.sequence_number != i:
                raise CorruptLog(
                    f"sequence gap: expected {i}, found {event.sequence_number}",
                    i + 1,
                )
        except CorruptLog:
            if is_last:
                return lines, offset
            raise
        lines.append(raw)
        offset += len(raw.encode("utf-8"))
    return lines, None
