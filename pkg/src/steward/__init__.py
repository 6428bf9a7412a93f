"""Ownership management for software assets.

Tracks who owns files, tables, and configs over time; learns from activity
logs and human decisions; recommends owners with human-readable reasons;
and reports on coverage, staleness, and churn.
"""

from .errors import StewardError
from .model import (
    AnnotationKind,
    Asset,
    AssetType,
    AttributionRecord,
    AttributionSource,
    CandidateType,
    Decision,
    EdgeKind,
    InteractionAction,
    InteractionEvent,
    OrgNodeKind,
    OwnerCandidate,
    OwnershipAnnotation,
)
from .persist import EventLog
from .store import Store, replay

__version__ = "0.1.0"

__all__ = [
    "AnnotationKind",
    "Asset",
    "AssetType",
    "AttributionRecord",
    "AttributionSource",
    "CandidateType",
    "Decision",
    "EdgeKind",
    "EventLog",
    "InteractionAction",
    "InteractionEvent",
    "OrgNodeKind",
    "OwnerCandidate",
    "OwnershipAnnotation",
    "StewardError",
    "Store",
    "replay",
    "__version__",
]
