"""Domain model: assets, owner candidates, the org tree, attribution, dependencies.

Timestamps are UTC seconds (int or float). Attribution intervals are half-open
[valid_from, valid_to): a transfer at t takes effect at t, so no instant has
two owners.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

SECONDS_PER_DAY = 86400


class AssetType(str, Enum):
    SOURCE_FILE = "SourceFile"
    WAREHOUSE_TABLE = "WarehouseTable"
    CONFIG_FILE = "ConfigFile"


class CandidateType(str, Enum):
    INDIVIDUAL = "Individual"
    TEAM = "Team"
    REPORTING_TEAM = "ReportingTeam"
    ONCALL_ROTATION = "OncallRotation"


class OrgNodeKind(str, Enum):
    COMPANY = "Company"
    ORG = "Org"
    TEAM = "Team"


class AttributionSource(str, Enum):
    ANNOTATION = "Annotation"
    HUMAN_DECISION = "HumanDecision"
    AUTO_APPLIED = "AutoApplied"
    IMPORT = "Import"


class EdgeKind(str, Enum):
    BUILD = "Build"
    USAGE = "Usage"
    FEATURE_MAPPING = "FeatureMapping"
    PRODUCT_MAPPING = "ProductMapping"


class Direction(str, Enum):
    IN = "In"
    OUT = "Out"
    BOTH = "Both"


class InteractionAction(str, Enum):
    MODIFY = "Modify"
    REVIEW = "Review"
    ADMIN_ACTION = "AdminAction"
    COMMENT = "Comment"


class AnnotationKind(str, Enum):
    OWNERS_DIRECTIVE = "OwnersDirective"
    ONCALL_DIRECTIVE = "OncallDirective"


class Decision(str, Enum):
    ACCEPT = "Accept"
    REJECT = "Reject"
    DELEGATE = "Delegate"


@dataclass
class Asset:
    asset_id: str
    asset_type: AssetType
    path_or_name: str
    created_at: float
    deleted_at: Optional[float] = None

    def is_live(self, at: float) -> bool:
        if at < self.created_at:
            return False
        return self.deleted_at is None or at < self.deleted_at


@dataclass
class OwnerCandidate:
    candidate_id: str
    candidate_type: CandidateType
    display_name: str
    org_node_id: str
    active: bool = True


@dataclass
class OrgNode:
    node_id: str
    parent_id: Optional[str]
    kind: OrgNodeKind


class OrgTree:
    """Rooted tree of org units; provides hop distance between nodes."""

    def __init__(self):
        self.nodes: dict[str, OrgNode] = {}
        self._root: Optional[str] = None

    @property
    def root(self) -> Optional[str]:
        return self._root

    def add(self, node: OrgNode) -> None:
        if node.parent_id is None:
            self._root = node.node_id
        self.nodes[node.node_id] = node

    def _path_to_root(self, node_id: str) -> list[str]:
        path = []
        cur: Optional[str] = node_id
        while cur is not None:
            path.append(cur)
            cur = self.nodes[cur].parent_id
        return path

    def distance(self, a: str, b: str) -> int:
        """Hop count between two nodes (0 when identical)."""
        if a == b:
            return 0
        pa = self._path_to_root(a)
        depth_a = {n: i for i, n in enumerate(pa)}
        hops_b = 0
        cur: Optional[str] = b
        while cur is not None:
            if cur in depth_a:
                return depth_a[cur] + hops_b
            hops_b += 1
            cur = self.nodes[cur].parent_id
        raise ValueError(f"nodes {a!r} and {b!r} share no root")

    def is_leaf(self, node_id: str) -> bool:
        children = any(n.parent_id == node_id for n in self.nodes.values())
        return not children


@dataclass
class AttributionRecord:
    asset_id: str
    owner_id: str
    valid_from: float
    valid_to: Optional[float]
    source: AttributionSource

    def contains(self, at: float) -> bool:
        if at < self.valid_from:
            return False
        return self.valid_to is None or at < self.valid_to

    def overlaps(self, other: "AttributionRecord") -> bool:
        a0, a1 = self.valid_from, self.valid_to
        b0, b1 = other.valid_from, other.valid_to
        # half-open intervals; an unbounded end behaves as +inf
        if a1 is not None and a1 <= b0:
            return False
        if b1 is not None and b1 <= a0:
            return False
        # empty intervals ([t, t)) overlap nothing
        if a1 is not None and a1 <= a0:
            return False
        if b1 is not None and b1 <= b0:
            return False
        return True


@dataclass(frozen=True)
class DependencyEdge:
    from_asset_id: str
    to_asset_id: str
    edge_kind: EdgeKind


@dataclass
class InteractionEvent:
    event_id: str
    actor_id: str
    asset_id: str
    action: InteractionAction
    at: float
    attributes: dict[str, str] = field(default_factory=dict)


@dataclass
class OwnershipAnnotation:
    asset_id: str
    named_candidate: str
    annotation_kind: AnnotationKind
    source_location: str


def day_of(ts: float) -> int:
    """UTC day index (days since epoch) containing the timestamp."""
    return int(ts // SECONDS_PER_DAY)


def day_start(day: int) -> float:
    return float(day * SECONDS_PER_DAY)
