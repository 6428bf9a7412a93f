"""Exception taxonomy shared by all engine modules."""


class StewardError(Exception):
    """Base class for all domain errors raised by the engine."""

    code = "error"


class UnknownAsset(StewardError):
    code = "unknown_asset"


class UnknownCandidate(StewardError):
    code = "unknown_candidate"


class UnknownOrgNode(StewardError):
    code = "unknown_org_node"


class InactiveCandidate(StewardError):
    code = "inactive_candidate"


class NonMonotonicTimestamp(StewardError):
    code = "non_monotonic_timestamp"


class RedundantTransfer(StewardError):
    code = "redundant_transfer"


class UnreadableFile(StewardError):
    code = "unreadable_file"


class UnknownFormatTag(StewardError):
    code = "unknown_format_tag"


class EmptyTrainingSet(StewardError):
    code = "empty_training_set"


class EmptyTestSet(StewardError):
    code = "empty_test_set"


class DegenerateFeatures(StewardError):
    code = "degenerate_features"


class SchemaMismatch(StewardError):
    code = "schema_mismatch"


class NoModelForAssetType(StewardError):
    code = "no_model_for_asset_type"


class UnknownRecommendation(StewardError):
    code = "unknown_recommendation"


class CandidateNotInRecommendation(StewardError):
    code = "candidate_not_in_recommendation"


class StaleRecommendation(StewardError):
    code = "stale_recommendation"


class ValidationError(StewardError):
    code = "validation_error"


class CorruptLog(StewardError):
    """Raised when a non-tail log record fails parsing or checksum."""

    code = "corrupt_log"

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (line {position})")
        self.position = position


class StorageFull(StewardError):
    code = "storage_full"


class StoreLocked(StewardError):
    code = "store_locked"


class InvalidConfig(StewardError):
    code = "invalid_config"


class BindFailure(StewardError):
    code = "bind_failure"


class SingleClassWarning(UserWarning):
    """Training data contained a single class; the model degenerates to a constant."""
