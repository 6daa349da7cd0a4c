"""Exception hierarchy shared across the pipeline."""


class RevMineError(Exception):
    """Base class for all revmine errors."""


# --- configuration ---------------------------------------------------------


class MissingField(RevMineError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"missing required configuration field: {name}")


class InvalidUrl(RevMineError):
    def __init__(self, value: str):
        self.value = value
        super().__init__(f"not an absolute http(s) URL: {value!r}")


class SecretLeak(RevMineError):
    """A secret value was about to be embedded in a non-secret artifact."""


class NetworkUnreachable(RevMineError):
    """Connect or timeout failure; environment problem, retriable."""


# --- plan model ------------------------------------------------------------


class UnknownMetric(RevMineError):
    def __init__(self, metric_id: str):
        self.metric_id = metric_id
        super().__init__(f"unknown metric: {metric_id}")


class UnknownCategory(RevMineError):
    def __init__(self, category: str):
        self.category = category
        super().__init__(f"unknown metric category: {category}")


class PlanParseError(RevMineError):
    def __init__(self, reason: str, line: int | None = None, column: int | None = None):
        self.reason = reason
        self.line = line
        self.column = column
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"plan parse error{where}: {reason}")


class UnsupportedSchemaVersion(RevMineError):
    def __init__(self, version):
        self.version = version
        super().__init__(f"unsupported plan schema_version: {version!r}")


# --- orchestrator ----------------------------------------------------------


class ProviderTimeout(RevMineError):
    """LLM provider did not answer within the configured timeout."""


class ProviderHttpError(RevMineError):
    def __init__(self, status: int, body_excerpt: str):
        self.status = status
        self.body_excerpt = body_excerpt
        super().__init__(f"provider HTTP {status}: {body_excerpt[:200]}")


class ExtractionFailed(RevMineError):
    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(f"could not extract a structured object: {reason}")


class RefinementExhausted(RevMineError):
    def __init__(self, transcript):
        self.transcript = transcript
        super().__init__("refinement rounds exhausted without a valid result")


# --- adapters --------------------------------------------------------------


class NormalizationError(RevMineError):
    def __init__(self, field: str, reason: str):
        self.field = field
        self.reason = reason
        super().__init__(f"cannot normalize field {field!r}: {reason}")


class MalformedPagination(RevMineError):
    """Pagination headers present but unparsable."""


class UnsupportedEntity(RevMineError):
    def __init__(self, entity: str, platform: str):
        super().__init__(f"platform {platform} cannot serve entity {entity}")


# --- collector -------------------------------------------------------------


class ArchiveIoError(RevMineError):
    """Disk-level failure while writing the raw archive."""


class AuthRevoked(RevMineError):
    """401 observed mid-run; the run is marked failed."""


class RetriesExhausted(RevMineError):
    def __init__(self, last_status):
        self.last_status = last_status
        super().__init__(f"retries exhausted, last status: {last_status}")


class NonRetriable(RevMineError):
    def __init__(self, status: int):
        self.status = status
        super().__init__(f"non-retriable HTTP status: {status}")


class RunNotFound(RevMineError):
    def __init__(self, run_id: str):
        self.run_id = run_id
        super().__init__(f"run not found: {run_id}")


class PlanMismatch(RevMineError):
    """Stored plan.json fails its recorded checksum."""


class RunLocked(RevMineError):
    """Another executor owns this run's lock file."""


# --- analysis --------------------------------------------------------------


class SpecValidationError(RevMineError):
    def __init__(self, issues):
        self.issues = list(issues)
        super().__init__("; ".join(self.issues) or "invalid analysis spec")
