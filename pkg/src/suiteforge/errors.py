"""Exception taxonomy shared across the package.

Every error carries a stable ``kind`` string used in structured error
records (service responses, CLI final records) and for exit-code mapping.
"""

from __future__ import annotations

from typing import Any


class SuiteforgeError(Exception):
    """Base class for all errors raised by this package."""

    kind = "error"

    def __init__(self, message: str, **context: Any) -> None:
        super().__init__(message)
        self.message = message
        self.context = context

    def to_record(self) -> dict[str, Any]:
        rec: dict[str, Any] = {"kind": self.kind, "message": self.message}
        if self.context:
            rec["context"] = {k: v for k, v in self.context.items() if v is not None}
        return rec


class SchemaError(SuiteforgeError):
    """A record file violates the documented schema."""

    kind = "schema-error"

    def __init__(self, message: str, *, record: int | None = None,
                 field: str | None = None, path: str | None = None) -> None:
        super().__init__(message, record=record, field=field, path=path)
        self.record = record
        self.field = field
        self.path = path


class MalformedContract(SchemaError):
    """A contract assertion fails the syntax or name pre-check."""

    kind = "malformed-contract"


class UnencodableValue(SuiteforgeError):
    """Value is outside the supported dynamic-value grammar."""

    kind = "unencodable-value"


class DepthExceeded(UnencodableValue):
    """Value nesting exceeds the configured depth limit."""

    kind = "depth-exceeded"


class SizeExceeded(UnencodableValue):
    """Container or string length exceeds the configured limit."""

    kind = "size-exceeded"


class ParseError(SuiteforgeError):
    """Canonical text is malformed; ``position`` is the failing offset."""

    kind = "parse-error"

    def __init__(self, message: str, position: int) -> None:
        super().__init__(f"{message} (at offset {position})", position=position)
        self.position = position


class HashabilityError(SuiteforgeError):
    """A set element or mapping key node is not hashable under the grammar."""

    kind = "hashability-error"

    def __init__(self, message: str, position: int | None = None) -> None:
        super().__init__(message, position=position)
        self.position = position


class NoValidSeeds(SuiteforgeError):
    """Every candidate seed failed contract validation."""

    kind = "no-valid-seeds"


class EmptyHarvest(SuiteforgeError):
    """A provider response yielded zero parseable inputs."""

    kind = "empty-harvest"


class ProviderError(SuiteforgeError):
    """The seed provider failed after exhausting retries."""

    kind = "provider-error"


class BackendUnavailable(SuiteforgeError):
    """The execution backend cannot serve requests."""

    kind = "backend-unavailable"


class TranscriptMiss(BackendUnavailable):
    """A replayed request case has no recorded result."""

    kind = "transcript-miss"


class ProgramLoadError(SuiteforgeError):
    """Program text failed to compile or import; batch-level failure."""

    kind = "program-load-error"


class GroundTruthDefect(SuiteforgeError):
    """Ground truth misbehaved on a contract-valid input."""

    kind = "ground-truth-defect"

    def __init__(self, message: str, *, input_text: str, status: str,
                 task_id: str | None = None) -> None:
        super().__init__(message, input_text=input_text, status=status, task_id=task_id)
        self.input_text = input_text
        self.status = status
        self.task_id = task_id


class DomainError(SuiteforgeError):
    """Estimator arguments outside the valid domain (e.g. k > n)."""

    kind = "domain-error"
