"""
Error types shared by the pipeline stages.
Each carries the process exit code the CLI reports for it.
"""
from typing import Iterable, Optional


class SectorizationError(Exception):
    """Base class for errors surfaced to the user."""
    exit_code = 4


class InputError(SectorizationError):
    """Unreadable or invalid input (missing file, bad scenario, bad flags)."""
    exit_code = 2


class ScenarioError(InputError):
    """Scenario description that cannot be turned into a road network."""


class RecordFormatError(InputError):
    """Malformed row in a record/label CSV file."""

    def __init__(self, path: str, line_number: int, reason: str):
        self.path = path
        self.line_number = line_number
        self.reason = reason
        super().__init__(f"{path}:{line_number}: {reason}")


class DataMismatchError(SectorizationError):
    """Two inputs that must describe the same node set do not."""
    exit_code = 3

    def __init__(self, missing: Iterable[str], unexpected: Iterable[str], context: Optional[str] = None):
        self.missing = sorted(missing)
        self.unexpected = sorted(unexpected)
        summary = (
            f"{len(self.missing)} node(s) missing from prediction "
            f"{self.missing[:5]}{'...' if len(self.missing) > 5 else ''}, "
            f"{len(self.unexpected)} unexpected "
            f"{self.unexpected[:5]}{'...' if len(self.unexpected) > 5 else ''}"
        )
        super().__init__(f"{context}: {summary}" if context else summary)


class InvariantViolation(SectorizationError):
    """An internal consistency check failed."""
    exit_code = 4
