"""Exception hierarchy shared across the package.

The CLI maps these to exit codes: ConfigError -> 2, DataError -> 3,
NumericError -> 4. Plain ValueError stays a caller-contract violation.
"""

from __future__ import annotations


class FlowidsError(Exception):
    """Base class for package errors."""


class ConfigError(FlowidsError):
    """Invalid or contradictory experiment configuration."""


class DataError(FlowidsError):
    """Problem with an input dataset: missing file, bad schema, ragged rows."""


class NumericError(FlowidsError):
    """Non-finite values or numerical breakdown detected."""


class PipelineError(FlowidsError):
    """A pipeline stage failed; carries stage name and fold index."""

    def __init__(self, stage: str, repetition: int, fold: int, cause: Exception):
        self.stage = stage
        self.repetition = repetition
        self.fold = fold
        self.cause = cause
        super().__init__(
            f"stage '{stage}' failed (repetition {repetition}, fold {fold}): {cause}"
        )
