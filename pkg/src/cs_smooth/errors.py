"""Exception taxonomy shared by all cs_smooth modules.

Every exception carries a short machine-readable ``code`` so the CLI can emit
single-line, parsable error reasons.
"""

from __future__ import annotations


class CsSmoothError(Exception):
    """Base class for all errors raised by this package."""

    code = "error"


class ParseError(CsSmoothError):
    """Malformed text input (CSV line, model file field)."""

    code = "parse"

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class RejectedValueError(CsSmoothError):
    """Input contained a non-finite or otherwise inadmissible value."""

    code = "rejected-value"


class EmptyInputError(CsSmoothError):
    """A source that must contain at least one record was empty."""

    code = "empty-input"


class AlignmentError(CsSmoothError):
    """A series cannot be placed on the requested time grid."""

    code = "alignment"


class DegenerateInputError(CsSmoothError):
    """Input too small or too flat for the requested operation."""

    code = "degenerate-input"


class ModelIncompatibilityError(CsSmoothError):
    """Window sensors do not match the sensors the model was trained on."""

    code = "model-incompatible"


class InvalidBlockCountError(CsSmoothError):
    """Requested block count outside [1, sensor count]."""

    code = "invalid-block-count"


class DimensionError(CsSmoothError):
    """Matrix shapes do not agree."""

    code = "dimension"


class UnsupportedVersionError(CsSmoothError):
    """Model file written by an unknown format version."""

    code = "unsupported-version"


class FormatError(CsSmoothError):
    """File does not conform to its declared format."""

    code = "format"


class IncompatibilityError(CsSmoothError):
    """Two objects that must share shape/layout/range do not."""

    code = "incompatible"


class InvalidParameterError(CsSmoothError):
    """Parameter value violates an operation's contract."""

    code = "invalid-parameter"


class StratificationError(CsSmoothError):
    """A class has too few members for the requested fold count."""

    code = "stratification"


class TaskError(CsSmoothError):
    """Labels do not match the declared prediction task."""

    code = "task"


class PredictorError(CsSmoothError):
    """A pluggable predictor failed during cross-validation."""

    code = "predictor"


class LabelMismatchError(CsSmoothError):
    """Signature batch and labels file do not describe the same windows."""

    code = "label-mismatch"
