"""Error types shared across the package.

Every error carries a stable ``code`` string so API and CLI layers can map
failures onto wire-level error payloads without string matching.
"""


class EmbedLensError(Exception):
    """Base class; ``code`` mirrors the class name unless overridden."""

    code = "InternalError"

    def __init__(self, message="", detail=None):
        super().__init__(message or self.code)
        self.message = message or self.code
        self.detail = detail


class RaggedRows(EmbedLensError):
    code = "RaggedRows"


class NonNumericCell(EmbedLensError):
    code = "NonNumericCell"

    def __init__(self, row, col, text=""):
        super().__init__(
            f"cell at row {row}, column {col} is not numeric: {text!r}",
            detail={"row": row, "col": col, "text": text},
        )
        self.row = row
        self.col = col


class TooFewRows(EmbedLensError):
    code = "TooFewRows"


class TooFewColumns(EmbedLensError):
    code = "TooFewColumns"


class AlreadyPreprocessed(EmbedLensError):
    code = "AlreadyPreprocessed"


class DegenerateData(EmbedLensError):
    code = "DegenerateData"


class DimensionMismatch(EmbedLensError):
    code = "DimensionMismatch"


class ComponentOutOfRange(EmbedLensError):
    code = "ComponentOutOfRange"


class IndexOutOfRange(EmbedLensError):
    code = "IndexOutOfRange"


class PerplexityInfeasible(EmbedLensError):
    code = "PerplexityInfeasible"


class NumericalDivergence(EmbedLensError):
    code = "NumericalDivergence"


class FitDiverged(EmbedLensError):
    code = "FitDiverged"


class EmptySelection(EmbedLensError):
    code = "EmptySelection"


class UnknownSelection(EmbedLensError):
    code = "UnknownSelection"


class OutsideBbox(EmbedLensError):
    code = "OutsideBbox"


class CorruptSession(EmbedLensError):
    code = "CorruptSession"


class VersionMismatch(EmbedLensError):
    code = "VersionMismatch"


class InvalidParameter(EmbedLensError):
    """Precondition violation on a user-supplied parameter."""

    code = "InvalidParameter"


class CalibrationWarning(UserWarning):
    """Raised when a bandwidth search saturates instead of hitting its target."""
