"""Exception hierarchy shared across the toolkit.

Every error carries a stable ``kind`` token that the CLI prints as a
machine-parsable ``error:<kind>:<message>`` line.
"""

from __future__ import annotations


class CursorAttnError(Exception):
    kind = "Error"


class MalformedInputError(CursorAttnError):
    kind = "MalformedInput"


class InvalidValueError(CursorAttnError):
    kind = "InvalidValue"


class MissingAdBoxError(CursorAttnError):
    kind = "MissingAdBox"


class ShapeMismatchError(CursorAttnError):
    kind = "ShapeMismatch"


class EmptySetError(CursorAttnError):
    kind = "EmptySet"


class EmptyClassError(CursorAttnError):
    kind = "EmptyClass"


class EmptySpaceError(CursorAttnError):
    kind = "EmptySpace"


class SingleClassError(CursorAttnError):
    kind = "SingleClass"


class TooFewPairsError(CursorAttnError):
    kind = "TooFewPairs"


class AllZeroDifferencesError(CursorAttnError):
    kind = "AllZeroDifferences"


class TooFewTreatmentsError(CursorAttnError):
    kind = "TooFewTreatments"


class TooFewReportsError(CursorAttnError):
    kind = "TooFewReports"


class IOFailureError(CursorAttnError):
    kind = "IOFailure"
