"""Exception hierarchy. Every error carries a short machine-readable category."""


class GRPrepError(Exception):
    category = "error"


class ValidationError(GRPrepError, ValueError):
    category = "validation"


class DuplicateIndexError(ValidationError):
    category = "duplicate_index"


class NegativeAmplitudeError(ValidationError):
    category = "negative_amplitude"


class EmptySupportError(ValidationError):
    category = "empty_support"


class IndexOutOfRangeError(ValidationError):
    category = "index_out_of_range"


class PatternError(ValidationError):
    category = "pattern"


class RegionOverlapError(ValidationError):
    category = "region_overlap"


class ParseError(GRPrepError, ValueError):
    category = "parse"


class InvariantError(GRPrepError):
    """A result violated a guarantee that should hold by construction."""

    category = "invariant"
