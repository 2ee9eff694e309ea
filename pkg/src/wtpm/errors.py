"""Exception hierarchy shared by all wtpm modules."""


class WtpmError(Exception):
    """Base class for every error raised by this package."""


class FormatError(WtpmError, ValueError):
    """Malformed Matrix Market header or body."""


class UnsupportedFormatError(FormatError):
    """Well-formed input that uses a storage variant we do not read."""


class DataError(WtpmError, ValueError):
    """Entry data inconsistent with the declared header (bounds, counts)."""


class DimensionError(WtpmError, ValueError):
    """Shapes that do not conform."""


class CapacityError(WtpmError):
    """Requested object exceeds a configured size cap."""


class DegeneracyError(WtpmError, ValueError):
    """Eigenvalues that must be strictly separated are (numerically) equal."""


class InfeasibleWeightError(WtpmError, ValueError):
    """Weights violate the ordering or positivity conditions of the model."""


class EmptyPatternError(WtpmError):
    """A coordinate-descent candidate set has no entries."""
