"""Exception types raised by the mmlr package."""


class MmlrError(Exception):
    """Base class for all mmlr-specific errors."""


class CsvFormatError(MmlrError):
    """A CSV file could not be parsed as a numeric dataset."""


class TooFewRows(MmlrError):
    """The dataset has too few rows for the requested fit."""


class SingularDesign(MmlrError):
    """The normal-equation matrix has no stable factorization."""


class NoInteriorSeed(MmlrError):
    """No row satisfies the interior-margin condition for cube seeding."""


class EmptyLive(MmlrError):
    """Subset selection was invoked with no live rows."""
