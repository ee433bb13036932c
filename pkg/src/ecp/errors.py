"""Exception hierarchy for the toolkit.

Every error raised by the library derives from :class:`ToolkitError`, so
callers (and the CLI) can catch one type and still report a precise cause.
"""


class ToolkitError(Exception):
    """Base class for all toolkit errors."""


class MalformedFile(ToolkitError):
    """A data file has a bad magic number, version, or shape."""


class LabelOutOfRange(ToolkitError):
    """A label does not satisfy 0 <= label < K."""


class NonFiniteLogit(ToolkitError):
    """A logit file contains NaN or infinite values."""


class DegenerateSplit(ToolkitError):
    """Requested split leaves the calibration or validation side empty."""


class IoFailure(ToolkitError):
    """Reading or writing a report/data file failed at the OS level."""


class NonFiniteInput(ToolkitError):
    """An in-memory logit vector contains NaN or infinite values."""


class DegenerateInput(ToolkitError):
    """Input is too degenerate to fit (e.g. a single class present)."""


class RankOutOfRange(ToolkitError):
    """Rank argument outside {0, ..., K-1}."""


class EmptyHoldout(ToolkitError):
    """Calibration requires at least one holdout score."""


class DegenerateBeta(ToolkitError):
    """floor((n+1)*delta) = 0; the coverage Beta distribution is undefined."""


class AllSetsEmpty(ToolkitError):
    """Every prediction set is empty; a non-empty mean is undefined."""


class UncoveredSize(ToolkitError):
    """An observed set size (or difficulty) falls outside the given bins."""


class AllBinsEmpty(ToolkitError):
    """No stratification bin contains any example."""
