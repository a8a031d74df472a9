"""Exception hierarchy shared across the package."""


class FlowTrackError(Exception):
    """Base class for all flowtrack errors."""


class DataError(FlowTrackError):
    """Malformed or inconsistent input data (bad CSV line, invalid box, ...)."""


class InvariantBreach(FlowTrackError):
    """An internal solver invariant was violated; indicates a bug, not bad input."""
