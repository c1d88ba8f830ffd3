"""Exception types raised by the library.

Every failure mode has a distinct class so callers (and the CLI) can map
errors to exit codes without string matching.
"""


class StiefelSyncError(Exception):
    """Base class for all library errors."""


class DimensionError(StiefelSyncError, ValueError):
    """Operand shapes are incompatible with the requested operation."""


class ValidationError(StiefelSyncError, ValueError):
    """A value violates a construction invariant (non-finite entries,
    broken symmetry, off-manifold state, inconsistent configuration)."""


class RankDeficiencyError(StiefelSyncError):
    """A factorization found the input numerically rank deficient."""


class ProjectionError(StiefelSyncError):
    """The closest-point projection onto the manifold is undefined."""


class DisconnectedTopologyError(ValidationError):
    """The positive-weight coupling graph does not connect all agents."""


class UnsupportedTopologyError(StiefelSyncError):
    """The requested analysis is only defined for separable topologies."""


class DivergenceError(StiefelSyncError):
    """Integration produced a non-finite state.

    Attributes:
        last_good_time: the last time at which the state was finite.
    """

    def __init__(self, message: str, last_good_time: float):
        super().__init__(message)
        self.last_good_time = last_good_time


class InsufficientDataError(StiefelSyncError):
    """A series is too short for the requested analysis window."""


class UndefinedGainError(StiefelSyncError):
    """Stability gain is undefined because the initial distance is zero."""


class ScenarioError(StiefelSyncError, ValueError):
    """A scenario file failed to parse or validate.

    Attributes:
        field: dotted path of the offending field, when known.
    """

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field
