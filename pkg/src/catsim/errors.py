"""Exception types raised across the package."""


class CatsimError(Exception):
    """Base class for all errors raised by catsim."""


class DegenerateStateError(CatsimError):
    """A state has (numerically) zero norm and cannot be normalized."""


class GramInconsistencyError(CatsimError):
    """A Gram-matrix evaluation returned a clearly negative squared norm."""


class ImpossibleOutcomeError(CatsimError):
    """Conditioning on a measurement outcome that has zero probability."""


class NonBellInputError(CatsimError):
    """Both Bell-measurement detectors registered photons."""


class SpanError(CatsimError):
    """A mode's labels leave the two-dimensional qubit span."""


class TruncationError(CatsimError):
    """A Fock-space cutoff is too small for the requested budget."""


class ProtocolFailure(CatsimError):
    """A heralded protocol step failed (e.g. a teleporter recorded no photons)."""

    def __init__(self, message, probability=None):
        super().__init__(message)
        self.probability = probability


class ConfigError(CatsimError):
    """Invalid scenario configuration."""
