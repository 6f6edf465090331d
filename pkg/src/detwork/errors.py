"""Exception hierarchy shared by all detwork modules."""


class DetworkError(Exception):
    """Base class for every error raised by the package."""


class SpectrumError(DetworkError, ValueError):
    """Malformed or inconsistent spectrum input."""


class ResourceGuardError(DetworkError, RuntimeError):
    """A computation would exceed a configured size limit."""


class InfeasibleShiftError(DetworkError, ValueError):
    """The requested work shift violates the shell-capacity criterion."""


class ProtocolError(DetworkError, ValueError):
    """A protocol table is structurally invalid or fails verification."""


class GroundOccupiedError(DetworkError, ValueError):
    """The construction needs an unpopulated ground level."""


class FullSupportError(DetworkError, ValueError):
    """The occupied support is the whole Hilbert space; no fixed point exists."""


class NoSignChangeError(DetworkError, RuntimeError):
    """The entropy-matching scan found no bracketing interval."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class CltInapplicableError(DetworkError, ValueError):
    """The Gaussian estimate needs the full variance to exceed the occupied one."""


class InvariantViolation(DetworkError, AssertionError):
    """An internal guarantee failed; indicates a bug rather than bad input."""
