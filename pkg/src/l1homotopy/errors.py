"""Exception hierarchy.

Every error raised on purpose by the package derives from
:class:`L1HomotopyError`, so callers (and the CLI) can separate solver
failures from programming errors.
"""


class L1HomotopyError(Exception):
    """Base class for all package errors."""


class ConfigError(L1HomotopyError, ValueError):
    """Invalid user configuration; ``field`` names the offending entry."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class SolverError(L1HomotopyError):
    """A homotopy could not be completed."""


class NotPositiveDefinite(SolverError):
    pass


class DegenerateSupport(SolverError):
    """The active set became rank deficient or the path left the generic regime."""


class IterationLimit(SolverError):
    pass


class SingularCrossGram(SolverError):
    pass


class StaleWarmStart(SolverError):
    """The state handed to an update routine does not solve the old problem."""


class NonmonotoneEpsilon(SolverError):
    pass


class ConstraintAlreadyViolated(SolverError):
    pass


class SingularBootstrap(SolverError):
    pass


class SingularSubmatrix(SolverError):
    pass


class SingularGram(SolverError):
    pass


class RankDeficient(SolverError):
    pass


class NoCertifiedSolution(SolverError):
    pass


class BadLength(L1HomotopyError, ValueError):
    pass


class FormatError(L1HomotopyError, ValueError):
    """Malformed matrix, state or image file."""
