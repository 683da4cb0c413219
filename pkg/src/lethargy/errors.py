"""Exception hierarchy.

Three families matter to the CLI exit codes: ``InfeasibleInput`` (exit 2),
``CertificationFailure`` and ``TamperDetected`` (exit 1) and ``ConfigError``
(exit 3). Everything else is a programming or solver error.
"""


class LethargyError(Exception):
    """Base class for all package errors."""


class InfeasibleInput(LethargyError, ValueError):
    """The input cannot be handled by the requested construction."""


class NonIncreasingDims(InfeasibleInput):
    pass


class DimExceedsAmbient(InfeasibleInput):
    pass


class DimMismatch(LethargyError, ValueError):
    pass


class DependentBasis(InfeasibleInput):
    pass


class InvalidChain(InfeasibleInput):
    pass


class NotNonIncreasing(InfeasibleInput):
    pass


class NoAdmissibleStart(InfeasibleInput):
    pass


class HeadTies(InfeasibleInput):
    pass


class NotStrictlyDecreasing(InfeasibleInput):
    pass


class AnchorInsideTop(InfeasibleInput):
    pass


class PointInsideSubspace(InfeasibleInput):
    pass


class DegenerateTarget(InfeasibleInput):
    pass


class PreconditionViolation(InfeasibleInput):
    pass


class InsufficientGaps(InfeasibleInput):
    pass


class BaseTooSmall(InfeasibleInput):
    pass


class SolverFailure(LethargyError, RuntimeError):
    pass


class NoBracket(SolverFailure):
    """An intermediate-value bracket failed its proved endpoint inequality."""


class BracketFailure(NoBracket):
    pass


class CertificationFailure(LethargyError):
    """A constructed element failed independent certification.

    ``index`` is the first failing (1-based) index, ``report`` the partial
    report when one was assembled.
    """

    def __init__(self, message, index=None, report=None):
        super().__init__(message)
        self.index = index
        self.report = report


class TamperDetected(LethargyError):
    pass


class ConfigError(LethargyError, ValueError):
    pass


class ParseError(ConfigError):
    pass


class SchemaError(ConfigError):
    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class CrossFieldError(ConfigError):
    pass
