"""Exception hierarchy shared by every module of the package."""


class RelayRankError(Exception):
    """Base class for all errors raised by relayrank."""


class DomainError(RelayRankError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class InsufficientDataError(RelayRankError, ValueError):
    pass


class DegenerateSampleError(RelayRankError, ValueError):
    """The sample has zero spread, so a scale parameter would be zero."""


class TieError(RelayRankError, ValueError):
    """Duplicate places were found where unique places are required."""


class SingularFitError(RelayRankError, ValueError):
    pass


class IllConditionedError(RelayRankError, ArithmeticError):
    """A kernel matrix could not be factorized even after adding jitter."""


class ConfigError(RelayRankError, ValueError):
    pass


class ValidationError(RelayRankError, ValueError):
    pass


class ParseError(ValidationError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
