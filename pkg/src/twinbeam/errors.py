"""Exception hierarchy. Each class maps onto one CLI exit code."""


class TwinbeamError(Exception):
    exit_code = 1


class ConfigError(TwinbeamError):
    """Configuration failed schema validation."""

    exit_code = 2

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class DomainError(TwinbeamError, ValueError):
    """A parameter is outside the domain of the model."""

    exit_code = 2


class FormatError(TwinbeamError):
    """Malformed TTAG stream, scan file or report."""

    exit_code = 3

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)


class NumericalError(TwinbeamError, ArithmeticError):
    exit_code = 4
