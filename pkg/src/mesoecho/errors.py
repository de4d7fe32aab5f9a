"""Exception hierarchy; each top-level class carries the CLI exit code it maps to."""


class MesoechoError(Exception):
    exit_code = 1


class ConfigError(MesoechoError, ValueError):
    """Invalid or inconsistent user configuration."""

    exit_code = 2

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        where = ""
        if field is not None:
            where = f"{field}"
            if line is not None:
                where += f" (line {line})"
            where += ": "
        super().__init__(where + message)


class ResourceCapError(MesoechoError):
    """A requested computation would exceed a configured size limit."""

    exit_code = 3


class NumericalError(MesoechoError):
    """A numerical procedure could not produce a trustworthy result."""

    exit_code = 4


class FitError(NumericalError):
    pass


class CriticalRegimeError(NumericalError):
    """Two-spin parameters sit on the critical point where omega vanishes."""


class StepSizeError(NumericalError, ValueError):
    """Time step too coarse for the rates being integrated."""
