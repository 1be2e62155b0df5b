"""Exception types shared across the simulation modules."""

from __future__ import annotations


class NumericalAbort(RuntimeError):
    """A run hit an unrecoverable numerical condition (NaN, vacuum, ...).

    The command-line driver maps this to exit code 3.
    """


class CflViolation(NumericalAbort):
    """The time step exceeds the advective stability bound."""


class ConfigError(ValueError):
    """A run configuration could not be parsed or validated.

    Carries an optional 1-based line number pointing into the config text.
    The command-line driver maps this to exit code 2.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SnapshotError(ValueError):
    """A snapshot file is malformed, truncated, or fails its checksum."""
