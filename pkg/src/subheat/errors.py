"""Exception hierarchy shared by the solvers and the CLI."""

from __future__ import annotations


class SubheatError(Exception):
    """Base class; ``exit_code`` is what the CLI returns for it."""

    exit_code = 1


class DomainError(SubheatError, ValueError):
    """An argument lies outside the domain of an operation."""

    exit_code = 2


class ConfigError(SubheatError, ValueError):
    exit_code = 2


class UsageError(SubheatError):
    """The call sequence is invalid, e.g. stepping a dead spatial state."""

    exit_code = 2


class AccuracyError(SubheatError):
    """A numerical tolerance could not be met.

    The best available estimate and its error are attached so callers can
    still inspect what was obtained.
    """

    exit_code = 3

    def __init__(self, message: str, estimate: float | None = None, error: float | None = None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class CoverageError(AccuracyError):
    """A supplied grid does not cover the region a computation needs."""


class RunawayPathError(SubheatError):
    """A simulated path exceeded the configured step cap."""

    exit_code = 4

    def __init__(self, message: str, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics
