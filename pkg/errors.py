"""Exception hierarchy and exit status contract for the planner."""

import argparse


class RelayPlannerError(Exception):
    """Base class for planner failures"""


class ConfigError(RelayPlannerError):
    """Configuration file could not be parsed or failed validation"""

    def __init__(self, message: str, line: int | None = None, problems: list[str] | None = None) -> None:
        self.line = line
        self.problems = list(problems or [])
        if line is not None:
            message = f"line {line}: {message}"
        if self.problems:
            message = message + "\n  - " + "\n  - ".join(self.problems)
        super().__init__(message)


class DegenerateWindowError(RelayPlannerError, ValueError):
    """Observation window too small for the requested tessellation"""


class CrossroadDomainError(RelayPlannerError, ValueError):
    """Angles or densities outside the domain of the crossroad model"""


class FiniteSizeError(RelayPlannerError):
    """Percolation estimate refused because the window is too small"""


class ReplayMismatchError(RelayPlannerError):
    """Replayed run produced outputs whose digests differ from the manifest"""


EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def exit_status(exc: BaseException | None) -> int:
    """Map an exception (or None for success) to the CLI exit status"""
    if exc is None:
        return EXIT_OK
    if isinstance(exc, (FiniteSizeError, DegenerateWindowError, ReplayMismatchError, FloatingPointError)):
        return EXIT_NUMERICAL
    if isinstance(exc, (ConfigError, argparse.ArgumentError, ValueError)):
        return EXIT_USAGE
    raise exc
