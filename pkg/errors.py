"""
Exception hierarchy for the magnon gadget lab.
Every module raises a LabError subclass; the CLI maps exit_code to the process status.
"""

from typing import Iterable, Optional


class LabError(Exception):
    """Base class for all lab errors."""

    exit_code: int = 1


class ConfigError(LabError):
    """Bad configuration: unknown key, type mismatch or malformed line."""

    exit_code = 2

    def __init__(self, message: str, source: Optional[str] = None, line: Optional[int] = None):
        self.source = source
        self.line = line
        if source is not None and line is not None:
            message = f"{source}:{line}: {message}"
        super().__init__(message)


class UnknownSite(LabError):
    pass


class DimensionCap(LabError):
    pass


class UnresolvedSymbol(LabError):
    pass


class NotOffDiagonal(LabError):
    pass


class TooStrong(LabError):
    pass


class YTermPresent(LabError):
    pass


class BasisLeak(LabError):
    """Effective Hamiltonian has terms outside the six-operator basis."""

    def __init__(self, message: str, terms: Iterable = ()):
        self.terms = list(terms)
        super().__init__(message)


class Degenerate(LabError):
    pass


class DomainError(LabError):
    pass


class GaplessDivergence(LabError):
    pass


class ResourceCap(LabError):
    pass
