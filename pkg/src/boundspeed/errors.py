"""Exception hierarchy shared by the library and the command line."""

from __future__ import annotations


class BoundspeedError(Exception):
    """Base class. ``category`` is the machine-readable tag printed by the CLI."""

    category = "error"


class ConfigError(BoundspeedError, ValueError):
    category = "config"

    def __init__(self, message, *, key=None, lineno=None):
        self.key = key
        self.lineno = lineno
        where = f"line {lineno}: " if lineno is not None else ""
        super().__init__(where + message)


class StaticConfigurationError(ConfigError):
    """Raised when a timing quantity is requested for stationary wheels."""


class ConfigurationMismatch(ConfigError):
    """Two runs or grids that should share geometry do not."""


class EstimationError(BoundspeedError):
    category = "estimation"


class NoBoundaryError(EstimationError):
    pass


class AmbiguousBoundaryError(EstimationError):
    def __init__(self, message, candidates):
        self.candidates = list(candidates)
        super().__init__(f"{message}: candidates at {', '.join(f'{c:.6g}' for c in self.candidates)} rad")


class GridFormatError(BoundspeedError):
    category = "io"
