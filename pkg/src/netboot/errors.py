"""Exception types raised across the package."""

from __future__ import annotations


class NetbootError(Exception):
    """Base class for all package errors."""


class InvalidNode(NetbootError, ValueError):
    pass


class SelfLoopRejected(NetbootError, ValueError):
    pass


class ParseError(NetbootError, ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class InvalidFraction(NetbootError, ValueError):
    pass


class InfeasibleDensity(NetbootError, ValueError):
    pass


class EmptySample(NetbootError):
    pass


class InvalidRank(NetbootError, ValueError):
    pass


class Undefined(NetbootError, ValueError):
    """Statistic is not defined on the given input."""


class NoEdges(Undefined):
    pass


class UndefinedAUC(Undefined):
    pass


class SelectionFailed(NetbootError):
    pass


class InvalidInput(NetbootError, ValueError):
    pass


class DegenerateDesign(NetbootError, ValueError):
    pass


class ConfigError(NetbootError, ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class DegenerateRunWarning(UserWarning):
    """Too many bootstrap replicates had an undefined statistic."""


class MaxIterationsWarning(UserWarning):
    pass
