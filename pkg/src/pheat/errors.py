"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class PHeatError(Exception):
    """Base class for every error raised by the package."""


class GraphError(PHeatError, ValueError):
    pass


class DuplicateNodeError(GraphError):
    pass


class SelfLoopError(GraphError):
    pass


class ParallelEdgeError(GraphError):
    pass


class NonpositiveWeightError(GraphError):
    pass


class UnknownNodeError(GraphError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class NotUnweightedError(GraphError):
    pass


class GraphFileError(GraphError):
    """Malformed graph/partition/permutation file; the message carries the line number."""


class InvalidExponentError(PHeatError, ValueError):
    pass


class ZeroFunctionError(PHeatError, ValueError):
    pass


class InnerSolveDiverged(PHeatError, RuntimeError):
    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class InequalityViolated(PHeatError, AssertionError):
    def __init__(self, message: str, step: int, margin: float):
        super().__init__(message)
        self.step = step
        self.margin = margin


class NotABijectionError(PHeatError, ValueError):
    pass


class NotAutomorphismError(PHeatError, ValueError):
    pass


class InvalidPartitionError(PHeatError, ValueError):
    pass


class NotEquitableError(PHeatError, ValueError):
    pass


class NotAProjectionError(PHeatError, ValueError):
    pass


class DisconnectedError(PHeatError, ValueError):
    pass


class OrientationMismatchError(PHeatError, ValueError):
    pass


class NotSemiregularError(PHeatError, ValueError):
    pass


class ConfigError(PHeatError, ValueError):
    pass
