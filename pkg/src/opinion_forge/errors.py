"""Exception hierarchy shared by every module.

The CLI maps any :class:`OpinionForgeError` to exit code 1 and reports the
class name as the ``error`` field of its JSON error record.
"""

from __future__ import annotations


class OpinionForgeError(Exception):
    """Base class for domain errors."""

    def to_dict(self) -> dict:
        return {"error": type(self).__name__, "message": str(self)}


# graph core
class SelfLoopError(OpinionForgeError):
    pass


class NodeOutOfRangeError(OpinionForgeError):
    pass


class EmptySourceSetError(OpinionForgeError):
    pass


class GraphLoadError(OpinionForgeError):
    pass


# generators
class InvalidSpecError(OpinionForgeError):
    pass


class GenerationRetriesExhaustedError(OpinionForgeError):
    pass


class NonIntegralPartitionError(OpinionForgeError):
    pass


# spectral
class IsolatedNodeError(OpinionForgeError):
    pass


class NoConvergenceError(OpinionForgeError):
    pass


class NotRegularError(OpinionForgeError):
    pass


class InvalidParametersError(OpinionForgeError):
    pass


# diffusion
class EmptySeedSetError(OpinionForgeError):
    pass


class RoundOutOfRangeError(OpinionForgeError):
    pass


class DisconnectedError(OpinionForgeError):
    pass


# attackers
class HintSizeMismatchError(OpinionForgeError):
    pass


class StrategyInapplicableError(OpinionForgeError):
    pass


# reduction
class NotACliqueError(OpinionForgeError):
    pass


class InstanceTooLargeError(OpinionForgeError):
    pass


class EmptySetError(OpinionForgeError):
    pass


# cli
class SeedLoadError(OpinionForgeError):
    pass


class ConfigError(OpinionForgeError):
    pass


class ReplayError(OpinionForgeError):
    pass
