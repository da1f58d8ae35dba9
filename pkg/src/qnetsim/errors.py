"""Exception types raised across the package.

Every error derives from ``QnetError`` so callers (the CLI in particular) can
catch the whole family at once. Configuration problems derive from
``ConfigError`` and simulation-declared failures from ``SimulationFailure``;
the CLI maps those to exit codes 2 and 1.
"""


class QnetError(Exception):
    """Base class for all package errors."""


class ConfigError(QnetError, ValueError):
    """Invalid user input or parameters."""


class SimulationFailure(QnetError):
    """A well-formed request that the simulation cannot satisfy."""


class DimensionMismatch(ConfigError):
    pass


class NonUnitary(ConfigError):
    pass


class NonUnitVector(ConfigError):
    pass


class ZeroProbabilityBranch(SimulationFailure):
    pass


class InvalidProbability(ConfigError):
    pass


class NegativeInput(ConfigError):
    pass


class ZeroProbability(ConfigError):
    pass


class InvalidSize(ConfigError):
    pass


class InvalidGraph(ConfigError):
    pass


class EmptyRow(ConfigError):
    pass


class NonPositivePower(ConfigError):
    pass


class InvalidIndices(ConfigError):
    pass


class NoTIRPossible(ConfigError):
    pass


class FrequencyMismatch(ConfigError):
    pass


class ZeroDenominator(ConfigError):
    pass


class NegativeMean(ConfigError):
    pass


class ConfigInvalid(ConfigError):
    pass


class UnreachableThreshold(SimulationFailure):
    pass


class Unroutable(SimulationFailure):
    pass
