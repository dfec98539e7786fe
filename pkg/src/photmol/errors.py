"""Exception hierarchy shared by every module."""


class PhotmolError(Exception):
    """Base class for all package errors."""


class InvalidTruncation(PhotmolError, ValueError):
    pass


class SpaceMismatch(PhotmolError, ValueError):
    pass


class InvalidParams(PhotmolError, ValueError):
    pass


class InvalidRate(InvalidParams):
    pass


class ComputationError(PhotmolError):
    """Numerical failure; the CLI maps these to exit code 1."""


class DegenerateSteadyState(ComputationError):
    pass


class SolveFailed(ComputationError):
    pass


class IntegrationUnstable(ComputationError):
    pass


class NoPhotons(ComputationError):
    pass


class DegenerateManifold(ComputationError):
    pass


class OptimizationFailed(ComputationError):
    pass


class SpecError(PhotmolError, ValueError):
    pass


class UnknownPreset(SpecError):
    pass


class ConfigError(PhotmolError, ValueError):
    pass
