"""Exception types shared across the package."""


class GenBoundError(Exception):
    """Base class for all genbound errors."""


class UsageError(GenBoundError):
    """An argument violates a documented precondition."""


class DistributionError(GenBoundError):
    """A probability table is malformed (negative mass, wrong total, ...)."""


class DivergenceUndefinedError(GenBoundError):
    """KL divergence requested where absolute continuity fails."""


class UnsupportedCaseError(GenBoundError):
    """A closed form exists only for a restricted case that was not met."""


class EnumerationSizeError(GenBoundError):
    """Exact enumeration would exceed the supported state-space size."""


class SgldDivergenceError(GenBoundError):
    """An SGLD iterate became non-finite."""

    def __init__(self, iteration: int):
        super().__init__(f"non-finite parameter at iteration {iteration}")
        self.iteration = iteration


class ConfigError(GenBoundError):
    """An experiment configuration file could not be used."""
