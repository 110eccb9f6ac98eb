"""Exception hierarchy shared by the solvers and the command line."""


class FctlError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(FctlError, ValueError):
    """An argument lies outside the region where a quantity is defined."""


class InfeasibleError(FctlError, ValueError):
    """The queue or intersection cannot be stabilised with the given inputs."""


class NumericalError(FctlError, RuntimeError):
    """An iterative or quadrature routine failed to reach its tolerance."""


class ResourceError(FctlError, RuntimeError):
    """A computation would exceed a hard size guard."""


class ConfigError(FctlError, ValueError):
    """A run configuration failed validation."""
