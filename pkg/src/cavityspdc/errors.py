"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the range where a model is defined."""


class DegenerateBirefringenceError(DomainError):
    """Signal and idler FSRs coincide, so the cluster spacing is infinite."""


class NoSolutionError(RuntimeError):
    """A root search found no sign change over its bracket."""


class ConfigError(ValueError):
    """Invalid run configuration. Messages carry the offending key path."""
