"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(ValueError):
    """A run configuration is invalid (sizes, ranges, missing values)."""


class ContractError(RuntimeError):
    """An internal calling contract was violated (e.g. grid mismatch)."""
