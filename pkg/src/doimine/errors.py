"""Exception hierarchy shared across the pipeline.

The three classes map onto the CLI exit codes: ConfigError -> 2,
DataError -> 3, NumericalError -> 4.
"""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


class DataError(ValueError):
    """Malformed or contract-violating input data."""


class NumericalError(ArithmeticError):
    """Numerical failure (non-finite values, degenerate statistics)."""
