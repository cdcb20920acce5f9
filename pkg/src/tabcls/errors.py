"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
MissingVectorsError -> 4.
"""


class ConfigError(ValueError):
    """A run configuration is invalid or inconsistent."""


class DataError(ValueError):
    """Input data is malformed or violates a corpus contract."""


class MissingVectorsError(LookupError):
    """A precomputed table-vector record is absent from the store."""
