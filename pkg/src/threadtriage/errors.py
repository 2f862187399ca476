"""Shared exception types."""


class DataError(ValueError):
    """Malformed or inconsistent input data. The CLI maps this to exit code 2."""


class UsageError(Exception):
    """Bad command line or unusable configuration. The CLI maps this to exit code 1."""


class ConfigError(UsageError):
    """Malformed or out-of-range configuration file contents."""
