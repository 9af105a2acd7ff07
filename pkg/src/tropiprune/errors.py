"""Failure categories mapped to CLI exit codes."""


class ConfigError(Exception):
    """Invalid or incomplete run configuration (exit code 2)."""

    exit_code = 2


class DataError(Exception):
    """Malformed bundles or inputs that do not match declared shapes (exit code 3)."""

    exit_code = 3


class NumericError(Exception):
    """Non-finite values produced where finite ones are required (exit code 4)."""

    exit_code = 4
