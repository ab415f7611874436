"""Exception taxonomy shared across the package.

Four failure classes, mapped to CLI exit codes in ``prigp.cli``:
config errors exit 2, numeric errors exit 3.
"""


class PrigpError(Exception):
    """Base class for all package errors."""


class InputError(PrigpError):
    """Caller passed invalid data: wrong dimension, non-finite, out of domain."""


class NumericError(PrigpError):
    """A computation left the valid numeric regime (factorization failure,
    negative variance beyond round-off, nonpositive aggregation precision,
    non-finite evaluation)."""


class ContractError(PrigpError):
    """An API precondition was violated (stale factor, missing inputs,
    mismatched key sets)."""


class ConfigError(PrigpError):
    """Invalid configuration or experiment setup."""
