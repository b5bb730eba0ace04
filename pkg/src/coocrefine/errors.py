"""Exception types shared across the package.

The CLI maps these onto exit codes: bad inputs exit 1, numerical
failures exit 2.
"""


class ValidationError(ValueError):
    """Malformed input data, files, or arguments."""


class NumericError(RuntimeError):
    """Non-finite values or a diverging computation."""
