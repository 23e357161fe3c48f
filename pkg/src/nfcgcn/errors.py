"""Exception types shared across the toolkit."""


class DataError(Exception):
    """Raised for malformed, inconsistent, or missing dataset inputs."""


class NumericError(Exception):
    """Raised when a computation produces non-finite values."""
