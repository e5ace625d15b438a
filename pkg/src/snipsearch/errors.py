"""Shared exception types."""


class DataError(Exception):
    """Malformed or inconsistent input data (bad file, duplicate id, ...).

    The CLI maps this to exit status 2; usage problems exit with 1.
    """
