"""Exception hierarchy shared by the library and the CLI.

The CLI maps UsageError to exit status 1 and DataError to exit status 2.
"""


class UsageError(Exception):
    """Bad arguments or configuration supplied by the caller."""


class ConfigError(UsageError):
    """A configuration value violates an invariant; message names the field."""


class DataError(Exception):
    """Corrupt, missing, or inconsistent data/model files."""
