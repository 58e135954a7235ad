"""Exception types shared across the package.

The CLI maps these onto process exit codes: ConfigurationError -> 2,
DataError -> 3, CheckFailure -> 1. Anything else is a bug.
"""

from __future__ import annotations


class WardsimError(Exception):
    """Base class for all package-defined errors."""


class ConfigurationError(WardsimError):
    """Invalid configuration. The message names the offending field."""


class DataError(WardsimError):
    """Missing or malformed input/output data (files, tables, templates)."""


class TemplateIntegrityError(DataError):
    """A story template does not contain a required anchor sentence."""


class CheckFailure(WardsimError):
    """A verification check evaluated to fail."""
