"""Exception hierarchy shared across the package.

CLI exit-code mapping: ConfigError and FormatError exit with 2,
NumericError with 3.
"""


class ConfigError(ValueError):
    """Invalid configuration value (unknown kind, bad severity, bad flag)."""


class FormatError(ValueError):
    """Malformed binary file or manifest (bad magic, truncation, bad dims)."""


class MemoryCorruptionError(FormatError):
    """A persisted prototype memory failed invariant revalidation on load."""


class NumericError(RuntimeError):
    """Numerical failure (non-finite kernel, zero-norm feature, eigensolver)."""
