"""Exception types shared across the pipeline.

ConfigError maps to exit code 2 (bad flags, missing inputs, unmet stage
dependencies). DataError maps to exit code 3 (unrecoverable problems in the
data itself, e.g. malformed rows in strict mode or an unknown annotation
label).
"""


class EchotraceError(Exception):
    """Base class for all pipeline errors."""


class ConfigError(EchotraceError):
    """Invalid configuration: bad paths, missing artifacts, bad flag values."""


class DataError(EchotraceError):
    """Fatal problem with input data content."""
