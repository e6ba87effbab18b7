"""Exception hierarchy. Each family maps to one CLI exit code."""


class QmsvmError(Exception):
    exit_code = 1


class ConfigError(QmsvmError, ValueError):
    """Invalid parameters or an infeasible configuration."""

    exit_code = 2


class DataError(QmsvmError, ValueError):
    """Malformed or inconsistent input data, model files, or QUBO files."""

    exit_code = 3


class SamplerError(QmsvmError, RuntimeError):
    """A sampler could not produce a sample set."""

    exit_code = 4


class TransportError(SamplerError):
    """The remote sampling service could not be reached."""


class ProtocolError(SamplerError):
    """The remote sampling service answered with a malformed response."""


class EnergyMismatchWarning(UserWarning):
    """A remote energy disagreed with the locally recomputed value."""
