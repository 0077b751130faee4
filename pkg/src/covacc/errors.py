"""Exception hierarchy shared across the package.

Every error carries a short machine-readable category and the exit code
the command line tool maps it to.
"""


class CovaccError(Exception):
    """Base class for all package errors."""

    category = "error"
    exit_code = 1


class ConfigurationError(CovaccError):
    """Bad scenario data: malformed files, inconsistent dimensions, bad indices."""

    category = "config"
    exit_code = 2


class SynthesisError(CovaccError):
    """Gain or estimator synthesis failed before the simulation could start."""

    category = "synthesis"
    exit_code = 3


class UioExistenceError(SynthesisError):
    """The measurement map cannot decouple the requested unknown inputs."""


class ProtocolError(CovaccError):
    """A runtime exchange between nodes violated the protocol."""

    category = "runtime"
    exit_code = 4
