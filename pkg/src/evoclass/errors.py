"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: configuration/validation problems
(ConfigError, ShapeError raised while checking user inputs) exit with 2,
runtime/IO problems (DataError, CheckpointError, OSError) exit with 3.
"""


class EvoclassError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(EvoclassError, ValueError):
    """A tensor or parameter bundle has an inconsistent dimension.

    Messages name the offending dimension so failures are actionable.
    """


class ConfigError(EvoclassError, ValueError):
    """A configuration value or document failed validation.

    ``path`` is the dotted location of the offending field, e.g.
    ``"es.n_offspring"``; empty when the error is not tied to one field.
    """

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class DataError(EvoclassError, ValueError):
    """A dataset file, manifest row, or image failed to load or validate."""


class CheckpointError(EvoclassError, ValueError):
    """A checkpoint is missing, corrupt, or from an unsupported version."""
