"""Exception types shared across the package.

The CLI maps :class:`ConfigError` to exit code 2 and every other
:class:`TricolorError` to exit code 3.
"""


class TricolorError(Exception):
    """Base class for all package errors."""


class ConfigError(TricolorError, ValueError):
    """Malformed or inconsistent configuration."""


class PhysicsError(TricolorError, ValueError):
    """A model was asked to evaluate outside its domain of validity."""


class BelowThresholdError(PhysicsError):
    pass


class NoSolutionError(PhysicsError):
    pass


class UnknownModeError(TricolorError, KeyError):
    def __init__(self, mode_id):
        super().__init__(mode_id)
        self.mode_id = mode_id

    def __str__(self):
        return f"mode id {self.mode_id!r} is not present in the covariance matrix"
