"""Exception types raised across the package."""


class PermSyncError(ValueError):
    """Base class for validation failures."""


class NotSquare(PermSyncError):
    pass


class NotBinary(PermSyncError):
    pass


class NotDoublyStochasticBinary(PermSyncError):
    pass


class SizeMismatch(PermSyncError):
    pass


class AsymmetricLabels(PermSyncError):
    pass


class Disconnected(PermSyncError):
    pass


class DimensionMismatch(PermSyncError):
    pass


class AlreadyGauged(PermSyncError):
    pass


class LengthMismatch(PermSyncError):
    pass


class TooManyVariables(PermSyncError):
    pass


class SearchSpaceTooLarge(PermSyncError):
    pass


class InvalidConfig(PermSyncError):
    pass


class ShapeMismatch(PermSyncError):
    pass


class InvalidEstimate(PermSyncError):
    pass


class EmptySampleSet(PermSyncError):
    pass


class ParseError(PermSyncError):
    """Malformed input file; ``where`` names the offending line or field."""

    def __init__(self, message, where=None):
        self.where = where
        if where is not None:
            message = f"{where}: {message}"
        super().__init__(message)
