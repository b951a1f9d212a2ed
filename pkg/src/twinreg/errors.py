"""Shared exception types."""


class DimensionError(ValueError):
    """Input shape does not match what the operation expects."""


class InsufficientDataError(ValueError):
    """Too few data points for the requested operation."""


class IngestionError(ValueError):
    """A CSV file could not be parsed into a numeric dataset."""


class TrainingDivergedError(RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int):
        super().__init__(f"non-finite loss at epoch {epoch}")
        self.epoch = epoch
