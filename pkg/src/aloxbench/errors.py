"""Exception hierarchy. Each class carries a short machine-parsable category."""


class AloxError(Exception):
    category = "error"


class GeometryError(AloxError):
    category = "geometry-error"


class DataError(AloxError):
    category = "data-error"


class ConfigError(AloxError):
    category = "config-error"


class ModelError(AloxError):
    category = "model-error"


class UnphysicalContactError(DataError):
    category = "unphysical-contact"


class SimulationError(AloxError):
    category = "simulation-error"


class PlacementError(AloxError):
    category = "placement-error"


class FitError(AloxError):
    category = "fit-error"


class StateError(AloxError):
    category = "state-error"


class ConflictError(StateError):
    category = "conflict"

    def __init__(self, message: str, prior: dict | None = None):
        super().__init__(message)
        self.prior = prior


class NotFoundError(AloxError):
    category = "not-found"


class MigrationError(AloxError):
    category = "migration-error"
