"""Exception hierarchy shared by every module of the package."""


class RelayRateError(Exception):
    """Base class for all errors raised by pdfrelay."""


class StructuralError(RelayRateError):
    """Variables, alphabets or index sets do not fit together."""


class ValidationError(RelayRateError):
    """A probability table or power allocation violates its invariants."""


class ResourceError(RelayRateError):
    """A requested table or enumeration exceeds a configured size guard."""


class NumericalConsistencyError(RelayRateError):
    """An identity that must hold exactly failed beyond rounding."""


class PreconditionError(RelayRateError):
    """An operation was called on an input outside its domain."""


class ProjectionError(PreconditionError):
    """A coefficient block cannot be rescaled onto its power sphere."""


class ConfigError(RelayRateError):
    """A job configuration failed to parse; ``errors`` holds ``(json_path, message)`` pairs.

    ``exit_code`` is 1 for schema problems and 2 when the document is well
    formed but a pmf or power allocation is invalid.
    """

    def __init__(self, errors, exit_code: int = 1):
        self.errors = list(errors)
        self.exit_code = exit_code
        super().__init__("; ".join(f"{path}: {msg}" for path, msg in self.errors))
