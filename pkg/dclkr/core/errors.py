"""Exception types shared by the library and the CLI."""


class DclkrError(Exception):
    """Base class for all dclkr errors."""


class ConfigError(DclkrError, ValueError):
    """Invalid parameters, shapes or inputs. Maps to exit code 2."""


class DegenerateInputError(ConfigError):
    """Inputs for which a quantity is undefined (constant features, nonpositive scale)."""


class CoverageError(DclkrError, RuntimeError):
    """The partitioner could not cover every cell within its retry limit. Exit code 3."""

    def __init__(self, message: str, m: int | None = None, seed: int | None = None, attempts: int = 0):
        super().__init__(message)
        self.m = m
        self.seed = seed
        self.attempts = attempts


class AcceptanceError(DclkrError):
    """An acceptance check exceeded its tolerance. Exit code 4."""

    def __init__(self, message: str, deviation: float = float("nan")):
        super().__init__(message)
        self.deviation = deviation
