"""Custom exceptions for the offline zero-sum game toolkit."""

from typing import Any, List, Optional


class OfflineZSGError(Exception):
    """Base exception for all toolkit errors."""

    pass


class InvalidDimensionError(OfflineZSGError):
    """Raised when a game or table dimension is not a positive integer or shapes disagree."""

    def __init__(self, message: str, dimension: str = None, value: Any = None):
        self.dimension = dimension
        self.value = value
        super().__init__(message)


class InvalidGameError(OfflineZSGError):
    """Raised when a game violates the model constraints."""

    def __init__(self, message: str, violations: list = None):
        self.violations = violations or []
        super().__init__(message)


class NotTurnBasedError(OfflineZSGError):
    """Raised when a turn-based operation is applied to a simultaneous-move game."""

    pass


class InvalidStrategyError(OfflineZSGError):
    """Raised when a strategy or exploration policy is not a valid distribution."""

    def __init__(self, message: str, player: str = None):
        self.player = player
        super().__init__(message)


class InvalidPayoffError(OfflineZSGError):
    """Raised when a payoff matrix has non-finite entries or mismatched dimensions."""

    pass


class NashSolverError(OfflineZSGError):
    """Raised when a matrix game cannot be solved to the requested exploitability."""

    def __init__(
        self,
        message: str,
        best_solution: Any = None,
        exploitability: Optional[float] = None,
        stage: Optional[int] = None,
        state: Optional[int] = None,
    ):
        self.best_solution = best_solution
        self.exploitability = exploitability
        self.stage = stage
        self.state = state
        super().__init__(message)


class DatasetError(OfflineZSGError):
    """Raised when an offline dataset cannot be sampled, parsed or used."""

    def __init__(self, message: str, path: str = None, line: int = None):
        self.path = path
        self.line = line
        super().__init__(message)


class InsufficientDataError(DatasetError):
    """Raised when a dataset has too few episodes for the requested split."""

    def __init__(self, message: str, required: int = None, available: int = None):
        self.required = required
        self.available = available
        super().__init__(message)


class LearnerTimeoutError(OfflineZSGError):
    """Raised when a learner run exceeds its wall-clock budget."""

    def __init__(self, message: str, elapsed: float = None, limit: float = None):
        self.elapsed = elapsed
        self.limit = limit
        super().__init__(message)


class GameFileError(OfflineZSGError):
    """Raised when a structured-text file cannot be parsed."""

    def __init__(self, message: str, path: str = None, line: int = None):
        self.path = path
        self.line = line
        super().__init__(message)


class ConfigurationError(OfflineZSGError):
    """Raised when there's a configuration error."""

    pass


class RateFitError(OfflineZSGError):
    """Raised when a rate fit has too few usable points."""

    def __init__(self, message: str, usable: int = None, dropped: List[int] = None):
        self.usable = usable
        self.dropped = dropped or []
        super().__init__(message)
