"""
Custom exceptions for Network Formation
"""
from typing import Optional


class NetworkFormationError(Exception):
    """Base class for every error raised by the package"""
    pass


class InvalidStateError(NetworkFormationError):
    """Raised when a weight matrix, probability matrix or profile is invalid"""
    pass


class DegenerateRowError(InvalidStateError):
    """Raised when a row has no positive mass under a normalizing rule"""
    pass


class SignViolationError(InvalidStateError):
    """Raised when an update produces a sign its rule cannot represent"""
    pass


class GameSpecError(NetworkFormationError):
    """Raised when agent types do not fit the game being played"""
    pass


class RoundExecutionError(NetworkFormationError):
    """Raised when a round fails; carries the index of the failing round"""

    def __init__(self, round_index: int, cause: Exception):
        self.round_index = round_index
        self.cause = cause
        super().__init__(f"round {round_index}: {cause}")


class ConfigurationError(NetworkFormationError):
    """Raised when configuration is invalid; names the offending key"""

    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class UnknownPresetError(ConfigurationError):
    """Raised when a preset name is not registered"""

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown preset '{name}' (see list-presets)", key="preset")


class EmissionError(NetworkFormationError):
    """Raised when result files cannot be written"""

    def __init__(self, path, cause: Exception):
        self.path = path
        super().__init__(f"cannot write {path}: {cause}")
