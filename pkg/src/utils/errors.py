"""
Error hierarchy shared by every fringeforge layer.

Library code raises these; the CLI turns them into an exit status and a
one-line JSON object on stderr.
"""

from __future__ import annotations

import re
from typing import Any, Dict


class FringeForgeError(Exception):
    """Base class for all pipeline errors."""

    exit_status: int = 1

    @property
    def code(self) -> str:
        name = self.__class__.__name__
        return re.sub(r"(?<!^)(?=[A-Z])", "_", name).lower()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error": self.__class__.__name__,
            "code": self.code,
            "message": str(self),
        }


class ConfigError(FringeForgeError):
    exit_status = 2


class UsageError(ConfigError):
    """Bad command line (unknown command, missing or malformed option)."""


class IoError(FringeForgeError):
    exit_status = 3


class DimensionMismatch(FringeForgeError):
    exit_status = 4


class DomainError(FringeForgeError):
    exit_status = 5


class InvalidStack(FringeForgeError):
    exit_status = 6


class BehindCamera(FringeForgeError):
    exit_status = 7


class InsufficientPoses(FringeForgeError):
    exit_status = 8


class EmptyInput(FringeForgeError):
    exit_status = 9


class EmptyRegion(EmptyInput):
    pass


class EmptyBudget(EmptyInput):
    pass


class DegenerateInput(FringeForgeError):
    exit_status = 10


class NoConvergence(FringeForgeError):
    exit_status = 11


class InsufficientData(FringeForgeError):
    exit_status = 12
