"""Small numeric helpers used across services."""

from __future__ import annotations

from decimal import Decimal, ROUND_HALF_UP

import numpy as np

TWO_PI = 2.0 * np.pi


def round_half_away(values: np.ndarray) -> np.ndarray:
    """Nearest integer, ties away from zero (np.round would tie to even)."""
    values = np.asarray(values, dtype=np.float64)
    return np.sign(values) * np.floor(np.abs(values) + 0.5)


def wrap_to_pi(values: np.ndarray) -> np.ndarray:
    """Wrap into (-pi, pi]; -pi itself maps to +pi."""
    wrapped = np.mod(np.asarray(values, dtype=np.float64) + np.pi, TWO_PI) - np.pi
    return np.where(wrapped <= -np.pi, np.pi, wrapped)


def round_reported(value: float, decimals: int = 3) -> float:
    """Round a reported value half-away-from-zero at its printed precision.

    Goes through the shortest repr so that 0.0285 rounds to 0.029 even
    though its binary value sits just below the tie.
    """
    quantum = Decimal(1).scaleb(-decimals)
    return float(Decimal(repr(float(value))).quantize(quantum, rounding=ROUND_HALF_UP))
