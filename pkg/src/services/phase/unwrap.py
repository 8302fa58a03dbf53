"""Two-wavelength temporal phase unwrapping."""

from __future__ import annotations

import logging
import math
from typing import Optional, Tuple, Union

import numpy as np

from models.domain.phase import AbsolutePhaseMap, FringeOrderMap, WrappedPhaseMap
from models.domain.raster import ScalarMap
from utils.errors import DimensionMismatch, DomainError
from utils.numeric import TWO_PI, round_half_away

logger = logging.getLogger(__name__)

PhaseInput = Union[WrappedPhaseMap, ScalarMap]


def _as_map(value: PhaseInput) -> ScalarMap:
    return value.phase if isinstance(value, WrappedPhaseMap) else value


def _check_shapes(*shapes: Tuple[int, int]) -> None:
    if len(set(shapes)) > 1:
        raise DimensionMismatch(f"map dimensions differ: {list(shapes)}")


def equivalent_wavelength(lambda_h: float, lambda_l: float) -> float:
    """lambda_eq = lambda_h * lambda_l / (lambda_l - lambda_h)."""
    if not lambda_h > 0.0 or not lambda_l > lambda_h:
        raise DomainError(
            f"need lambda_l > lambda_h > 0 for a finite equivalent wavelength, got ({lambda_h}, {lambda_l})"
        )
    return lambda_h * lambda_l / (lambda_l - lambda_h)


def max_fringe_order(lambda_h: float, lambda_eq: float) -> int:
    # tolerance keeps an exact ratio such as 9 from ceiling to 10
    return max(0, int(math.ceil(lambda_eq / lambda_h - 1e-9)) - 1)


def equivalent_phase(phi_h: PhaseInput, phi_l: PhaseInput) -> ScalarMap:
    """phi_eq = phi_h - phi_l - 2*pi*floor((phi_h - phi_l) / 2*pi), in [0, 2*pi)."""
    high, low = _as_map(phi_h), _as_map(phi_l)
    _check_shapes(high.shape, low.shape)
    mask = high.mask & low.mask
    diff = np.where(mask, high.values - low.values, 0.0)
    eq = diff - TWO_PI * np.floor(diff / TWO_PI)
    eq = np.where(eq >= TWO_PI, 0.0, eq)
    return ScalarMap(values=eq, mask=mask)


def fringe_order(
    phi_h: PhaseInput,
    phi_eq: ScalarMap,
    lambda_h: float,
    lambda_eq: float,
) -> FringeOrderMap:
    """K = Round[((lambda_eq/lambda_h) * phi_eq - (phi_h + pi)) / 2*pi].

    Round is half away from zero. Orders outside [0, K_max] are clamped
    into the band and flagged.
    """
    high = _as_map(phi_h)
    _check_shapes(high.shape, phi_eq.shape)
    if lambda_h <= 0.0 or lambda_eq <= 0.0:
        raise DomainError("wavelengths must be > 0")
    mask = high.mask & phi_eq.mask
    ratio = lambda_eq / lambda_h
    argument = (ratio * phi_eq.values - (high.values + math.pi)) / TWO_PI
    raw = np.where(mask, round_half_away(argument), 0.0).astype(np.int64)
    k_max = max_fringe_order(lambda_h, lambda_eq)
    order = np.clip(raw, 0, k_max)
    clamped = mask & (order != raw)
    n_clamped = int(np.count_nonzero(clamped))
    if n_clamped:
        logger.warning("Clamped fringe order at %d pixels into [0, %d]", n_clamped, k_max)
    return FringeOrderMap(order=order, mask=mask, clamped=clamped, max_order=k_max)


def unwrap_phase(
    phi_h: PhaseInput,
    order: FringeOrderMap,
    wavelengths: Optional[Tuple[float, float]] = None,
) -> AbsolutePhaseMap:
    """Phi = phi_h + 2*pi*K."""
    high = _as_map(phi_h)
    _check_shapes(high.shape, order.shape)
    mask = high.mask & order.mask
    phase = np.where(mask, high.values + TWO_PI * order.order, 0.0)
    if wavelengths is None:
        recorded = (float("nan"), float("nan"), float("nan"))
    else:
        lambda_h, lambda_l = wavelengths
        recorded = (float(lambda_h), float(lambda_l), equivalent_wavelength(lambda_h, lambda_l))
    return AbsolutePhaseMap(
        phase=ScalarMap(values=phase, mask=mask),
        fringe_order=order,
        wavelengths=recorded,
    )


def unwrap_pair(
    phi_h: PhaseInput,
    phi_l: PhaseInput,
    lambda_h: float,
    lambda_l: float,
) -> AbsolutePhaseMap:
    """equivalent_phase -> fringe_order -> unwrap_phase in one call."""
    lambda_eq = equivalent_wavelength(lambda_h, lambda_l)
    phi_eq = equivalent_phase(phi_h, phi_l)
    order = fringe_order(phi_h, phi_eq, lambda_h, lambda_eq)
    result = unwrap_phase(phi_h, order, (lambda_h, lambda_l))
    logger.info(
        "Unwrapped %d pixels, lambda_eq/lambda_h = %.6g, K in [0, %d]",
        result.phase.valid_count,
        lambda_eq / lambda_h,
        order.max_order,
    )
    return result
