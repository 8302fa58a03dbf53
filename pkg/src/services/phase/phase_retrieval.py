"""N-step least-squares wrapped phase."""

from __future__ import annotations

import logging
from typing import Optional

import numpy as np

from models.domain.phase import PhaseShiftSchedule, WrappedPhaseMap
from models.domain.raster import FringeStack, ScalarMap
from services.raster.parallel import map_rows
from services.raster.raster_core import quadrature_sums, require_valid
from utils.errors import DomainError
from utils.numeric import TWO_PI

logger = logging.getLogger(__name__)

DEFAULT_MODULATION_THRESHOLD = 0.02
# relative to N * peak average intensity
NUMERIC_FLOOR = 1e-12


def phase_shifts(n_steps: int) -> PhaseShiftSchedule:
    """delta_k = 2*pi*k/N for k = 0..N-1."""
    if int(n_steps) != n_steps or n_steps < 3:
        raise DomainError(f"phase shifting needs N >= 3 steps, got {n_steps}")
    n_steps = int(n_steps)
    return PhaseShiftSchedule(
        n_steps=n_steps,
        shifts=tuple(TWO_PI * k / n_steps for k in range(n_steps)),
    )


def wrapped_phase(
    stack: FringeStack,
    modulation_threshold: float = DEFAULT_MODULATION_THRESHOLD,
    threads: Optional[int] = None,
) -> WrappedPhaseMap:
    """phi = -atan2(Sum I_k sin d_k, Sum I_k cos d_k), wrapped into (-pi, pi].

    Pixels are masked when the modulation I'' is not above
    modulation_threshold * (peak average intensity), or when both sums
    vanish numerically.
    """
    require_valid(stack)
    frames = stack.as_array()
    shifts = np.asarray(stack.shifts, dtype=np.float64)
    mask = stack.mask
    n = frames.shape[0]

    def kernel(rows: slice):
        total, sin_sum, cos_sum = quadrature_sums(frames, shifts, mask, rows)
        phase = -np.arctan2(sin_sum, cos_sum)
        phase = np.where(phase <= -np.pi, np.pi, phase)
        modulation = (2.0 / n) * np.sqrt(sin_sum * sin_sum + cos_sum * cos_sum)
        magnitude = np.maximum(np.abs(sin_sum), np.abs(cos_sum))
        return phase, total / n, modulation, magnitude

    phase, average, modulation, magnitude = map_rows(kernel, mask.shape[0], threads)

    peak = float(average[mask].max()) if mask.any() else 0.0
    valid = mask & (magnitude > NUMERIC_FLOOR * n * max(peak, 1.0))
    valid &= modulation > modulation_threshold * peak
    dropped = int(np.count_nonzero(mask & ~valid))
    if dropped:
        logger.debug("Masked %d low-modulation pixels (threshold %.3g)", dropped, modulation_threshold * peak)

    return WrappedPhaseMap(
        phase=ScalarMap(values=np.where(valid, phase, 0.0), mask=valid),
        frequency_tag=stack.frequency_tag,
    )
