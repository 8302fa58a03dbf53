"""Stack validation and the texture / modulation maps of a fringe stack."""

from __future__ import annotations

import logging
from typing import List, Optional, Tuple

import numpy as np

from models.domain.raster import FringeStack, ScalarMap, TextureModulation
from services.raster.parallel import map_rows
from utils.errors import InvalidStack
from utils.numeric import TWO_PI

logger = logging.getLogger(__name__)


def validate_stack(stack: FringeStack) -> List[str]:
    """Return every violated stack invariant; empty when the stack is valid."""
    violations: List[str] = []
    n_frames = len(stack.frames)
    n_shifts = len(stack.shifts)

    if n_frames < 3:
        violations.append(f"N >= 3: stack has {n_frames} frames")
    if n_frames != n_shifts:
        violations.append(f"frame/shift count: {n_frames} frames but {n_shifts} shifts")

    if n_frames:
        shapes = {frame.shape for frame in stack.frames}
        if len(shapes) > 1:
            violations.append(f"shared dimensions: frames have shapes {sorted(shapes)}")
        else:
            first = stack.frames[0].mask
            if any(not np.array_equal(first, frame.mask) for frame in stack.frames[1:]):
                violations.append("shared mask: frame masks differ")

    shifts = np.asarray(stack.shifts, dtype=np.float64)
    if shifts.size:
        if not np.all(np.isfinite(shifts)) or shifts.min() < 0.0 or shifts.max() >= TWO_PI:
            violations.append("shift range: shifts must lie within [0, 2*pi)")
        if shifts.size > 1 and not np.all(np.diff(shifts) > 0.0):
            violations.append("shift order: shifts must be strictly increasing")
    return violations


def require_valid(stack: FringeStack) -> None:
    violations = validate_stack(stack)
    if violations:
        raise InvalidStack("; ".join(violations))


def quadrature_sums(
    frames: np.ndarray,
    shifts: np.ndarray,
    mask: np.ndarray,
    rows: slice = slice(None),
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sum_k I_k, Sum_k I_k sin(d_k), Sum_k I_k cos(d_k) over one row block.

    Accumulated in ascending k; masked pixels contribute zeros.
    """
    block_mask = mask[rows]
    total = np.zeros(block_mask.shape, dtype=np.float64)
    sin_sum = np.zeros_like(total)
    cos_sum = np.zeros_like(total)
    for k in range(frames.shape[0]):
        frame = np.where(block_mask, frames[k][rows], 0.0)
        total += frame
        sin_sum += frame * np.sin(shifts[k])
        cos_sum += frame * np.cos(shifts[k])
    return total, sin_sum, cos_sum


def texture_and_modulation(stack: FringeStack, threads: Optional[int] = None) -> TextureModulation:
    """I' = mean_k I_k and I'' = (2/N) * hypot(Sum I sin d, Sum I cos d)."""
    require_valid(stack)
    frames = stack.as_array()
    shifts = np.asarray(stack.shifts, dtype=np.float64)
    mask = stack.mask
    n = frames.shape[0]

    def kernel(rows: slice):
        total, sin_sum, cos_sum = quadrature_sums(frames, shifts, mask, rows)
        return total / n, (2.0 / n) * np.sqrt(sin_sum * sin_sum + cos_sum * cos_sum)

    average, modulation = map_rows(kernel, mask.shape[0], threads)
    result = TextureModulation(
        average=ScalarMap(values=average, mask=mask),
        modulation=ScalarMap(values=modulation, mask=mask),
    )
    saturated = int(np.count_nonzero(result.saturation_flags()))
    if saturated:
        logger.warning("%d pixels have modulation above average intensity (saturation)", saturated)
    return result
