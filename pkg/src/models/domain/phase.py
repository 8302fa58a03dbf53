from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .raster import FrequencyTag, ScalarMap


@dataclass(frozen=True)
class PhaseShiftSchedule:
    """Uniform N-step schedule, delta_k = 2*pi*k/N."""

    n_steps: int
    shifts: Tuple[float, ...]


@dataclass(frozen=True)
class WrappedPhaseMap:
    """Wrapped phase in (-pi, pi] for one fringe frequency."""

    phase: ScalarMap
    frequency_tag: FrequencyTag = FrequencyTag.HIGH

    @property
    def shape(self) -> Tuple[int, int]:
        return self.phase.shape


@dataclass(frozen=True)
class FringeOrderMap:
    """Integer fringe order K with the pixels clamped into the designed band."""

    order: np.ndarray
    mask: np.ndarray
    clamped: np.ndarray
    max_order: int

    def __post_init__(self) -> None:
        order = np.array(self.order, dtype=np.int64, copy=True)
        mask = np.array(self.mask, dtype=bool, copy=True)
        clamped = np.array(self.clamped, dtype=bool, copy=True)
        for array in (order, mask, clamped):
            array.setflags(write=False)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "clamped", clamped)

    @property
    def shape(self) -> Tuple[int, int]:
        return tuple(self.order.shape)


@dataclass(frozen=True)
class AbsolutePhaseMap:
    """Continuous phase Phi = phi_h + 2*pi*K with the wavelengths used."""

    phase: ScalarMap
    fringe_order: FringeOrderMap
    wavelengths: Tuple[float, float, float]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.phase.shape

    @property
    def lambda_h(self) -> float:
        return self.wavelengths[0]

    @property
    def lambda_l(self) -> float:
        return self.wavelengths[1]

    @property
    def lambda_eq(self) -> float:
        return self.wavelengths[2]
