from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntFlag
from typing import Optional, Sequence, Tuple

import numpy as np


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


class FrequencyTag(Enum):
    HIGH = "high"
    LOW = "low"

    @classmethod
    def parse(cls, value: "FrequencyTag | str") -> "FrequencyTag":
        if isinstance(value, cls):
            return value
        return cls(str(value).strip().lower())


@dataclass(frozen=True)
class ScalarMap:
    """Masked 2D grid of float64 values.

    Contract:
        values.shape == mask.shape == (height, width), row-major
        mask True marks a valid pixel; reductions only see valid pixels
    """

    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        mask = np.asarray(self.mask, dtype=bool)
        if values.ndim != 2:
            raise ValueError("ScalarMap.values must be 2D")
        if mask.shape != values.shape:
            raise ValueError(
                f"ScalarMap.mask shape {mask.shape} != values shape {values.shape}"
            )
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "mask", _frozen(mask))

    # ──────────────────────────────────────────────────────────────────────
    # Construction helpers
    # ──────────────────────────────────────────────────────────────────────

    @classmethod
    def from_array(cls, values: np.ndarray, mask: Optional[np.ndarray] = None) -> "ScalarMap":
        values = np.asarray(values, dtype=np.float64)
        if mask is None:
            mask = np.isfinite(values)
        return cls(values=values, mask=np.asarray(mask, dtype=bool) & np.isfinite(values))

    # ──────────────────────────────────────────────────────────────────────
    # Derived properties
    # ──────────────────────────────────────────────────────────────────────

    @property
    def width(self) -> int:
        return int(self.values.shape[1])

    @property
    def height(self) -> int:
        return int(self.values.shape[0])

    @property
    def shape(self) -> Tuple[int, int]:
        return self.height, self.width

    @property
    def valid_count(self) -> int:
        return int(np.count_nonzero(self.mask))

    def valid_values(self) -> np.ndarray:
        return self.values[self.mask]

    def as_nan_filled(self) -> np.ndarray:
        """Values with invalid pixels replaced by NaN (for float image export)."""
        return np.where(self.mask, self.values, np.nan)


@dataclass(frozen=True)
class FringeStack:
    """Ordered, co-registered phase-shifted frames.

    Not validated on construction: validate_stack reports every breach so
    the CLI can name all of them at once.
    """

    frames: Tuple[ScalarMap, ...]
    shifts: Tuple[float, ...]
    frequency_tag: FrequencyTag = FrequencyTag.HIGH
    wavelength_hint_mm: Optional[float] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "frames", tuple(self.frames))
        object.__setattr__(self, "shifts", tuple(float(s) for s in self.shifts))
        object.__setattr__(self, "frequency_tag", FrequencyTag.parse(self.frequency_tag))

    @classmethod
    def from_arrays(
        cls,
        frames: np.ndarray | Sequence[np.ndarray],
        shifts: Sequence[float],
        frequency_tag: FrequencyTag | str = FrequencyTag.HIGH,
        mask: Optional[np.ndarray] = None,
        wavelength_hint_mm: Optional[float] = None,
    ) -> "FringeStack":
        """Build a stack whose frames share one mask.

        A pixel invalid (or non-finite) in any frame is invalid in all of them.
        """
        data = np.asarray(frames, dtype=np.float64)
        if data.ndim != 3:
            raise ValueError("frames must be an (N, height, width) array")
        shared = np.all(np.isfinite(data), axis=0)
        if mask is not None:
            shared &= np.asarray(mask, dtype=bool)
        return cls(
            frames=tuple(ScalarMap(values=frame, mask=shared) for frame in data),
            shifts=tuple(shifts),
            frequency_tag=FrequencyTag.parse(frequency_tag),
            wavelength_hint_mm=wavelength_hint_mm,
        )

    @property
    def n_steps(self) -> int:
        return len(self.frames)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.frames[0].shape if self.frames else (0, 0)

    @property
    def mask(self) -> np.ndarray:
        """Intersection of all frame masks."""
        if not self.frames:
            return np.zeros((0, 0), dtype=bool)
        shared = np.array(self.frames[0].mask, copy=True)
        for frame in self.frames[1:]:
            shared &= frame.mask
        return shared

    def as_array(self) -> np.ndarray:
        return np.stack([frame.values for frame in self.frames], axis=0)


@dataclass(frozen=True)
class TextureModulation:
    """Average intensity I' and modulation I'' of a stack."""

    average: ScalarMap
    modulation: ScalarMap

    def saturation_flags(self) -> np.ndarray:
        """True where I' < I'' at a valid pixel (clipped intensities)."""
        valid = self.average.mask & self.modulation.mask
        return valid & (self.average.values < self.modulation.values)


class QualityFlag(IntFlag):
    """Bit flags attached to per-pixel results (quality maps)."""

    NONE = 0
    ORDER_CLAMPED = 1
    OUT_OF_DOMAIN = 2
    CALIBRATION_INVALID = 4
    LOW_MODULATION = 8
