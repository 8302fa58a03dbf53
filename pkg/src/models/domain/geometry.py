from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict

import numpy as np


@dataclass(frozen=True)
class Plane:
    """{p : normal . p = offset}, unit normal with n_z >= 0."""

    normal: np.ndarray
    offset_mm: float

    def __post_init__(self) -> None:
        normal = np.array(self.normal, dtype=np.float64, copy=True).reshape(3)
        normal.setflags(write=False)
        object.__setattr__(self, "normal", normal)
        object.__setattr__(self, "offset_mm", float(self.offset_mm))

    def signed_distance(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) @ self.normal - self.offset_mm

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": "plane",
            "normal": [float(v) for v in self.normal],
            "offset_mm": self.offset_mm,
        }


@dataclass(frozen=True)
class Sphere:
    center_mm: np.ndarray
    radius_mm: float

    def __post_init__(self) -> None:
        center = np.array(self.center_mm, dtype=np.float64, copy=True).reshape(3)
        center.setflags(write=False)
        object.__setattr__(self, "center_mm", center)
        object.__setattr__(self, "radius_mm", float(self.radius_mm))
        if not self.radius_mm > 0.0:
            raise ValueError("Sphere radius must be > 0")

    def signed_distance(self, points: np.ndarray) -> np.ndarray:
        """Outward-positive distance to the sphere surface."""
        offsets = np.asarray(points, dtype=np.float64) - self.center_mm
        return np.linalg.norm(offsets, axis=-1) - self.radius_mm

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": "sphere",
            "center_mm": [float(v) for v in self.center_mm],
            "radius_mm": self.radius_mm,
        }


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(np.sum(self.counts))


@dataclass(frozen=True)
class ErrorStats:
    """Signed-error statistics over the valid pixels of an error map.

    rmse**2 == mean**2 + std_pop**2; std_sample uses the n-1 denominator.
    """

    rmse_mm: float
    mean_mm: float
    std_pop_mm: float
    std_sample_mm: float
    count: int
    histogram: Histogram = field(
        default_factory=lambda: Histogram(edges=np.zeros(1), counts=np.zeros(0, dtype=np.int64))
    )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rmse_mm": float(self.rmse_mm),
            "mean_mm": float(self.mean_mm),
            "std_mm": float(self.std_sample_mm),
            "std_pop_mm": float(self.std_pop_mm),
            "count": int(self.count),
        }
