from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .phase import AbsolutePhaseMap
from .raster import QualityFlag, ScalarMap

AXES = ("x", "y", "z")


@dataclass(frozen=True)
class CalibPose:
    """One reference pose: measured absolute phase plus reference X, Y, Z."""

    absolute_phase: AbsolutePhaseMap
    reference_x: ScalarMap
    reference_y: ScalarMap
    reference_z: ScalarMap
    pose_id: str = ""

    @property
    def shape(self) -> Tuple[int, int]:
        return self.absolute_phase.shape

    @property
    def mask(self) -> np.ndarray:
        return (
            self.absolute_phase.phase.mask
            & self.reference_x.mask
            & self.reference_y.mask
            & self.reference_z.mask
        )

    def reference(self, axis: str) -> ScalarMap:
        return {"x": self.reference_x, "y": self.reference_y, "z": self.reference_z}[axis]


@dataclass(frozen=True)
class PolyCalibration:
    """Per-pixel cubic polynomials X(Phi), Y(Phi), Z(Phi).

    coefficients has shape (3, 4, height, width): axis (x, y, z) by power
    0..3, so coefficients[2] holds c0..c3 of the depth polynomial.
    """

    coefficients: np.ndarray
    phase_min: np.ndarray
    phase_max: np.ndarray
    mask: np.ndarray
    working_range_mm: Tuple[float, float] = (0.0, 0.0)
    provenance: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        coefficients = np.array(self.coefficients, dtype=np.float64, copy=True)
        if coefficients.ndim != 4 or coefficients.shape[:2] != (3, 4):
            raise ValueError("coefficients must have shape (3, 4, height, width)")
        shape = coefficients.shape[2:]
        arrays = {
            "coefficients": coefficients,
            "phase_min": np.array(self.phase_min, dtype=np.float64, copy=True),
            "phase_max": np.array(self.phase_max, dtype=np.float64, copy=True),
            "mask": np.array(self.mask, dtype=bool, copy=True),
        }
        for name, array in arrays.items():
            if name != "coefficients" and array.shape != shape:
                raise ValueError(f"{name} shape {array.shape} != {shape}")
            array.setflags(write=False)
            object.__setattr__(self, name, array)
        object.__setattr__(
            self, "working_range_mm", tuple(float(v) for v in self.working_range_mm)
        )

    @classmethod
    def constant_depth(cls, width: int, height: int, depth_mm: float) -> "PolyCalibration":
        coefficients = np.zeros((3, 4, height, width))
        coefficients[2, 0] = depth_mm
        return cls(
            coefficients=coefficients,
            phase_min=np.full((height, width), -np.inf),
            phase_max=np.full((height, width), np.inf),
            mask=np.ones((height, width), dtype=bool),
            working_range_mm=(depth_mm, depth_mm),
        )

    @property
    def shape(self) -> Tuple[int, int]:
        return tuple(self.coefficients.shape[2:])

    @property
    def valid_count(self) -> int:
        return int(np.count_nonzero(self.mask))

    def axis_coefficients(self, axis: str) -> np.ndarray:
        return self.coefficients[AXES.index(axis)]


@dataclass(frozen=True)
class PointCloud:
    """Reconstructed per-pixel points with a validity mask and quality flags."""

    xyz: np.ndarray
    mask: np.ndarray
    quality: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        xyz = np.array(self.xyz, dtype=np.float64, copy=True)
        if xyz.ndim != 3 or xyz.shape[2] != 3:
            raise ValueError("xyz must have shape (height, width, 3)")
        mask = np.array(self.mask, dtype=bool, copy=True) & np.all(np.isfinite(xyz), axis=2)
        if self.quality is None:
            quality = np.full(mask.shape, int(QualityFlag.NONE), dtype=np.uint8)
        else:
            quality = np.array(self.quality, dtype=np.uint8, copy=True)
        for array in (xyz, mask, quality):
            array.setflags(write=False)
        object.__setattr__(self, "xyz", xyz)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "quality", quality)

    @classmethod
    def from_maps(cls, x: ScalarMap, y: ScalarMap, z: ScalarMap, quality=None) -> "PointCloud":
        return cls(
            xyz=np.stack([x.values, y.values, z.values], axis=-1),
            mask=x.mask & y.mask & z.mask,
            quality=quality,
        )

    @property
    def shape(self) -> Tuple[int, int]:
        return tuple(self.mask.shape)

    @property
    def valid_count(self) -> int:
        return int(np.count_nonzero(self.mask))

    def valid_points(self) -> np.ndarray:
        """(n, 3) array of valid points in row-major pixel order."""
        return self.xyz[self.mask]

    def pixel_coordinates(self) -> np.ndarray:
        """(n, 2) array of (u, v) for valid points, same order as valid_points."""
        rows, cols = np.nonzero(self.mask)
        return np.stack([cols, rows], axis=1)

    def axis_map(self, axis: str) -> ScalarMap:
        return ScalarMap(values=self.xyz[..., AXES.index(axis)], mask=self.mask)


@dataclass
class CalibReport:
    """Residual statistics recorded while fitting a PolyCalibration."""

    pose_ids: List[str] = field(default_factory=list)
    pose_rmse_z_mm: List[float] = field(default_factory=list)
    pose_rmse_x_mm: List[float] = field(default_factory=list)
    pose_rmse_y_mm: List[float] = field(default_factory=list)
    pose_valid_pixels: List[int] = field(default_factory=list)
    sigma_cal_mm: float = 0.0
    s_eff_mm_per_rad: Optional[float] = None
    calibrated_pixels: int = 0
    rank_deficient_pixels: int = 0

    @property
    def pose_count(self) -> int:
        return len(self.pose_ids)

    @property
    def pose_rmse_median_mm(self) -> float:
        return float(np.median(self.pose_rmse_z_mm)) if self.pose_rmse_z_mm else 0.0

    def to_dict(self) -> Dict[str, Any]:
        poses = [
            {
                "pose_id": pose_id,
                "rmse_z_mm": float(rz),
                "rmse_x_mm": float(rx),
                "rmse_y_mm": float(ry),
                "valid_pixels": int(count),
            }
            for pose_id, rz, rx, ry, count in zip(
                self.pose_ids,
                self.pose_rmse_z_mm,
                self.pose_rmse_x_mm,
                self.pose_rmse_y_mm,
                self.pose_valid_pixels,
            )
        ]
        return {
            "pose_count": self.pose_count,
            "poses": poses,
            "sigma_cal_mm": float(self.sigma_cal_mm),
            "pose_rmse_min_mm": float(min(self.pose_rmse_z_mm)) if poses else 0.0,
            "pose_rmse_max_mm": float(max(self.pose_rmse_z_mm)) if poses else 0.0,
            "pose_rmse_median_mm": self.pose_rmse_median_mm,
            "s_eff_mm_per_rad": None if self.s_eff_mm_per_rad is None else float(self.s_eff_mm_per_rad),
            "calibrated_pixels": int(self.calibrated_pixels),
            "rank_deficient_pixels": int(self.rank_deficient_pixels),
        }
