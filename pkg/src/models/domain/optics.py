from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict

import numpy as np

from utils.errors import ConfigError

from .raster import FrequencyTag


def yaw_rotation(yaw_deg: float) -> np.ndarray:
    """Rotation about world +Y; columns are the local x, y, z axes in world."""
    a = math.radians(yaw_deg)
    return np.array(
        [
            [math.cos(a), 0.0, math.sin(a)],
            [0.0, 1.0, 0.0],
            [-math.sin(a), 0.0, math.cos(a)],
        ],
        dtype=np.float64,
    )


def _is_rotation(matrix: np.ndarray, tol: float = 1e-9) -> bool:
    if matrix.shape != (3, 3):
        return False
    if not np.allclose(matrix.T @ matrix, np.eye(3), atol=tol, rtol=0.0):
        return False
    return abs(np.linalg.det(matrix) - 1.0) <= tol


@dataclass
class CylindricalProjector:
    """Rotating cylinder with two slot intervals and a point source on its axis.

    Local frame: y is the cylinder axis, z the central projection direction,
    azimuth beta = atan2(x, z) in degrees. Each frequency's pattern repeats
    every theta degrees of azimuth; the stage advances theta/N per step.
    """

    theta_h_deg: float = 5.0
    theta_l_deg: float = 5.625
    cylinder_radius_mm: float = 40.0
    origin_mm: np.ndarray = field(default_factory=lambda: np.array([-150.0, 0.0, 0.0]))
    rotation: np.ndarray = field(default_factory=lambda: yaw_rotation(13.0))
    rotation_offset_deg: float = -22.5
    stage_resolution_deg: float = 0.004

    def __post_init__(self) -> None:
        self.origin_mm = np.asarray(self.origin_mm, dtype=np.float64).reshape(3)
        self.rotation = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)

    def validate(self) -> None:
        """Raise ConfigError if the slot pattern or stage is invalid."""
        if not 0.0 < self.theta_h_deg < self.theta_l_deg:
            raise ConfigError("projector: require 0 < theta_h_deg < theta_l_deg")
        for name, theta in (("theta_h_deg", self.theta_h_deg), ("theta_l_deg", self.theta_l_deg)):
            slots = 360.0 / theta
            if abs(slots - round(slots)) > 1e-9:
                raise ConfigError(f"projector: 360 is not an integer multiple of {name}={theta}")
        if self.stage_resolution_deg <= 0.0:
            raise ConfigError("projector: stage_resolution_deg must be > 0")
        if self.cylinder_radius_mm <= 0.0:
            raise ConfigError("projector: cylinder_radius_mm must be > 0")
        if not _is_rotation(self.rotation):
            raise ConfigError("projector: axis rotation is not a proper rotation")

    # ──────────────────────────────────────────────────────────────────────
    # Geometry
    # ──────────────────────────────────────────────────────────────────────

    def interval_deg(self, freq: FrequencyTag | str) -> float:
        freq = FrequencyTag.parse(freq)
        return self.theta_h_deg if freq is FrequencyTag.HIGH else self.theta_l_deg

    def to_local(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, dtype=np.float64) - self.origin_mm) @ self.rotation

    def azimuth_deg(self, points: np.ndarray) -> np.ndarray:
        local = self.to_local(points)
        return np.degrees(np.arctan2(local[..., 0], local[..., 2]))

    # ──────────────────────────────────────────────────────────────────────
    # Serialization
    # ──────────────────────────────────────────────────────────────────────

    def to_dict(self) -> Dict[str, Any]:
        return {
            "theta_h_deg": float(self.theta_h_deg),
            "theta_l_deg": float(self.theta_l_deg),
            "cylinder_radius_mm": float(self.cylinder_radius_mm),
            "origin_mm": [float(v) for v in self.origin_mm],
            "rotation": [[float(v) for v in row] for row in self.rotation],
            "rotation_offset_deg": float(self.rotation_offset_deg),
            "stage_resolution_deg": float(self.stage_resolution_deg),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CylindricalProjector":
        default = cls()
        if "rotation" in data:
            rotation = np.asarray(data["rotation"], dtype=np.float64)
        elif "yaw_deg" in data:
            rotation = yaw_rotation(float(data["yaw_deg"]))
        else:
            rotation = default.rotation
        projector = cls(
            theta_h_deg=float(data.get("theta_h_deg", default.theta_h_deg)),
            theta_l_deg=float(data.get("theta_l_deg", default.theta_l_deg)),
            cylinder_radius_mm=float(data.get("cylinder_radius_mm", default.cylinder_radius_mm)),
            origin_mm=np.asarray(data.get("origin_mm", default.origin_mm), dtype=np.float64),
            rotation=rotation,
            rotation_offset_deg=float(data.get("rotation_offset_deg", default.rotation_offset_deg)),
            stage_resolution_deg=float(data.get("stage_resolution_deg", default.stage_resolution_deg)),
        )
        projector.validate()
        return projector


@dataclass
class CameraModel:
    """Pinhole camera: s [u v 1]^T = A [R | t] [X Y Z 1]^T.

    Pixel (u, v) is column u, row v; pixel centres sit on integer coordinates.
    """

    intrinsic: np.ndarray = field(
        default_factory=lambda: np.array(
            [[1600.0, 0.0, 500.0], [0.0, 1600.0, 400.0], [0.0, 0.0, 1.0]]
        )
    )
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation_mm: np.ndarray = field(default_factory=lambda: np.zeros(3))
    width: int = 1000
    height: int = 800

    def __post_init__(self) -> None:
        self.intrinsic = np.asarray(self.intrinsic, dtype=np.float64).reshape(3, 3)
        self.rotation = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        self.translation_mm = np.asarray(self.translation_mm, dtype=np.float64).reshape(3)
        self.width = int(self.width)
        self.height = int(self.height)

    @classmethod
    def simple(
        cls,
        width: int,
        height: int,
        focal_px: float,
        cx: float | None = None,
        cy: float | None = None,
    ) -> "CameraModel":
        cx = width / 2.0 if cx is None else cx
        cy = height / 2.0 if cy is None else cy
        intrinsic = np.array([[focal_px, 0.0, cx], [0.0, focal_px, cy], [0.0, 0.0, 1.0]])
        return cls(intrinsic=intrinsic, width=width, height=height)

    def validate(self) -> None:
        if not _is_rotation(self.rotation):
            raise ConfigError("camera: R must be orthonormal with det +1")
        fx, fy = self.intrinsic[0, 0], self.intrinsic[1, 1]
        if fx <= 0.0 or fy <= 0.0:
            raise ConfigError("camera: focal lengths must be > 0")
        cx, cy = self.intrinsic[0, 2], self.intrinsic[1, 2]
        if not (0.0 <= cx <= self.width and 0.0 <= cy <= self.height):
            raise ConfigError("camera: principal point outside the image")
        if self.width <= 0 or self.height <= 0:
            raise ConfigError("camera: resolution must be positive")

    @property
    def center_mm(self) -> np.ndarray:
        return -self.rotation.T @ self.translation_mm

    def pixel_rays(self) -> np.ndarray:
        """Unit world-space ray directions, shape (height, width, 3)."""
        v, u = np.mgrid[0 : self.height, 0 : self.width].astype(np.float64)
        pixels = np.stack([u, v, np.ones_like(u)], axis=-1)
        cam_dirs = pixels @ np.linalg.inv(self.intrinsic).T
        world_dirs = cam_dirs @ self.rotation
        return world_dirs / np.linalg.norm(world_dirs, axis=-1, keepdims=True)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "fx_px": float(self.intrinsic[0, 0]),
            "fy_px": float(self.intrinsic[1, 1]),
            "cx_px": float(self.intrinsic[0, 2]),
            "cy_px": float(self.intrinsic[1, 2]),
            "rotation": [[float(v) for v in row] for row in self.rotation],
            "translation_mm": [float(v) for v in self.translation_mm],
            "width_px": self.width,
            "height_px": self.height,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CameraModel":
        default = cls()
        width = int(data.get("width_px", default.width))
        height = int(data.get("height_px", default.height))
        fx = float(data.get("fx_px", default.intrinsic[0, 0]))
        fy = float(data.get("fy_px", fx))
        cx = float(data.get("cx_px", width / 2.0))
        cy = float(data.get("cy_px", height / 2.0))
        camera = cls(
            intrinsic=np.array([[fx, 0.0, cx], [0.0, fy, cy], [0.0, 0.0, 1.0]]),
            rotation=np.asarray(data.get("rotation", default.rotation), dtype=np.float64),
            translation_mm=np.asarray(data.get("translation_mm", default.translation_mm), dtype=np.float64),
            width=width,
            height=height,
        )
        camera.validate()
        return camera

