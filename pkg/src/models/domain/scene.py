from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional

import numpy as np

from utils.errors import ConfigError


class SurfaceKind(Enum):
    PLANE = "plane"
    SPHERE = "sphere"
    HEIGHTMAP = "heightmap"


@dataclass
class SceneSurface:
    """Ground-truth geometry seen by the simulated camera.

    plane:      {p : normal . (p - point) = 0}
    sphere:     {p : |p - center| = radius}
    heightmap:  z = z0 + grid[row, col] sampled at
                x = x0 + col * spacing, y = y0 + row * spacing (bilinear)
    """

    kind: SurfaceKind = SurfaceKind.PLANE
    point_mm: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 600.0]))
    normal: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    center_mm: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 600.0]))
    radius_mm: float = 50.0
    grid_mm: Optional[np.ndarray] = None
    spacing_mm: float = 1.0
    grid_origin_mm: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 600.0]))
    reflectance: float = 1.0
    ambient: float = 0.0

    def __post_init__(self) -> None:
        self.kind = SurfaceKind(self.kind)
        self.point_mm = np.asarray(self.point_mm, dtype=np.float64).reshape(3)
        self.normal = np.asarray(self.normal, dtype=np.float64).reshape(3)
        self.center_mm = np.asarray(self.center_mm, dtype=np.float64).reshape(3)
        self.grid_origin_mm = np.asarray(self.grid_origin_mm, dtype=np.float64).reshape(3)
        if self.grid_mm is not None:
            self.grid_mm = np.asarray(self.grid_mm, dtype=np.float64)

    # ──────────────────────────────────────────────────────────────────────
    # Constructors
    # ──────────────────────────────────────────────────────────────────────

    @classmethod
    def plane(
        cls,
        point_mm,
        normal,
        reflectance: float = 1.0,
        ambient: float = 0.0,
    ) -> "SceneSurface":
        normal = np.asarray(normal, dtype=np.float64)
        length = float(np.linalg.norm(normal))
        if length == 0.0:
            raise ConfigError("scene: plane normal must be non-zero")
        return cls(
            kind=SurfaceKind.PLANE,
            point_mm=point_mm,
            normal=normal / length,
            reflectance=reflectance,
            ambient=ambient,
        )

    @classmethod
    def fronto_plane(cls, depth_mm: float, **kwargs) -> "SceneSurface":
        return cls.plane([0.0, 0.0, depth_mm], [0.0, 0.0, 1.0], **kwargs)

    @classmethod
    def sphere(
        cls,
        center_mm,
        radius_mm: float,
        reflectance: float = 1.0,
        ambient: float = 0.0,
    ) -> "SceneSurface":
        return cls(
            kind=SurfaceKind.SPHERE,
            center_mm=center_mm,
            radius_mm=float(radius_mm),
            reflectance=reflectance,
            ambient=ambient,
        )

    @classmethod
    def heightmap(
        cls,
        grid_mm: np.ndarray,
        spacing_mm: float,
        origin_mm,
        reflectance: float = 1.0,
        ambient: float = 0.0,
    ) -> "SceneSurface":
        return cls(
            kind=SurfaceKind.HEIGHTMAP,
            grid_mm=np.asarray(grid_mm, dtype=np.float64),
            spacing_mm=float(spacing_mm),
            grid_origin_mm=origin_mm,
            reflectance=reflectance,
            ambient=ambient,
        )

    def validate(self) -> None:
        if not 0.0 < self.reflectance <= 1.0:
            raise ConfigError("scene: reflectance must be in (0, 1]")
        if self.ambient < 0.0:
            raise ConfigError("scene: ambient must be >= 0")
        if self.kind is SurfaceKind.PLANE:
            if abs(float(np.linalg.norm(self.normal)) - 1.0) > 1e-9:
                raise ConfigError("scene: plane normal must be unit length")
        elif self.kind is SurfaceKind.SPHERE:
            if self.radius_mm <= 0.0:
                raise ConfigError("scene: sphere radius must be > 0")
        else:
            grid = self.grid_mm
            if grid is None or grid.ndim != 2 or min(grid.shape) < 2:
                raise ConfigError("scene: heightmap grid must be 2D with at least 2x2 samples")
            if not np.all(np.isfinite(grid)):
                raise ConfigError("scene: heightmap grid must be finite")
            if self.spacing_mm <= 0.0:
                raise ConfigError("scene: heightmap spacing must be > 0")

    # ──────────────────────────────────────────────────────────────────────
    # Serialization
    # ──────────────────────────────────────────────────────────────────────

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "kind": self.kind.value,
            "reflectance": float(self.reflectance),
            "ambient": float(self.ambient),
        }
        if self.kind is SurfaceKind.PLANE:
            data["point_mm"] = [float(v) for v in self.point_mm]
            data["normal"] = [float(v) for v in self.normal]
        elif self.kind is SurfaceKind.SPHERE:
            data["center_mm"] = [float(v) for v in self.center_mm]
            data["radius_mm"] = float(self.radius_mm)
        else:
            data["grid_mm"] = [[float(v) for v in row] for row in self.grid_mm]
            data["spacing_mm"] = float(self.spacing_mm)
            data["origin_mm"] = [float(v) for v in self.grid_origin_mm]
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SceneSurface":
        try:
            kind = SurfaceKind(str(data.get("kind", "plane")).lower())
        except ValueError as exc:
            raise ConfigError(f"scene: unknown kind {data.get('kind')!r}") from exc
        reflectance = float(data.get("reflectance", 1.0))
        ambient = float(data.get("ambient", 0.0))
        if kind is SurfaceKind.PLANE:
            if "depth_mm" in data:
                scene = cls.fronto_plane(float(data["depth_mm"]), reflectance=reflectance, ambient=ambient)
            else:
                scene = cls.plane(
                    data.get("point_mm", [0.0, 0.0, 600.0]),
                    data.get("normal", [0.0, 0.0, 1.0]),
                    reflectance=reflectance,
                    ambient=ambient,
                )
        elif kind is SurfaceKind.SPHERE:
            scene = cls.sphere(
                data.get("center_mm", [0.0, 0.0, 600.0]),
                float(data.get("radius_mm", 50.0)),
                reflectance=reflectance,
                ambient=ambient,
            )
        else:
            if "grid_mm" not in data:
                raise ConfigError("scene: heightmap requires grid_mm")
            scene = cls.heightmap(
                np.asarray(data["grid_mm"], dtype=np.float64),
                float(data.get("spacing_mm", 1.0)),
                data.get("origin_mm", [0.0, 0.0, 600.0]),
                reflectance=reflectance,
                ambient=ambient,
            )
        scene.validate()
        return scene
