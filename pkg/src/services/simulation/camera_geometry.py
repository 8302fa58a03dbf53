"""Pinhole projection and the slot-pattern wavelength."""

from __future__ import annotations

import math
from typing import Tuple

import numpy as np

from models.domain.optics import CameraModel
from utils.errors import BehindCamera, DomainError


def fringe_wavelength(distance_mm: float, theta_deg: float, mode: str = "exact") -> float:
    """Fringe period on a surface at distance d for slot interval theta.

    exact:  d * (tan(theta/4) + tan(3*theta/4))
    approx: d * theta   (theta in radians)
    """
    if not 0.0 < theta_deg < 90.0:
        raise DomainError(f"theta must lie in (0, 90) degrees, got {theta_deg}")
    if distance_mm <= 0.0:
        raise DomainError(f"distance must be > 0, got {distance_mm}")
    theta = math.radians(theta_deg)
    if mode == "exact":
        return distance_mm * (math.tan(theta / 4.0) + math.tan(3.0 * theta / 4.0))
    if mode == "approx":
        return distance_mm * theta
    raise DomainError(f"unknown wavelength mode {mode!r}")


def project_point(camera: CameraModel, point_mm) -> Tuple[float, float, float]:
    """Return (u, v, s) with s [u v 1]^T = A (R X + t)."""
    point = np.asarray(point_mm, dtype=np.float64).reshape(3)
    homogeneous = camera.intrinsic @ (camera.rotation @ point + camera.translation_mm)
    s = float(homogeneous[2])
    if s <= 0.0:
        raise BehindCamera(f"point {point.tolist()} has projective scale s={s:.6g} <= 0")
    return float(homogeneous[0] / s), float(homogeneous[1] / s), s


def back_project(camera: CameraModel, u: float, v: float, depth_mm: float) -> np.ndarray:
    """World point on the ray through (u, v) whose camera-frame z equals depth."""
    ray = np.linalg.solve(camera.intrinsic, np.array([u, v, 1.0]))
    cam_point = depth_mm * ray / ray[2]
    return camera.rotation.T @ (cam_point - camera.translation_mm)


def camera_depth(camera: CameraModel, points_mm: np.ndarray) -> np.ndarray:
    """Camera-frame z of world points."""
    points = np.asarray(points_mm, dtype=np.float64)
    return points @ camera.rotation[2] + camera.translation_mm[2]
