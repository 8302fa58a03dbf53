"""Least-squares plane and sphere fits to point clouds."""

from __future__ import annotations

import logging
from typing import Optional, Tuple, Union

import numpy as np

from models.domain.calibration import PointCloud
from models.domain.geometry import Plane, Sphere
from utils.errors import DegenerateInput, NoConvergence

logger = logging.getLogger(__name__)

STEP_TOL_MM = 1e-9
MAX_ITERATIONS = 100
RANK_TOL = 1e-9
CONDITION_LIMIT = 1e12

Points = Union[PointCloud, np.ndarray]


def as_points(points: Points) -> np.ndarray:
    """(n, 3) float array of the valid points."""
    if isinstance(points, PointCloud):
        return points.valid_points()
    array = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    return array[np.all(np.isfinite(array), axis=1)]


def _singular_values(points: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    centroid = points.mean(axis=0)
    _, s, vt = np.linalg.svd(points - centroid, full_matrices=False)
    return centroid, s, vt


# ──────────────────────────────────────────────────────────────────────────
# Plane
# ──────────────────────────────────────────────────────────────────────────


def fit_plane(points: Points) -> Plane:
    """Orthogonal-distance plane; normal = smallest right singular vector, n_z >= 0."""
    p = as_points(points)
    if p.shape[0] < 3:
        raise DegenerateInput(f"plane fit needs >= 3 points, got {p.shape[0]}")
    centroid, s, vt = _singular_values(p)
    if s[0] == 0.0 or s[1] <= RANK_TOL * s[0]:
        raise DegenerateInput("points are collinear or coincident")
    normal = vt[2]
    pivot = normal[2] if normal[2] != 0.0 else normal[np.flatnonzero(normal)[0]]
    if pivot < 0.0:
        normal = -normal
    normal = normal / np.linalg.norm(normal)
    return Plane(normal=normal, offset_mm=float(normal @ centroid))


# ──────────────────────────────────────────────────────────────────────────
# Sphere
# ──────────────────────────────────────────────────────────────────────────


def _check_sphere_input(p: np.ndarray) -> np.ndarray:
    if p.shape[0] < 4:
        raise DegenerateInput(f"sphere fit needs >= 4 points, got {p.shape[0]}")
    _, s, _ = _singular_values(p)
    if s[0] == 0.0 or s[2] <= RANK_TOL * s[0]:
        raise DegenerateInput("points are coplanar; sphere is undetermined")
    return p


def fit_sphere_algebraic(points: Points) -> Sphere:
    """Linear fit of |p|^2 = 2 c.p + k, with k = r^2 - |c|^2."""
    p = _check_sphere_input(as_points(points))
    shift = p.mean(axis=0)
    q = p - shift
    design = np.column_stack([2.0 * q, np.ones(q.shape[0])])
    target = np.einsum("ij,ij->i", q, q)
    solution, *_ = np.linalg.lstsq(design, target, rcond=None)
    center = solution[:3]
    radius_sq = solution[3] + center @ center
    if radius_sq <= 0.0:
        raise DegenerateInput("algebraic sphere fit produced a non-positive radius")
    return Sphere(center_mm=center + shift, radius_mm=float(np.sqrt(radius_sq)))


def _gauss_newton(p: np.ndarray, center: np.ndarray, radius: Optional[float]) -> Tuple[np.ndarray, float, int]:
    free = radius is None
    r = float(np.mean(np.linalg.norm(p - center, axis=1))) if free else float(radius)
    for iteration in range(1, MAX_ITERATIONS + 1):
        offsets = p - center
        dist = np.linalg.norm(offsets, axis=1)
        if np.any(dist == 0.0):
            raise DegenerateInput("a point coincides with the sphere center estimate")
        unit = offsets / dist[:, None]
        residual = dist - r
        jacobian = -unit if not free else np.column_stack([-unit, -np.ones(p.shape[0])])
        if np.linalg.cond(jacobian) > CONDITION_LIMIT:
            raise DegenerateInput("sphere fit is ill-conditioned; the cap is too small")
        step, *_ = np.linalg.lstsq(jacobian, -residual, rcond=None)
        center = center + step[:3]
        if free:
            r += float(step[3])
        norm = float(np.linalg.norm(step))
        logger.debug("Gauss-Newton iteration %d: |step| = %.3e", iteration, norm)
        if norm < STEP_TOL_MM:
            return center, r, iteration
    raise NoConvergence(f"sphere fit did not converge in {MAX_ITERATIONS} iterations")


def fit_sphere_center(points: Points, radius_mm: float) -> np.ndarray:
    """Center minimizing sum (|p - c| - radius)^2, from the algebraic initializer."""
    if radius_mm <= 0.0:
        raise DegenerateInput("nominal radius must be > 0")
    p = _check_sphere_input(as_points(points))
    start = fit_sphere_algebraic(p).center_mm
    center, _, iterations = _gauss_newton(p, start, radius_mm)
    logger.debug("Fixed-radius sphere fit converged in %d iterations", iterations)
    return center


def fit_sphere_free(points: Points) -> Sphere:
    """Joint center and radius geometric least squares."""
    p = _check_sphere_input(as_points(points))
    start = fit_sphere_algebraic(p).center_mm
    center, radius, iterations = _gauss_newton(p, start, None)
    logger.debug("Free sphere fit converged in %d iterations", iterations)
    if radius <= 0.0:
        raise DegenerateInput("sphere fit converged to a non-positive radius")
    return Sphere(center_mm=center, radius_mm=radius)


def geometric_rmse(points: Points, surface: Union[Plane, Sphere]) -> float:
    p = as_points(points)
    return float(np.sqrt(np.mean(surface.signed_distance(p) ** 2)))
