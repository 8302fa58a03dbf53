"""Ray casting against plane, sphere and height-map scenes."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import map_coordinates

from models.domain.scene import SceneSurface, SurfaceKind

logger = logging.getLogger(__name__)

PARALLEL_TOL = 1e-9
HEIGHTMAP_TOL_MM = 1e-6
HEIGHTMAP_SAMPLES = 128


@dataclass
class RayHits:
    """Per-ray intersection: points, unit normals and a hit mask.

    Missed or degenerate rays carry NaN points and normals.
    """

    points: np.ndarray
    normals: np.ndarray
    hit: np.ndarray


def intersect(scene: SceneSurface, origin: np.ndarray, directions: np.ndarray) -> RayHits:
    """Nearest intersection with t > 0 of rays origin + t * direction."""
    origin = np.asarray(origin, dtype=np.float64).reshape(3)
    directions = np.asarray(directions, dtype=np.float64)
    if scene.kind is SurfaceKind.PLANE:
        return _intersect_plane(scene, origin, directions)
    if scene.kind is SurfaceKind.SPHERE:
        return _intersect_sphere(scene, origin, directions)
    return _intersect_heightmap(scene, origin, directions)


def _finish(origin, directions, t, hit, normals) -> RayHits:
    t = np.where(hit, t, np.nan)
    points = origin + t[..., None] * directions
    normals = np.where(hit[..., None], normals, np.nan)
    return RayHits(points=points, normals=normals, hit=hit)


def _intersect_plane(scene: SceneSurface, origin, directions) -> RayHits:
    denom = directions @ scene.normal
    degenerate = np.abs(denom) < PARALLEL_TOL
    safe = np.where(degenerate, 1.0, denom)
    t = float(scene.normal @ (scene.point_mm - origin)) / safe
    hit = ~degenerate & (t > 0.0)
    normals = np.broadcast_to(scene.normal, directions.shape)
    return _finish(origin, directions, t, hit, normals)


def _intersect_sphere(scene: SceneSurface, origin, directions) -> RayHits:
    offset = origin - scene.center_mm
    b = directions @ offset
    c = float(offset @ offset) - scene.radius_mm ** 2
    disc = b * b - c
    root = np.sqrt(np.maximum(disc, 0.0))
    near = -b - root
    far = -b + root
    t = np.where(near > 0.0, near, far)
    hit = (disc >= 0.0) & (t > 0.0)
    points = origin + t[..., None] * directions
    normals = (points - scene.center_mm) / scene.radius_mm
    return _finish(origin, directions, t, hit, normals)


# ──────────────────────────────────────────────────────────────────────────
# Height map
# ──────────────────────────────────────────────────────────────────────────


class _HeightField:
    def __init__(self, scene: SceneSurface):
        self.grid = scene.grid_mm
        self.spacing = scene.spacing_mm
        self.x0, self.y0, self.z0 = (float(v) for v in scene.grid_origin_mm)
        grad_rows, grad_cols = np.gradient(self.grid, self.spacing)
        self.grad_x = grad_cols
        self.grad_y = grad_rows

    def _coords(self, x, y):
        return np.stack([(y - self.y0) / self.spacing, (x - self.x0) / self.spacing])

    def _sample(self, field, x, y):
        coords = self._coords(np.ravel(x), np.ravel(y))
        values = map_coordinates(field, coords, order=1, mode="constant", cval=np.nan)
        return values.reshape(np.shape(x))

    def height(self, x, y):
        return self.z0 + self._sample(self.grid, x, y)

    def normal(self, x, y):
        gx = self._sample(self.grad_x, x, y)
        gy = self._sample(self.grad_y, x, y)
        n = np.stack([-gx, -gy, np.ones_like(gx)], axis=-1)
        return n / np.linalg.norm(n, axis=-1, keepdims=True)


def _intersect_heightmap(scene: SceneSurface, origin, directions) -> RayHits:
    """Sample g(t) = z(t) - h(x(t), y(t)) along each ray, bracket the first
    sign change, then bisect to HEIGHTMAP_TOL_MM."""
    field = _HeightField(scene)
    shape = directions.shape[:-1]
    d = directions.reshape(-1, 3)
    z_lo = field.z0 + float(field.grid.min()) - 1.0
    z_hi = field.z0 + float(field.grid.max()) + 1.0

    degenerate = np.abs(d[:, 2]) < PARALLEL_TOL
    dz = np.where(degenerate, 1.0, d[:, 2])
    t_a = (z_lo - origin[2]) / dz
    t_b = (z_hi - origin[2]) / dz
    t_start = np.maximum(np.minimum(t_a, t_b), 0.0)
    t_stop = np.maximum(t_a, t_b)

    def g(t):
        rays = d if t.ndim == 1 else d[:, None, :]
        p = origin + t[..., None] * rays
        return p[..., 2] - field.height(p[..., 0], p[..., 1])

    fractions = np.linspace(0.0, 1.0, HEIGHTMAP_SAMPLES)
    samples_t = t_start[:, None] + (t_stop - t_start)[:, None] * fractions[None, :]
    values = g(samples_t)
    crossing = (values[:, :-1] <= 0.0) & (values[:, 1:] > 0.0)
    found = crossing.any(axis=1) & ~degenerate & (t_stop > t_start)
    first = np.argmax(crossing, axis=1)
    rows = np.arange(d.shape[0])
    lo = samples_t[rows, first]
    hi = samples_t[rows, np.minimum(first + 1, HEIGHTMAP_SAMPLES - 1)]

    while np.any(found & (hi - lo > HEIGHTMAP_TOL_MM)):
        mid = 0.5 * (lo + hi)
        below = g(mid) <= 0.0
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)

    t = 0.5 * (lo + hi)
    points = origin + t[:, None] * d
    normals = field.normal(points[:, 0], points[:, 1])
    hit = found & np.all(np.isfinite(normals), axis=1)
    result = _finish(origin, d, t, hit, normals)
    return RayHits(
        points=result.points.reshape(shape + (3,)),
        normals=result.normals.reshape(shape + (3,)),
        hit=result.hit.reshape(shape),
    )
