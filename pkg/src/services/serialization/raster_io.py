"""Image and point-cloud files: PFM float maps, PGM intensities/masks, ASCII PLY."""

from __future__ import annotations

import logging
import os
from typing import Optional, Tuple

import cv2
import numpy as np
from plyfile import PlyData, PlyElement, PlyParseError

from models.domain.calibration import PointCloud
from models.domain.raster import ScalarMap
from utils.errors import IoError

logger = logging.getLogger(__name__)

UINT16_MAX = 65535


def _ensure_parent(path: str) -> None:
    try:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create directory for {path}: {exc}") from exc


def _imwrite(path: str, image: np.ndarray) -> str:
    _ensure_parent(path)
    try:
        ok = cv2.imwrite(path, image)
    except cv2.error as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    if not ok:
        raise IoError(f"cannot write {path}")
    return path


def _imread(path: str) -> np.ndarray:
    if not os.path.exists(path):
        raise IoError(f"file not found: {path}")
    image = cv2.imread(path, cv2.IMREAD_UNCHANGED)
    if image is None:
        raise IoError(f"cannot decode image {path}")
    if image.ndim == 3:
        image = cv2.cvtColor(image, cv2.COLOR_BGR2GRAY)
    return image


# ──────────────────────────────────────────────────────────────────────────
# Float maps (PFM, masked pixels stored as NaN)
# ──────────────────────────────────────────────────────────────────────────


def write_float_map(path: str, data: ScalarMap) -> str:
    return _imwrite(path, data.as_nan_filled().astype(np.float32))


def read_float_map(path: str) -> ScalarMap:
    values = _imread(path).astype(np.float64)
    return ScalarMap.from_array(values)


# ──────────────────────────────────────────────────────────────────────────
# Intensities and masks (PGM)
# ──────────────────────────────────────────────────────────────────────────


def write_intensity(path: str, frame: np.ndarray, scale: float) -> str:
    """Store frame * scale as 16-bit PGM (rounded, clipped to the 16-bit range)."""
    counts = np.clip(np.rint(np.asarray(frame, dtype=np.float64) * scale), 0, UINT16_MAX)
    return _imwrite(path, counts.astype(np.uint16))


def read_intensity(path: str, scale: float = UINT16_MAX) -> np.ndarray:
    return _imread(path).astype(np.float64) / scale


def write_mask(path: str, mask: np.ndarray) -> str:
    return _imwrite(path, np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8))


def read_mask(path: str) -> np.ndarray:
    return _imread(path) > 0


def write_label_map(path: str, labels: np.ndarray) -> str:
    """Small non-negative integer maps (fringe order, quality flags) as 16-bit PGM."""
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() > UINT16_MAX):
        raise IoError(f"label values out of 16-bit range for {path}")
    return _imwrite(path, labels.astype(np.uint16))


def read_label_map(path: str) -> np.ndarray:
    return _imread(path).astype(np.int64)


# ──────────────────────────────────────────────────────────────────────────
# Point clouds (ASCII PLY)
# ──────────────────────────────────────────────────────────────────────────

GRID_COMMENT = "grid"
VERTEX_DTYPE = [
    ("x", "f8"), ("y", "f8"), ("z", "f8"),
    ("u", "i4"), ("v", "i4"),
    ("quality", "u1"),
]


def write_ply(path: str, cloud: PointCloud) -> str:
    """x y z in mm, pixel u v and the quality flag byte per valid pixel.

    The grid size travels in a `comment grid W H` header line so the cloud
    can be put back on its pixel grid.
    """
    _ensure_parent(path)
    points = cloud.valid_points()
    pixels = cloud.pixel_coordinates()
    height, width = cloud.shape

    vertices = np.empty(len(points), dtype=VERTEX_DTYPE)
    vertices["x"], vertices["y"], vertices["z"] = points[:, 0], points[:, 1], points[:, 2]
    vertices["u"], vertices["v"] = pixels[:, 0], pixels[:, 1]
    vertices["quality"] = cloud.quality[cloud.mask]

    ply = PlyData(
        [PlyElement.describe(vertices, "vertex")],
        text=True,
        comments=[f"{GRID_COMMENT} {width} {height}"],
    )
    try:
        ply.write(path)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    logger.info("Wrote %d points to %s", len(points), path)
    return path


def _grid_size(comments) -> Tuple[Optional[int], Optional[int]]:
    for comment in comments:
        parts = comment.split()
        if len(parts) == 3 and parts[0] == GRID_COMMENT:
            return int(parts[1]), int(parts[2])
    return None, None


def read_ply(path: str, width: Optional[int] = None, height: Optional[int] = None) -> PointCloud:
    """Read a PLY written by write_ply back onto its pixel grid."""
    if not os.path.exists(path):
        raise IoError(f"file not found: {path}")
    try:
        ply = PlyData.read(path)
        vertices = ply["vertex"].data
    except KeyError as exc:
        raise IoError(f"{path}: no vertex element") from exc
    except (PlyParseError, OSError, ValueError) as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc

    missing = {name for name, _ in VERTEX_DTYPE} - set(vertices.dtype.names or ())
    if missing:
        raise IoError(f"{path}: vertex element lacks {sorted(missing)}")
    grid_width, grid_height = _grid_size(ply.comments)
    width = width or grid_width
    height = height or grid_height
    if width is None or height is None:
        raise IoError(f"{path}: grid size unknown (no 'comment grid' line)")

    u = np.asarray(vertices["u"], dtype=np.int64)
    v = np.asarray(vertices["v"], dtype=np.int64)
    if u.size and (u.min() < 0 or v.min() < 0 or u.max() >= width or v.max() >= height):
        raise IoError(f"{path}: vertex pixel outside the {width}x{height} grid")
    xyz = np.zeros((height, width, 3))
    mask = np.zeros((height, width), dtype=bool)
    quality = np.zeros((height, width), dtype=np.uint8)
    xyz[v, u] = np.column_stack([vertices["x"], vertices["y"], vertices["z"]])
    mask[v, u] = True
    quality[v, u] = np.asarray(vertices["quality"], dtype=np.uint8)
    return PointCloud(xyz=xyz, mask=mask, quality=quality)
