"""Signed error maps, their statistics and regional breakdowns."""

from __future__ import annotations

import logging
from typing import List, Tuple, Union

import numpy as np

from models.domain.calibration import PointCloud
from models.domain.geometry import ErrorStats, Histogram, Plane, Sphere
from models.domain.raster import ScalarMap
from utils.errors import DomainError, EmptyRegion

logger = logging.getLogger(__name__)

DEFAULT_BINS = 101
DEFAULT_RANGE_MM = 1.0


def error_histogram(values: np.ndarray, bins: int = DEFAULT_BINS, range_mm: float = DEFAULT_RANGE_MM) -> Histogram:
    """Fixed bins over [-range, range]; values outside land in the end bins."""
    edges = np.linspace(-range_mm, range_mm, bins + 1)
    counts, _ = np.histogram(np.clip(values, -range_mm, range_mm), bins=edges)
    return Histogram(edges=edges, counts=counts.astype(np.int64))


def error_stats(values: np.ndarray, bins: int = DEFAULT_BINS, range_mm: float = DEFAULT_RANGE_MM) -> ErrorStats:
    values = np.asarray(values, dtype=np.float64)
    count = int(values.size)
    histogram = error_histogram(values, bins, range_mm)
    if count == 0:
        return ErrorStats(0.0, 0.0, 0.0, 0.0, 0, histogram)
    mean = float(np.mean(values))
    std_pop = float(np.std(values))
    return ErrorStats(
        rmse_mm=float(np.sqrt(np.mean(values * values))),
        mean_mm=mean,
        std_pop_mm=std_pop,
        std_sample_mm=float(np.std(values, ddof=1)) if count > 1 else 0.0,
        count=count,
        histogram=histogram,
    )


def error_map(
    points: PointCloud,
    surface: Union[Plane, Sphere],
    bins: int = DEFAULT_BINS,
    range_mm: float = DEFAULT_RANGE_MM,
) -> Tuple[ScalarMap, ErrorStats]:
    """Signed orthogonal distance per pixel (outward / along +n positive)."""
    distance = surface.signed_distance(np.where(points.mask[..., None], points.xyz, 0.0))
    errors = ScalarMap(values=np.where(points.mask, distance, 0.0), mask=points.mask)
    stats = error_stats(errors.valid_values(), bins, range_mm)
    logger.info("Error map: %d pixels, RMSE %.6f mm, mean %.6f mm", stats.count, stats.rmse_mm, stats.mean_mm)
    return errors, stats


def _axis_coordinates(errors: ScalarMap, axis: str) -> Tuple[np.ndarray, int]:
    if axis == "u":
        return np.broadcast_to(np.arange(errors.width) + 0.5, errors.shape), errors.width
    if axis == "v":
        return np.broadcast_to((np.arange(errors.height) + 0.5)[:, None], errors.shape), errors.height
    raise DomainError(f"axis must be 'u' or 'v', got {axis!r}")


def _rmse(values: np.ndarray, region: str) -> float:
    if values.size == 0:
        raise EmptyRegion(f"{region} region has no valid pixels")
    return float(np.sqrt(np.mean(values * values)))


def regional_rmse(
    errors: ScalarMap,
    axis: str = "u",
    central_fraction: float = 0.3,
    outer_fraction: float = 0.3,
) -> Tuple[float, float]:
    """RMSE of the centred band of width central_fraction * W, and of the
    two edge bands of outer_fraction / 2 * W each."""
    if not (0.0 < central_fraction < 1.0 and 0.0 < outer_fraction < 1.0):
        raise DomainError("fractions must lie in (0, 1)")
    if central_fraction + outer_fraction > 1.0:
        raise DomainError("central_fraction + outer_fraction must not exceed 1")
    coords, extent = _axis_coordinates(errors, axis)
    central = np.abs(coords - extent / 2.0) < central_fraction * extent / 2.0
    edge = outer_fraction * extent / 2.0
    outer = (coords < edge) | (coords > extent - edge)
    return (
        _rmse(errors.values[errors.mask & central], "central"),
        _rmse(errors.values[errors.mask & outer], "outer"),
    )


def rmse_profile(errors: ScalarMap, axis: str = "u") -> List[Tuple[int, int, float]]:
    """(index, valid count, RMSE) per column (axis u) or row (axis v); NaN RMSE for empty lines."""
    _axis_coordinates(errors, axis)
    values = np.where(errors.mask, errors.values, 0.0)
    reduce_axis = 0 if axis == "u" else 1
    counts = errors.mask.sum(axis=reduce_axis)
    sums = np.sum(values * values, axis=reduce_axis)
    with np.errstate(invalid="ignore", divide="ignore"):
        rmse = np.where(counts > 0, np.sqrt(sums / np.maximum(counts, 1)), np.nan)
    return [(int(i), int(c), float(r)) for i, (c, r) in enumerate(zip(counts, rmse))]
