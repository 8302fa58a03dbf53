"""Per-pixel cubic phase-to-coordinate calibration.

Each pixel gets three cubics X(Phi), Y(Phi), Z(Phi) fitted by least squares
over the calibration poses. The fit runs on phases centred and scaled to
[-1, 1] per pixel; the coefficients are expanded back to powers of raw Phi.
"""

from __future__ import annotations

import logging
from math import comb
from typing import List, Optional, Sequence, Tuple

import numpy as np

from models.domain.calibration import AXES, CalibPose, CalibReport, PointCloud, PolyCalibration
from models.domain.phase import AbsolutePhaseMap
from models.domain.raster import QualityFlag, ScalarMap
from services.geometry.surface_fit import fit_plane
from services.raster.parallel import map_rows
from utils.errors import DimensionMismatch, DomainError, EmptyInput, InsufficientPoses

logger = logging.getLogger(__name__)

MIN_POSES = 4
DEGREE = 3
DISTINCT_PHASE_TOL = 1e-9
CONDITION_FLOOR = 1e-10
DOMAIN_TOL = 1e-9


def cubic_value(coefficients: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Horner evaluation of c0 + c1*phi + c2*phi**2 + c3*phi**3; coefficients on axis 0."""
    return ((coefficients[3] * phi + coefficients[2]) * phi + coefficients[1]) * phi + coefficients[0]


def cubic_slope(coefficients: np.ndarray, phi: np.ndarray) -> np.ndarray:
    return (3.0 * coefficients[3] * phi + 2.0 * coefficients[2]) * phi + coefficients[1]


def _expand_scaled(beta: np.ndarray, center: np.ndarray, half_span: np.ndarray) -> np.ndarray:
    """Coefficients of sum_j beta_j ((phi - c)/h)**j in powers of phi.

    beta has shape (..., 4); returns the same shape.
    """
    raw = np.zeros_like(beta)
    for j in range(DEGREE + 1):
        scale = beta[..., j] / half_span ** j
        for i in range(j + 1):
            raw[..., i] += scale * comb(j, i) * (-center) ** (j - i)
    return raw


def _stack_poses(poses: Sequence[CalibPose]):
    shapes = {pose.shape for pose in poses}
    for pose in poses:
        shapes |= {pose.reference_x.shape, pose.reference_y.shape, pose.reference_z.shape}
    if len(shapes) > 1:
        raise DimensionMismatch(f"calibration poses have differing dimensions: {sorted(shapes)}")
    phases = np.stack([pose.absolute_phase.phase.values for pose in poses])
    masks = np.stack([pose.mask for pose in poses])
    refs = np.stack(
        [np.stack([pose.reference(axis).values for pose in poses]) for axis in AXES], axis=-1
    )
    return phases, masks, refs


def fit_calibration(
    poses: Sequence[CalibPose],
    working_range_mm: Optional[Tuple[float, float]] = None,
    threads: Optional[int] = None,
) -> Tuple[PolyCalibration, CalibReport]:
    """Fit the per-pixel cubics and record residual statistics.

    A pixel is calibrated when at least four poses see it with distinct
    phases and the scaled normal matrix is well conditioned.
    """
    poses = list(poses)
    if len(poses) < MIN_POSES:
        raise InsufficientPoses(f"cubic calibration needs >= {MIN_POSES} poses, got {len(poses)}")
    phases, masks, refs = _stack_poses(poses)
    m, height, width = phases.shape

    z_valid = refs[..., 2][masks]
    if working_range_mm is not None and z_valid.size:
        low, high = working_range_mm
        if z_valid.min() < low - 1e-6 or z_valid.max() > high + 1e-6:
            raise DomainError(
                f"reference Z spans [{z_valid.min():.3f}, {z_valid.max():.3f}] mm, "
                f"outside the working range [{low}, {high}] mm"
            )

    def kernel(rows: slice):
        phi = phases[:, rows]
        valid = masks[:, rows]
        ref = refs[:, rows]
        count = valid.sum(axis=0)

        big = np.where(valid, phi, np.inf)
        small = np.where(valid, phi, -np.inf)
        seen = count > 0
        p_min = np.where(seen, big.min(axis=0), 0.0)
        p_max = np.where(seen, small.max(axis=0), 0.0)

        ordered = np.sort(np.where(valid, phi, np.nan), axis=0)
        gaps = np.diff(ordered, axis=0)
        distinct = 1 + np.sum(np.nan_to_num(gaps, nan=0.0) > DISTINCT_PHASE_TOL, axis=0)
        ok = (count >= MIN_POSES) & (distinct >= MIN_POSES)

        center = np.where(ok, 0.5 * (p_max + p_min), 0.0)
        half_span = np.where(ok, 0.5 * (p_max - p_min), 1.0)
        t = np.where(valid, (phi - center) / half_span, 0.0)
        weight = valid.astype(np.float64)

        powers = np.stack([weight * t ** j for j in range(DEGREE + 1)], axis=-1)
        normal = np.einsum("k...i,k...j->...ij", powers, np.stack([t ** j for j in range(DEGREE + 1)], axis=-1))
        rhs = np.einsum("k...i,k...a->...ia", powers, ref)

        eig = np.linalg.eigvalsh(np.where(ok[..., None, None], normal, np.eye(DEGREE + 1)))
        conditioned = ok & (eig[..., 0] > CONDITION_FLOOR * eig[..., -1])
        safe_normal = np.where(conditioned[..., None, None], normal, np.eye(DEGREE + 1))
        beta = np.linalg.solve(safe_normal, rhs)

        raw = _expand_scaled(np.moveaxis(beta, -1, -2), center[..., None], half_span[..., None])
        raw = np.where(conditioned[..., None, None], raw, 0.0)
        return raw, p_min, p_max, conditioned, ok & ~conditioned

    raw, p_min, p_max, calibrated, rank_deficient = map_rows(kernel, height, threads)

    coefficients = np.transpose(raw, (2, 3, 0, 1))
    if working_range_mm is None:
        working_range_mm = (float(z_valid.min()), float(z_valid.max())) if z_valid.size else (0.0, 0.0)
    calibration = PolyCalibration(
        coefficients=coefficients,
        phase_min=np.where(calibrated, p_min, 0.0),
        phase_max=np.where(calibrated, p_max, 0.0),
        mask=calibrated,
        working_range_mm=working_range_mm,
    )

    n_deficient = int(np.count_nonzero(rank_deficient))
    if n_deficient:
        logger.warning("%d pixels rejected as rank deficient", n_deficient)
    report = _residual_report(calibration, poses)
    report.rank_deficient_pixels = n_deficient
    logger.info(
        "Calibrated %d/%d pixels from %d poses, sigma_cal = %.6g mm",
        calibration.valid_count,
        height * width,
        m,
        report.sigma_cal_mm,
    )
    return calibration, report


def _residual_report(calibration: PolyCalibration, poses: Sequence[CalibPose]) -> CalibReport:
    report = CalibReport(calibrated_pixels=calibration.valid_count)
    residual_maps: List[ScalarMap] = []
    for index, pose in enumerate(poses):
        valid = pose.mask & calibration.mask
        phi = pose.absolute_phase.phase.values
        rmse = {}
        for axis in AXES:
            fitted = cubic_value(calibration.axis_coefficients(axis), phi)
            residual = ScalarMap(values=np.where(valid, fitted - pose.reference(axis).values, 0.0), mask=valid)
            rmse[axis] = pooled_rmse([residual]) if residual.valid_count else 0.0
            if axis == "z":
                residual_maps.append(residual)
        pose_id = pose.pose_id or f"pose_{index:02d}"
        report.pose_ids.append(pose_id)
        report.pose_rmse_x_mm.append(rmse["x"])
        report.pose_rmse_y_mm.append(rmse["y"])
        report.pose_rmse_z_mm.append(rmse["z"])
        report.pose_valid_pixels.append(int(np.count_nonzero(valid)))
        logger.debug("%s: %d pixels, Z RMSE %.6g mm", pose_id, int(np.count_nonzero(valid)), rmse["z"])
    report.sigma_cal_mm = pooled_rmse(residual_maps)
    report.s_eff_mm_per_rad = effective_sensitivity(calibration, poses)
    return report


def pooled_rmse(residuals: Sequence[ScalarMap]) -> float:
    """sqrt(sum of squared residuals / P) over every valid pixel of every map."""
    total = 0.0
    count = 0
    for residual in residuals:
        values = residual.valid_values()
        total += float(np.sum(values * values))
        count += values.size
    if count == 0:
        raise EmptyInput("pooled RMSE needs at least one valid residual")
    return float(np.sqrt(total / count))


def evaluate_points(calibration: PolyCalibration, absolute: AbsolutePhaseMap) -> PointCloud:
    """Evaluate X, Y, Z cubics at each pixel's absolute phase.

    Pixels outside their calibrated phase domain are still evaluated and
    flagged; pixels without a calibration are masked and flagged.
    """
    if calibration.shape != absolute.shape:
        raise DimensionMismatch(
            f"calibration is {calibration.shape} but phase map is {absolute.shape}"
        )
    phi = absolute.phase.values
    measured = absolute.phase.mask
    valid = measured & calibration.mask

    xyz = np.stack(
        [np.where(valid, cubic_value(calibration.axis_coefficients(axis), phi), 0.0) for axis in AXES],
        axis=-1,
    )
    out_of_domain = valid & (
        (phi < calibration.phase_min - DOMAIN_TOL) | (phi > calibration.phase_max + DOMAIN_TOL)
    )
    quality = np.zeros(valid.shape, dtype=np.uint8)
    quality[absolute.fringe_order.clamped & measured] |= int(QualityFlag.ORDER_CLAMPED)
    quality[out_of_domain] |= int(QualityFlag.OUT_OF_DOMAIN)
    quality[measured & ~calibration.mask] |= int(QualityFlag.CALIBRATION_INVALID)

    n_out = int(np.count_nonzero(out_of_domain))
    if n_out:
        logger.warning("%d pixels evaluated outside their calibrated phase domain", n_out)
    return PointCloud(xyz=xyz, mask=valid, quality=quality)


def effective_sensitivity(calibration: PolyCalibration, poses: Sequence[CalibPose]) -> float:
    """S_eff = mean |dZ/dPhi| over valid pixels of every pose."""
    depth = calibration.axis_coefficients("z")
    total = 0.0
    count = 0
    for pose in poses:
        if pose.shape != calibration.shape:
            raise DimensionMismatch(f"pose {pose.pose_id!r} is {pose.shape}, calibration {calibration.shape}")
        valid = pose.mask & calibration.mask
        slope = cubic_slope(depth, pose.absolute_phase.phase.values)[valid]
        total += float(np.sum(np.abs(slope)))
        count += slope.size
    if count == 0:
        raise EmptyInput("no valid calibrated pixels to average dZ/dPhi over")
    return total / count


def denoise_reference_plane(x: ScalarMap, y: ScalarMap, z: ScalarMap) -> ScalarMap:
    """Replace measured reference Z by the least-squares plane through (X, Y, Z)."""
    mask = x.mask & y.mask & z.mask
    cloud = PointCloud(xyz=np.stack([x.values, y.values, z.values], axis=-1), mask=mask)
    plane = fit_plane(cloud)
    nx, ny, nz = plane.normal
    if abs(nz) < 1e-6:
        raise DomainError("reference plane is parallel to the viewing axis; cannot solve for Z")
    fitted = (plane.offset_mm - nx * x.values - ny * y.values) / nz
    return ScalarMap(values=np.where(mask, fitted, 0.0), mask=mask)
