"""Forward model of the rotating-cylinder projector seen by a pinhole camera."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import erf

from models.config.pipeline_config import Fidelity, RenderConfig
from models.domain.calibration import PointCloud
from models.domain.optics import CameraModel, CylindricalProjector
from models.domain.raster import FrequencyTag, FringeStack, ScalarMap
from models.domain.scene import SceneSurface
from services.phase.phase_retrieval import phase_shifts
from services.raster.parallel import map_rows
from services.simulation.camera_geometry import camera_depth, fringe_wavelength
from services.simulation.scene_intersection import RayHits, intersect
from utils.errors import ConfigError
from utils.numeric import TWO_PI, round_half_away

logger = logging.getLogger(__name__)

_FREQ_CODE = {FrequencyTag.HIGH: 0, FrequencyTag.LOW: 1}


@dataclass(frozen=True)
class GroundTruth:
    """Absolute phase (origin at -pi on the first fringe), camera depth and world points."""

    phase: ScalarMap
    depth: ScalarMap
    points: PointCloud


@dataclass(frozen=True)
class RenderResult:
    stack: FringeStack
    ground_truth: GroundTruth
    rotations_deg: tuple


# ──────────────────────────────────────────────────────────────────────────
# Geometry
# ──────────────────────────────────────────────────────────────────────────


def cast_scene(
    scene: SceneSurface,
    camera: CameraModel,
    threads: Optional[int] = None,
) -> RayHits:
    rays = camera.pixel_rays()
    origin = camera.center_mm

    def kernel(rows: slice):
        hits = intersect(scene, origin, rays[rows])
        return hits.points, hits.normals, hits.hit

    points, normals, hit = map_rows(kernel, camera.height, threads)
    return RayHits(points=points, normals=normals, hit=hit)


def absolute_phase_of_points(
    points: np.ndarray,
    projector: CylindricalProjector,
    freq: FrequencyTag | str,
) -> np.ndarray:
    """Phi = 2*pi*(beta - alpha0)/theta - pi.

    The -pi puts Phi = 0 at the phi_h = -pi boundary of fringe 0, which is
    the origin the fringe-order rounding expects.
    """
    theta = projector.interval_deg(freq)
    beta = projector.azimuth_deg(points)
    return TWO_PI * (beta - projector.rotation_offset_deg) / theta - math.pi


def ground_truth_phase(
    scene: SceneSurface,
    projector: CylindricalProjector,
    camera: CameraModel,
    freq: FrequencyTag | str,
    threads: Optional[int] = None,
) -> ScalarMap:
    """Analytic absolute phase per pixel; rays missing the scene are masked."""
    hits = cast_scene(scene, camera, threads)
    return _phase_map(hits, projector, freq)


def _phase_map(hits: RayHits, projector, freq) -> ScalarMap:
    phase = absolute_phase_of_points(hits.points, projector, freq)
    return ScalarMap(values=np.where(hits.hit, phase, 0.0), mask=hits.hit)


def _ground_truth(hits: RayHits, projector, camera, freq) -> GroundTruth:
    depth = np.where(hits.hit, camera_depth(camera, hits.points), 0.0)
    xyz = np.where(hits.hit[..., None], hits.points, 0.0)
    return GroundTruth(
        phase=_phase_map(hits, projector, freq),
        depth=ScalarMap(values=depth, mask=hits.hit),
        points=PointCloud(xyz=xyz, mask=hits.hit),
    )


# ──────────────────────────────────────────────────────────────────────────
# Radiometry
# ──────────────────────────────────────────────────────────────────────────


def illumination(
    hits: RayHits,
    projector: CylindricalProjector,
    camera: CameraModel,
    config: RenderConfig,
) -> np.ndarray:
    """Source irradiance factor per pixel; 0 where the surface is self-shadowed.

    A point is lit when the source and the camera lie on the same side of
    its tangent plane. With falloff enabled (slot mode only) the factor is
    |cos(incidence)| * (d_ref / r)**2.
    """
    to_source = projector.origin_mm - hits.points
    to_camera = camera.center_mm - hits.points
    facing_source = np.einsum("...i,...i->...", hits.normals, to_source)
    facing_camera = np.einsum("...i,...i->...", hits.normals, to_camera)
    lit = hits.hit & (facing_source * facing_camera > 0.0)
    factor = lit.astype(np.float64)
    if config.falloff and config.fidelity is Fidelity.SLOT_TRANSMISSION:
        r = np.linalg.norm(to_source, axis=-1)
        safe_r = np.where(lit, r, 1.0)
        cos_incidence = np.abs(facing_source) / safe_r
        factor = np.where(lit, cos_incidence * (config.reference_distance_mm / safe_r) ** 2, 0.0)
    return factor


def slot_transmittance(x_deg: np.ndarray, theta_deg: float, blur_sigma_deg: float) -> np.ndarray:
    """50% duty square wave (open on (theta/4, 3*theta/4) mod theta) blurred by a Gaussian."""
    x = np.mod(np.asarray(x_deg, dtype=np.float64), theta_deg)
    if blur_sigma_deg == 0.0:
        return ((x > theta_deg / 4.0) & (x < 3.0 * theta_deg / 4.0)).astype(np.float64)
    reach = int(math.ceil(6.0 * blur_sigma_deg / theta_deg)) + 1
    scale = blur_sigma_deg * math.sqrt(2.0)
    total = np.zeros_like(x)
    for m in range(-reach, reach + 1):
        open_edge = m * theta_deg + theta_deg / 4.0
        close_edge = m * theta_deg + 3.0 * theta_deg / 4.0
        total += 0.5 * (erf((x - open_edge) / scale) - erf((x - close_edge) / scale))
    return total


def stage_rotations_deg(projector: CylindricalProjector, freq, config: RenderConfig) -> np.ndarray:
    """Rotation of step k, k*theta/N, optionally snapped to the stage resolution."""
    theta = projector.interval_deg(freq)
    rotations = np.arange(config.n_steps, dtype=np.float64) * theta / config.n_steps
    if config.quantize_stage:
        step = projector.stage_resolution_deg
        rotations = round_half_away(rotations / step) * step
    return rotations


def _mix64(x: np.ndarray) -> np.ndarray:
    """splitmix64 finaliser over a uint64 array (wrapping arithmetic)."""
    x = x + np.uint64(0x9E3779B97F4A7C15)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def frame_noise(seed: int, frame: int, freq, shape, sigma: float) -> np.ndarray:
    """Gaussian noise keyed per pixel by (seed, frame, frequency, v, u).

    Each draw is a hash of its own key, so a pixel's noise is the same
    whatever the image size or the order pixels are visited in.
    """
    keys = np.random.SeedSequence(
        [int(seed), int(frame), _FREQ_CODE[FrequencyTag.parse(freq)]]
    ).generate_state(2, dtype=np.uint64)
    v, u = np.indices(shape, dtype=np.uint64)
    pixel = (v << np.uint64(32)) | u
    first = _mix64(_mix64(pixel ^ keys[0]))
    second = _mix64(_mix64(pixel ^ keys[1]))
    # 53-bit uniforms; the first is shifted into (0, 1] for the log
    u1 = ((first >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0 ** -53
    u2 = (second >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
    return sigma * np.sqrt(-2.0 * np.log(u1)) * np.cos(TWO_PI * u2)


# ──────────────────────────────────────────────────────────────────────────
# Rendering
# ──────────────────────────────────────────────────────────────────────────


def render_fringe_stack(
    scene: SceneSurface,
    projector: CylindricalProjector,
    camera: CameraModel,
    freq: FrequencyTag | str,
    config: RenderConfig,
    seed: int = 0,
    threads: Optional[int] = None,
) -> RenderResult:
    """Render N phase-shifted frames plus the ground-truth bundle.

    Step k rotates the cylinder by k*theta/N toward negative azimuth, so a
    scene point sees the pattern at slot coordinate beta - alpha0 + k*theta/N
    and its intensity follows cos(Phi + delta_k).
    """
    freq = FrequencyTag.parse(freq)
    for validate in (config.validate, scene.validate, camera.validate, projector.validate):
        try:
            validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    theta = projector.interval_deg(freq)
    schedule = phase_shifts(config.n_steps)
    rotations = stage_rotations_deg(projector, freq, config)

    hits = cast_scene(scene, camera, threads)
    truth = _ground_truth(hits, projector, camera, freq)
    irradiance = illumination(hits, projector, camera, config)
    beta = np.where(hits.hit, projector.azimuth_deg(hits.points), 0.0)
    slot_coordinate = beta - projector.rotation_offset_deg
    phase = truth.phase.values

    frames = np.zeros((config.n_steps, camera.height, camera.width), dtype=np.float64)
    for k, rotation in enumerate(rotations):

        def kernel(rows: slice, rotation=rotation):
            if config.fidelity is Fidelity.IDEAL_SINUSOID:
                pattern = 0.5 + 0.5 * np.cos(phase[rows] + TWO_PI * rotation / theta)
            else:
                pattern = slot_transmittance(slot_coordinate[rows] + rotation, theta, config.blur_sigma_deg)
            return scene.ambient + scene.reflectance * irradiance[rows] * pattern

        frame = map_rows(kernel, camera.height, threads)
        if config.noise_sigma > 0.0:
            frame = frame + frame_noise(seed, k, freq, frame.shape, config.noise_sigma)
        frames[k] = np.where(hits.hit, np.maximum(frame, 0.0), 0.0)

    hint = fringe_wavelength(config.reference_distance_mm, theta, "approx")
    stack = FringeStack.from_arrays(
        frames,
        schedule.shifts,
        frequency_tag=freq,
        mask=hits.hit,
        wavelength_hint_mm=hint,
    )
    logger.info(
        "Rendered %s stack: %d frames, %d/%d pixels hit (%s)",
        freq.value,
        config.n_steps,
        int(np.count_nonzero(hits.hit)),
        hits.hit.size,
        config.fidelity.value,
    )
    return RenderResult(stack=stack, ground_truth=truth, rotations_deg=tuple(float(r) for r in rotations))
