import math

import numpy as np
import pytest

from models.config.pipeline_config import Fidelity, RenderConfig
from models.domain.optics import CameraModel, CylindricalProjector
from models.domain.raster import FrequencyTag
from models.domain.scene import SceneSurface
from services.phase import unwrap_pair, wrapped_phase
from services.simulation import (
    absolute_phase_of_points,
    back_project,
    cast_scene,
    fringe_wavelength,
    ground_truth_phase,
    intersect,
    project_point,
    render_fringe_stack,
    slot_transmittance,
)
from services.simulation.fringe_renderer import frame_noise, stage_rotations_deg
from utils.errors import BehindCamera, ConfigError, DomainError
from utils.numeric import TWO_PI, wrap_to_pi


# ── fringe_wavelength ────────────────────────────────────────────────────────


def test_wavelength_small_angle_form():
    assert fringe_wavelength(600.0, 5.0, "approx") == pytest.approx(52.360, abs=5e-4)


def test_wavelength_tangent_form():
    exact = fringe_wavelength(600.0, 5.0, "exact")
    theta = math.radians(5.0)
    assert exact == pytest.approx(600.0 * (math.tan(theta / 4) + math.tan(3 * theta / 4)), rel=1e-15)
    assert exact == pytest.approx(52.415, abs=5e-3)
    assert exact > fringe_wavelength(600.0, 5.0, "approx")


def test_wavelength_vanishes_with_interval():
    assert fringe_wavelength(600.0, 1e-9, "exact") < 1e-6
    assert fringe_wavelength(600.0, 1e-9, "approx") < 1e-6


@pytest.mark.parametrize("distance,theta", [(600.0, 0.0), (600.0, 90.0), (0.0, 5.0)])
def test_wavelength_domain(distance, theta):
    with pytest.raises(DomainError):
        fringe_wavelength(distance, theta)


# ── camera ───────────────────────────────────────────────────────────────────


def test_optical_axis_point_maps_to_principal_point(camera):
    u, v, s = project_point(camera, [0.0, 0.0, 600.0])
    assert (u, v) == pytest.approx((100.0, 80.0))
    assert s == pytest.approx(600.0)


def test_point_behind_camera_rejected(camera):
    with pytest.raises(BehindCamera):
        project_point(camera, [10.0, 0.0, -5.0])


def test_back_projection_inverts_projection(camera):
    point = back_project(camera, 37.25, 121.5, 572.0)
    u, v, _ = project_point(camera, point)
    assert (u, v) == pytest.approx((37.25, 121.5), abs=1e-9)
    assert point[2] == pytest.approx(572.0)


# ── scene intersection ───────────────────────────────────────────────────────


def test_plane_hits_at_requested_depth(camera, plane_scene):
    hits = cast_scene(plane_scene, camera)
    assert hits.hit.all()
    np.testing.assert_allclose(hits.points[..., 2], 585.0)


def test_parallel_rays_miss_plane():
    scene = SceneSurface.plane([0.0, 0.0, 600.0], [1.0, 0.0, 0.0])
    hits = intersect(scene, np.zeros(3), np.array([[0.0, 0.0, 1.0]]))
    assert not hits.hit[0]
    assert np.all(np.isnan(hits.points[0]))


def test_sphere_near_root_and_normal(sphere_scene):
    hits = intersect(sphere_scene, np.zeros(3), np.array([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0]]))
    assert hits.hit.tolist() == [True, False]
    np.testing.assert_allclose(hits.points[0], [0.0, 0.0, 535.0])
    np.testing.assert_allclose(hits.normals[0], [0.0, 0.0, -1.0])


def test_flat_heightmap_matches_plane(camera):
    grid = np.zeros((50, 50))
    scene = SceneSurface.heightmap(grid, 2.0, [-50.0, -50.0, 600.0])
    hits = cast_scene(scene, camera)
    reference = cast_scene(SceneSurface.fronto_plane(600.0), camera)
    assert hits.hit.any()
    np.testing.assert_allclose(hits.points[hits.hit], reference.points[hits.hit], atol=1e-5)
    normals = hits.normals[hits.hit]
    np.testing.assert_allclose(normals, np.broadcast_to([0.0, 0.0, 1.0], normals.shape), atol=1e-12)
    assert not hits.hit[0, 0]


def test_heightmap_bump_raises_surface(camera):
    grid = np.zeros((41, 41))
    grid[20, 20] = -10.0
    scene = SceneSurface.heightmap(grid, 1.0, [-20.0, -20.0, 600.0])
    hits = intersect(scene, np.zeros(3), np.array([[0.0, 0.0, 1.0]]))
    assert hits.hit[0]
    assert hits.points[0, 2] == pytest.approx(590.0, abs=1e-5)


# ── rendering ────────────────────────────────────────────────────────────────


def _positional_order(result, projector, freq):
    """Brute-force K from each hit point's azimuth."""
    theta = projector.interval_deg(freq)
    beta = projector.azimuth_deg(result.ground_truth.points.xyz)
    return np.floor((beta - projector.rotation_offset_deg) / theta).astype(int)


def test_ideal_mode_unwraps_exactly(camera, projector, plane_scene, render_config):
    high = render_fringe_stack(plane_scene, projector, camera, "high", render_config)
    low = render_fringe_stack(plane_scene, projector, camera, "low", render_config)
    phi_h = wrapped_phase(high.stack)
    phi_l = wrapped_phase(low.stack)
    truth = high.ground_truth.phase

    assert phi_h.phase.valid_count == camera.width * camera.height
    np.testing.assert_allclose(wrap_to_pi(phi_h.phase.values - truth.values), 0.0, atol=1e-10)

    result = unwrap_pair(phi_h, phi_l, projector.theta_h_deg, projector.theta_l_deg)
    mask = result.phase.mask
    oracle = _positional_order(high, projector, FrequencyTag.HIGH)
    np.testing.assert_array_equal(result.fringe_order.order[mask], oracle[mask])
    assert not result.fringe_order.clamped.any()
    assert np.max(np.abs(result.phase.values[mask] - truth.values[mask])) < 1e-9
    assert oracle[mask].min() >= 0 and oracle[mask].max() <= 8


def test_ground_truth_depth_and_hint(camera, projector, plane_scene, render_config):
    result = render_fringe_stack(plane_scene, projector, camera, "high", render_config)
    np.testing.assert_allclose(result.ground_truth.depth.values, 585.0)
    assert result.stack.wavelength_hint_mm == pytest.approx(fringe_wavelength(580.0, 5.0, "approx"))
    assert result.stack.n_steps == 25
    assert result.stack.frequency_tag is FrequencyTag.HIGH


def test_noise_is_seeded_and_repeatable(camera, projector, plane_scene):
    config = RenderConfig(n_steps=5, noise_sigma=0.01)
    first = render_fringe_stack(plane_scene, projector, camera, "high", config, seed=7)
    second = render_fringe_stack(plane_scene, projector, camera, "high", config, seed=7, threads=3)
    other = render_fringe_stack(plane_scene, projector, camera, "high", config, seed=8)
    assert np.array_equal(first.stack.as_array(), second.stack.as_array())
    assert not np.array_equal(first.stack.as_array(), other.stack.as_array())
    assert first.stack.as_array().min() >= 0.0


def test_noise_keyed_by_frame_and_frequency():
    a = frame_noise(1, 0, "high", (4, 4), 1.0)
    assert np.array_equal(a, frame_noise(1, 0, "high", (4, 4), 1.0))
    assert not np.array_equal(a, frame_noise(1, 1, "high", (4, 4), 1.0))
    assert not np.array_equal(a, frame_noise(1, 0, "low", (4, 4), 1.0))


def test_noise_free_render_is_bit_identical(camera, projector, sphere_scene, render_config):
    first = render_fringe_stack(sphere_scene, projector, camera, "low", render_config, threads=1)
    second = render_fringe_stack(sphere_scene, projector, camera, "low", render_config, threads=4)
    assert np.array_equal(first.stack.as_array(), second.stack.as_array())


def test_sphere_misses_are_masked(camera, projector, sphere_scene, render_config):
    result = render_fringe_stack(sphere_scene, projector, camera, "high", render_config)
    mask = result.stack.mask
    assert mask.any() and not mask.all()
    assert not mask[0, 0]
    assert mask[80, 100]


def test_self_shadowed_surface_is_masked(camera, projector, render_config):
    # faces the camera but turns its back on the source at x = -150
    scene = SceneSurface.plane([0.0, 0.0, 585.0], [-1.0, 0.0, 0.2], reflectance=0.8, ambient=0.1)
    result = render_fringe_stack(scene, projector, camera, "high", render_config)
    frames = result.stack.as_array()
    hit = result.stack.mask
    assert hit.any()
    np.testing.assert_allclose(frames[:, hit], 0.1)
    assert wrapped_phase(result.stack).phase.valid_count == 0


def test_quantized_stage_snaps_to_resolution(projector):
    config = RenderConfig(n_steps=25, quantize_stage=True)
    for freq in ("high", "low"):
        rotations = stage_rotations_deg(projector, freq, config)
        steps = rotations / projector.stage_resolution_deg
        np.testing.assert_allclose(steps, np.round(steps), atol=1e-9)
    nominal = stage_rotations_deg(projector, "high", RenderConfig(n_steps=25))
    np.testing.assert_allclose(stage_rotations_deg(projector, "high", config), nominal, atol=1e-12)


def test_sharp_slot_is_half_duty():
    x = np.linspace(0.0, 5.0, 2000, endpoint=False) + 1e-4
    t = slot_transmittance(x, 5.0, 0.0)
    assert set(np.unique(t)) == {0.0, 1.0}
    assert t.mean() == pytest.approx(0.5, abs=1e-3)


def test_blurred_slot_is_smooth_and_bounded():
    x = np.linspace(-10.0, 10.0, 801)
    t = slot_transmittance(x, 5.0, 0.8)
    assert np.all(t >= -1e-12) and np.all(t <= 1.0 + 1e-12)
    assert t.mean() == pytest.approx(0.5, abs=1e-2)
    assert np.max(np.abs(np.diff(t))) < 0.05


def test_blur_drives_slot_phase_towards_ideal(camera, projector, plane_scene, render_config):
    ideal = wrapped_phase(render_fringe_stack(plane_scene, projector, camera, "high", render_config).stack)
    deviations = []
    for sigma in (0.0, 0.02, 0.05):
        config = RenderConfig(n_steps=25, fidelity=Fidelity.SLOT_TRANSMISSION, blur_sigma_deg=sigma)
        slot = wrapped_phase(render_fringe_stack(plane_scene, projector, camera, "high", config).stack)
        mask = slot.phase.mask & ideal.phase.mask
        diff = wrap_to_pi(slot.phase.values[mask] - ideal.phase.values[mask])
        deviations.append(float(np.sqrt(np.mean(diff * diff))))
    assert deviations[0] > deviations[1] > deviations[2]


def test_falloff_dims_slot_mode_only(camera, projector, plane_scene):
    slot = RenderConfig(n_steps=5, fidelity=Fidelity.SLOT_TRANSMISSION, falloff=True, reference_distance_mm=100.0)
    flat = RenderConfig(n_steps=5, fidelity=Fidelity.SLOT_TRANSMISSION)
    dim = render_fringe_stack(plane_scene, projector, camera, "high", slot).stack.as_array()
    bright = render_fringe_stack(plane_scene, projector, camera, "high", flat).stack.as_array()
    assert dim.sum() < bright.sum()
    ideal = RenderConfig(n_steps=5, falloff=True)
    plain = RenderConfig(n_steps=5)
    np.testing.assert_array_equal(
        render_fringe_stack(plane_scene, projector, camera, "high", ideal).stack.as_array(),
        render_fringe_stack(plane_scene, projector, camera, "high", plain).stack.as_array(),
    )


def test_invalid_render_config_rejected(camera, projector, plane_scene):
    with pytest.raises(ConfigError):
        render_fringe_stack(plane_scene, projector, camera, "high", RenderConfig(n_steps=2))


def test_noise_does_not_depend_on_image_size():
    small = frame_noise(3, 2, "low", (4, 5), 1.0)
    large = frame_noise(3, 2, "low", (6, 9), 1.0)
    np.testing.assert_array_equal(large[:4, :5], small)


def test_noise_is_standard_normal():
    noise = frame_noise(11, 0, "high", (300, 300), 1.0)
    assert abs(noise.mean()) < 0.02
    assert noise.std() == pytest.approx(1.0, rel=0.02)
    assert np.all(np.isfinite(noise))


# ── ground-truth phase ───────────────────────────────────────────────────────


def test_phase_scales_with_slot_interval(camera, projector, plane_scene):
    high = ground_truth_phase(plane_scene, projector, camera, "high")
    low = ground_truth_phase(plane_scene, projector, camera, "low")
    np.testing.assert_array_equal(high.mask, low.mask)
    shifted_low = low.values + math.pi
    valid = high.mask & (np.abs(shifted_low) > 1e-3)
    ratio = (high.values[valid] + math.pi) / shifted_low[valid]
    np.testing.assert_allclose(ratio, projector.theta_l_deg / projector.theta_h_deg, rtol=1e-12)


@pytest.mark.parametrize("freq", ["high", "low"])
def test_fringe_period_on_facing_plane(projector, freq):
    # plane perpendicular to the central projection direction at distance d
    d = 580.0
    theta = projector.interval_deg(freq)
    x_axis, z_axis = projector.rotation[:, 0], projector.rotation[:, 2]
    s = np.linspace(-60.0, 60.0, 240001)
    points = projector.origin_mm + d * z_axis + s[:, None] * x_axis
    phase = absolute_phase_of_points(points, projector, freq)

    def position(beta_deg):
        target = TWO_PI * (beta_deg - projector.rotation_offset_deg) / theta - math.pi
        return float(np.interp(target, phase, s))

    period = position(3.0 * theta / 4.0) - position(-theta / 4.0)
    assert period == pytest.approx(fringe_wavelength(d, theta, "exact"), rel=0.01)


def test_quantized_stage_error_within_bound(camera, plane_scene):
    projector = CylindricalProjector(stage_resolution_deg=0.03)
    config = RenderConfig(n_steps=25, quantize_stage=True)
    nominal = stage_rotations_deg(projector, "high", RenderConfig(n_steps=25))
    snapped = stage_rotations_deg(projector, "high", config)
    assert np.max(np.abs(snapped - nominal)) > 0.0
    assert np.max(np.abs(snapped - nominal)) <= 0.015 + 1e-12

    result = render_fringe_stack(plane_scene, projector, camera, "high", config)
    wrapped = wrapped_phase(result.stack)
    mask = wrapped.phase.mask
    deviation = wrap_to_pi(wrapped.phase.values[mask] - result.ground_truth.phase.values[mask])
    bound = TWO_PI * (projector.stage_resolution_deg / 2.0) / projector.theta_h_deg
    assert np.max(np.abs(deviation)) < bound


@pytest.mark.slow
def test_full_resolution_plane_unwraps_exactly(projector, plane_scene, render_config):
    camera = CameraModel.simple(1000, 800, 1600.0)
    high = render_fringe_stack(plane_scene, projector, camera, "high", render_config)
    low = render_fringe_stack(plane_scene, projector, camera, "low", render_config)
    result = unwrap_pair(wrapped_phase(high.stack), wrapped_phase(low.stack), 5.0, 5.625)

    mask = result.phase.mask
    assert result.phase.valid_count == 1000 * 800
    oracle = _positional_order(high, projector, FrequencyTag.HIGH)
    np.testing.assert_array_equal(result.fringe_order.order[mask], oracle[mask])
    truth = high.ground_truth.phase.values
    assert np.max(np.abs(result.phase.values[mask] - truth[mask])) < 1e-9
