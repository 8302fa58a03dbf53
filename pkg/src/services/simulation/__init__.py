from .camera_geometry import back_project, camera_depth, fringe_wavelength, project_point
from .scene_intersection import RayHits, intersect
from .fringe_renderer import (
    GroundTruth,
    RenderResult,
    absolute_phase_of_points,
    cast_scene,
    ground_truth_phase,
    render_fringe_stack,
    slot_transmittance,
)

__all__ = [
    'back_project', 'camera_depth', 'fringe_wavelength', 'project_point',
    'RayHits', 'intersect',
    'GroundTruth', 'RenderResult', 'absolute_phase_of_points', 'cast_scene',
    'ground_truth_phase', 'render_fringe_stack', 'slot_transmittance',
]
