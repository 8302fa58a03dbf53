"""Serialization - configuration, raster/point-cloud files, stacks and calibration containers."""

from .calibration_io import CalibrationIO
from .json_io import content_hash, read_json, write_json
from .raster_io import (
    read_float_map,
    read_intensity,
    read_label_map,
    read_mask,
    read_ply,
    write_float_map,
    write_intensity,
    write_label_map,
    write_mask,
    write_ply,
)
from .settings_manager import SettingsManager, get_settings_manager
from .stack_io import read_manifest, read_stack, write_stack

__all__ = [
    'CalibrationIO',
    'content_hash', 'read_json', 'write_json',
    'read_float_map', 'read_intensity', 'read_label_map', 'read_mask', 'read_ply',
    'write_float_map', 'write_intensity', 'write_label_map', 'write_mask', 'write_ply',
    'SettingsManager', 'get_settings_manager',
    'read_manifest', 'read_stack', 'write_stack',
]
