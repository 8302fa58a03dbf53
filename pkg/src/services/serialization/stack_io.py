"""Fringe stacks on disk: one 16-bit PGM per frame plus a JSON manifest."""

from __future__ import annotations

import logging
import os
from typing import Any, Dict, Optional

import numpy as np

from models.config.pipeline_config import CropRect
from models.config.stack_manifest import StackManifest
from models.domain.raster import FringeStack
from services.serialization.json_io import read_json, write_json
from services.serialization.raster_io import (
    UINT16_MAX,
    read_intensity,
    read_mask,
    write_intensity,
    write_mask,
)
from utils.errors import ConfigError, DimensionMismatch, IoError

logger = logging.getLogger(__name__)


def write_stack(
    stack: FringeStack,
    directory: str,
    prefix: str,
    metadata: Optional[Dict[str, Any]] = None,
) -> str:
    """Write frames and manifest; returns the manifest path.

    The 16-bit scale maps the brightest valid sample to at most 65535.
    """
    frames = stack.as_array()
    mask = stack.mask
    peak = float(frames[:, mask].max()) if mask.any() else 1.0
    scale = UINT16_MAX / max(peak, 1.0)

    names = []
    for k, frame in enumerate(frames):
        name = f"{prefix}_k{k:02d}.pgm"
        write_intensity(os.path.join(directory, name), np.where(mask, frame, 0.0), scale)
        names.append(name)
    mask_name = f"{prefix}_mask.pgm"
    write_mask(os.path.join(directory, mask_name), mask)

    manifest = StackManifest(
        frame_paths=names,
        shifts=list(stack.shifts),
        frequency_tag=stack.frequency_tag,
        wavelength_hint_mm=stack.wavelength_hint_mm,
        intensity_scale=scale,
        mask_path=mask_name,
        metadata=dict(metadata or {}),
    )
    path = os.path.join(directory, f"{prefix}_manifest.json")
    write_json(path, manifest.to_dict())
    logger.info("Wrote %s stack (%d frames) to %s", stack.frequency_tag.value, len(names), path)
    return path


def read_manifest(path: str) -> StackManifest:
    return StackManifest.from_dict(read_json(path))


def read_stack(path: str, crop: Optional[CropRect] = None) -> FringeStack:
    """Load the frames a manifest lists; every listed file must exist."""
    try:
        manifest = read_manifest(path)
    except ConfigError as exc:
        raise IoError(f"{path}: {exc}") from exc
    base = os.path.dirname(os.path.abspath(path))
    resolved = [os.path.join(base, p) for p in manifest.frame_paths]
    missing = [p for p in resolved if not os.path.exists(p)]
    if missing:
        raise IoError(f"{path}: missing frame file(s): {', '.join(missing)}")

    frames = [read_intensity(p, manifest.intensity_scale) for p in resolved]
    shapes = {frame.shape for frame in frames}
    if len(shapes) > 1:
        raise DimensionMismatch(f"{path}: frames have differing dimensions {sorted(shapes)}")
    mask = None
    if manifest.mask_path:
        mask = read_mask(os.path.join(base, manifest.mask_path))
    if crop is not None:
        frames = [crop.apply(frame) for frame in frames]
        mask = None if mask is None else crop.apply(mask)
    if mask is not None and frames and mask.shape != frames[0].shape:
        raise DimensionMismatch(f"{path}: mask is {mask.shape}, frames are {frames[0].shape}")

    return FringeStack.from_arrays(
        np.stack(frames) if frames else np.zeros((0, 0, 0)),
        manifest.shifts,
        frequency_tag=manifest.frequency_tag,
        mask=mask,
        wavelength_hint_mm=manifest.wavelength_hint_mm,
    )
