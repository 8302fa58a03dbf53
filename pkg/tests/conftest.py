"""Shared fixtures; puts src/ on sys.path the same way main.py does."""

from __future__ import annotations

import json
import os
import sys

_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(_ROOT, "src"))

import numpy as np
import pytest

from models.config.pipeline_config import Fidelity, RenderConfig
from models.domain.optics import CameraModel, CylindricalProjector
from models.domain.raster import FrequencyTag, FringeStack
from models.domain.scene import SceneSurface
from utils.numeric import TWO_PI


@pytest.fixture
def camera() -> CameraModel:
    """200x160 at f = 320 px: the 1000x800 / f = 1600 field of view, scaled down."""
    return CameraModel.simple(200, 160, 320.0)


@pytest.fixture
def projector() -> CylindricalProjector:
    return CylindricalProjector()


@pytest.fixture
def render_config() -> RenderConfig:
    return RenderConfig(n_steps=25, fidelity=Fidelity.IDEAL_SINUSOID)


@pytest.fixture
def plane_scene() -> SceneSurface:
    return SceneSurface.fronto_plane(585.0, reflectance=0.8, ambient=0.1)


@pytest.fixture
def sphere_scene() -> SceneSurface:
    return SceneSurface.sphere([0.0, 0.0, 585.0], 50.0, reflectance=0.8, ambient=0.1)


def sinusoid_stack(
    phase: np.ndarray,
    n_steps: int = 25,
    offset: float = 0.5,
    amplitude: float = 0.5,
    sign: float = -1.0,
    tag: FrequencyTag = FrequencyTag.HIGH,
) -> FringeStack:
    """I_k = offset + amplitude * cos(phase + sign * delta_k)."""
    shifts = [TWO_PI * k / n_steps for k in range(n_steps)]
    frames = np.stack([offset + amplitude * np.cos(phase + sign * d) for d in shifts])
    return FringeStack.from_arrays(frames, shifts, frequency_tag=tag)


def write_config(path, data: dict) -> str:
    """Write a config JSON for CLI tests and return its path."""
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f)
    return str(path)
