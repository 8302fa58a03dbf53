import json
import os

import numpy as np
import pytest
from plyfile import PlyData, PlyElement

from models.config.pipeline_config import CropRect, PipelineConfig, RenderConfig
from models.domain.calibration import PointCloud, PolyCalibration
from models.domain.raster import FrequencyTag, QualityFlag, ScalarMap
from models.domain.uncertainty import UncertaintyBudget
from services.serialization import (
    CalibrationIO,
    SettingsManager,
    content_hash,
    read_float_map,
    read_json,
    read_label_map,
    read_manifest,
    read_ply,
    read_stack,
    write_float_map,
    write_json,
    write_label_map,
    write_ply,
    write_stack,
)
from services.serialization.raster_io import VERTEX_DTYPE
from utils.errors import ConfigError, DimensionMismatch, IoError

from conftest import sinusoid_stack, write_config


# ── raster files ─────────────────────────────────────────────────────────────


def test_float_map_keeps_mask_as_nan(tmp_path):
    values = np.arange(12, dtype=np.float64).reshape(3, 4) * 0.25
    mask = np.ones(values.shape, dtype=bool)
    mask[1, 2] = False
    path = write_float_map(str(tmp_path / "map.pfm"), ScalarMap(values=values, mask=mask))

    loaded = read_float_map(path)
    assert loaded.shape == (3, 4)
    np.testing.assert_array_equal(loaded.mask, mask)
    np.testing.assert_allclose(loaded.values[mask], values[mask])


def test_label_map(tmp_path):
    labels = np.array([[0, 1, 8], [int(QualityFlag.OUT_OF_DOMAIN | QualityFlag.ORDER_CLAMPED), 4, 0]])
    path = write_label_map(str(tmp_path / "k.pgm"), labels)
    np.testing.assert_array_equal(read_label_map(path), labels)
    with pytest.raises(IoError):
        write_label_map(str(tmp_path / "bad.pgm"), np.array([[-1]]))


def test_missing_image_is_io_error(tmp_path):
    with pytest.raises(IoError, match="absent.pfm"):
        read_float_map(str(tmp_path / "absent.pfm"))


def test_ply_keeps_pixel_grid(tmp_path):
    xyz = np.random.default_rng(1).uniform(-50, 600, (4, 5, 3))
    mask = np.ones((4, 5), dtype=bool)
    mask[0, 0] = mask[3, 4] = False
    quality = np.zeros((4, 5), dtype=np.uint8)
    quality[2, 1] = int(QualityFlag.OUT_OF_DOMAIN)
    path = write_ply(str(tmp_path / "points.ply"), PointCloud(xyz=xyz, mask=mask, quality=quality))

    with open(path, encoding="ascii") as f:
        header = f.read().split("end_header")[0]
    assert "element vertex 18" in header
    cloud = read_ply(path)
    assert cloud.shape == (4, 5)
    np.testing.assert_array_equal(cloud.mask, mask)
    np.testing.assert_allclose(cloud.xyz[mask], xyz[mask], atol=1e-6)
    assert cloud.quality[2, 1] == QualityFlag.OUT_OF_DOMAIN


def test_ply_rejects_other_files(tmp_path):
    path = tmp_path / "fake.ply"
    path.write_text("solid cube\n", encoding="ascii")
    with pytest.raises(IoError):
        read_ply(str(path))


def test_ply_header_carries_grid_and_properties(tmp_path):
    cloud = PointCloud(xyz=np.ones((2, 3, 3)), mask=np.ones((2, 3), dtype=bool))
    path = write_ply(str(tmp_path / "grid.ply"), cloud)
    ply = PlyData.read(path)
    assert "grid 3 2" in ply.comments
    assert ply.text
    assert [p.name for p in ply["vertex"].properties] == ["x", "y", "z", "u", "v", "quality"]


def test_ply_without_grid_needs_explicit_size(tmp_path):
    vertices = np.array([(1.0, 2.0, 3.0, 4, 1, 0)], dtype=VERTEX_DTYPE)
    path = str(tmp_path / "bare.ply")
    PlyData([PlyElement.describe(vertices, "vertex")], text=True).write(path)
    with pytest.raises(IoError, match="grid size"):
        read_ply(path)
    cloud = read_ply(path, width=5, height=2)
    np.testing.assert_allclose(cloud.xyz[1, 4], [1.0, 2.0, 3.0])
    with pytest.raises(IoError, match="outside"):
        read_ply(path, width=3, height=2)


# ── stacks ───────────────────────────────────────────────────────────────────


def _ramp_stack(tag=FrequencyTag.HIGH):
    phase = np.tile(np.linspace(-3.0, 3.0, 12), (6, 1))
    return sinusoid_stack(phase, n_steps=5, offset=0.5, amplitude=0.4, tag=tag)


def test_stack_files_and_manifest(tmp_path):
    stack = _ramp_stack()
    manifest_path = write_stack(stack, str(tmp_path), "high", {"seed": 3})
    assert os.path.basename(manifest_path) == "high_manifest.json"
    assert sorted(p.name for p in tmp_path.glob("high_k*.pgm")) == [f"high_k{k:02d}.pgm" for k in range(5)]

    manifest = read_manifest(manifest_path)
    assert manifest.shifts == pytest.approx(list(stack.shifts))
    assert manifest.metadata == {"seed": 3}

    loaded = read_stack(manifest_path)
    assert loaded.n_steps == 5
    assert loaded.frequency_tag is FrequencyTag.HIGH
    np.testing.assert_allclose(loaded.as_array(), stack.as_array(), atol=1.0 / 65535)


def test_stack_crop(tmp_path):
    path = write_stack(_ramp_stack(), str(tmp_path), "low")
    loaded = read_stack(path, CropRect(2, 1, 6, 4))
    assert loaded.shape == (4, 6)
    with pytest.raises(ConfigError):
        read_stack(path, CropRect(10, 0, 6, 4))


def test_missing_frame_named(tmp_path):
    path = write_stack(_ramp_stack(), str(tmp_path), "high")
    os.remove(tmp_path / "high_k03.pgm")
    with pytest.raises(IoError, match="high_k03.pgm"):
        read_stack(path)


def test_frames_of_different_size(tmp_path):
    path = write_stack(_ramp_stack(), str(tmp_path), "high")
    small = write_stack(sinusoid_stack(np.zeros((3, 3)), n_steps=5), str(tmp_path / "small"), "high")
    os.replace(os.path.join(os.path.dirname(small), "high_k01.pgm"), tmp_path / "high_k01.pgm")
    with pytest.raises(DimensionMismatch):
        read_stack(path)


def test_manifest_shift_count_must_match(tmp_path):
    path = write_stack(_ramp_stack(), str(tmp_path), "high")
    data = read_json(path)
    data["shifts_rad"] = data["shifts_rad"][:-1]
    write_json(path, data)
    with pytest.raises(IoError):
        read_stack(path)


# ── calibration container ────────────────────────────────────────────────────


def test_calibration_file_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    calibration = PolyCalibration(
        coefficients=rng.normal(size=(3, 4, 5, 7)),
        phase_min=rng.uniform(0, 1, (5, 7)),
        phase_max=rng.uniform(2, 3, (5, 7)),
        mask=rng.uniform(size=(5, 7)) > 0.2,
        working_range_mm=(540.0, 620.0),
        provenance={"config_hash": "abc", "seed": 7},
    )
    path = CalibrationIO.save(calibration, str(tmp_path / "cal" / "calibration.ffcal"))
    loaded = CalibrationIO.load(path)

    np.testing.assert_array_equal(loaded.coefficients, calibration.coefficients)
    np.testing.assert_array_equal(loaded.phase_min, calibration.phase_min)
    np.testing.assert_array_equal(loaded.mask, calibration.mask)
    assert loaded.working_range_mm == (540.0, 620.0)
    assert loaded.provenance == {"config_hash": "abc", "seed": 7}


def test_truncated_calibration_rejected(tmp_path):
    path = CalibrationIO.save(PolyCalibration.constant_depth(4, 3, 600.0), str(tmp_path / "c.ffcal"))
    with open(path, "rb") as f:
        blob = f.read()
    with open(path, "wb") as f:
        f.write(blob[:-5])
    with pytest.raises(IoError, match="payload"):
        CalibrationIO.load(path)


def test_calibration_schema_checked(tmp_path):
    path = tmp_path / "c.ffcal"
    path.write_bytes(b'{"schema": "other/1", "width": 1, "height": 1}\n\0')
    with pytest.raises(IoError, match="schema"):
        CalibrationIO.load(str(path))


# ── JSON and configuration ───────────────────────────────────────────────────


def test_json_output_is_canonical(tmp_path):
    path = write_json(str(tmp_path / "a.json"), {"b": np.float64(0.5), "a": [np.int64(2), float("nan")]})
    with open(path, encoding="utf-8") as f:
        text = f.read()
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": [2, None], "b": 0.5}
    assert content_hash({"x": 1, "y": 2}) == content_hash({"y": 2, "x": 1})


def test_settings_manager_resolves_relative_paths(tmp_path):
    path = write_config(tmp_path / "run.json", {"output_dir": "results", "seed": 11})
    manager = SettingsManager(path)
    config = manager.load_config()
    assert config.output_dir == os.path.join(str(tmp_path), "results")
    assert config.seed == 11
    assert len(manager.config_hash()) == 64


def test_settings_manager_errors(tmp_path):
    with pytest.raises(IoError):
        SettingsManager(str(tmp_path / "absent.json")).load_config()
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        SettingsManager(str(broken)).load_config()


def test_shipped_config_loads():
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    config = SettingsManager(os.path.join(root, "config.json")).load_config()
    assert config.camera.width == 1000 and config.camera.height == 800
    assert config.projector.theta_h_deg == pytest.approx(5.0)
    assert len(config.calibration.pose_depths_mm) == 14
    assert len(config.budget.components) == 5


def test_config_round_trip():
    config = PipelineConfig.from_dict({"seed": 3, "render": {"n_steps": 8}})
    again = PipelineConfig.from_dict(config.to_dict())
    assert again.render.n_steps == 8
    assert again.to_dict() == config.to_dict()


@pytest.mark.parametrize(
    "data",
    [
        {"schema": "other/2"},
        {"render": {"n_steps": 2}},
        {"render": {"fidelity": "photoreal"}},
        {"render": []},
        {"phase": {"modulation_threshold": 1.5}},
        {"crop": {"x": 0, "y": 0, "width": 0, "height": 4}},
        {"budget": {"coverage_factor": 0}},
        {"calibration": {"pose_depths_mm": [700.0]}},
    ],
)
def test_invalid_config_values(data):
    with pytest.raises(ConfigError):
        PipelineConfig.from_dict(data)


def test_render_defaults():
    config = RenderConfig.from_dict({})
    assert config.n_steps == 25
    assert config.noise_sigma == 0.0


def test_budget_record_validation():
    with pytest.raises(ConfigError):
        UncertaintyBudget.from_dict({"components": []})
