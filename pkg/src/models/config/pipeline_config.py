from __future__ import annotations

import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from models.domain.optics import CameraModel, CylindricalProjector
from models.domain.scene import SceneSurface
from utils.errors import ConfigError

CONFIG_SCHEMA = "fringeforge.config/1"


class Fidelity(Enum):
    IDEAL_SINUSOID = "ideal_sinusoid"
    SLOT_TRANSMISSION = "slot_transmission"


class BudgetSource(Enum):
    TYPE_A = "type_a"
    TYPE_B_UNIFORM = "type_b_uniform"
    CALIBRATION = "calibration"
    STAGE = "stage"
    DIRECT = "direct"


def _section(data: Dict[str, Any], name: str) -> Dict[str, Any]:
    value = data.get(name, {})
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"{name}: expected an object")
    return value


def _parse_enum(enum_cls, value, section: str):
    try:
        return enum_cls(str(value).strip().lower())
    except ValueError as exc:
        allowed = ", ".join(m.value for m in enum_cls)
        raise ConfigError(f"{section}: {value!r} is not one of {allowed}") from exc


def _resolve(path: Optional[str], base_dir: str) -> Optional[str]:
    if not path:
        return None
    path = os.path.expanduser(str(path))
    return path if os.path.isabs(path) else os.path.normpath(os.path.join(base_dir, path))


# ──────────────────────────────────────────────────────────────────────────
# Sections
# ──────────────────────────────────────────────────────────────────────────


@dataclass
class RenderConfig:
    n_steps: int = 25
    fidelity: Fidelity = Fidelity.IDEAL_SINUSOID
    blur_sigma_deg: float = 0.8
    noise_sigma: float = 0.0
    quantize_stage: bool = False
    falloff: bool = False
    reference_distance_mm: float = 580.0

    def validate(self) -> None:
        if self.n_steps < 3:
            raise ConfigError("render: n_steps must be >= 3")
        if self.blur_sigma_deg < 0.0:
            raise ConfigError("render: blur_sigma_deg must be >= 0")
        if self.noise_sigma < 0.0:
            raise ConfigError("render: noise_sigma must be >= 0")
        if self.reference_distance_mm <= 0.0:
            raise ConfigError("render: reference_distance_mm must be > 0")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_steps": int(self.n_steps),
            "fidelity": self.fidelity.value,
            "blur_sigma_deg": float(self.blur_sigma_deg),
            "noise_sigma": float(self.noise_sigma),
            "quantize_stage": bool(self.quantize_stage),
            "falloff": bool(self.falloff),
            "reference_distance_mm": float(self.reference_distance_mm),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RenderConfig":
        default = cls()
        config = cls(
            n_steps=int(data.get("n_steps", default.n_steps)),
            fidelity=_parse_enum(Fidelity, data.get("fidelity", default.fidelity.value), "render.fidelity"),
            blur_sigma_deg=float(data.get("blur_sigma_deg", default.blur_sigma_deg)),
            noise_sigma=float(data.get("noise_sigma", default.noise_sigma)),
            quantize_stage=bool(data.get("quantize_stage", default.quantize_stage)),
            falloff=bool(data.get("falloff", default.falloff)),
            reference_distance_mm=float(data.get("reference_distance_mm", default.reference_distance_mm)),
        )
        config.validate()
        return config


@dataclass
class PhaseConfig:
    # fraction of the stack's peak average intensity
    modulation_threshold: float = 0.02

    def to_dict(self) -> Dict[str, Any]:
        return {"modulation_threshold": float(self.modulation_threshold)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PhaseConfig":
        value = float(data.get("modulation_threshold", cls().modulation_threshold))
        if not 0.0 <= value < 1.0:
            raise ConfigError("phase: modulation_threshold must be in [0, 1)")
        return cls(modulation_threshold=value)


@dataclass
class UnwrapConfig:
    """Wavelengths for fringe-order rounding; None means theta_h, theta_l of the projector."""

    wavelength_high: Optional[float] = None
    wavelength_low: Optional[float] = None

    def resolve(self, projector: CylindricalProjector) -> Tuple[float, float]:
        if self.wavelength_high is None or self.wavelength_low is None:
            return projector.theta_h_deg, projector.theta_l_deg
        return self.wavelength_high, self.wavelength_low

    def to_dict(self) -> Dict[str, Any]:
        if self.wavelength_high is None:
            return {"wavelengths": "from_projector"}
        return {"wavelengths": [self.wavelength_high, self.wavelength_low]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "UnwrapConfig":
        value = data.get("wavelengths", "from_projector")
        if value == "from_projector" or value is None:
            return cls()
        if not isinstance(value, (list, tuple)) or len(value) != 2:
            raise ConfigError("unwrap.wavelengths: expected [high, low] or \"from_projector\"")
        high, low = float(value[0]), float(value[1])
        if not 0.0 < high < low:
            raise ConfigError("unwrap.wavelengths: require 0 < high < low")
        return cls(wavelength_high=high, wavelength_low=low)


@dataclass
class ExternalPose:
    """A calibration pose captured elsewhere: two manifests plus reference maps."""

    pose_id: str
    manifest_high: str
    manifest_low: str
    reference_x: str
    reference_y: str
    reference_z: str

    def to_dict(self) -> Dict[str, Any]:
        return {
            "pose_id": self.pose_id,
            "manifest_high": self.manifest_high,
            "manifest_low": self.manifest_low,
            "reference_x": self.reference_x,
            "reference_y": self.reference_y,
            "reference_z": self.reference_z,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], base_dir: str) -> "ExternalPose":
        missing = [k for k in ("manifest_high", "manifest_low", "reference_x", "reference_y", "reference_z") if not data.get(k)]
        if missing:
            raise ConfigError(f"calibration.external_poses: missing {', '.join(missing)}")
        return cls(
            pose_id=str(data.get("pose_id", "")),
            manifest_high=_resolve(data["manifest_high"], base_dir),
            manifest_low=_resolve(data["manifest_low"], base_dir),
            reference_x=_resolve(data["reference_x"], base_dir),
            reference_y=_resolve(data["reference_y"], base_dir),
            reference_z=_resolve(data["reference_z"], base_dir),
        )


def _default_pose_depths() -> List[float]:
    return [float(v) for v in np.linspace(540.0, 620.0, 14)]


@dataclass
class CalibrationConfig:
    pose_depths_mm: List[float] = field(default_factory=_default_pose_depths)
    external_poses: List[ExternalPose] = field(default_factory=list)
    denoise_reference_plane: bool = False
    working_range_mm: Tuple[float, float] = (540.0, 620.0)
    holdout_depth_mm: float = 585.0

    def validate(self) -> None:
        low, high = self.working_range_mm
        if not low < high:
            raise ConfigError("calibration: working_range_mm must be increasing")
        for depth in self.pose_depths_mm:
            if not low <= depth <= high:
                raise ConfigError(f"calibration: pose depth {depth} outside working range")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "pose_depths_mm": list(self.pose_depths_mm),
            "external_poses": [p.to_dict() for p in self.external_poses],
            "denoise_reference_plane": bool(self.denoise_reference_plane),
            "working_range_mm": list(self.working_range_mm),
            "holdout_depth_mm": float(self.holdout_depth_mm),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], base_dir: str = ".") -> "CalibrationConfig":
        default = cls()
        config = cls(
            pose_depths_mm=[float(v) for v in data.get("pose_depths_mm", default.pose_depths_mm)],
            external_poses=[ExternalPose.from_dict(p, base_dir) for p in data.get("external_poses", [])],
            denoise_reference_plane=bool(data.get("denoise_reference_plane", default.denoise_reference_plane)),
            working_range_mm=tuple(float(v) for v in data.get("working_range_mm", default.working_range_mm)),
            holdout_depth_mm=float(data.get("holdout_depth_mm", default.holdout_depth_mm)),
        )
        config.validate()
        return config


@dataclass
class FitConfig:
    surface: str = "plane"
    nominal_radius_mm: float = 50.0
    free_radius: bool = False
    histogram_bins: int = 101
    histogram_range_mm: float = 1.0
    regional_axis: str = "u"
    central_fraction: float = 0.3
    outer_fraction: float = 0.3

    def validate(self) -> None:
        if self.surface not in ("plane", "sphere"):
            raise ConfigError("fit.surface must be 'plane' or 'sphere'")
        if self.nominal_radius_mm <= 0.0:
            raise ConfigError("fit.nominal_radius_mm must be > 0")
        if self.histogram_bins < 1 or self.histogram_range_mm <= 0.0:
            raise ConfigError("fit: histogram needs >= 1 bin and a positive range")
        if self.regional_axis not in ("u", "v"):
            raise ConfigError("fit.regional_axis must be 'u' or 'v'")
        if not (0.0 < self.central_fraction < 1.0 and 0.0 < self.outer_fraction < 1.0):
            raise ConfigError("fit: regional fractions must be in (0, 1)")
        if self.central_fraction + self.outer_fraction > 1.0:
            raise ConfigError("fit: central_fraction + outer_fraction must be <= 1")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "surface": self.surface,
            "nominal_radius_mm": float(self.nominal_radius_mm),
            "free_radius": bool(self.free_radius),
            "histogram_bins": int(self.histogram_bins),
            "histogram_range_mm": float(self.histogram_range_mm),
            "regional_axis": self.regional_axis,
            "central_fraction": float(self.central_fraction),
            "outer_fraction": float(self.outer_fraction),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "FitConfig":
        default = cls()
        config = cls(
            surface=str(data.get("surface", default.surface)).lower(),
            nominal_radius_mm=float(data.get("nominal_radius_mm", default.nominal_radius_mm)),
            free_radius=bool(data.get("free_radius", default.free_radius)),
            histogram_bins=int(data.get("histogram_bins", default.histogram_bins)),
            histogram_range_mm=float(data.get("histogram_range_mm", default.histogram_range_mm)),
            regional_axis=str(data.get("regional_axis", default.regional_axis)).lower(),
            central_fraction=float(data.get("central_fraction", default.central_fraction)),
            outer_fraction=float(data.get("outer_fraction", default.outer_fraction)),
        )
        config.validate()
        return config


@dataclass
class BudgetComponentSpec:
    """Declarative budget entry; `source` picks the evaluation rule."""

    name: str
    source: BudgetSource
    symbol: str = ""
    type_override: Optional[str] = None
    params: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        data = {"name": self.name, "source": self.source.value, "symbol": self.symbol}
        if self.type_override:
            data["type"] = self.type_override
        data.update(self.params)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "BudgetComponentSpec":
        if "name" not in data or "source" not in data:
            raise ConfigError("budget.components: each entry needs name and source")
        params = {k: v for k, v in data.items() if k not in ("name", "source", "symbol", "type")}
        return cls(
            name=str(data["name"]),
            source=_parse_enum(BudgetSource, data["source"], "budget.components.source"),
            symbol=str(data.get("symbol", "")),
            type_override=data.get("type"),
            params=params,
        )


@dataclass
class BudgetConfig:
    components: List[BudgetComponentSpec] = field(default_factory=list)
    coverage_factor: float = 2.0
    component_decimals: Optional[int] = 3

    def to_dict(self) -> Dict[str, Any]:
        return {
            "components": [c.to_dict() for c in self.components],
            "coverage_factor": float(self.coverage_factor),
            "component_decimals": self.component_decimals,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "BudgetConfig":
        default = cls()
        coverage = float(data.get("coverage_factor", default.coverage_factor))
        if coverage <= 0.0:
            raise ConfigError("budget.coverage_factor must be > 0")
        decimals = data.get("component_decimals", default.component_decimals)
        return cls(
            components=[BudgetComponentSpec.from_dict(c) for c in data.get("components", [])],
            coverage_factor=coverage,
            component_decimals=None if decimals is None else int(decimals),
        )


@dataclass
class ReportConfig:
    fit_results: List[str] = field(default_factory=list)
    series: List[Dict[str, Any]] = field(default_factory=list)
    budget_file: Optional[str] = None
    calibration_report: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "fit_results": list(self.fit_results),
            "series": list(self.series),
            "budget_file": self.budget_file,
            "calibration_report": self.calibration_report,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], base_dir: str = ".") -> "ReportConfig":
        return cls(
            fit_results=[_resolve(p, base_dir) for p in data.get("fit_results", [])],
            series=list(data.get("series", [])),
            budget_file=_resolve(data.get("budget_file"), base_dir),
            calibration_report=_resolve(data.get("calibration_report"), base_dir),
        )


@dataclass
class InputsConfig:
    manifest_high: Optional[str] = None
    manifest_low: Optional[str] = None
    calibration: Optional[str] = None
    point_cloud: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "manifest_high": self.manifest_high,
            "manifest_low": self.manifest_low,
            "calibration": self.calibration,
            "point_cloud": self.point_cloud,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], base_dir: str = ".") -> "InputsConfig":
        return cls(
            manifest_high=_resolve(data.get("manifest_high"), base_dir),
            manifest_low=_resolve(data.get("manifest_low"), base_dir),
            calibration=_resolve(data.get("calibration"), base_dir),
            point_cloud=_resolve(data.get("point_cloud"), base_dir),
        )


@dataclass
class CropRect:
    x: int
    y: int
    width: int
    height: int

    def apply(self, array: np.ndarray) -> np.ndarray:
        if self.y + self.height > array.shape[0] or self.x + self.width > array.shape[1]:
            raise ConfigError(f"crop {self.to_dict()} exceeds image of shape {array.shape[:2]}")
        return array[self.y : self.y + self.height, self.x : self.x + self.width]

    def to_dict(self) -> Dict[str, Any]:
        return {"x": self.x, "y": self.y, "width": self.width, "height": self.height}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CropRect":
        try:
            rect = cls(int(data["x"]), int(data["y"]), int(data["width"]), int(data["height"]))
        except KeyError as exc:
            raise ConfigError(f"crop: missing {exc.args[0]}") from exc
        if rect.x < 0 or rect.y < 0 or rect.width <= 0 or rect.height <= 0:
            raise ConfigError("crop: origin must be >= 0 and size > 0")
        return rect


# ──────────────────────────────────────────────────────────────────────────
# Root
# ──────────────────────────────────────────────────────────────────────────


@dataclass
class PipelineConfig:
    """Complete run configuration; one section per pipeline stage."""

    projector: CylindricalProjector = field(default_factory=CylindricalProjector)
    camera: CameraModel = field(default_factory=CameraModel)
    scene: SceneSurface = field(default_factory=SceneSurface)
    render: RenderConfig = field(default_factory=RenderConfig)
    phase: PhaseConfig = field(default_factory=PhaseConfig)
    unwrap: UnwrapConfig = field(default_factory=UnwrapConfig)
    calibration: CalibrationConfig = field(default_factory=CalibrationConfig)
    fit: FitConfig = field(default_factory=FitConfig)
    budget: BudgetConfig = field(default_factory=BudgetConfig)
    report: ReportConfig = field(default_factory=ReportConfig)
    inputs: InputsConfig = field(default_factory=InputsConfig)
    output_dir: str = "out"
    crop: Optional[CropRect] = None
    seed: int = 0
    schema: str = CONFIG_SCHEMA

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema": self.schema,
            "projector": self.projector.to_dict(),
            "camera": self.camera.to_dict(),
            "scene": self.scene.to_dict(),
            "render": self.render.to_dict(),
            "phase": self.phase.to_dict(),
            "unwrap": self.unwrap.to_dict(),
            "calibration": self.calibration.to_dict(),
            "fit": self.fit.to_dict(),
            "budget": self.budget.to_dict(),
            "report": self.report.to_dict(),
            "inputs": self.inputs.to_dict(),
            "output_dir": self.output_dir,
            "crop": None if self.crop is None else self.crop.to_dict(),
            "seed": int(self.seed),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], base_dir: str = ".") -> "PipelineConfig":
        if not isinstance(data, dict):
            raise ConfigError("config root must be a JSON object")
        schema = data.get("schema", CONFIG_SCHEMA)
        if schema != CONFIG_SCHEMA:
            raise ConfigError(f"unsupported config schema {schema!r}, expected {CONFIG_SCHEMA!r}")
        crop = data.get("crop")
        try:
            return cls(
                projector=CylindricalProjector.from_dict(_section(data, "projector")),
                camera=CameraModel.from_dict(_section(data, "camera")),
                scene=SceneSurface.from_dict(_section(data, "scene")),
                render=RenderConfig.from_dict(_section(data, "render")),
                phase=PhaseConfig.from_dict(_section(data, "phase")),
                unwrap=UnwrapConfig.from_dict(_section(data, "unwrap")),
                calibration=CalibrationConfig.from_dict(_section(data, "calibration"), base_dir),
                fit=FitConfig.from_dict(_section(data, "fit")),
                budget=BudgetConfig.from_dict(_section(data, "budget")),
                report=ReportConfig.from_dict(_section(data, "report"), base_dir),
                inputs=InputsConfig.from_dict(_section(data, "inputs"), base_dir),
                output_dir=_resolve(data.get("output_dir", "out"), base_dir),
                crop=None if crop is None else CropRect.from_dict(crop),
                seed=int(data.get("seed", 0)),
                schema=schema,
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config value: {exc}") from exc
