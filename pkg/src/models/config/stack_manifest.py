from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from models.domain.raster import FrequencyTag
from utils.errors import ConfigError

MANIFEST_SCHEMA = "fringeforge.stack/1"


@dataclass
class StackManifest:
    """Frame files of one fringe stack, in capture order, with their shifts.

    frame_paths are stored relative to the manifest file.
    """

    frame_paths: List[str] = field(default_factory=list)
    shifts: List[float] = field(default_factory=list)
    frequency_tag: FrequencyTag = FrequencyTag.HIGH
    wavelength_hint_mm: Optional[float] = None
    intensity_scale: float = 65535.0
    mask_path: Optional[str] = None
    metadata: Dict[str, Any] = field(default_factory=dict)
    schema: str = MANIFEST_SCHEMA

    def validate(self) -> None:
        if len(self.frame_paths) != len(self.shifts):
            raise ConfigError(
                f"manifest lists {len(self.frame_paths)} frames but {len(self.shifts)} shifts"
            )
        if self.intensity_scale <= 0.0:
            raise ConfigError("manifest: intensity_scale must be > 0")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema": self.schema,
            "frequency_tag": self.frequency_tag.value,
            "frames": list(self.frame_paths),
            "shifts_rad": [float(s) for s in self.shifts],
            "wavelength_hint_mm": self.wavelength_hint_mm,
            "intensity_scale": float(self.intensity_scale),
            "mask": self.mask_path,
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "StackManifest":
        schema = data.get("schema", MANIFEST_SCHEMA)
        if schema != MANIFEST_SCHEMA:
            raise ConfigError(f"unsupported manifest schema {schema!r}")
        try:
            tag = FrequencyTag.parse(data.get("frequency_tag", "high"))
        except ValueError as exc:
            raise ConfigError(f"manifest: bad frequency_tag {data.get('frequency_tag')!r}") from exc
        hint = data.get("wavelength_hint_mm")
        manifest = cls(
            frame_paths=[str(p) for p in data.get("frames", [])],
            shifts=[float(s) for s in data.get("shifts_rad", [])],
            frequency_tag=tag,
            wavelength_hint_mm=None if hint is None else float(hint),
            intensity_scale=float(data.get("intensity_scale", 65535.0)),
            mask_path=data.get("mask"),
            metadata=dict(data.get("metadata", {})),
            schema=schema,
        )
        manifest.validate()
        return manifest
