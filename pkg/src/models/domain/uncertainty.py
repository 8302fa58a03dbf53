from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from utils.errors import ConfigError


class UncertaintyType(Enum):
    A = "A"
    B = "B"

    @classmethod
    def parse(cls, value: "UncertaintyType | str") -> "UncertaintyType":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().upper())
        except ValueError as exc:
            raise ConfigError(f"unknown uncertainty type {value!r}") from exc


@dataclass(frozen=True)
class MeasurementSeries:
    label: str
    values: Tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    def __len__(self) -> int:
        return len(self.values)

    def to_dict(self) -> Dict[str, Any]:
        return {"label": self.label, "values_mm": list(self.values)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MeasurementSeries":
        return cls(label=str(data.get("label", "")), values=tuple(data.get("values_mm", ())))


@dataclass(frozen=True)
class UncertaintyComponent:
    name: str
    type: UncertaintyType
    standard_uncertainty_mm: float
    symbol: str = ""
    note: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "type", UncertaintyType.parse(self.type))
        if self.standard_uncertainty_mm < 0.0:
            raise ValueError(f"{self.name}: standard uncertainty must be >= 0")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "symbol": self.symbol,
            "type": self.type.value,
            "u_mm": float(self.standard_uncertainty_mm),
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "UncertaintyComponent":
        return cls(
            name=str(data.get("name", "")),
            type=UncertaintyType.parse(data.get("type", "A")),
            standard_uncertainty_mm=float(data["u_mm"]),
            symbol=str(data.get("symbol", "")),
            note=str(data.get("note", "")),
        )


@dataclass(frozen=True)
class UncertaintyBudget:
    """u_c**2 = sum(u_i**2); U = k * u_c."""

    components: Tuple[UncertaintyComponent, ...]
    combined_mm: float
    coverage_factor: float
    expanded_mm: float
    extras: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "components": [c.to_dict() for c in self.components],
            "combined_mm": float(self.combined_mm),
            "coverage_factor": float(self.coverage_factor),
            "expanded_mm": float(self.expanded_mm),
            "extras": {k: float(v) for k, v in sorted(self.extras.items())},
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "UncertaintyBudget":
        try:
            return cls(
                components=tuple(UncertaintyComponent.from_dict(c) for c in data.get("components", [])),
                combined_mm=float(data["combined_mm"]),
                coverage_factor=float(data["coverage_factor"]),
                expanded_mm=float(data["expanded_mm"]),
                extras={str(k): float(v) for k, v in data.get("extras", {}).items()},
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid budget record: {exc}") from exc


@dataclass(frozen=True)
class SeriesSummary:
    label: str
    count: int
    mean: float
    std: Optional[float]
    minimum: float
    maximum: float

    def as_row(self) -> List[Any]:
        return [self.label, self.count, self.mean, self.std, self.minimum, self.maximum]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "label": self.label,
            "count": self.count,
            "mean_mm": self.mean,
            "std_mm": self.std,
            "min_mm": self.minimum,
            "max_mm": self.maximum,
        }
