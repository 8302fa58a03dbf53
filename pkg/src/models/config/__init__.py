"""Configuration models: the run configuration and stack manifests."""

from .pipeline_config import (
    CONFIG_SCHEMA,
    BudgetComponentSpec,
    BudgetConfig,
    BudgetSource,
    CalibrationConfig,
    CropRect,
    ExternalPose,
    Fidelity,
    FitConfig,
    InputsConfig,
    PhaseConfig,
    PipelineConfig,
    RenderConfig,
    ReportConfig,
    UnwrapConfig,
)
from .stack_manifest import MANIFEST_SCHEMA, StackManifest

__all__ = [
    'CONFIG_SCHEMA', 'BudgetComponentSpec', 'BudgetConfig', 'BudgetSource',
    'CalibrationConfig', 'CropRect', 'ExternalPose', 'Fidelity', 'FitConfig',
    'InputsConfig', 'PhaseConfig', 'PipelineConfig', 'RenderConfig',
    'ReportConfig', 'UnwrapConfig', 'MANIFEST_SCHEMA', 'StackManifest',
]
