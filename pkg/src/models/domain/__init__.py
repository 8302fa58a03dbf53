"""Domain models: immutable rasters and plain geometry/metrology records."""

from .raster import FrequencyTag, FringeStack, QualityFlag, ScalarMap, TextureModulation
from .phase import AbsolutePhaseMap, FringeOrderMap, PhaseShiftSchedule, WrappedPhaseMap
from .optics import CameraModel, CylindricalProjector, yaw_rotation
from .scene import SceneSurface, SurfaceKind
from .calibration import CalibPose, CalibReport, PointCloud, PolyCalibration
from .geometry import ErrorStats, Histogram, Plane, Sphere
from .uncertainty import (
    MeasurementSeries,
    SeriesSummary,
    UncertaintyBudget,
    UncertaintyComponent,
    UncertaintyType,
)

__all__ = [
    'FrequencyTag', 'FringeStack', 'QualityFlag', 'ScalarMap', 'TextureModulation',
    'AbsolutePhaseMap', 'FringeOrderMap', 'PhaseShiftSchedule', 'WrappedPhaseMap',
    'CameraModel', 'CylindricalProjector', 'yaw_rotation',
    'SceneSurface', 'SurfaceKind',
    'CalibPose', 'CalibReport', 'PointCloud', 'PolyCalibration',
    'ErrorStats', 'Histogram', 'Plane', 'Sphere',
    'MeasurementSeries', 'SeriesSummary', 'UncertaintyBudget',
    'UncertaintyComponent', 'UncertaintyType',
]
