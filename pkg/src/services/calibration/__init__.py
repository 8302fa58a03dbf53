from .quasi_calibration import (
    cubic_slope,
    cubic_value,
    denoise_reference_plane,
    effective_sensitivity,
    evaluate_points,
    fit_calibration,
    pooled_rmse,
)

__all__ = [
    'cubic_slope', 'cubic_value', 'denoise_reference_plane', 'effective_sensitivity',
    'evaluate_points', 'fit_calibration', 'pooled_rmse',
]
