from .surface_fit import (
    as_points,
    fit_plane,
    fit_sphere_algebraic,
    fit_sphere_center,
    fit_sphere_free,
    geometric_rmse,
)
from .error_analysis import error_histogram, error_map, error_stats, regional_rmse, rmse_profile

__all__ = [
    'as_points', 'fit_plane', 'fit_sphere_algebraic', 'fit_sphere_center',
    'fit_sphere_free', 'geometric_rmse',
    'error_histogram', 'error_map', 'error_stats', 'regional_rmse', 'rmse_profile',
]
