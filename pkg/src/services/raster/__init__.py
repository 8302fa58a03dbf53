from .raster_core import quadrature_sums, require_valid, texture_and_modulation, validate_stack
from .parallel import THREADS_ENV, map_rows, worker_count

__all__ = [
    'quadrature_sums', 'require_valid', 'texture_and_modulation', 'validate_stack',
    'THREADS_ENV', 'map_rows', 'worker_count',
]
