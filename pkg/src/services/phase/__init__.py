from .phase_retrieval import DEFAULT_MODULATION_THRESHOLD, phase_shifts, wrapped_phase
from .unwrap import (
    equivalent_phase,
    equivalent_wavelength,
    fringe_order,
    max_fringe_order,
    unwrap_pair,
    unwrap_phase,
)

__all__ = [
    'DEFAULT_MODULATION_THRESHOLD', 'phase_shifts', 'wrapped_phase',
    'equivalent_phase', 'equivalent_wavelength', 'fringe_order',
    'max_fringe_order', 'unwrap_pair', 'unwrap_phase',
]
