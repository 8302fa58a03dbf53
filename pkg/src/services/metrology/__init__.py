from .uncertainty import (
    combine_budget,
    series_summary,
    stage_uncertainty,
    type_a_from_std,
    type_a_uncertainty,
    type_b_uniform,
)
from .budget_builder import build_budget, evaluate_component

__all__ = [
    'combine_budget', 'series_summary', 'stage_uncertainty',
    'type_a_from_std', 'type_a_uncertainty', 'type_b_uniform',
    'build_budget', 'evaluate_component',
]
