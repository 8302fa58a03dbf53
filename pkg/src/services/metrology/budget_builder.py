"""Evaluate declarative budget entries from the configuration."""

from __future__ import annotations

import logging
from typing import Dict, List, Optional

from models.config.pipeline_config import BudgetComponentSpec, BudgetConfig, BudgetSource
from models.domain.uncertainty import (
    MeasurementSeries,
    UncertaintyBudget,
    UncertaintyComponent,
    UncertaintyType,
)
from services.metrology.uncertainty import (
    combine_budget,
    stage_uncertainty,
    type_a_from_std,
    type_a_uncertainty,
    type_b_uniform,
)
from utils.errors import ConfigError

logger = logging.getLogger(__name__)


def _param(spec: BudgetComponentSpec, key: str, context: Dict[str, float]):
    if key in spec.params:
        return spec.params[key]
    if key in context:
        return context[key]
    raise ConfigError(f"budget component {spec.name!r} ({spec.source.value}) needs {key!r}")


def evaluate_component(
    spec: BudgetComponentSpec,
    context: Optional[Dict[str, float]] = None,
    extras: Optional[Dict[str, float]] = None,
) -> UncertaintyComponent:
    """Turn one config entry into a component.

    `context` supplies values computed elsewhere in the run (sigma_cal_mm,
    s_eff_mm_per_rad, theta_h_deg, stage_resolution_deg) when the entry
    does not pin them.
    """
    context = context or {}
    source = spec.source
    if source is BudgetSource.TYPE_A:
        if "values_mm" in spec.params:
            series = MeasurementSeries(label=spec.name, values=tuple(spec.params["values_mm"]))
            component = type_a_uncertainty(series, symbol=spec.symbol)
        else:
            component = type_a_from_std(
                float(_param(spec, "std_mm", context)),
                int(_param(spec, "n", context)),
                name=spec.name,
                symbol=spec.symbol,
            )
    elif source is BudgetSource.TYPE_B_UNIFORM:
        component = type_b_uniform(float(_param(spec, "half_width_mm", context)), name=spec.name, symbol=spec.symbol)
    elif source is BudgetSource.CALIBRATION:
        sigma = float(_param(spec, "sigma_cal_mm", context))
        component = UncertaintyComponent(
            name=spec.name, type=UncertaintyType.A, standard_uncertainty_mm=sigma,
            symbol=spec.symbol, note="pooled calibration residual",
        )
    elif source is BudgetSource.STAGE:
        s_eff = float(_param(spec, "s_eff_mm_per_rad", context))
        theta_h = float(_param(spec, "theta_h_deg", context))
        step = float(_param(spec, "stage_resolution_deg", context))
        u_stage, delta_z = stage_uncertainty(s_eff, theta_h, step)
        if extras is not None:
            extras["delta_z_eff_mm"] = delta_z
        component = UncertaintyComponent(
            name=spec.name, type=UncertaintyType.B, standard_uncertainty_mm=u_stage,
            symbol=spec.symbol, note=f"S_eff = {s_eff:g} mm/rad, dZ_eff = {delta_z:.6f} mm",
        )
    else:
        if not spec.type_override:
            raise ConfigError(f"budget component {spec.name!r}: direct entries need an explicit type")
        component = UncertaintyComponent(
            name=spec.name, type=UncertaintyType.parse(spec.type_override),
            standard_uncertainty_mm=float(_param(spec, "u_mm", context)), symbol=spec.symbol,
        )

    if spec.type_override:
        component = UncertaintyComponent(
            name=component.name,
            type=UncertaintyType.parse(spec.type_override),
            standard_uncertainty_mm=component.standard_uncertainty_mm,
            symbol=component.symbol,
            note=component.note,
        )
    logger.debug("Budget component %s: u = %.6f mm (%s)", component.name,
                 component.standard_uncertainty_mm, component.type.value)
    return component


def build_budget(config: BudgetConfig, context: Optional[Dict[str, float]] = None) -> UncertaintyBudget:
    extras: Dict[str, float] = {}
    components: List[UncertaintyComponent] = [
        evaluate_component(spec, context, extras) for spec in config.components
    ]
    budget = combine_budget(components, config.coverage_factor, config.component_decimals)
    return UncertaintyBudget(
        components=budget.components,
        combined_mm=budget.combined_mm,
        coverage_factor=budget.coverage_factor,
        expanded_mm=budget.expanded_mm,
        extras=extras,
    )
