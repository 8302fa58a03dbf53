"""GUM-style standard uncertainties and their combination."""

from __future__ import annotations

import logging
import math
from typing import Iterable, Optional, Tuple

import numpy as np

from models.domain.uncertainty import (
    MeasurementSeries,
    SeriesSummary,
    UncertaintyBudget,
    UncertaintyComponent,
    UncertaintyType,
)
from utils.errors import DomainError, EmptyBudget, InsufficientData
from utils.numeric import round_reported

logger = logging.getLogger(__name__)


def type_a_from_std(
    sample_std_mm: float,
    n: int,
    name: str = "type_a",
    symbol: str = "",
    note: str = "",
) -> UncertaintyComponent:
    """u = s / sqrt(n) for a series summarized by its sample STD."""
    if n < 2:
        raise InsufficientData(f"{name}: a Type A estimate needs n >= 2, got {n}")
    if sample_std_mm < 0.0:
        raise DomainError(f"{name}: sample STD must be >= 0")
    return UncertaintyComponent(
        name=name,
        type=UncertaintyType.A,
        standard_uncertainty_mm=sample_std_mm / math.sqrt(n),
        symbol=symbol,
        note=note or f"s = {sample_std_mm:g} mm, n = {n}",
    )


def type_a_uncertainty(series: MeasurementSeries, symbol: str = "") -> UncertaintyComponent:
    """u = sample_std(values) / sqrt(n)."""
    n = len(series)
    if n < 2:
        raise InsufficientData(f"{series.label}: a Type A estimate needs n >= 2, got {n}")
    s = float(np.std(np.asarray(series.values), ddof=1))
    return type_a_from_std(s, n, name=series.label, symbol=symbol)


def type_b_uniform(half_width_mm: float, name: str = "type_b", symbol: str = "", note: str = "") -> UncertaintyComponent:
    """Uniform distribution on [-a, a]: u = a / sqrt(3)."""
    if half_width_mm < 0.0:
        raise DomainError(f"{name}: half-width must be >= 0")
    return UncertaintyComponent(
        name=name,
        type=UncertaintyType.B,
        standard_uncertainty_mm=half_width_mm / math.sqrt(3.0),
        symbol=symbol,
        note=note or f"a = {half_width_mm:g} mm, uniform",
    )


def stage_uncertainty(s_eff_mm_per_rad: float, theta_h_deg: float, stage_resolution_deg: float) -> Tuple[float, float]:
    """(u_stage, dZ_eff) for a stage step of stage_resolution_deg.

    dZ_eff = S_eff * (2*pi/theta_h) * d_alpha, angles in radians;
    u_stage = dZ_eff / sqrt(12) (uniform over one step).
    """
    if s_eff_mm_per_rad <= 0.0 or theta_h_deg <= 0.0:
        raise DomainError("S_eff and theta_h must be > 0")
    if stage_resolution_deg < 0.0:
        raise DomainError("stage resolution must be >= 0")
    phase_step = (2.0 * math.pi / math.radians(theta_h_deg)) * math.radians(stage_resolution_deg)
    delta_z = s_eff_mm_per_rad * phase_step
    return delta_z / math.sqrt(12.0), delta_z


def combine_budget(
    components: Iterable[UncertaintyComponent],
    coverage_factor: float = 2.0,
    decimals: Optional[int] = None,
) -> UncertaintyBudget:
    """u_c = sqrt(sum u_i^2), U = k * u_c.

    With `decimals`, each component enters at its reported precision; U is
    always taken from the unrounded u_c.
    """
    components = tuple(components)
    if not components:
        raise EmptyBudget("an uncertainty budget needs at least one component")
    if coverage_factor <= 0.0:
        raise DomainError("coverage factor must be > 0")
    if decimals is not None:
        components = tuple(
            UncertaintyComponent(
                name=c.name,
                type=c.type,
                standard_uncertainty_mm=round_reported(c.standard_uncertainty_mm, decimals),
                symbol=c.symbol,
                note=c.note,
            )
            for c in components
        )
    combined = math.sqrt(math.fsum(c.standard_uncertainty_mm ** 2 for c in components))
    budget = UncertaintyBudget(
        components=components,
        combined_mm=combined,
        coverage_factor=float(coverage_factor),
        expanded_mm=coverage_factor * combined,
    )
    logger.info("Budget: %d components, u_c = %.6f mm, U = %.6f mm (k = %g)",
                len(components), combined, budget.expanded_mm, coverage_factor)
    return budget


def series_summary(series: MeasurementSeries) -> SeriesSummary:
    """Mean, sample STD (None below two values), min and max."""
    n = len(series)
    if n == 0:
        raise InsufficientData(f"{series.label}: empty series")
    values = np.asarray(series.values, dtype=np.float64)
    return SeriesSummary(
        label=series.label,
        count=n,
        mean=float(np.mean(values)),
        std=float(np.std(values, ddof=1)) if n >= 2 else None,
        minimum=float(values.min()),
        maximum=float(values.max()),
    )
