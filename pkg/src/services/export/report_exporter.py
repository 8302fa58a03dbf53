"""
Report Exporter - CSV tables and plot data for fit results and budgets.

CSV: histogram bins, per-column RMSE profiles, fit-result tables (one row
per run plus summary rows) and the uncertainty budget table.
JSON bundles go through services.serialization.json_io.
"""

from __future__ import annotations

import csv
import logging
import os
from typing import Any, Dict, Iterable, List, Optional, Sequence

from models.domain.geometry import Histogram
from models.domain.uncertainty import SeriesSummary, UncertaintyBudget
from utils.errors import IoError
from utils.numeric import round_reported

logger = logging.getLogger(__name__)


def _fmt(value: Any, decimals: Optional[int]) -> Any:
    if value is None:
        return ""
    if isinstance(value, float):
        if value != value:
            return ""
        return f"{round_reported(value, decimals):.{decimals}f}" if decimals is not None else repr(value)
    return value


class ReportExporter:
    """Writes the report's CSV files."""

    # ──────────────────────────────────────────────────────────────────────
    # CSV plumbing
    # ──────────────────────────────────────────────────────────────────────

    @staticmethod
    def _write_rows(output_path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
        try:
            os.makedirs(os.path.dirname(os.path.abspath(output_path)), exist_ok=True)
            with open(output_path, "w", newline="", encoding="utf-8") as f:
                writer = csv.writer(f, lineterminator="\n")
                writer.writerow(header)
                count = 0
                for row in rows:
                    writer.writerow(row)
                    count += 1
        except OSError as e:
            raise IoError(f"cannot write {output_path}: {e}") from e
        logger.debug("Wrote %d rows to %s", count, output_path)
        return output_path

    # ──────────────────────────────────────────────────────────────────────
    # Plot data
    # ──────────────────────────────────────────────────────────────────────

    @staticmethod
    def export_histogram_csv(histogram: Histogram, output_path: str) -> str:
        rows = (
            (repr(float(lo)), repr(float(hi)), int(count))
            for lo, hi, count in zip(histogram.edges[:-1], histogram.edges[1:], histogram.counts)
        )
        return ReportExporter._write_rows(output_path, ["bin_low_mm", "bin_high_mm", "count"], rows)

    @staticmethod
    def export_profile_csv(profile: Sequence[tuple], output_path: str, axis: str = "u") -> str:
        rows = ((index, count, _fmt(rmse, None)) for index, count, rmse in profile)
        return ReportExporter._write_rows(output_path, [axis, "valid_pixels", "rmse_mm"], rows)

    # ──────────────────────────────────────────────────────────────────────
    # Tables
    # ──────────────────────────────────────────────────────────────────────

    @staticmethod
    def export_fit_table_csv(
        results: List[Dict[str, Any]],
        summaries: List[SeriesSummary],
        output_path: str,
        columns: Sequence[str],
        decimals: int = 3,
    ) -> str:
        """One row per run (label + columns), then mean/std/min/max rows per column."""
        rows: List[List[Any]] = []
        for result in results:
            rows.append([result.get("label", "")] + [_fmt(result.get(c), decimals) for c in columns])
        by_label = {s.label: s for s in summaries}
        for stat in ("mean", "std", "minimum", "maximum"):
            row: List[Any] = [stat]
            for column in columns:
                summary = by_label.get(column)
                row.append(_fmt(getattr(summary, stat), decimals) if summary else "")
            rows.append(row)
        return ReportExporter._write_rows(output_path, ["label"] + list(columns), rows)

    @staticmethod
    def export_series_csv(summaries: List[SeriesSummary], output_path: str, decimals: int = 3) -> str:
        rows = (
            [s.label, s.count] + [_fmt(v, decimals) for v in (s.mean, s.std, s.minimum, s.maximum)]
            for s in summaries
        )
        return ReportExporter._write_rows(output_path, ["label", "n", "mean_mm", "std_mm", "min_mm", "max_mm"], rows)

    @staticmethod
    def export_budget_csv(budget: UncertaintyBudget, output_path: str, decimals: int = 3) -> str:
        """component, symbol, type, u_mm; then the combined and expanded rows."""
        rows: List[List[Any]] = [
            [c.name, c.symbol, c.type.value, _fmt(c.standard_uncertainty_mm, decimals)]
            for c in budget.components
        ]
        rows.append(["combined standard uncertainty", "u_c", "", _fmt(budget.combined_mm, decimals)])
        rows.append([
            f"expanded uncertainty (k = {budget.coverage_factor:g})", "U", "",
            _fmt(budget.expanded_mm, decimals),
        ])
        return ReportExporter._write_rows(output_path, ["component", "symbol", "type", "u_mm"], rows)
