"""
Pipeline Controller - one method per CLI subcommand.

Each cmd_* reads its inputs (files named in the config's `inputs` section,
falling back to the files an earlier subcommand wrote into the output
directory), calls the services and writes its outputs. Outputs depend only
on the config, the seed and the input files; the wall-clock timestamp goes
to run_metadata.json alone.
"""

from __future__ import annotations

import dataclasses
import datetime
import logging
import os
import platform
from typing import Any, Dict, List, Optional, Sequence, Tuple

import cv2
import numpy as np
import scipy

from models.config.pipeline_config import CropRect, ExternalPose, PipelineConfig
from models.domain.calibration import CalibPose, PointCloud, PolyCalibration
from models.domain.geometry import Sphere
from models.domain.phase import AbsolutePhaseMap
from models.domain.raster import FrequencyTag, FringeStack, QualityFlag, ScalarMap
from models.domain.scene import SceneSurface
from models.domain.uncertainty import MeasurementSeries, UncertaintyBudget
from services.calibration import denoise_reference_plane, evaluate_points, fit_calibration
from services.export import ReportExporter
from services.geometry import (
    error_map,
    fit_plane,
    fit_sphere_center,
    fit_sphere_free,
    geometric_rmse,
    regional_rmse,
    rmse_profile,
)
from services.metrology import build_budget, series_summary
from services.phase import unwrap_pair, wrapped_phase
from services.raster import texture_and_modulation, worker_count
from services.serialization import (
    CalibrationIO,
    get_settings_manager,
    read_float_map,
    read_json,
    read_ply,
    read_stack,
    write_float_map,
    write_json,
    write_label_map,
    write_ply,
    write_stack,
)
from services.simulation import render_fringe_stack
from utils.errors import EmptyInput, EmptyRegion, IoError

logger = logging.getLogger(__name__)

FREQUENCIES = (FrequencyTag.HIGH, FrequencyTag.LOW)

CALIBRATION_FILE = "calibration.ffcal"
CALIBRATION_REPORT_FILE = "calibration_report.json"
POINT_CLOUD_FILE = "points.ply"
FIT_RESULT_FILE = "fit_result.json"
BUDGET_FILE = "budget.json"
RUN_METADATA_FILE = "run_metadata.json"

COMMANDS = ("simulate", "wrap", "unwrap", "calibrate", "reconstruct", "fit", "uncertainty", "report")


def manifest_name(freq: FrequencyTag) -> str:
    return f"{freq.value}_manifest.json"


class PipelineController:
    """Runs pipeline stages against one configuration and output directory."""

    def __init__(
        self,
        config: PipelineConfig,
        config_hash: str = "",
        seed: Optional[int] = None,
        output_dir: Optional[str] = None,
        threads: Optional[int] = None,
    ):
        self.config = config
        self.config_hash = config_hash
        self.seed = config.seed if seed is None else int(seed)
        self.output_dir = os.path.abspath(output_dir or config.output_dir)
        self.threads = threads

    @classmethod
    def from_config_file(
        cls,
        config_path: str,
        seed: Optional[int] = None,
        output_dir: Optional[str] = None,
    ) -> "PipelineController":
        manager = get_settings_manager(config_path)
        config = manager.load_config()
        return cls(config, manager.config_hash(), seed=seed, output_dir=output_dir)

    # ─────────────────────────────────────────────────────────────────────────
    # Dispatch / bookkeeping
    # ─────────────────────────────────────────────────────────────────────────

    def run(self, command: str, freq: Optional[str] = None) -> Dict[str, Any]:
        if command not in COMMANDS:
            raise ValueError(f"unknown command {command!r}")
        self._prepare_output()
        handler = getattr(self, f"cmd_{command}")
        summary = handler(freq) if command == "wrap" else handler()
        self._write_run_metadata(command)
        return summary

    def _prepare_output(self) -> None:
        try:
            os.makedirs(self.output_dir, exist_ok=True)
        except OSError as e:
            raise IoError(f"cannot create output directory {self.output_dir}: {e}") from e
        if not os.access(self.output_dir, os.W_OK):
            raise IoError(f"output directory is not writable: {self.output_dir}")

    def _out(self, name: str) -> str:
        return os.path.join(self.output_dir, name)

    def _input(self, configured: Optional[str], default_name: str) -> str:
        path = configured or self._out(default_name)
        if not os.path.exists(path):
            raise IoError(f"input file not found: {path}")
        return path

    def _provenance(self, **extra: Any) -> Dict[str, Any]:
        record = {"config_hash": self.config_hash, "seed": self.seed}
        record.update(extra)
        return record

    def _summary(self, command: str, outputs: Sequence[str], **extra: Any) -> Dict[str, Any]:
        summary = {
            "command": command,
            "outputs": [os.path.relpath(p, self.output_dir) for p in outputs],
        }
        summary.update(extra)
        return summary

    def _write_run_metadata(self, command: str) -> None:
        metadata = {
            "command": command,
            "timestamp": datetime.datetime.now().astimezone().isoformat(timespec="seconds"),
            "threads": self.threads or worker_count(),
            "config_hash": self.config_hash,
            "seed": self.seed,
            "versions": {
                "python": platform.python_version(),
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "opencv": cv2.__version__,
            },
        }
        write_json(self._out(RUN_METADATA_FILE), metadata)

    # ─────────────────────────────────────────────────────────────────────────
    # Shared steps
    # ─────────────────────────────────────────────────────────────────────────

    def _render(self, scene: SceneSurface, freq: FrequencyTag, seed: int):
        cfg = self.config
        return render_fringe_stack(scene, cfg.projector, cfg.camera, freq, cfg.render, seed, self.threads)

    def _load_stack(self, freq: FrequencyTag) -> FringeStack:
        inputs = self.config.inputs
        configured = inputs.manifest_high if freq is FrequencyTag.HIGH else inputs.manifest_low
        return read_stack(self._input(configured, manifest_name(freq)), self.config.crop)

    def _absolute_phase(self, high: FringeStack, low: FringeStack) -> Tuple[AbsolutePhaseMap, np.ndarray]:
        """Wrap both stacks and unwrap; also returns the pixels lost to low modulation."""
        threshold = self.config.phase.modulation_threshold
        phi_h = wrapped_phase(high, threshold, self.threads)
        phi_l = wrapped_phase(low, threshold, self.threads)
        lambda_h, lambda_l = self.config.unwrap.resolve(self.config.projector)
        absolute = unwrap_pair(phi_h, phi_l, lambda_h, lambda_l)
        weak = (high.mask & ~phi_h.phase.mask) | (low.mask & ~phi_l.phase.mask)
        return absolute, weak

    def _simulated_pose(self, depth_mm: float, index: int) -> CalibPose:
        scene = SceneSurface.fronto_plane(
            depth_mm, reflectance=self.config.scene.reflectance, ambient=self.config.scene.ambient
        )
        seed = self.seed + index + 1
        high = self._render(scene, FrequencyTag.HIGH, seed)
        low = self._render(scene, FrequencyTag.LOW, seed)
        absolute, _ = self._absolute_phase(high.stack, low.stack)
        points = high.ground_truth.points
        x, y, z = (points.axis_map(axis) for axis in ("x", "y", "z"))
        if self.config.calibration.denoise_reference_plane:
            z = denoise_reference_plane(x, y, z)
        return CalibPose(absolute, x, y, z, pose_id=f"plane_{depth_mm:.3f}mm")

    def _external_pose(self, pose: ExternalPose, index: int) -> CalibPose:
        high = read_stack(pose.manifest_high, self.config.crop)
        low = read_stack(pose.manifest_low, self.config.crop)
        absolute, _ = self._absolute_phase(high, low)
        x, y, z = (
            self._cropped(read_float_map(self._input(path, path)))
            for path in (pose.reference_x, pose.reference_y, pose.reference_z)
        )
        if self.config.calibration.denoise_reference_plane:
            z = denoise_reference_plane(x, y, z)
        return CalibPose(absolute, x, y, z, pose_id=pose.pose_id or f"pose_{index:02d}")

    def _cropped(self, data: ScalarMap) -> ScalarMap:
        crop: Optional[CropRect] = self.config.crop
        if crop is None:
            return data
        return ScalarMap(values=crop.apply(data.values), mask=crop.apply(data.mask))

    def _holdout_rmse(self, calibration: PolyCalibration) -> Dict[str, Any]:
        """Plane-fit RMSE of a simulated plane that took no part in the fit."""
        depth = self.config.calibration.holdout_depth_mm
        pose = self._simulated_pose(depth, len(self.config.calibration.pose_depths_mm))
        cloud = evaluate_points(calibration, pose.absolute_phase)
        if cloud.valid_count < 3:
            raise EmptyInput(f"held-out plane at {depth} mm has no reconstructed pixels")
        plane = fit_plane(cloud)
        rmse = geometric_rmse(cloud.valid_points(), plane)
        logger.info("Held-out plane at %.3f mm: plane-fit RMSE %.6f mm", depth, rmse)
        return {"depth_mm": depth, "plane_rmse_mm": rmse, "points": cloud.valid_count}

    # ─────────────────────────────────────────────────────────────────────────
    # Subcommands
    # ─────────────────────────────────────────────────────────────────────────

    def cmd_simulate(self) -> Dict[str, Any]:
        cfg = self.config
        outputs: List[str] = []
        truth = None
        for freq in FREQUENCIES:
            result = self._render(cfg.scene, freq, self.seed)
            metadata = self._provenance(rotations_deg=list(result.rotations_deg))
            outputs.append(write_stack(result.stack, self.output_dir, freq.value, metadata))
            outputs.extend(self._out(f"{freq.value}_k{k:02d}.pgm") for k in range(result.stack.n_steps))
            if freq is FrequencyTag.HIGH:
                truth = result.ground_truth

        outputs.append(write_float_map(self._out("ground_truth_phase.pfm"), truth.phase))
        outputs.append(write_float_map(self._out("ground_truth_depth.pfm"), truth.depth))
        outputs.append(write_json(self._out("provenance.json"), self._provenance(config=cfg.to_dict())))
        logger.info("Simulated %s scene: %d frames per frequency", cfg.scene.kind.value, cfg.render.n_steps)
        return self._summary("simulate", outputs, valid_pixels=truth.phase.valid_count)

    def cmd_wrap(self, freq: Optional[str] = None) -> Dict[str, Any]:
        tags = FREQUENCIES if freq is None else (FrequencyTag.parse(freq),)
        outputs: List[str] = []
        counts: Dict[str, int] = {}
        for tag in tags:
            stack = self._load_stack(tag)
            wrapped = wrapped_phase(stack, self.config.phase.modulation_threshold, self.threads)
            texture = texture_and_modulation(stack, self.threads)
            saturated = int(np.count_nonzero(texture.saturation_flags()))
            if saturated:
                logger.warning("%s stack: %d pixels look clipped (I' < I'')", tag.value, saturated)
            outputs.append(write_float_map(self._out(f"wrapped_{tag.value}.pfm"), wrapped.phase))
            outputs.append(write_float_map(self._out(f"texture_{tag.value}.pfm"), texture.average))
            outputs.append(write_float_map(self._out(f"modulation_{tag.value}.pfm"), texture.modulation))
            counts[tag.value] = wrapped.phase.valid_count
        return self._summary("wrap", outputs, valid_pixels=counts)

    def cmd_unwrap(self) -> Dict[str, Any]:
        absolute, _ = self._absolute_phase(self._load_stack(FrequencyTag.HIGH), self._load_stack(FrequencyTag.LOW))
        order = absolute.fringe_order
        outputs = [
            write_float_map(self._out("absolute_phase.pfm"), absolute.phase),
            write_label_map(self._out("fringe_order.pgm"), np.where(order.mask, order.order, 0)),
        ]
        return self._summary(
            "unwrap",
            outputs,
            valid_pixels=absolute.phase.valid_count,
            clamped_pixels=int(np.count_nonzero(order.clamped)),
            max_order=order.max_order,
        )

    def cmd_calibrate(self) -> Dict[str, Any]:
        cal = self.config.calibration
        if cal.external_poses:
            poses = [self._external_pose(p, i) for i, p in enumerate(cal.external_poses)]
        else:
            poses = [self._simulated_pose(depth, i) for i, depth in enumerate(cal.pose_depths_mm)]

        calibration, report = fit_calibration(poses, cal.working_range_mm, self.threads)
        calibration = dataclasses.replace(calibration, provenance=self._provenance(poses=report.pose_ids))
        record = report.to_dict()
        if not cal.external_poses:
            # the cubic-model adequacy bound is the pooled residual itself
            record["holdout"] = dict(self._holdout_rmse(calibration), adequacy_bound_mm=report.sigma_cal_mm)
        record["provenance"] = self._provenance()

        outputs = [
            CalibrationIO.save(calibration, self._out(CALIBRATION_FILE)),
            write_json(self._out(CALIBRATION_REPORT_FILE), record),
        ]
        return self._summary(
            "calibrate",
            outputs,
            sigma_cal_mm=report.sigma_cal_mm,
            s_eff_mm_per_rad=report.s_eff_mm_per_rad,
            holdout_plane_rmse_mm=record.get("holdout", {}).get("plane_rmse_mm"),
        )

    def cmd_reconstruct(self) -> Dict[str, Any]:
        high = self._load_stack(FrequencyTag.HIGH)
        low = self._load_stack(FrequencyTag.LOW)
        calibration = CalibrationIO.load(self._input(self.config.inputs.calibration, CALIBRATION_FILE))

        absolute, weak = self._absolute_phase(high, low)
        cloud = evaluate_points(calibration, absolute)
        quality = cloud.quality.copy()
        quality[weak] |= int(QualityFlag.LOW_MODULATION)
        cloud = PointCloud(xyz=cloud.xyz, mask=cloud.mask, quality=quality)

        order = absolute.fringe_order
        outputs = [
            write_ply(self._out(POINT_CLOUD_FILE), cloud),
            write_float_map(self._out("absolute_phase.pfm"), absolute.phase),
            write_label_map(self._out("fringe_order.pgm"), np.where(order.mask, order.order, 0)),
            write_label_map(self._out("quality.pgm"), quality),
        ]
        return self._summary("reconstruct", outputs, points=cloud.valid_count)

    def cmd_fit(self) -> Dict[str, Any]:
        fit = self.config.fit
        path = self._input(self.config.inputs.point_cloud, POINT_CLOUD_FILE)
        cloud = read_ply(path)
        label = os.path.splitext(os.path.basename(path))[0]

        result: Dict[str, Any] = {"label": label, "source": os.path.basename(path)}
        if fit.surface == "plane":
            surface = fit_plane(cloud)
        else:
            if fit.free_radius:
                surface = fit_sphere_free(cloud)
            else:
                surface = Sphere(center_mm=fit_sphere_center(cloud, fit.nominal_radius_mm), radius_mm=fit.nominal_radius_mm)
            result["radius_mm"] = surface.radius_mm
            result["nominal_radius_mm"] = fit.nominal_radius_mm

        errors, stats = error_map(cloud, surface, fit.histogram_bins, fit.histogram_range_mm)
        result.update(stats.to_dict())
        result["surface"] = surface.to_dict()
        try:
            central, outer = regional_rmse(errors, fit.regional_axis, fit.central_fraction, fit.outer_fraction)
            result["regional"] = {"axis": fit.regional_axis, "central_rmse_mm": central, "outer_rmse_mm": outer}
        except EmptyRegion as e:
            logger.warning("Regional RMSE skipped: %s", e)
            result["regional"] = None

        axis = fit.regional_axis
        outputs = [
            write_json(self._out(FIT_RESULT_FILE), result),
            write_float_map(self._out("error_map.pfm"), errors),
            ReportExporter.export_histogram_csv(stats.histogram, self._out("error_histogram.csv")),
            ReportExporter.export_profile_csv(rmse_profile(errors, axis), self._out(f"error_profile_{axis}.csv"), axis),
        ]
        return self._summary("fit", outputs, rmse_mm=stats.rmse_mm, radius_mm=result.get("radius_mm"))

    def cmd_uncertainty(self) -> Dict[str, Any]:
        projector = self.config.projector
        context: Dict[str, float] = {
            "theta_h_deg": projector.theta_h_deg,
            "stage_resolution_deg": projector.stage_resolution_deg,
        }
        report_path = self.config.report.calibration_report or self._out(CALIBRATION_REPORT_FILE)
        if os.path.exists(report_path):
            calib = read_json(report_path)
            context["sigma_cal_mm"] = float(calib["sigma_cal_mm"])
            if calib.get("s_eff_mm_per_rad") is not None:
                context["s_eff_mm_per_rad"] = float(calib["s_eff_mm_per_rad"])

        budget = build_budget(self.config.budget, context)
        outputs = [
            write_json(self._out(BUDGET_FILE), budget.to_dict()),
            ReportExporter.export_budget_csv(budget, self._out("budget.csv")),
        ]
        return self._summary("uncertainty", outputs, combined_mm=budget.combined_mm, expanded_mm=budget.expanded_mm)

    def cmd_report(self) -> Dict[str, Any]:
        report_cfg = self.config.report
        fit_paths = list(report_cfg.fit_results) or [p for p in [self._out(FIT_RESULT_FILE)] if os.path.exists(p)]
        results = [read_json(self._input(p, p)) for p in fit_paths]

        columns = ["rmse_mm", "mean_mm", "std_mm"]
        if any(r.get("radius_mm") is not None for r in results):
            columns.insert(0, "radius_mm")
        fit_summaries = []
        for column in columns:
            values = [r[column] for r in results if r.get(column) is not None]
            if values:
                fit_summaries.append(series_summary(MeasurementSeries(label=column, values=values)))
        series = [series_summary(MeasurementSeries.from_dict(s)) for s in report_cfg.series]

        budget_path = report_cfg.budget_file or self._out(BUDGET_FILE)
        budget = UncertaintyBudget.from_dict(read_json(budget_path)) if os.path.exists(budget_path) else None
        calib_path = report_cfg.calibration_report or self._out(CALIBRATION_REPORT_FILE)
        calibration = read_json(calib_path) if os.path.exists(calib_path) else None

        if not results and not series and budget is None and calibration is None:
            raise EmptyInput("report: no fit results, series, budget or calibration report to aggregate")

        bundle = {
            "fit_results": results,
            "fit_summary": [s.to_dict() for s in fit_summaries],
            "series": [s.to_dict() for s in series],
            "budget": None if budget is None else budget.to_dict(),
            "calibration": calibration,
            "provenance": self._provenance(),
        }
        outputs = [write_json(self._out("report.json"), bundle)]
        if results:
            outputs.append(ReportExporter.export_fit_table_csv(results, fit_summaries, self._out("fit_table.csv"), columns))
        if series:
            outputs.append(ReportExporter.export_series_csv(series, self._out("series.csv")))
        if budget is not None:
            outputs.append(ReportExporter.export_budget_csv(budget, self._out("report_budget.csv")))
        return self._summary("report", outputs, fit_results=len(results), series=len(series))
