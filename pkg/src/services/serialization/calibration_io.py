"""Calibration container: UTF-8 JSON header, newline + NUL, then raw arrays.

Arrays follow the header in this order, row-major, little-endian:
coefficients float64 (3, 4, H, W), phase_min float64 (H, W),
phase_max float64 (H, W), mask uint8 (H, W).
"""

from __future__ import annotations

import json
import logging
import os
from typing import Any, Dict

import numpy as np

from models.domain.calibration import PolyCalibration
from utils.errors import IoError

logger = logging.getLogger(__name__)


class CalibrationIO:
    """Save/load PolyCalibration files."""

    SCHEMA = "fringeforge.calibration/1"
    TERMINATOR = b"\n\0"

    @staticmethod
    def header(calibration: PolyCalibration) -> Dict[str, Any]:
        height, width = calibration.shape
        return {
            "schema": CalibrationIO.SCHEMA,
            "width": width,
            "height": height,
            "coefficient_layout": "axis[x,y,z] x power[0..3] x row x col, <f8",
            "arrays": ["coefficients", "phase_min", "phase_max", "mask"],
            "phase_domain": True,
            "working_range_mm": list(calibration.working_range_mm),
            "provenance": dict(calibration.provenance),
        }

    @staticmethod
    def save(calibration: PolyCalibration, path: str) -> str:
        header = json.dumps(CalibrationIO.header(calibration), sort_keys=True, ensure_ascii=False)
        try:
            os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
            with open(path, "wb") as f:
                f.write(header.encode("utf-8"))
                f.write(CalibrationIO.TERMINATOR)
                f.write(calibration.coefficients.astype("<f8").tobytes(order="C"))
                f.write(calibration.phase_min.astype("<f8").tobytes(order="C"))
                f.write(calibration.phase_max.astype("<f8").tobytes(order="C"))
                f.write(calibration.mask.astype(np.uint8).tobytes(order="C"))
        except OSError as exc:
            raise IoError(f"cannot write calibration {path}: {exc}") from exc
        logger.info("Saved calibration (%d valid pixels) to %s", calibration.valid_count, path)
        return path

    @staticmethod
    def load(path: str) -> PolyCalibration:
        if not os.path.exists(path):
            raise IoError(f"calibration file not found: {path}")
        try:
            with open(path, "rb") as f:
                blob = f.read()
        except OSError as exc:
            raise IoError(f"cannot read calibration {path}: {exc}") from exc

        split = blob.find(CalibrationIO.TERMINATOR)
        if split < 0:
            raise IoError(f"{path}: missing header terminator")
        try:
            header = json.loads(blob[:split].decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise IoError(f"{path}: invalid header: {exc}") from exc
        if header.get("schema") != CalibrationIO.SCHEMA:
            raise IoError(f"{path}: unsupported calibration schema {header.get('schema')!r}")

        width, height = int(header["width"]), int(header["height"])
        pixels = width * height
        payload = blob[split + len(CalibrationIO.TERMINATOR):]
        expected = 8 * (12 * pixels + 2 * pixels) + pixels
        if len(payload) != expected:
            raise IoError(f"{path}: payload is {len(payload)} bytes, expected {expected}")

        offset = 0

        def take(count: int, dtype: str) -> np.ndarray:
            nonlocal offset
            size = count * np.dtype(dtype).itemsize
            array = np.frombuffer(payload, dtype=dtype, count=count, offset=offset)
            offset += size
            return array

        coefficients = take(12 * pixels, "<f8").reshape(3, 4, height, width)
        phase_min = take(pixels, "<f8").reshape(height, width)
        phase_max = take(pixels, "<f8").reshape(height, width)
        mask = take(pixels, "u1").reshape(height, width).astype(bool)
        return PolyCalibration(
            coefficients=coefficients.astype(np.float64),
            phase_min=phase_min.astype(np.float64),
            phase_max=phase_max.astype(np.float64),
            mask=mask,
            working_range_mm=tuple(header.get("working_range_mm", (0.0, 0.0))),
            provenance=dict(header.get("provenance", {})),
        )
