"""Access to the checked-in reference profile and calibration files.

The reference workload ships as a measured-style profile whose footprint
extremes pin the sizing of every reference memory organization; the
calibration file carries the published per-block area/energy anchors and
the off-chip/accelerator energy constants calibrated on that workload.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .costmodel import CalibrationTable, load_calibration
from .workload import Workload, load_workload


def _data_path(name: str) -> Path:
    return Path(resources.files("capstore").joinpath("data", name))


def reference_workload_path() -> Path:
    return _data_path("reference_workload.json")


def reference_calibration_path() -> Path:
    return _data_path("reference_calibration.json")


def load_reference_workload() -> Workload:
    return load_workload(reference_workload_path())


def load_reference_calibration() -> CalibrationTable:
    return load_calibration(reference_calibration_path())
