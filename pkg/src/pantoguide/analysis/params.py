"""Analysis parameters, kept free of heavy imports so configs load fast."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TRACKER_RATE = 80.0  # Hz


@dataclass(frozen=True)
class AnalysisConfig:
    tracker_rate: float = TRACKER_RATE  # Hz
    baseline_window: float = 0.2  # s of pre-cue data used for re-zeroing and noise floor
    smoothing_cutoff: float | None = 8.0  # Hz; None disables the low-pass
    smoothing_order: int = 2
    delay_threshold: float = 5.0  # multiples of the pre-cue acceleration RMS
    min_noise_floor: float = 60.0  # mm/s^2, about the pre-cue RMS at 0.1 mm / 0.1 deg tracker noise
    lever_arm: float = 100.0  # mm per rad, to compare rotational with translational channels
    alpha: float = 0.01
    ci_level: float = 0.95

    def __post_init__(self):
        if self.baseline_window <= 0 or self.delay_threshold <= 0:
            raise ValueError("baseline window and delay threshold must be positive")
        if self.smoothing_cutoff is not None and not (
            0 < self.smoothing_cutoff < self.tracker_rate / 2
        ):
            raise ValueError("smoothing cutoff must lie below the Nyquist frequency")

    @property
    def channel_scale(self) -> np.ndarray:
        """Per-DOF factors mapping x,y,z (mm) and yaw,pitch,roll (deg) to mm."""
        rot = self.lever_arm * math.pi / 180.0
        return np.array([1.0, 1.0, 1.0, rot, rot, rot])
