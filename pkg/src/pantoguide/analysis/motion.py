"""Per-trial motion features: re-zeroed displacement, derivatives, delay, peaks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .frames import RigidOffset, transform_series
from .io import TrialRecord
from .params import AnalysisConfig


class TooShort(ValueError):
    pass


class NoMotionDetected(ValueError):
    pass


@dataclass
class MotionSeries:
    t: np.ndarray
    disp: np.ndarray  # (n, 6) re-zeroed, unfiltered
    vel: np.ndarray  # (n, 6) per second
    acc: np.ndarray  # (n, 6) per second^2
    cue_onset: float = 0.0


def smoothing_filter(cfg: AnalysisConfig):
    return signal.butter(cfg.smoothing_order, cfg.smoothing_cutoff, fs=cfg.tracker_rate)


def zero_phase_gain(cfg: AnalysisConfig, freq: float) -> float:
    """Magnitude response of the forward-backward smoother at ``freq`` Hz."""
    b, a = smoothing_filter(cfg)
    z = np.exp(-2j * math.pi * freq / cfg.tracker_rate * np.arange(max(len(a), len(b))))
    h = np.dot(b, z[: len(b)]) / np.dot(a, z[: len(a)])
    return float(abs(h) ** 2)


def baseline_mask(t: np.ndarray, cue_onset: float, window: float) -> np.ndarray:
    return (t >= cue_onset - window) & (t < cue_onset)


def kinematics_of_trial(
    trial: TrialRecord,
    cfg: AnalysisConfig | None = None,
    *,
    cue_onset: float = 0.0,
    offset: RigidOffset | None = None,
) -> MotionSeries:
    cfg = cfg or AnalysisConfig()
    if trial.t.size < 5:
        raise TooShort(f"trial {trial.key} has {trial.t.size} samples; need at least 5")
    pose = trial.pose if offset is None else transform_series(trial.pose, offset)
    base = baseline_mask(trial.t, cue_onset, cfg.baseline_window)
    ref = pose[base].mean(axis=0) if base.any() else pose[0]
    disp = pose - ref
    if cfg.smoothing_cutoff is not None:
        b, a = smoothing_filter(cfg)
        smooth = signal.filtfilt(b, a, disp, axis=0)
    else:
        smooth = disp
    vel = np.gradient(smooth, trial.t, axis=0)
    acc = np.gradient(vel, trial.t, axis=0)
    return MotionSeries(trial.t, disp, vel, acc, cue_onset)


def detect_delay(series: MotionSeries, cfg: AnalysisConfig | None = None) -> float:
    """Time from cue onset to the first acceleration peak in any DOF.

    Channels are put on a common mm scale, the pre-cue RMS acceleration sets
    the noise floor, and the earliest peak of ``|acc|`` above
    ``delay_threshold * floor`` in any channel marks the response.  A peak
    is the maximum of a contiguous run above threshold, so noise ripple on
    the rising flank of a lobe does not count as its own peak.
    """
    cfg = cfg or AnalysisConfig()
    onset = series.cue_onset
    acc = np.abs(series.acc * cfg.channel_scale)
    base = baseline_mask(series.t, onset, cfg.baseline_window)
    floor = float(np.sqrt(np.mean(acc[base] ** 2))) if base.any() else 0.0
    threshold = cfg.delay_threshold * max(floor, cfg.min_noise_floor)
    if series.t[0] > onset or series.t[-1] < onset:
        raise ValueError("series does not cover the cue onset")
    start = int(np.searchsorted(series.t, onset))
    best = None
    for ch in acc.T:
        a = ch[start:]
        above = a > threshold
        if not above.any():
            continue
        first = int(np.argmax(above))
        below = np.flatnonzero(~above[first:])
        end = first + int(below[0]) if below.size else a.size
        peak = first + int(np.argmax(a[first:end]))
        if best is None or peak < best:
            best = peak
    if best is None:
        raise NoMotionDetected(f"no acceleration peak above {threshold:.1f} mm/s^2")
    return float(series.t[start + best] - onset)


def peak_displacement(series: MotionSeries, window: tuple[float, float] | None = None) -> np.ndarray:
    """Signed extreme excursion per DOF inside ``window`` (s, inclusive)."""
    lo, hi = window if window is not None else (series.cue_onset, series.t[-1])
    mask = (series.t >= lo) & (series.t <= hi)
    if mask.sum() < 1:
        raise TooShort(f"no samples in window [{lo}, {hi}]")
    d = series.disp[mask]
    idx = np.abs(d).argmax(axis=0)
    return d[idx, np.arange(d.shape[1])]
