"""Synthetic subjects and study logs for end-to-end checks of the analysis.

Hand responses are minimum-jerk excursions in the cued DOF (with optional
leakage into other DOFs) followed by a slower return.  A subject's
``mean_delay`` is the time from cue onset to the first acceleration peak of
that movement, i.e. the quantity the analysis measures, so motion starts
``0.2113 * move_duration`` earlier.

Random streams: every draw comes from ``numpy.random.default_rng`` seeded
with a ``SeedSequence`` entropy list ``[seed, stream, subject, part, trial]``
so each (subject, trial) stream is independent of generation order.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .analysis.io import (
    DOFS,
    ChoiceRecord,
    TrialRecord,
    quantize,
    write_choices,
    write_subjects,
    write_trials,
)
from .cues import DIRECTIONS, Direction

# Time of the first acceleration peak of a minimum-jerk move, as a fraction
# of its duration: root of 1 - 6s + 6s^2 = 0.
MINJERK_ACC_PEAK = (3.0 - math.sqrt(3.0)) / 6.0

# cued DOF index and sign in the device frame (+x distal, +z up, +y left)
CUE_DOF = {
    Direction.FORWARD: (0, 1.0),
    Direction.BACKWARD: (0, -1.0),
    Direction.UP: (2, 1.0),
    Direction.DOWN: (2, -1.0),
    Direction.TWIST_LEFT: (3, 1.0),
    Direction.TWIST_RIGHT: (3, -1.0),
    Direction.TILT_LEFT: (5, -1.0),
    Direction.TILT_RIGHT: (5, 1.0),
}

# Forced-choice counts (60 presentations per cue) whose row percentages
# round to the reference confusion percentages.
REFERENCE_CONFUSION_COUNTS = np.array(
    [
        [58, 1, 1, 0, 0, 0, 0, 0],
        [1, 57, 0, 2, 0, 0, 0, 0],
        [1, 0, 56, 0, 1, 0, 0, 2],
        [1, 1, 2, 55, 0, 0, 1, 0],
        [0, 1, 0, 0, 56, 2, 1, 0],
        [0, 0, 0, 0, 1, 58, 0, 1],
        [0, 0, 0, 1, 0, 0, 58, 1],
        [0, 0, 0, 0, 0, 2, 1, 57],
    ]
)
REFERENCE_CONFUSION_PERCENT = np.array(
    [
        [96.7, 1.7, 1.7, 0.0, 0.0, 0.0, 0.0, 0.0],
        [1.7, 95.0, 0.0, 3.3, 0.0, 0.0, 0.0, 0.0],
        [1.7, 0.0, 93.3, 0.0, 1.7, 0.0, 0.0, 3.3],
        [1.7, 1.7, 3.3, 91.7, 0.0, 0.0, 1.7, 0.0],
        [0.0, 1.7, 0.0, 0.0, 93.3, 3.3, 1.7, 0.0],
        [0.0, 0.0, 0.0, 0.0, 1.7, 96.7, 0.0, 1.7],
        [0.0, 0.0, 0.0, 1.7, 0.0, 0.0, 96.7, 1.7],
        [0.0, 0.0, 0.0, 0.0, 0.0, 3.3, 1.7, 95.0],
    ]
)

DEFAULT_GAINS = {
    Direction.FORWARD: 30.0,
    Direction.BACKWARD: 22.0,
    Direction.UP: 25.0,
    Direction.DOWN: 25.0,
    Direction.TWIST_LEFT: 20.0,
    Direction.TWIST_RIGHT: 20.0,
    Direction.TILT_LEFT: 15.0,
    Direction.TILT_RIGHT: 20.0,
}

_STREAM_DELAY, _STREAM_CHOICE, _STREAM_ORDER, _STREAM_PROFILE = 1, 2, 3, 4
_PART_CODE = {"Part1": 1, "Part2": 2, "Part3": 3}


def reference_choice_log(subject_prefix: str = "F") -> list[ChoiceRecord]:
    """Choice log whose counts are exactly ``REFERENCE_CONFUSION_COUNTS``."""
    out = []
    k = 0
    for i, cue in enumerate(DIRECTIONS):
        for j, resp in enumerate(DIRECTIONS):
            for _ in range(int(REFERENCE_CONFUSION_COUNTS[i, j])):
                out.append(ChoiceRecord(f"{subject_prefix}{k // 24 + 1:02d}", k % 24, cue, resp, 0))
                k += 1
    return out


@dataclass
class SubjectProfile:
    subject_id: str
    responder_class: str  # "Fast" | "Slow"
    mean_delay: float  # s, cue onset to first acceleration peak
    delay_sd: float
    experience_level: int
    gains: dict = field(default_factory=lambda: dict(DEFAULT_GAINS))  # mm or deg per cue
    gain_cv: float = 0.1
    coupling: dict = field(default_factory=dict)  # cue -> {dof: fraction of signed primary}
    misclassification: np.ndarray = field(default_factory=lambda: REFERENCE_CONFUSION_COUNTS / 60.0)
    move_duration: float = 0.5
    hold_duration: float = 0.3
    return_duration: float = 0.6
    noise_mm: float = 0.1
    noise_deg: float = 0.1
    repeat_rate: float = 0.1
    part_delay_offset: float = 0.0  # added to Part3 delays
    rest_pose: tuple = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.responder_class not in ("Fast", "Slow"):
            raise ValueError(f"unknown responder class {self.responder_class!r}")
        if not self.mean_delay > 0 or self.delay_sd < 0:
            raise ValueError("mean delay must be positive and its sd non-negative")
        if not 1 <= self.experience_level <= 4:
            raise ValueError("experience level must be 1-4")
        self.gains = {Direction(k): float(v) for k, v in self.gains.items()}
        if any(v <= 0 for v in self.gains.values()) or set(self.gains) != set(DIRECTIONS):
            raise ValueError("need a positive gain for every cue")
        self.coupling = {
            Direction(k): {str(d): float(f) for d, f in v.items()} for k, v in self.coupling.items()
        }
        for leaks in self.coupling.values():
            for dof in leaks:
                if dof not in DOFS:
                    raise ValueError(f"unknown DOF {dof!r} in coupling")
        m = np.asarray(self.misclassification, dtype=float)
        if m.shape != (8, 8) or (m < 0).any() or not np.allclose(m.sum(axis=1), 1.0, atol=1e-12):
            raise ValueError("misclassification must be an 8x8 row-stochastic matrix")
        self.misclassification = m

    def to_json(self) -> dict:
        d = asdict(self)
        d["gains"] = {k.value: v for k, v in self.gains.items()}
        d["coupling"] = {k.value: v for k, v in self.coupling.items()}
        d["misclassification"] = self.misclassification.tolist()
        d["rest_pose"] = list(self.rest_pose)
        return d


def _rng(seed, *stream) -> np.random.Generator:
    return np.random.default_rng([int(seed), *map(int, stream)])


def _minjerk(x):
    x = np.clip(x, 0.0, 1.0)
    return x**3 * (10.0 + x * (-15.0 + 6.0 * x))


def movement_profile(t, onset, profile: SubjectProfile) -> np.ndarray:
    """Normalised excursion: min-jerk out, hold, min-jerk back."""
    out = _minjerk((t - onset) / profile.move_duration)
    back_start = onset + profile.move_duration + profile.hold_duration
    back = _minjerk((t - back_start) / profile.return_duration)
    return out - back


def _subject_number(subject_id: str) -> int:
    digits = "".join(ch for ch in subject_id if ch.isdigit())
    if digits:
        return int(digits)
    return int(hashlib.sha256(subject_id.encode()).hexdigest()[:8], 16)


def sample_delay(profile: SubjectProfile, rng: np.random.Generator, part: str = "Part1") -> float:
    """Response delay, truncated so that motion starts after cue onset."""
    mean = profile.mean_delay + (profile.part_delay_offset if part == "Part3" else 0.0)
    floor = MINJERK_ACC_PEAK * profile.move_duration
    for _ in range(1000):
        d = rng.normal(mean, profile.delay_sd)
        if d > floor:
            return float(d)
    return float(max(mean, floor + 1e-3))


def synth_movement_trial(
    profile: SubjectProfile,
    cue: Direction,
    seed,
    *,
    part: str = "Part1",
    trial_index: int = 0,
    rate: float = 80.0,
    record: tuple[float, float] = (-0.5, 3.5),
) -> TrialRecord:
    cue = Direction(cue)
    rng = _rng(seed, _STREAM_DELAY, _subject_number(profile.subject_id), _PART_CODE[part], trial_index)
    delay = sample_delay(profile, rng, part)
    onset = delay - MINJERK_ACC_PEAK * profile.move_duration
    gain = profile.gains[cue] * max(1.0 + rng.normal(0.0, profile.gain_cv), 0.2) if profile.gain_cv else profile.gains[cue]
    n = int(round((record[1] - record[0]) * rate)) + 1
    t = quantize(record[0] + np.arange(n) / rate)
    s = movement_profile(t, onset, profile)
    dof, sign = CUE_DOF[cue]
    primary = sign * gain * s
    disp = np.zeros((n, 6))
    disp[:, dof] = primary
    for leak_dof, frac in profile.coupling.get(cue, {}).items():
        disp[:, DOFS.index(leak_dof)] += frac * primary
    noise_sd = np.array([profile.noise_mm] * 3 + [profile.noise_deg] * 3)
    if noise_sd.any():
        disp = disp + rng.normal(0.0, 1.0, size=disp.shape) * noise_sd
    pose = quantize(np.asarray(profile.rest_pose) + disp)
    repeats = int(rng.poisson(profile.repeat_rate)) if profile.repeat_rate > 0 else 0
    truth = {"delay_s": delay, "onset_s": onset, "gain": gain}
    return TrialRecord(profile.subject_id, part, trial_index, cue, repeats, t, pose, truth)


def synth_forced_choice(profile: SubjectProfile, cue: Direction, seed, *, trial_index: int = 0) -> Direction:
    rng = _rng(seed, _STREAM_CHOICE, _subject_number(profile.subject_id), trial_index)
    row = profile.misclassification[DIRECTIONS.index(Direction(cue))]
    return DIRECTIONS[int(rng.choice(8, p=row))]


@dataclass(frozen=True)
class StudyRecipe:
    n_fast: int = 13
    n_slow: int = 7
    trials_per_cue: int = 10
    choice_trials_per_cue: int = 3
    fast_delay: float = 0.33
    fast_delay_sd: float = 0.08
    slow_delay: float = 1.56
    slow_delay_sd: float = 0.25
    fast_gain_cv: float = 0.1
    slow_gain_cv: float = 0.3
    experience_slope: float = -0.041  # s per level
    part_delay_offset: float = 0.0
    coupled_subjects: int = 4  # subjects with forward -> downward leakage
    forward_down_leak: float = -0.3
    tilt_pitch_leak: float = 0.2
    noise_mm: float = 0.1
    noise_deg: float = 0.1
    repeat_rate: float = 0.1
    move_duration: float = 0.5
    hold_duration: float = 0.3
    return_duration: float = 0.6
    tracker_rate: float = 80.0
    record_start: float = -0.5
    record_end: float = 3.5

    @classmethod
    def with_subjects(cls, n: int, **kw) -> "StudyRecipe":
        """Split ``n`` subjects in the default 13:7 fast/slow proportion."""
        if n < 1:
            raise ValueError("need at least one subject")
        n_fast = int(round(n * 13 / 20))
        if n >= 2:
            n_fast = min(max(n_fast, 1), n - 1)
        return cls(n_fast=n_fast, n_slow=n - n_fast, **kw)

    @property
    def n_subjects(self) -> int:
        return self.n_fast + self.n_slow


def build_profiles(recipe: StudyRecipe, seed: int) -> list[SubjectProfile]:
    """Subject profiles for a recipe.

    Experience levels cycle 1-4 within each responder class and delays are
    shifted by ``experience_slope`` about the class's mean level, so each
    class keeps its nominal mean delay.
    """
    rng = _rng(seed, _STREAM_PROFILE)
    classes = ["Fast"] * recipe.n_fast + ["Slow"] * recipe.n_slow
    order = rng.permutation(len(classes))
    classes = [classes[i] for i in order]
    coupled = set(rng.permutation(len(classes))[: recipe.coupled_subjects].tolist())

    levels = {}
    for cls_name in ("Fast", "Slow"):
        members = [i for i, c in enumerate(classes) if c == cls_name]
        for k, i in enumerate(members):
            levels[i] = k % 4 + 1
    profiles = []
    for i, cls_name in enumerate(classes):
        same = [levels[j] for j, c in enumerate(classes) if c == cls_name]
        centre = sum(same) / len(same)
        fast = cls_name == "Fast"
        base = recipe.fast_delay if fast else recipe.slow_delay
        coupling = {}
        if recipe.tilt_pitch_leak:
            coupling[Direction.TILT_LEFT] = {"pitch": recipe.tilt_pitch_leak}
            coupling[Direction.TILT_RIGHT] = {"pitch": recipe.tilt_pitch_leak}
        if i in coupled and recipe.forward_down_leak:
            # forward is +x, so a negative fraction pushes z down
            coupling[Direction.FORWARD] = {"z": recipe.forward_down_leak}
        rest = (
            float(rng.uniform(250, 350)),
            float(rng.uniform(-50, 50)),
            float(rng.uniform(80, 120)),
            float(rng.uniform(30, 60)),
            float(rng.uniform(-10, 10)),
            float(rng.uniform(-10, 10)),
        )
        profiles.append(
            SubjectProfile(
                subject_id=f"S{i + 1:02d}",
                responder_class=cls_name,
                mean_delay=base + recipe.experience_slope * (levels[i] - centre),
                delay_sd=recipe.fast_delay_sd if fast else recipe.slow_delay_sd,
                experience_level=levels[i],
                gain_cv=recipe.fast_gain_cv if fast else recipe.slow_gain_cv,
                coupling=coupling,
                move_duration=recipe.move_duration,
                hold_duration=recipe.hold_duration,
                return_duration=recipe.return_duration,
                noise_mm=recipe.noise_mm,
                noise_deg=recipe.noise_deg,
                repeat_rate=recipe.repeat_rate,
                part_delay_offset=recipe.part_delay_offset,
                rest_pose=tuple(round(v, 4) for v in rest),
            )
        )
    return profiles


@dataclass
class Study:
    recipe: StudyRecipe
    seed: int
    profiles: list[SubjectProfile]
    trials: dict[str, list[TrialRecord]]  # part -> records
    choices: list[ChoiceRecord]

    @property
    def experience(self) -> dict[str, int]:
        return {p.subject_id: p.experience_level for p in self.profiles}

    def manifest(self) -> dict:
        return {
            "generator": "pantoguide.synth",
            "seed": self.seed,
            "recipe": asdict(self.recipe),
            "subjects": [p.to_json() for p in self.profiles],
            "counts": {
                "Part1": len(self.trials["Part1"]),
                "Part2": len(self.choices),
                "Part3": len(self.trials["Part3"]),
            },
        }


def _cue_order(recipe, seed, subject_no, part_code, per_cue) -> list[Direction]:
    block = [d for d in DIRECTIONS for _ in range(per_cue)]
    perm = _rng(seed, _STREAM_ORDER, subject_no, part_code).permutation(len(block))
    return [block[i] for i in perm]


def synth_study(recipe: StudyRecipe | None = None, seed: int = 0) -> Study:
    recipe = recipe or StudyRecipe()
    profiles = build_profiles(recipe, seed)
    trials = {"Part1": [], "Part3": []}
    choices = []
    for prof in profiles:
        sno = _subject_number(prof.subject_id)
        for part in ("Part1", "Part3"):
            order = _cue_order(recipe, seed, sno, _PART_CODE[part], recipe.trials_per_cue)
            for k, cue in enumerate(order):
                trials[part].append(
                    synth_movement_trial(
                        prof,
                        cue,
                        seed,
                        part=part,
                        trial_index=k,
                        rate=recipe.tracker_rate,
                        record=(recipe.record_start, recipe.record_end),
                    )
                )
        order = _cue_order(recipe, seed, sno, _PART_CODE["Part2"], recipe.choice_trials_per_cue)
        for k, cue in enumerate(order):
            resp = synth_forced_choice(prof, cue, seed, trial_index=k)
            reps = int(_rng(seed, _STREAM_CHOICE, sno, 10_000 + k).poisson(prof.repeat_rate))
            choices.append(ChoiceRecord(prof.subject_id, k, cue, resp, reps))
    return Study(recipe, seed, profiles, trials, choices)


STUDY_FILES = (
    "manifest.json",
    "subjects.csv",
    "part1_trials.csv",
    "part2_choices.csv",
    "part3_trials.csv",
    "ground_truth.csv",
)


def write_study(study: Study, outdir) -> list[Path]:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(json.dumps(study.manifest(), indent=2, sort_keys=True) + "\n")
    write_subjects(study.experience, out / "subjects.csv")
    write_trials(study.trials["Part1"], out / "part1_trials.csv")
    write_choices(study.choices, out / "part2_choices.csv")
    write_trials(study.trials["Part3"], out / "part3_trials.csv")
    with open(out / "ground_truth.csv", "w", newline="") as fh:
        fh.write("subject_id,part,trial_index,cue,delay_s,onset_s,gain\n")
        for part in ("Part1", "Part3"):
            for r in study.trials[part]:
                tr = r.truth
                fh.write(
                    f"{r.subject_id},{part},{r.trial_index},{r.cue.value},"
                    f"{tr['delay_s']:.9f},{tr['onset_s']:.9f},{tr['gain']:.9f}\n"
                )
    return [out / name for name in STUDY_FILES]


def fileset_digest(outdir) -> str:
    h = hashlib.sha256()
    for name in STUDY_FILES:
        h.update(name.encode())
        h.update((Path(outdir) / name).read_bytes())
    return h.hexdigest()
