"""Trial-log and choice-log file formats.

Movement logs hold one row per 80 Hz tracker sample; the samples of one
trial are contiguous.  Time is seconds from cue onset, so pre-cue baseline
samples carry negative times.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
import polars as pl

from ..cues import Direction
from .params import TRACKER_RATE

TRIAL_COLUMNS = (
    "subject_id",
    "part",
    "trial_index",
    "cue",
    "repeats",
    "t_s",
    "x_mm",
    "y_mm",
    "z_mm",
    "yaw_deg",
    "pitch_deg",
    "roll_deg",
)
CHOICE_COLUMNS = ("subject_id", "trial_index", "cue", "response", "repeats")
SUBJECT_COLUMNS = ("subject_id", "experience_level")
POSE_COLUMNS = TRIAL_COLUMNS[6:]
DOFS = ("x", "y", "z", "yaw", "pitch", "roll")
PARTS = ("Part1", "Part3")

DIRECTION_INDEX = {d: i for i, d in enumerate(Direction)}


class SchemaError(ValueError):
    pass


class EmptyFile(SchemaError):
    pass


@dataclass
class TrialRecord:
    subject_id: str
    part: str
    trial_index: int
    cue: Direction
    repeats: int
    t: np.ndarray  # (n,) s from cue onset
    pose: np.ndarray  # (n, 6): x, y, z mm; yaw, pitch, roll deg
    truth: dict | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        self.cue = Direction(self.cue)
        self.t = np.asarray(self.t, dtype=float)
        self.pose = np.asarray(self.pose, dtype=float)
        if self.pose.shape != (self.t.size, 6):
            raise SchemaError(f"pose shape {self.pose.shape} does not match {self.t.size} samples")

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.subject_id, self.part, self.trial_index)

    @property
    def sample_rate(self) -> float:
        return (self.t.size - 1) / (self.t[-1] - self.t[0])

    def __eq__(self, other):
        if not isinstance(other, TrialRecord):
            return NotImplemented
        return (
            self.key == other.key
            and self.cue == other.cue
            and self.repeats == other.repeats
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.pose, other.pose)
        )


class ChoiceRecord(NamedTuple):
    subject_id: str
    trial_index: int
    cue: Direction
    response: Direction
    repeats: int


# fixed decimal places keep files byte-stable; 1e-4 mm / deg / s is far
# below tracker resolution
_DECIMALS = 4


def quantize(values: np.ndarray) -> np.ndarray:
    """Round to the precision the log format stores."""
    return np.round(np.asarray(values, dtype=float), _DECIMALS) + 0.0


def write_trials(records, path) -> None:
    records = list(records)
    lengths = np.array([r.t.size for r in records], dtype=int)

    def per_trial(values, dtype):
        return pl.Series(np.repeat(np.asarray(values, dtype=dtype), lengths))

    cols = {
        "subject_id": per_trial([r.subject_id for r in records], str),
        "part": per_trial([r.part for r in records], str),
        "trial_index": per_trial([r.trial_index for r in records], np.int64),
        "cue": per_trial([r.cue.value for r in records], str),
        "repeats": per_trial([r.repeats for r in records], np.int64),
    }
    t = np.concatenate([r.t for r in records]) if records else np.zeros(0)
    pose = np.concatenate([r.pose for r in records]) if records else np.zeros((0, 6))
    cols["t_s"] = quantize(t)
    for j, c in enumerate(POSE_COLUMNS):
        cols[c] = quantize(pose[:, j])
    df = pl.DataFrame({k: pl.Series(k, v) for k, v in cols.items()})
    df = df.with_columns([_fixed_point(c) for c in ("t_s", *POSE_COLUMNS)])
    df.write_csv(path, line_terminator="\n", quote_style="never")


def _fixed_point(col: str) -> pl.Expr:
    """Format a quantized float column with exactly ``_DECIMALS`` places.

    Integer arithmetic here is about 3x faster than polars' float formatter.
    """
    scale = 10**_DECIMALS
    n = (pl.col(col) * scale).round(0).cast(pl.Int64)
    sign = pl.when(n < 0).then(pl.lit("-")).otherwise(pl.lit(""))
    whole = (n.abs() // scale).cast(pl.Utf8)
    frac = (n.abs() % scale).cast(pl.Utf8).str.zfill(_DECIMALS)
    return (sign + whole + pl.lit(".") + frac).alias(col)


def _check_header(found, expected, path):
    if tuple(found) != tuple(expected):
        raise SchemaError(f"{path}:1: expected header {','.join(expected)}, got {','.join(found)}")


def _read_frame(path, columns) -> pl.DataFrame:
    """All-string frame after header and per-line width checks."""
    path = Path(path)
    text = path.read_text()
    if not text.strip():
        raise EmptyFile(f"{path}: file is empty")
    lines = text.splitlines()
    _check_header(lines[0].split(","), columns, path)
    if len(lines) == 1:
        raise EmptyFile(f"{path}: no data rows")
    ncol = len(columns)
    # CSV readers pad short rows with nulls; check widths first
    for lineno, line in enumerate(lines[1:], start=2):
        if line.count(",") != ncol - 1:
            raise SchemaError(
                f"{path}:{lineno}: expected {ncol} columns, found {line.count(',') + 1}"
            )
    return pl.read_csv(
        io.StringIO(text), infer_schema=False, missing_utf8_is_empty_string=True
    )


def _numeric(df, col, path, integer=False):
    vals = df[col].cast(pl.Float64, strict=False).to_numpy().astype(float)
    bad = ~np.isfinite(vals)
    if integer:
        bad[~bad] |= vals[~bad] != np.round(vals[~bad])
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        raise SchemaError(f"{path}:{row + 2}: bad {col} value {df[col][row]!r}")
    return vals.astype(int) if integer else vals


def _directions(df, col, path):
    out = []
    cache = {}
    for row, label in enumerate(df[col]):
        if label not in cache:
            try:
                cache[label] = Direction.parse(label)
            except ValueError:
                raise SchemaError(f"{path}:{row + 2}: unknown cue label {label!r}") from None
        out.append(cache[label])
    return out


def load_trials(path, *, rate_tolerance: float = 0.5, expected_rate: float = TRACKER_RATE):
    """Read and validate a movement log.

    Raises ``SchemaError`` (with ``file:line``) on malformed rows, NaNs,
    unknown labels, non-increasing timestamps within a trial, split trials
    or a sample rate outside ``expected_rate +/- rate_tolerance``.
    """
    df = _read_frame(path, TRIAL_COLUMNS)
    trial_index = _numeric(df, "trial_index", path, integer=True)
    repeats = _numeric(df, "repeats", path, integer=True)
    t = _numeric(df, "t_s", path)
    pose = np.column_stack([_numeric(df, c, path) for c in POSE_COLUMNS])
    cues = _directions(df, "cue", path)
    cue_codes = np.array([DIRECTION_INDEX[c] for c in cues])
    subj = df["subject_id"].to_numpy()
    part = df["part"].to_numpy()
    for row, p in enumerate(part):
        if p not in PARTS:
            raise SchemaError(f"{path}:{row + 2}: unknown part {p!r}")

    n = len(df)
    key_change = np.ones(n, dtype=bool)
    key_change[1:] = (
        (subj[1:] != subj[:-1]) | (part[1:] != part[:-1]) | (trial_index[1:] != trial_index[:-1])
    )
    starts = np.flatnonzero(key_change)
    ends = np.append(starts[1:], n)
    seen = set()
    records = []
    for s, e in zip(starts, ends):
        key = (subj[s], part[s], int(trial_index[s]))
        if key in seen:
            raise SchemaError(f"{path}:{s + 2}: samples of trial {key} are not contiguous")
        seen.add(key)
        tt = t[s:e]
        step = np.diff(tt)
        if (step <= 0).any():
            row = s + int(np.flatnonzero(step <= 0)[0]) + 1
            raise SchemaError(f"{path}:{row + 2}: timestamps not strictly increasing")
        for col, vals in (("cue", cue_codes), ("repeats", repeats)):
            if (vals[s:e] != vals[s]).any():
                raise SchemaError(f"{path}:{s + 2}: {col} changes within trial {key}")
        if e - s >= 2:
            rate = (e - s - 1) / (tt[-1] - tt[0])
            if abs(rate - expected_rate) > rate_tolerance:
                raise SchemaError(
                    f"{path}:{s + 2}: trial {key} sampled at {rate:.3f} Hz, "
                    f"expected {expected_rate} Hz"
                )
        records.append(
            TrialRecord(key[0], key[1], key[2], cues[s], int(repeats[s]), tt, pose[s:e])
        )
    return records


def write_choices(choices, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CHOICE_COLUMNS)
        for c in choices:
            w.writerow([c.subject_id, c.trial_index, c.cue.value, c.response.value, c.repeats])


def load_choices(path) -> list[ChoiceRecord]:
    df = _read_frame(path, CHOICE_COLUMNS)
    idx = _numeric(df, "trial_index", path, integer=True)
    reps = _numeric(df, "repeats", path, integer=True)
    cues = _directions(df, "cue", path)
    resp = _directions(df, "response", path)
    return [
        ChoiceRecord(s, int(i), c, r, int(k))
        for s, i, c, r, k in zip(df["subject_id"], idx, cues, resp, reps)
    ]


def write_subjects(levels: dict[str, int], path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(SUBJECT_COLUMNS) + "\n")
        for sid in sorted(levels):
            fh.write(f"{sid},{int(levels[sid])}\n")


def load_subjects(path) -> dict[str, int]:
    df = _read_frame(path, SUBJECT_COLUMNS)
    lv = _numeric(df, "experience_level", path, integer=True)
    return {s: int(v) for s, v in zip(df["subject_id"], lv)}


def normalize_angle(deg):
    """Wrap degrees into (-180, 180]."""
    out = np.mod(np.asarray(deg, dtype=float) + 180.0, 360.0) - 180.0
    out = np.where(out == -180.0, 180.0, out)
    return float(out) if np.ndim(out) == 0 else out

