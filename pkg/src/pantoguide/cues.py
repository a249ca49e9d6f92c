"""4-DOF guidance cues rendered as paired pantograph displacements.

Each cue moves both end-effectors along unit directions in their own
pantograph plane (u distal, v up).  Translation cues move the two fingers
together; rotation cues move them in opposite directions so the pair
produces a couple about the pinch point.

Device frame: +x distal, +z up, right-handed, so +y points to the left of
the hand.  The "left" pantograph sits on the +y side.  With that frame,
TwistLeft (extension) pulls the left finger back and the right finger
forward, a positive yaw; TiltLeft (pronation) pulls the left finger down
and the right finger up, a negative roll.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

from .kinematics import (
    REACH_CLEARANCE,
    KinematicsError,
    PantographConfig,
    PlanarPoint,
    inverse_kinematics,
    workspace_center,
)


class Direction(str, enum.Enum):
    FORWARD = "Forward"
    BACKWARD = "Backward"
    UP = "Up"
    DOWN = "Down"
    TWIST_LEFT = "TwistLeft"
    TWIST_RIGHT = "TwistRight"
    TILT_LEFT = "TiltLeft"
    TILT_RIGHT = "TiltRight"

    @classmethod
    def parse(cls, label: str) -> "Direction":
        key = label.replace(" ", "").replace("_", "").lower()
        for d in cls:
            if d.value.lower() == key:
                return d
        raise ValueError(f"unknown cue direction {label!r}")

    @property
    def is_rotation(self) -> bool:
        return self in _ROTATIONS

    @property
    def mirror(self) -> "Direction":
        return _MIRROR.get(self, self)


# Canonical direction order of every 8x8 matrix in the package.
DIRECTIONS: tuple[Direction, ...] = tuple(Direction)

_ROTATIONS = frozenset(
    {Direction.TWIST_LEFT, Direction.TWIST_RIGHT, Direction.TILT_LEFT, Direction.TILT_RIGHT}
)
_MIRROR = {
    Direction.TWIST_LEFT: Direction.TWIST_RIGHT,
    Direction.TWIST_RIGHT: Direction.TWIST_LEFT,
    Direction.TILT_LEFT: Direction.TILT_RIGHT,
    Direction.TILT_RIGHT: Direction.TILT_LEFT,
}

_VECTORS = {
    Direction.FORWARD: ((1.0, 0.0), (1.0, 0.0)),
    Direction.BACKWARD: ((-1.0, 0.0), (-1.0, 0.0)),
    Direction.UP: ((0.0, 1.0), (0.0, 1.0)),
    Direction.DOWN: ((0.0, -1.0), (0.0, -1.0)),
    Direction.TWIST_LEFT: ((-1.0, 0.0), (1.0, 0.0)),
    Direction.TWIST_RIGHT: ((1.0, 0.0), (-1.0, 0.0)),
    Direction.TILT_LEFT: ((0.0, -1.0), (0.0, 1.0)),
    Direction.TILT_RIGHT: ((0.0, 1.0), (0.0, -1.0)),
}


def direction_vectors(d: Direction) -> tuple[tuple[float, float], tuple[float, float]]:
    """(left, right) unit vectors in pantograph-plane coordinates."""
    return _VECTORS[Direction(d)]


@dataclass(frozen=True)
class CueSpec:
    direction: Direction
    amplitude: float = 3.0  # mm
    ramp_out: float = 0.2  # s
    hold: float = 0.6  # s
    ramp_back: float = 0.5  # s
    ramp_shape: str = "minjerk"  # or "linear"

    def __post_init__(self):
        object.__setattr__(self, "direction", Direction(self.direction))
        if not self.amplitude >= 0.0:
            raise ValueError("cue amplitude must be non-negative")
        if min(self.ramp_out, self.hold, self.ramp_back) <= 0.0:
            raise ValueError("cue durations must be positive")
        if self.ramp_shape not in ("minjerk", "linear"):
            raise ValueError(f"unknown ramp shape {self.ramp_shape!r}")

    @property
    def duration(self) -> float:
        return self.ramp_out + self.hold + self.ramp_back


class CueFrame(NamedTuple):
    t: float
    left_offset: PlanarPoint
    right_offset: PlanarPoint


def _ramp(x: float, shape: str) -> float:
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    if shape == "linear":
        return x
    return x * x * x * (10.0 + x * (-15.0 + 6.0 * x))


def cue_profile(spec: CueSpec, t: float) -> float:
    """Normalised displacement s(t) in [0, 1]."""
    if t <= 0.0:
        return 0.0
    if t < spec.ramp_out:
        return _ramp(t / spec.ramp_out, spec.ramp_shape)
    t_back = spec.ramp_out + spec.hold
    if t <= t_back:
        return 1.0
    if t < t_back + spec.ramp_back:
        return 1.0 - _ramp((t - t_back) / spec.ramp_back, spec.ramp_shape)
    return 0.0


def cue_waveform(spec: CueSpec, t: float) -> CueFrame:
    """Left/right end-effector offsets (mm from the cue centre) at ``t`` s."""
    if t < 0:
        raise ValueError("cue time must be non-negative")
    s = cue_profile(spec, t) * spec.amplitude
    (lu, lv), (ru, rv) = direction_vectors(spec.direction)
    return CueFrame(t, PlanarPoint(s * lu, s * lv), PlanarPoint(s * ru, s * rv))


@dataclass
class CueRegionReport:
    ok: bool
    violations: list[tuple[float, str, PlanarPoint, str]] = field(default_factory=list)

    def __bool__(self):
        return self.ok

    def summary(self, limit: int = 5) -> str:
        if self.ok:
            return "cue stays inside the cue region"
        head = "; ".join(
            f"t={t:.3f}s {side} ({p.u:.3f}, {p.v:.3f}) mm: {why}"
            for t, side, p, why in self.violations[:limit]
        )
        more = len(self.violations) - limit
        return head + (f"; ... {more} more" if more > 0 else "")


def validate_cue_region(
    spec: CueSpec,
    cfg: PantographConfig,
    *,
    region_radius: float = 3.0,
    clearance: float = REACH_CLEARANCE,
    dt: float = 1e-3,
) -> CueRegionReport:
    """Check every 1 ms sample against the cue circle and the workspace."""
    center = workspace_center(cfg, region_radius, clearance)
    violations = []
    n = int(math.ceil(spec.duration / dt)) + 1
    for k in range(n):
        t = min(k * dt, spec.duration)
        frame = cue_waveform(spec, t)
        for side, off in (("left", frame.left_offset), ("right", frame.right_offset)):
            p = PlanarPoint(center.u + off.u, center.v + off.v)
            if math.hypot(off.u, off.v) > region_radius + 1e-9:
                violations.append((t, side, p, "outside cue region"))
            try:
                inverse_kinematics(cfg, p)
            except KinematicsError as exc:
                violations.append((t, side, p, str(exc)))
    return CueRegionReport(not violations, violations)


def default_cue_set(**overrides) -> list[CueSpec]:
    return [CueSpec(d, **overrides) for d in DIRECTIONS]


# Cue script files: JSON array of objects with these keys.
_SCRIPT_FIELDS = {
    "amplitude_mm": "amplitude",
    "ramp_out_s": "ramp_out",
    "hold_s": "hold",
    "ramp_back_s": "ramp_back",
}
_SCRIPT_KEYS = {"direction", "start_time_s", *_SCRIPT_FIELDS}


class CueScriptError(ValueError):
    pass


def parse_cue_script(data, defaults: dict | None = None) -> list[tuple[float, CueSpec]]:
    """Parse a decoded cue script into ``(start_time_s, CueSpec)`` pairs.

    ``defaults`` holds CueSpec keyword values for keys an entry omits.
    """
    base = {"amplitude": 3.0, "ramp_out": 0.2, "hold": 0.6, "ramp_back": 0.5}
    base.update(defaults or {})
    if not isinstance(data, list):
        raise CueScriptError("cue script must be a JSON array")
    out = []
    for i, item in enumerate(data):
        if not isinstance(item, dict):
            raise CueScriptError(f"entry {i}: expected an object")
        unknown = set(item) - _SCRIPT_KEYS
        if unknown:
            raise CueScriptError(f"entry {i}: unknown keys {sorted(unknown)}")
        if "direction" not in item:
            raise CueScriptError(f"entry {i}: missing 'direction'")
        try:
            kw = dict(base)
            for key, attr in _SCRIPT_FIELDS.items():
                if key in item:
                    kw[attr] = float(item[key])
            spec = CueSpec(Direction.parse(str(item["direction"])), **kw)
            start = float(item.get("start_time_s", 0.0))
        except (TypeError, ValueError) as exc:
            raise CueScriptError(f"entry {i}: {exc}") from None
        out.append((start, spec))
    return out


def load_cue_script(path, defaults: dict | None = None) -> list[tuple[float, CueSpec]]:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CueScriptError(f"{path}: {exc}") from None
    try:
        return parse_cue_script(data, defaults)
    except CueScriptError as exc:
        raise CueScriptError(f"{path}: {exc}") from None


def dump_cue_script(cues: list[tuple[float, CueSpec]]) -> str:
    return json.dumps(
        [
            {
                "direction": spec.direction.value,
                "amplitude_mm": spec.amplitude,
                "ramp_out_s": spec.ramp_out,
                "hold_s": spec.hold,
                "ramp_back_s": spec.ramp_back,
                "start_time_s": start,
            }
            for start, spec in cues
        ],
        indent=2,
    )
