"""Single-file device configuration (YAML) with unit-suffixed keys.

Every key names its unit; unknown sections or keys are rejected.  Missing
keys keep their defaults, so a file only needs the values it overrides.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .actuation import ControllerGains, LoopConfig
from .analysis.params import AnalysisConfig
from .kinematics import REACH_CLEARANCE, PantographConfig

ENV_VAR = "PANTOGUIDE_CONFIG"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CueDefaults:
    amplitude: float = 3.0  # mm
    ramp_out: float = 0.2  # s
    hold: float = 0.6  # s
    ramp_back: float = 0.5  # s
    ramp_shape: str = "minjerk"
    region_radius: float = 3.0  # mm
    reach_clearance: float = REACH_CLEARANCE  # mm between cue disc and singular reach limits

    def spec_kwargs(self) -> dict:
        return {
            "amplitude": self.amplitude,
            "ramp_out": self.ramp_out,
            "hold": self.hold,
            "ramp_back": self.ramp_back,
            "ramp_shape": self.ramp_shape,
        }


# file key -> dataclass field, per section
_KEYS = {
    "pantograph": (
        PantographConfig,
        {
            "upper_link_mm": "upper_link_a",
            "lower_link_mm": "lower_link_b",
            "base_separation_mm": "base_separation_d",
            "joint1_range_rad": None,
            "joint2_range_rad": None,
            "torque_constant_nm_per_a": "torque_constant_kt",
            "gear_ratio": "gear_ratio",
            "current_limit_a": "current_limit_imax",
            "gearbox_efficiency": "gearbox_efficiency",
            "encoder_counts_per_motor_rev": "encoder_counts_per_motor_rev",
            "quadrature_multiplier": "quadrature_multiplier",
            "singularity_tol_mm2_per_rad2": "singularity_tol",
        },
    ),
    "controller": (
        ControllerGains,
        {"kp_nm_per_rad": "kp", "kd_nm_s_per_rad": "kd"},
    ),
    "loop": (
        LoopConfig,
        {
            "control_rate_hz": "control_rate",
            "reflected_inertia_kg_m2": "motor_inertia_reflected",
            "viscous_damping_nm_s_per_rad": "viscous_damping",
            "derivative_filter_cutoff_hz": "derivative_filter_cutoff",
            "max_speed_rad_per_s": "max_speed",
        },
    ),
    "cue": (
        CueDefaults,
        {
            "amplitude_mm": "amplitude",
            "ramp_out_s": "ramp_out",
            "hold_s": "hold",
            "ramp_back_s": "ramp_back",
            "ramp_shape": "ramp_shape",
            "region_radius_mm": "region_radius",
            "reach_clearance_mm": "reach_clearance",
        },
    ),
    "analysis": (
        AnalysisConfig,
        {
            "tracker_rate_hz": "tracker_rate",
            "baseline_window_s": "baseline_window",
            "smoothing_cutoff_hz": "smoothing_cutoff",
            "smoothing_order": "smoothing_order",
            "delay_threshold_x_floor": "delay_threshold",
            "min_noise_floor_mm_per_s2": "min_noise_floor",
            "lever_arm_mm": "lever_arm",
            "alpha": "alpha",
            "ci_level": "ci_level",
        },
    ),
}


@dataclass(frozen=True)
class DeviceConfig:
    pantograph: PantographConfig = field(default_factory=PantographConfig)
    controller: ControllerGains = field(default_factory=ControllerGains)
    loop: LoopConfig = field(default_factory=LoopConfig)
    cue: CueDefaults = field(default_factory=CueDefaults)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)


def _coerce(value, like, where):
    if isinstance(like, bool) or like is None:
        return value
    if isinstance(like, int) and not isinstance(like, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if isinstance(like, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if isinstance(like, str) and not isinstance(value, str):
        raise ConfigError(f"{where}: expected a string, got {value!r}")
    return value


def _range(value, where):
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
    ):
        raise ConfigError(f"{where}: expected [min, max] in radians")
    return (float(value[0]), float(value[1]))


def _section(name, data) -> object:
    cls, keys = _KEYS[name]
    base = cls()
    if data is None:
        return base
    if not isinstance(data, dict):
        raise ConfigError(f"[{name}] must be a mapping")
    unknown = sorted(set(data) - set(keys))
    if unknown:
        raise ConfigError(f"[{name}] unknown keys: {', '.join(map(str, unknown))}")
    kw = {}
    ranges = list(base.joint_angle_range) if name == "pantograph" else None
    for key, value in data.items():
        where = f"{name}.{key}"
        if key in ("joint1_range_rad", "joint2_range_rad"):
            ranges[int(key[5]) - 1] = _range(value, where)
            continue
        attr = keys[key]
        current = getattr(base, attr)
        if value is None and attr == "smoothing_cutoff":
            kw[attr] = None
            continue
        kw[attr] = _coerce(value, current, where)
    if ranges is not None:
        kw["joint_angle_range"] = tuple(ranges)
    try:
        return replace(base, **kw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[{name}] {exc}") from None


def parse_config(text: str) -> DeviceConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"not valid YAML: {exc}") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping of sections")
    unknown = sorted(set(data) - set(_KEYS))
    if unknown:
        raise ConfigError(f"unknown sections: {', '.join(map(str, unknown))}")
    return DeviceConfig(**{name: _section(name, data.get(name)) for name in _KEYS})


def emit_config(cfg: DeviceConfig | None = None) -> str:
    cfg = cfg or DeviceConfig()
    doc = {}
    for name, (_, keys) in _KEYS.items():
        obj = getattr(cfg, name)
        sec = {}
        for key, attr in keys.items():
            if key.startswith("joint"):
                sec[key] = list(obj.joint_angle_range[int(key[5]) - 1])
            else:
                sec[key] = getattr(obj, attr)
        doc[name] = sec
    header = "# pantoguide device configuration; units are in the key names\n"
    return header + yaml.safe_dump(doc, sort_keys=False, default_flow_style=False)


def load_config(path=None) -> DeviceConfig:
    """Explicit path, else $PANTOGUIDE_CONFIG, else defaults."""
    path = path or os.environ.get(ENV_VAR)
    if not path:
        return DeviceConfig()
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror}") from None
    try:
        return parse_config(text)
    except ConfigError as exc:
        raise ConfigError(f"{p}: {exc}") from None


def config_fields() -> dict[str, list[str]]:
    """Section -> file keys, for help text."""
    return {name: list(keys) for name, (_, keys) in _KEYS.items()}

