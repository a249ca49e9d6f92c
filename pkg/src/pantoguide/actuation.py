"""Sampled-data simulation of the PD current-controlled pantograph motors.

Each motor is a rigid inertia (rotor inertia reflected through the gearbox)
with viscous damping, driven by a current-controlled amplifier.  The
controller runs once per control period: it reads the quantised encoder,
forms the angle error against the reference, estimates the error rate by a
low-passed backward difference and commands current through the PD law

    i = (kp * err + kd * err_rate) / (gear_ratio * kt)

clamped to the amplifier limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .cues import CueSpec, cue_waveform
from .kinematics import (
    JointAngles,
    PantographConfig,
    PlanarPoint,
    forward_kinematics,
    inverse_kinematics,
    workspace_center,
)


class NumericalBlowup(RuntimeError):
    pass


@dataclass(frozen=True)
class ControllerGains:
    kp: float = 5.5  # N·m/rad
    kd: float = 0.004  # N·m·s/rad

    def __post_init__(self):
        if not self.kp > 0:
            raise ValueError("kp must be positive")
        if not self.kd >= 0:
            raise ValueError("kd must be non-negative")


@dataclass(frozen=True)
class LoopConfig:
    control_rate: float = 830.0  # Hz
    motor_inertia_reflected: float = 1e-5  # kg·m² at the output shaft; 1e-6 is unstable at 830 Hz
    viscous_damping: float = 1e-5  # N·m·s/rad
    derivative_filter_cutoff: float = 50.0  # Hz
    max_speed: float = 1e5  # rad/s, sanity bound on the plant

    def __post_init__(self):
        if not self.control_rate > 0:
            raise ValueError("control rate must be positive")
        if not self.motor_inertia_reflected > 0:
            raise ValueError("reflected inertia must be positive")
        if self.viscous_damping < 0 or self.derivative_filter_cutoff <= 0:
            raise ValueError("bad damping or filter cutoff")

    @property
    def dt(self) -> float:
        return 1.0 / self.control_rate


@dataclass(frozen=True)
class MotorState:
    theta_out: float
    omega_out: float = 0.0
    time: float = 0.0
    last_encoder_count: int = 0


class CurrentCommand(NamedTuple):
    amps: float
    requested: float
    saturated: bool


def pd_current(
    gains: ControllerGains, cfg: PantographConfig, theta_err: float, theta_err_rate: float
) -> CurrentCommand:
    requested = (gains.kp * theta_err + gains.kd * theta_err_rate) / (
        cfg.gear_ratio * cfg.torque_constant_kt
    )
    limit = cfg.current_limit_imax
    amps = min(max(requested, -limit), limit)
    return CurrentCommand(amps, requested, amps != requested)


def counts_per_output_rev(cfg: PantographConfig) -> int:
    return int(round(cfg.gear_ratio * cfg.encoder_counts_per_motor_rev * cfg.quadrature_multiplier))


def encoder_read(cfg: PantographConfig, theta_out: float) -> int:
    """Quadrature count at the motor shaft for an output angle (rad)."""
    return math.floor(theta_out / (2 * math.pi) * counts_per_output_rev(cfg))


def encoder_step(cfg: PantographConfig) -> float:
    """Output-shaft angle of one encoder count (rad)."""
    return 2 * math.pi / counts_per_output_rev(cfg)


def plant_step(
    state: MotorState, i_cmd: float, dt: float, loop_cfg: LoopConfig, cfg: PantographConfig
) -> MotorState:
    """Semi-implicit Euler step of the geared motor."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    i = min(max(i_cmd, -cfg.current_limit_imax), cfg.current_limit_imax)
    torque = (
        cfg.gear_ratio * cfg.torque_constant_kt * cfg.gearbox_efficiency * i
        - loop_cfg.viscous_damping * state.omega_out
    )
    omega = state.omega_out + torque / loop_cfg.motor_inertia_reflected * dt
    if not abs(omega) <= loop_cfg.max_speed:
        raise NumericalBlowup(f"output speed {omega:.3g} rad/s exceeds sanity bound")
    theta = state.theta_out + omega * dt
    return MotorState(theta, omega, state.time + dt, encoder_read(cfg, theta))


class _JointLoop:
    """Controller + plant for one motor, encoder zeroed at the start pose."""

    def __init__(self, theta0, gains, loop_cfg, cfg):
        self.gains, self.loop_cfg, self.cfg = gains, loop_cfg, cfg
        self.state = MotorState(theta0, 0.0, 0.0, encoder_read(cfg, theta0))
        self.count0 = self.state.last_encoder_count
        self.theta0 = theta0
        self.step_rad = encoder_step(cfg)
        dt = loop_cfg.dt
        tau = 1.0 / (2 * math.pi * loop_cfg.derivative_filter_cutoff)
        self.alpha = dt / (dt + tau)
        self.prev_err = None
        self.rate = 0.0

    def measured(self) -> float:
        return self.theta0 + (self.state.last_encoder_count - self.count0) * self.step_rad

    def control(self, theta_ref: float) -> CurrentCommand:
        err = theta_ref - self.measured()
        if self.prev_err is not None:
            raw = (err - self.prev_err) / self.loop_cfg.dt
            self.rate += self.alpha * (raw - self.rate)
        self.prev_err = err
        return pd_current(self.gains, self.cfg, err, self.rate)

    def advance(self, amps: float) -> None:
        self.state = plant_step(self.state, amps, self.loop_cfg.dt, self.loop_cfg, self.cfg)


@dataclass
class TrackingResult:
    t: np.ndarray
    ref_left: np.ndarray  # (n, 2) mm, absolute pantograph coordinates
    act_left: np.ndarray
    ref_right: np.ndarray
    act_right: np.ndarray
    i_left: np.ndarray  # A
    i_right: np.ndarray
    saturation_fraction: float

    @property
    def error_left(self) -> np.ndarray:
        return self.act_left - self.ref_left

    @property
    def error_right(self) -> np.ndarray:
        return self.act_right - self.ref_right

    @property
    def max_error(self) -> float:
        """Largest end-effector position error over both pantographs (mm)."""
        return float(
            max(np.hypot(*self.error_left.T).max(), np.hypot(*self.error_right.T).max())
        )

    @property
    def rms_error(self) -> float:
        sq = np.concatenate([(self.error_left**2).sum(1), (self.error_right**2).sum(1)])
        return float(np.sqrt(sq.mean()))

    def per_dof_max_error(self) -> dict[str, float]:
        err = np.abs(np.concatenate([self.error_left, self.error_right]))
        return {"u_mm": float(err[:, 0].max()), "v_mm": float(err[:, 1].max())}

    def summary(self) -> dict:
        return {
            "max_error_mm": self.max_error,
            "rms_error_mm": self.rms_error,
            "per_dof_max_error_mm": self.per_dof_max_error(),
            "saturation_fraction": self.saturation_fraction,
        }

    def to_csv(self, path, t_offset: float = 0.0) -> None:
        cols = np.column_stack(
            [
                self.t + t_offset,
                self.ref_left,
                self.act_left,
                self.ref_right,
                self.act_right,
                self.i_left,
                self.i_right,
            ]
        )
        header = (
            "t_s,ref_left_u,ref_left_v,act_left_u,act_left_v,"
            "ref_right_u,ref_right_v,act_right_u,act_right_v,i_left_A,i_right_A"
        )
        np.savetxt(path, cols, delimiter=",", header=header, comments="", fmt="%.9f")


def track_trajectory(
    cue: CueSpec,
    cfg: PantographConfig | None = None,
    gains: ControllerGains | None = None,
    loop_cfg: LoopConfig | None = None,
    *,
    center: PlanarPoint | None = None,
    tail: float = 0.2,
) -> TrackingResult:
    """Simulate both pantographs rendering ``cue`` about the cue centre.

    Both motors of each pantograph start at rest on the reference, so a
    zero-amplitude cue produces no motion at all.  The run covers the cue
    plus ``tail`` seconds.
    """
    cfg = cfg or PantographConfig()
    gains = gains or ControllerGains()
    loop_cfg = loop_cfg or LoopConfig()
    if center is None:
        center = workspace_center(cfg)
    dt = loop_cfg.dt
    n = int(math.floor((cue.duration + tail) / dt + 1e-9)) + 1
    t = np.arange(n) * dt

    refs = {"left": np.empty((n, 2)), "right": np.empty((n, 2))}
    ref_q = {"left": np.empty((n, 2)), "right": np.empty((n, 2))}
    for k in range(n):
        frame = cue_waveform(cue, float(t[k]))
        for side, off in (("left", frame.left_offset), ("right", frame.right_offset)):
            p = PlanarPoint(center.u + off.u, center.v + off.v)
            refs[side][k] = p
            ref_q[side][k] = inverse_kinematics(cfg, p)

    acts = {}
    currents = {}
    saturated = 0
    for side in ("left", "right"):
        joints = [_JointLoop(ref_q[side][0, j], gains, loop_cfg, cfg) for j in range(2)]
        act = np.empty((n, 2))
        amps = np.empty((n, 2))
        for k in range(n):
            act[k] = forward_kinematics(
                cfg, JointAngles(joints[0].state.theta_out, joints[1].state.theta_out)
            )
            for j, joint in enumerate(joints):
                cmd = joint.control(ref_q[side][k, j])
                amps[k, j] = cmd.amps
                saturated += cmd.saturated
                joint.advance(cmd.amps)
        acts[side] = act
        currents[side] = amps

    # one current column per pantograph: the larger-magnitude of its two motors
    def dominant(a):
        pick = np.abs(a[:, 1]) > np.abs(a[:, 0])
        return np.where(pick, a[:, 1], a[:, 0])

    return TrackingResult(
        t,
        refs["left"],
        acts["left"],
        refs["right"],
        acts["right"],
        dominant(currents["left"]),
        dominant(currents["right"]),
        saturated / (4 * n),
    )


def with_rate(loop_cfg: LoopConfig, rate: float) -> LoopConfig:
    return replace(loop_cfg, control_rate=rate)
