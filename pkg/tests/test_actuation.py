import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pantoguide import actuation as act
from pantoguide.cues import CueSpec, Direction, default_cue_set
from pantoguide.kinematics import KinematicsError, PantographConfig, workspace_center


@pytest.fixture(scope="module")
def tracked():
    return {spec.direction: act.track_trajectory(spec) for spec in default_cue_set()}


def test_pd_current_zero_error(cfg):
    cmd = act.pd_current(act.ControllerGains(), cfg, 0.0, 0.0)
    assert cmd.amps == 0.0 and not cmd.saturated


def test_pd_current_hand_value_and_clamp(cfg):
    cmd = act.pd_current(act.ControllerGains(), cfg, 0.1, 0.0)
    assert cmd.requested == pytest.approx(5.5 * 0.1 / (64 * 0.00196))
    assert cmd.requested == pytest.approx(4.3845, abs=1e-4)
    assert cmd.amps == 1.0 and cmd.saturated
    neg = act.pd_current(act.ControllerGains(), cfg, -0.1, 0.0)
    assert neg.amps == -1.0 and neg.saturated


@given(st.floats(-1e-3, 1e-3), st.floats(-0.1, 0.1), st.floats(0.0, 1.0))
def test_pd_current_linear_below_saturation(e, edot, alpha):
    cfg = PantographConfig()
    g = act.ControllerGains()
    base = act.pd_current(g, cfg, e, edot)
    scaled = act.pd_current(g, cfg, alpha * e, alpha * edot)
    assert not base.saturated
    assert scaled.amps == pytest.approx(alpha * base.amps, rel=1e-12, abs=1e-15)
    # independent restatement of the control law
    assert base.amps == pytest.approx((5.5 * e + 0.004 * edot) / (64 * 0.00196), rel=1e-12, abs=1e-15)


def test_gains_validation():
    with pytest.raises(ValueError):
        act.ControllerGains(kp=0.0)
    with pytest.raises(ValueError):
        act.ControllerGains(kd=-1.0)


def test_encoder_counts(cfg):
    assert act.encoder_read(cfg, 0.0) == 0
    assert act.counts_per_output_rev(cfg) == 12800
    assert act.encoder_read(cfg, 2 * math.pi) == 12800
    assert act.encoder_step(cfg) == pytest.approx(4.909e-4, abs=1e-7)


@given(st.floats(-20.0, 20.0), st.floats(-20.0, 20.0))
def test_encoder_monotone_and_within_one_count(a, b):
    cfg = PantographConfig()
    lo, hi = sorted((a, b))
    assert act.encoder_read(cfg, lo) <= act.encoder_read(cfg, hi)
    step = act.encoder_step(cfg)
    assert abs(a - act.encoder_read(cfg, a) * step) <= step


def test_plant_rest_is_equilibrium(cfg):
    loop = act.LoopConfig()
    s = act.MotorState(0.3, 0.0, 1.0, act.encoder_read(cfg, 0.3))
    nxt = act.plant_step(s, 0.0, loop.dt, loop, cfg)
    assert (nxt.theta_out, nxt.omega_out, nxt.last_encoder_count) == (
        s.theta_out,
        s.omega_out,
        s.last_encoder_count,
    )
    assert nxt.time == pytest.approx(1.0 + loop.dt)


def test_plant_constant_current_closed_form(cfg):
    # omega_{k+1} = omega_k + dt (T - c omega_k)/J  =>  omega_k = w_inf (1 - r^k)
    loop = act.LoopConfig(viscous_damping=2e-4)
    amps = 0.01
    torque = cfg.gear_ratio * cfg.torque_constant_kt * amps
    w_inf = torque / loop.viscous_damping
    r = 1.0 - loop.dt * loop.viscous_damping / loop.motor_inertia_reflected
    s = act.MotorState(0.0)
    prev = 0.0
    for k in range(1, 2001):
        s = act.plant_step(s, amps, loop.dt, loop, cfg)
        assert s.omega_out == pytest.approx(w_inf * (1 - r**k), rel=1e-9)
        assert s.omega_out >= prev
        prev = s.omega_out
    assert s.omega_out <= w_inf
    assert s.omega_out == pytest.approx(w_inf, rel=1e-9)


def test_plant_passive_with_zero_input(cfg):
    loop = act.LoopConfig()
    s = act.MotorState(0.0, 5.0)
    energy = 0.5 * loop.motor_inertia_reflected * s.omega_out**2
    for _ in range(500):
        s = act.plant_step(s, 0.0, loop.dt, loop, cfg)
        e = 0.5 * loop.motor_inertia_reflected * s.omega_out**2
        assert e < energy
        energy = e


def test_plant_current_clamped(cfg):
    loop = act.LoopConfig()
    a = act.plant_step(act.MotorState(0.0), 50.0, loop.dt, loop, cfg)
    b = act.plant_step(act.MotorState(0.0), cfg.current_limit_imax, loop.dt, loop, cfg)
    assert a == b


def test_plant_blowup_and_bad_dt(cfg):
    loop = act.LoopConfig(max_speed=1.0)
    with pytest.raises(act.NumericalBlowup):
        act.plant_step(act.MotorState(0.0), 1.0, 0.01, loop, cfg)
    with pytest.raises(ValueError):
        act.plant_step(act.MotorState(0.0), 0.0, 0.0, loop, cfg)


def test_default_inertia_loop_is_stable(tracked):
    for res in tracked.values():
        assert np.isfinite(res.act_left).all()


def test_all_cues_track_within_target(tracked):
    for d, res in tracked.items():
        assert res.max_error < 0.3, d
        assert res.rms_error <= res.max_error


def test_tracking_stays_in_inflated_circle(cfg, tracked):
    c = workspace_center(cfg)
    for res in tracked.values():
        for path in (res.act_left, res.act_right):
            r = np.hypot(path[:, 0] - c.u, path[:, 1] - c.v)
            assert r.max() <= 3.0 + res.max_error + 1e-9


def test_zero_amplitude_cue_has_no_error():
    res = act.track_trajectory(CueSpec(Direction.UP, amplitude=0.0))
    assert res.max_error == pytest.approx(0.0, abs=1e-12)
    assert np.all(res.i_left == 0.0) and res.saturation_fraction == 0.0


def test_doubling_rate_does_not_hurt(tracked):
    spec = CueSpec(Direction.UP)
    fast = act.track_trajectory(spec, loop_cfg=act.with_rate(act.LoopConfig(), 1660.0))
    assert fast.max_error <= 1.1 * tracked[Direction.UP].max_error


def test_tracking_deterministic(tracked):
    again = act.track_trajectory(CueSpec(Direction.TILT_LEFT))
    ref = tracked[Direction.TILT_LEFT]
    assert np.array_equal(again.act_left, ref.act_left)
    assert np.array_equal(again.i_right, ref.i_right)


def test_tracking_duration_and_csv(tmp_path, tracked):
    res = tracked[Direction.FORWARD]
    loop = act.LoopConfig()
    assert res.t[-1] == pytest.approx(1.3 + 0.2, abs=loop.dt)
    path = tmp_path / "track.csv"
    res.to_csv(path, t_offset=2.0)
    lines = path.read_text().splitlines()
    assert lines[0] == (
        "t_s,ref_left_u,ref_left_v,act_left_u,act_left_v,"
        "ref_right_u,ref_right_v,act_right_u,act_right_v,i_left_A,i_right_A"
    )
    assert len(lines) == res.t.size + 1
    assert float(lines[1].split(",")[0]) == pytest.approx(2.0)


def test_summary_fields(tracked):
    s = tracked[Direction.DOWN].summary()
    assert set(s) == {"max_error_mm", "rms_error_mm", "per_dof_max_error_mm", "saturation_fraction"}
    assert 0.0 <= s["saturation_fraction"] <= 1.0


def test_spec_inertia_is_unstable():
    # documented deviation: the 1e-6 kg m^2 plant diverges under the default gains
    loop = act.LoopConfig(motor_inertia_reflected=1e-6)
    with pytest.raises((act.NumericalBlowup, KinematicsError)):
        act.track_trajectory(CueSpec(Direction.UP), loop_cfg=loop)
