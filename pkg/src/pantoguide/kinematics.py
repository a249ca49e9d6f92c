"""Planar five-bar pantograph kinematics and force capability.

Coordinates are millimetres in the pantograph plane: ``u`` points distally
(device +x), ``v`` points up (device +z), origin midway between the motor
axes.  Motor angles are output-shaft angles measured counterclockwise from
+u.  The working mode is elbows-outward with the end-effector below the
elbow line: walking from the left elbow to the right elbow, the
end-effector lies on the clockwise side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np


class KinematicsError(ValueError):
    """Base class for kinematics domain errors."""


class UnreachableConfiguration(KinematicsError):
    pass


class SingularBranch(KinematicsError):
    pass


class OutOfWorkspace(KinematicsError):
    pass


class JointLimit(KinematicsError):
    pass


class SingularConfiguration(KinematicsError):
    pass


class EmptyWorkspace(KinematicsError):
    pass


@dataclass(frozen=True)
class PantographConfig:
    """Linkage geometry plus the motor/encoder/amplifier constants."""

    upper_link_a: float = 10.0  # mm
    lower_link_b: float = 13.0  # mm
    base_separation_d: float = 15.0  # mm, not given for the device; assumed
    joint_angle_range: tuple[tuple[float, float], tuple[float, float]] = (
        (-math.pi, math.pi),
        (-math.pi, math.pi),
    )
    torque_constant_kt: float = 0.00196  # N·m/A
    gear_ratio: float = 64.0
    current_limit_imax: float = 1.0  # A
    gearbox_efficiency: float = 1.0
    encoder_counts_per_motor_rev: int = 50
    quadrature_multiplier: int = 4
    singularity_tol: float = 1e-6  # |det J| in mm^2/rad^2

    def __post_init__(self):
        if self.upper_link_a <= 0 or self.lower_link_b <= 0:
            raise ValueError("link lengths must be positive")
        if self.base_separation_d < 0:
            raise ValueError("base separation must be non-negative")
        if 2 * (self.upper_link_a + self.lower_link_b) <= self.base_separation_d:
            raise EmptyWorkspace("2(a+b) must exceed the base separation")
        for lo, hi in self.joint_angle_range:
            if not lo < hi:
                raise ValueError(f"bad joint range ({lo}, {hi})")
        if self.torque_constant_kt <= 0 or self.gear_ratio <= 0:
            raise ValueError("torque constant and gear ratio must be positive")
        if self.current_limit_imax <= 0:
            raise ValueError("current limit must be positive")

    @property
    def max_joint_torque(self) -> float:
        """Output-shaft torque limit in N·m."""
        return (
            self.gear_ratio
            * self.torque_constant_kt
            * self.current_limit_imax
            * self.gearbox_efficiency
        )

    @property
    def left_base(self) -> tuple[float, float]:
        return (-0.5 * self.base_separation_d, 0.0)

    @property
    def right_base(self) -> tuple[float, float]:
        return (0.5 * self.base_separation_d, 0.0)


class PlanarPoint(NamedTuple):
    u: float
    v: float


class JointAngles(NamedTuple):
    theta1: float
    theta2: float


def _cross(ax: float, ay: float, bx: float, by: float) -> float:
    return ax * by - ay * bx


def elbows(cfg: PantographConfig, q: JointAngles) -> tuple[PlanarPoint, PlanarPoint]:
    (x1, y1), (x2, y2) = cfg.left_base, cfg.right_base
    a = cfg.upper_link_a
    e1 = PlanarPoint(x1 + a * math.cos(q.theta1), y1 + a * math.sin(q.theta1))
    e2 = PlanarPoint(x2 + a * math.cos(q.theta2), y2 + a * math.sin(q.theta2))
    return e1, e2


def _check_joint_range(cfg: PantographConfig, q: JointAngles) -> JointAngles:
    out = []
    for theta, (lo, hi) in zip(q, cfg.joint_angle_range):
        # wrap into [lo, lo + 2π) before testing the upper bound
        wrapped = lo + math.fmod(theta - lo, 2 * math.pi)
        if wrapped < lo:
            wrapped += 2 * math.pi
        if wrapped > hi + 1e-12:
            raise JointLimit(f"joint angle {theta:.6f} rad outside [{lo:.6f}, {hi:.6f}]")
        out.append(wrapped)
    return JointAngles(*out)


def forward_kinematics(cfg: PantographConfig, q: JointAngles, *, tol: float = 1e-9) -> PlanarPoint:
    """End-effector position for motor angles ``q`` on the working branch.

    Raises
    ------
    UnreachableConfiguration
        If the two distal-link circles do not intersect.
    SingularBranch
        If the two intersections coincide (end-effector on the elbow line).
    """
    q = JointAngles(*q)
    _check_joint_range(cfg, q)
    e1, e2 = elbows(cfg, q)
    b = cfg.lower_link_b
    dx, dy = e2.u - e1.u, e2.v - e1.v
    dist = math.hypot(dx, dy)
    if dist > 2 * b or dist == 0.0:
        raise UnreachableConfiguration(
            f"elbow separation {dist:.6f} mm incompatible with distal links {b} mm"
        )
    h2 = b * b - 0.25 * dist * dist
    h = math.sqrt(max(h2, 0.0))
    if h < tol:
        raise SingularBranch("end-effector solutions coincide")
    mx, my = e1.u + 0.5 * dx, e1.v + 0.5 * dy
    # clockwise normal of the directed elbow line E1 -> E2
    nx, ny = dy / dist, -dx / dist
    return PlanarPoint(mx + h * nx, my + h * ny)


def _circle_intersections(cx, cy, r0, px, py, r1):
    dx, dy = px - cx, py - cy
    dist = math.hypot(dx, dy)
    if dist == 0.0 or dist > r0 + r1 or dist < abs(r0 - r1):
        return None
    along = (r0 * r0 - r1 * r1 + dist * dist) / (2 * dist)
    h = math.sqrt(max(r0 * r0 - along * along, 0.0))
    mx, my = cx + along * dx / dist, cy + along * dy / dist
    ox, oy = -dy / dist * h, dx / dist * h
    # first: counterclockwise side of C -> P, second: clockwise side
    return (mx + ox, my + oy), (mx - ox, my - oy)


# assembly modes tried by IK, as (left elbow on CW side of A1->P, right
# elbow on CW side of A2->P); both are mirror-symmetric
_IK_MODES = ((True, False), (False, True))


def inverse_kinematics(cfg: PantographConfig, p: PlanarPoint) -> JointAngles:
    """Motor angles placing the end-effector at ``p``.

    Elbows-outward is tried first; where that assembly would put the point
    on the other forward-kinematics branch, the mirror-symmetric
    elbows-inward assembly is used.  Either way ``forward_kinematics`` of
    the result returns ``p``.

    The working branch keeps the end-effector below the motor line (v < 0).
    Raises ``OutOfWorkspace`` when neither assembly reaches ``p`` on the
    working branch and ``JointLimit`` when the solution leaves the
    configured joint range.
    """
    pu, pv = float(p[0]), float(p[1])
    a, b = cfg.upper_link_a, cfg.lower_link_b
    if not pv < 0.0:
        raise OutOfWorkspace(f"point ({pu:.3f}, {pv:.3f}) mm is out of workspace (not below the motor line)")
    legs = []
    for bx, by in (cfg.left_base, cfg.right_base):
        sol = _circle_intersections(bx, by, a, pu, pv, b)
        if sol is None:
            raise OutOfWorkspace(f"point ({pu:.3f}, {pv:.3f}) mm is out of workspace")
        legs.append((bx, by, sol))
    for mode in _IK_MODES:
        angles = []
        for (bx, by, (ccw, cw)), use_cw in zip(legs, mode):
            ex, ey = cw if use_cw else ccw
            angles.append(math.atan2(ey - by, ex - bx))
        q = JointAngles(*angles)
        e1, e2 = elbows(cfg, q)
        # the point must sit on the working branch of the forward solution
        if _cross(e2.u - e1.u, e2.v - e1.v, pu - e1.u, pv - e1.v) < 0.0:
            return _check_joint_range(cfg, q)
    raise OutOfWorkspace(
        f"point ({pu:.3f}, {pv:.3f}) mm is out of workspace (no assembly on the working branch)"
    )


def jacobian(cfg: PantographConfig, q: JointAngles) -> np.ndarray:
    """2x2 velocity Jacobian (mm/rad) at motor angles ``q``.

    Differentiating ``|P - E_i|^2 = b^2`` gives ``R dP = D dq`` with rows
    ``R_i = (P - E_i)`` and ``D_ii = (P - E_i) . dE_i/dtheta_i``.
    """
    q = JointAngles(*q)
    p = forward_kinematics(cfg, q)
    e1, e2 = elbows(cfg, q)
    a = cfg.upper_link_a
    r = np.array([[p.u - e1.u, p.v - e1.v], [p.u - e2.u, p.v - e2.v]])
    t1 = (-a * math.sin(q.theta1), a * math.cos(q.theta1))
    t2 = (-a * math.sin(q.theta2), a * math.cos(q.theta2))
    d = np.diag([r[0, 0] * t1[0] + r[0, 1] * t1[1], r[1, 0] * t2[0] + r[1, 1] * t2[1]])
    det_r = r[0, 0] * r[1, 1] - r[0, 1] * r[1, 0]
    if abs(det_r) < cfg.singularity_tol:
        raise SingularConfiguration("distal links collinear")
    jac = np.linalg.solve(r, d)
    if abs(np.linalg.det(jac)) < cfg.singularity_tol:
        raise SingularConfiguration("proximal and distal links aligned")
    return jac


def isotropic_force_from_jacobian(cfg: PantographConfig, jac: np.ndarray) -> float:
    # columns are mm/rad; torques are N·m, so convert lever arms to metres
    col_norms = np.hypot(jac[0], jac[1]) * 1e-3
    return float(cfg.max_joint_torque / col_norms.max())


def isotropic_force(cfg: PantographConfig, p: PlanarPoint) -> float:
    """Largest force (N) the end-effector can exert in every direction at ``p``.

    This is the radius of the disc inscribed in ``{F : |J^T F|_i <= tau_max}``,
    i.e. ``min_i tau_max / |column_i(J)|``.  Returns 0 at singular
    configurations.
    """
    q = inverse_kinematics(cfg, p)
    try:
        jac = jacobian(cfg, q)
    except (SingularConfiguration, SingularBranch):
        return 0.0
    return isotropic_force_from_jacobian(cfg, jac)


@dataclass(frozen=True)
class ForceMap:
    u: np.ndarray  # (nu,)
    v: np.ndarray  # (nv,)
    force: np.ndarray  # (nv, nu) N, NaN where unreachable
    reachable: np.ndarray = field(repr=False)  # (nv, nu) bool

    def rows(self):
        """Row-major ``(u, v, force, reachable)`` records, v outer, u inner."""
        for j, vv in enumerate(self.v):
            for i, uu in enumerate(self.u):
                ok = bool(self.reachable[j, i])
                yield float(uu), float(vv), float(self.force[j, i]) if ok else 0.0, ok

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("u_mm,v_mm,force_N,reachable\n")
            for uu, vv, f, ok in self.rows():
                fh.write(f"{uu:.6f},{vv:.6f},{f:.9f},{int(ok)}\n")


def _symmetric_axis(lo: float, hi: float, n: int) -> np.ndarray:
    axis = np.linspace(lo, hi, n)
    if math.isclose(lo, -hi):
        # exact mirror pairs so symmetry is not at the mercy of linspace rounding
        half = axis[: n // 2]
        axis[n - n // 2 :] = -half[::-1]
        if n % 2:
            axis[n // 2] = 0.0
    return axis


def force_map(
    cfg: PantographConfig,
    resolution: int | tuple[int, int] = 100,
    bounds: tuple[float, float, float, float] = (-30.0, 30.0, -30.0, 30.0),
) -> ForceMap:
    """Sample ``isotropic_force`` on a ``(u_min, u_max, v_min, v_max)`` grid."""
    nu, nv = (resolution, resolution) if isinstance(resolution, int) else resolution
    if nu < 2 or nv < 2:
        raise ValueError("grid resolution must be at least 2x2")
    u_lo, u_hi, v_lo, v_hi = bounds
    us = _symmetric_axis(u_lo, u_hi, nu)
    vs = np.linspace(v_lo, v_hi, nv)
    force = np.full((nv, nu), np.nan)
    reach = np.zeros((nv, nu), dtype=bool)
    for j, vv in enumerate(vs):
        for i, uu in enumerate(us):
            try:
                force[j, i] = isotropic_force(cfg, PlanarPoint(uu, vv))
            except (OutOfWorkspace, JointLimit):
                continue
            reach[j, i] = True
    return ForceMap(us, vs, force, reach)


def _force_or_none(cfg: PantographConfig, u: float, v: float) -> float | None:
    try:
        return isotropic_force(cfg, PlanarPoint(u, v))
    except (OutOfWorkspace, JointLimit):
        return None


_RING = tuple((math.cos(2 * math.pi * k / 72), math.sin(2 * math.pi * k / 72)) for k in range(72))


REACH_CLEARANCE = 1.0  # mm kept between the cue disc and the singular reach limits


def disc_clearance(cfg: PantographConfig, center: PlanarPoint, radius: float) -> float:
    """Smallest distance (mm) from a disc to the edges of the working region.

    The edges are each leg's fully stretched (``a + b``) and fully folded
    (``|a - b|``) circles about its motor axis and the motor line ``v = 0``.
    Negative when the disc crosses an edge.
    """
    a, b = cfg.upper_link_a, cfg.lower_link_b
    gaps = [-(center[1] + radius)]
    for bx, by in (cfg.left_base, cfg.right_base):
        dist = math.hypot(center[0] - bx, center[1] - by)
        gaps.append((a + b) - (dist + radius))
        gaps.append((dist - radius) - abs(a - b))
    return min(gaps)


def region_force(
    cfg: PantographConfig,
    center: PlanarPoint,
    radius: float,
    floor: float = -math.inf,
    first: int = 0,
    clearance: float = 0.0,
) -> tuple[float, int]:
    """Worst-case isotropic force over a disc, sampled at its centre and rim.

    Returns ``(force, rim_index)`` where ``rim_index`` is the worst rim
    sample (-1 for the centre).  Discs closer than ``clearance`` to the
    singular reach limits, and discs with an unreachable sample, give
    ``-inf``.  Rim samples are visited starting at ``first`` and evaluation
    stops as soon as the running minimum drops to ``floor``.
    """
    cu, cv = center
    if clearance > 0.0 and disc_clearance(cfg, center, radius) < clearance:
        return -math.inf, -1
    worst = _force_or_none(cfg, cu, cv)
    if worst is None:
        return -math.inf, -1
    worst_idx = -1
    if radius > 0.0:
        n = len(_RING)
        for k in range(n):
            idx = (first + k) % n
            cx, cy = _RING[idx]
            f = _force_or_none(cfg, cu + radius * cx, cv + radius * cy)
            if f is None:
                return -math.inf, idx
            if f < worst:
                worst, worst_idx = f, idx
            if worst <= floor:
                break
    return worst, worst_idx


@lru_cache(maxsize=64)
def workspace_center(
    cfg: PantographConfig, radius: float = 3.0, clearance: float = REACH_CLEARANCE
) -> PlanarPoint:
    """Centre of the cue region.

    Maximises the worst-case isotropic force over the ``radius`` disc among
    discs that stay ``clearance`` mm inside the working region (see
    ``disc_clearance``).  Isotropic force grows without bound towards the
    doubly stretched tip, so without the clearance the optimum slides onto
    the singular reach limit.  ``radius=0, clearance=0`` gives the
    pointwise argmax.

    Search: 1 mm grid over the reach envelope, then three rounds of 10x
    refinement on a 21x21 grid spanning one previous step either side.
    """
    reach = cfg.upper_link_a + cfg.lower_link_b
    half_u = math.ceil(0.5 * cfg.base_separation_d + reach)
    best = None
    best_f = -math.inf
    hint = 0
    for vv in np.arange(-math.ceil(reach), math.ceil(reach) + 1, 1.0):
        for uu in np.arange(-half_u, half_u + 1, 1.0):
            f, idx = region_force(
                cfg, PlanarPoint(float(uu), float(vv)), radius, best_f, hint, clearance
            )
            if idx >= 0:
                hint = idx
            if f > best_f:
                best, best_f = (float(uu), float(vv)), f
    if best is None or not best_f > 0.0:
        raise EmptyWorkspace(f"no point whose {radius} mm disc is fully actuatable")
    step = 1.0
    for _ in range(3):
        cu, cv = best
        offsets = np.linspace(-step, step, 21)
        for dv in offsets:
            for du in offsets:
                cand = PlanarPoint(cu + du, cv + dv)
                f, idx = region_force(cfg, cand, radius, best_f, hint, clearance)
                if idx >= 0:
                    hint = idx
                if f > best_f:
                    best, best_f = (cand.u, cand.v), f
        step /= 10.0
    return PlanarPoint(float(best[0]), float(best[1]))
