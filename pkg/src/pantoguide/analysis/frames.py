"""Tracker-sensor to handle-point frame transforms.

Orientations are intrinsic z-y'-x'' Euler angles (yaw, pitch, roll) in
degrees: yaw about the vertical z axis, roll about the distal x axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from .io import normalize_angle


@dataclass(frozen=True)
class Pose6:
    x: float
    y: float
    z: float
    yaw: float
    pitch: float
    roll: float
    t: float = 0.0

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def rotation(self) -> np.ndarray:
        return euler_to_matrix(self.yaw, self.pitch, self.roll)

    @classmethod
    def from_matrix(cls, position, rotation, t: float = 0.0) -> "Pose6":
        yaw, pitch, roll = matrix_to_euler(rotation)
        return cls(*map(float, position), yaw, pitch, roll, t)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.yaw, self.pitch, self.roll])


def euler_to_matrix(yaw, pitch, roll) -> np.ndarray:
    return Rotation.from_euler("ZYX", [yaw, pitch, roll], degrees=True).as_matrix()


def matrix_to_euler(rotation) -> tuple[float, float, float]:
    angles = Rotation.from_matrix(rotation).as_euler("ZYX", degrees=True)
    return tuple(float(normalize_angle(a)) for a in angles)


@dataclass(frozen=True)
class RigidOffset:
    """Handle point expressed in the sensor frame."""

    translation: tuple[float, float, float] = (0.0, 0.0, 0.0)
    rotation: tuple[tuple[float, ...], ...] = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float)
        if r.shape != (3, 3):
            raise ValueError("rotation must be 3x3")
        if not np.allclose(r @ r.T, np.eye(3), atol=1e-9) or not np.isclose(
            np.linalg.det(r), 1.0, atol=1e-9
        ):
            raise ValueError("rotation must be orthonormal with det +1")
        object.__setattr__(self, "rotation", tuple(map(tuple, r)))
        object.__setattr__(self, "translation", tuple(float(v) for v in self.translation))

    @classmethod
    def from_euler(cls, translation, yaw=0.0, pitch=0.0, roll=0.0) -> "RigidOffset":
        return cls(tuple(translation), tuple(map(tuple, euler_to_matrix(yaw, pitch, roll))))

    def inverse(self) -> "RigidOffset":
        r = np.asarray(self.rotation)
        return RigidOffset(tuple(-r.T @ np.asarray(self.translation)), tuple(map(tuple, r.T)))


def to_handle_frame(sensor_pose: Pose6, offset: RigidOffset) -> Pose6:
    r_s = sensor_pose.rotation
    r_o = np.asarray(offset.rotation)
    pos = sensor_pose.position + r_s @ np.asarray(offset.translation)
    return Pose6.from_matrix(pos, r_s @ r_o, sensor_pose.t)


def transform_series(pose: np.ndarray, offset: RigidOffset) -> np.ndarray:
    """Vectorised ``to_handle_frame`` over an (n, 6) pose array."""
    rot = Rotation.from_euler("ZYX", pose[:, 3:6], degrees=True)
    pos = pose[:, :3] + rot.apply(np.asarray(offset.translation))
    out_rot = rot * Rotation.from_matrix(np.asarray(offset.rotation))
    ang = normalize_angle(out_rot.as_euler("ZYX", degrees=True))
    return np.column_stack([pos, ang])
