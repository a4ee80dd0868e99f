"""Rigid poses, relative-motion sampling and the built-in motion programs.

A pose maps ``x -> R @ x + t``. Motions are callables ``t -> Pose`` on the
normalized time interval [0, 1]; they are sampled at the midpoints
``t_k = (k + 1/2) / K``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.spatial.transform import Rotation, Slerp

from .errors import ConfigurationError, ValidationError

__all__ = [
    "Pose",
    "PoseSeries",
    "Trajectory",
    "compose",
    "inverse",
    "apply",
    "rotation_2d",
    "rotation_about_point",
    "midpoint_times",
    "sample_relative_motion",
    "builtin_motion",
    "keyframe_motion",
    "follower_height",
    "cam_rotation_3d",
    "follower_rotation_3d",
    "screw_pose",
    "BUILTIN_MOTIONS",
]

RIGID_TOL = 1e-9

Motion = Callable[[float], "Pose"]


@dataclass(frozen=True)
class Pose:
    rotation: np.ndarray = field(repr=False)
    translation: np.ndarray = field(repr=False)

    def __post_init__(self):
        R = np.array(self.rotation, dtype=float)
        t = np.array(self.translation, dtype=float).reshape(-1)
        d = len(t)
        if R.shape != (d, d) or d not in (2, 3):
            raise ValidationError(f"rotation shape {R.shape} does not match translation length {d}")
        if not np.allclose(R.T @ R, np.eye(d), rtol=0, atol=RIGID_TOL):
            raise ValidationError("rotation is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > RIGID_TOL:
            raise ValidationError("rotation has determinant != +1")
        R.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls, d: int) -> "Pose":
        return cls(np.eye(d), np.zeros(d))

    @classmethod
    def from_translation(cls, t) -> "Pose":
        t = np.asarray(t, dtype=float)
        return cls(np.eye(len(t)), t)

    @property
    def dimension(self) -> int:
        return len(self.translation)

    def __matmul__(self, other: "Pose") -> "Pose":
        return compose(self, other)

    def inverse(self) -> "Pose":
        return inverse(self)

    def apply(self, x):
        return apply(self, x)

    def matrix(self) -> np.ndarray:
        """Homogeneous (d+1)x(d+1) matrix."""
        d = self.dimension
        m = np.eye(d + 1)
        m[:d, :d] = self.rotation
        m[:d, d] = self.translation
        return m


def compose(a: Pose, b: Pose) -> Pose:
    """``a o b``: apply ``b`` first, then ``a``."""
    return Pose(a.rotation @ b.rotation, a.rotation @ b.translation + a.translation)


def inverse(a: Pose) -> Pose:
    Rt = a.rotation.T
    return Pose(Rt, -Rt @ a.translation)


def apply(a: Pose, x):
    x = np.asarray(x, dtype=float)
    return x @ a.rotation.T + a.translation


def rotation_2d(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def rotation_about_point(R, center) -> Pose:
    """Rotation ``R`` about ``center`` rather than the origin."""
    R = np.asarray(R, dtype=float)
    c = np.asarray(center, dtype=float)
    return Pose(R, c - R @ c)


class PoseSeries:
    """K poses stored as stacked arrays; one leg of a trajectory."""

    def __init__(self, rotations, translations):
        self.rotations = np.asarray(rotations, dtype=float)
        self.translations = np.asarray(translations, dtype=float)
        K, d = self.translations.shape
        if self.rotations.shape != (K, d, d):
            raise ValidationError("rotation and translation stacks disagree")

    @classmethod
    def from_poses(cls, poses: Sequence[Pose]) -> "PoseSeries":
        return cls(np.stack([p.rotation for p in poses]), np.stack([p.translation for p in poses]))

    def __len__(self):
        return len(self.translations)

    def __getitem__(self, k) -> Pose:
        return Pose(self.rotations[k], self.translations[k])

    def __iter__(self):
        return (self[k] for k in range(len(self)))

    @property
    def dimension(self) -> int:
        return self.translations.shape[1]

    def apply(self, k: int, points):
        return np.asarray(points, dtype=float) @ self.rotations[k].T + self.translations[k]

    def inverse(self) -> "PoseSeries":
        Rt = np.transpose(self.rotations, (0, 2, 1))
        return PoseSeries(Rt, -np.einsum("kij,kj->ki", Rt, self.translations))


@dataclass(frozen=True)
class Trajectory:
    """Midpoint-sampled relative motion between body 1 and body 2.

    ``leg_12[k]`` maps body-2 points into body 1's frame at ``t_k`` and
    ``leg_21[k]`` is its inverse.
    """

    times: np.ndarray = field(repr=False)
    leg_12: PoseSeries = field(repr=False)
    leg_21: PoseSeries = field(repr=False)

    @property
    def K(self) -> int:
        return len(self.times)

    @property
    def delta(self) -> float:
        return 1.0 / self.K

    @property
    def dimension(self) -> int:
        return self.leg_12.dimension

    @property
    def poses_12(self) -> list:
        return list(self.leg_12)

    @property
    def poses_21(self) -> list:
        return list(self.leg_21)

    def swapped(self) -> "Trajectory":
        """The same trajectory with the roles of the bodies exchanged."""
        return Trajectory(self.times, self.leg_21, self.leg_12)


def midpoint_times(K: int) -> np.ndarray:
    if int(K) < 1:
        raise ConfigurationError(f"timestep count must be >= 1, got {K}")
    return (np.arange(int(K)) + 0.5) / int(K)


def sample_relative_motion(motion1: Motion, motion2: Motion, K: int) -> Trajectory:
    times = midpoint_times(K)
    legs = []
    for t in times:
        p1, p2 = motion1(float(t)), motion2(float(t))
        if not (isinstance(p1, Pose) and isinstance(p2, Pose)):
            # re-validate raw (R, t) pairs returned by user functions
            p1, p2 = Pose(*p1), Pose(*p2)
        legs.append(compose(inverse(p1), p2))
    leg_12 = PoseSeries.from_poses(legs)
    return Trajectory(times, leg_12, leg_12.inverse())


# --------------------------------------------------------------------------
# Built-in motions


def follower_height(theta_cam: float, L: float) -> float:
    """Height of the 2D follower center for cam angle ``theta_cam``."""
    return 0.75 * L + L / 8.0 * np.cos(2.0 * theta_cam)


def cam_rotation_3d(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])


def follower_rotation_3d(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, s], [0.0, -s, c]])


def screw_pose(phi: float, L: float) -> Pose:
    """Bolt pose after turning by ``phi``: rotation about z coupled with a z-drop of ``L/(10 pi)`` per radian."""
    return Pose(cam_rotation_3d(phi), [0.0, 0.0, -L / (10.0 * np.pi) * phi])


def _counter_rotation(params):
    c1 = np.asarray(params.get("center1", [0.0, 0.0]), dtype=float)
    c2 = np.asarray(params["center2"], dtype=float)
    turns = float(params.get("turns", 1.0))

    def m1(t):
        return rotation_about_point(rotation_2d(2 * np.pi * turns * t), c1)

    def m2(t):
        return rotation_about_point(rotation_2d(-2 * np.pi * turns * t), c2)

    return m1, m2


def _cam_follower_2d(params):
    L = float(params["L"])
    center = np.asarray(params.get("cam_center", [0.0, 0.0]), dtype=float)
    phase = float(params.get("cam_phase", 0.0))
    y0 = follower_height(0.0, L)

    def cam(t):
        return rotation_about_point(rotation_2d(2 * np.pi * t + phase), center)

    def follower(t):
        return Pose.from_translation([0.0, follower_height(2 * np.pi * t, L) - y0])

    return cam, follower


def _cam_follower_3d(params):
    def cam(t):
        return Pose(cam_rotation_3d(2 * np.pi * t), np.zeros(3))

    def follower(t):
        theta_c = 2 * np.pi * t
        return Pose(follower_rotation_3d(0.5 * abs(np.sin(theta_c))), np.zeros(3))

    return cam, follower


def _screw(params):
    L = float(params["L"])
    turns = float(params.get("turns", 4.0))

    def bolt(t):
        return screw_pose(2 * np.pi * turns * t, L)

    def nut(t):
        return Pose.identity(3)

    return bolt, nut


BUILTIN_MOTIONS = {
    "counter_rotation": (_counter_rotation, {"center2"}, {"center1", "turns"}),
    "cam_follower_2d": (_cam_follower_2d, {"L"}, {"cam_center", "cam_phase"}),
    "cam_follower_3d": (_cam_follower_3d, set(), set()),
    "screw": (_screw, {"L"}, {"turns"}),
}


def builtin_motion(name: str, params: dict | None = None):
    """Return ``(motion1, motion2)`` for a named motion program.

    ``counter_rotation``: body 1 turns +2 pi t about ``center1``, body 2 turns
    -2 pi t about ``center2``. ``cam_follower_2d``: the cam (body 1) turns
    about ``cam_center`` (starting at angle ``cam_phase``) while the follower
    (body 2) translates vertically.
    ``cam_follower_3d``: cam about z, follower about x. ``screw``: the bolt
    (body 1) screws down through a stationary nut (body 2).
    """
    params = dict(params or {})
    if name not in BUILTIN_MOTIONS:
        raise ConfigurationError(f"unknown motion {name!r}; expected one of {sorted(BUILTIN_MOTIONS)}")
    factory, required, optional = BUILTIN_MOTIONS[name]
    missing = required - set(params)
    if missing:
        raise ConfigurationError(f"motion {name!r} is missing parameter {sorted(missing)[0]!r}")
    unknown = set(params) - required - optional
    if unknown:
        raise ConfigurationError(f"motion {name!r} has unknown parameter {sorted(unknown)[0]!r}")
    return factory(params)


def keyframe_motion(records) -> Motion:
    """Piecewise-linear motion through ``(t, rotation, translation)`` keyframes.

    Rotations are interpolated along the geodesic between neighbouring
    keyframes; times outside the keyframe range hold the end poses.
    """
    if len(records) < 1:
        raise ConfigurationError("keyframe motion needs at least one record")
    times = np.array([float(r[0]) for r in records])
    if np.any(np.diff(times) <= 0):
        raise ConfigurationError("keyframe times must be strictly increasing")
    if times[0] < 0 or times[-1] > 1:
        raise ConfigurationError("keyframe times must lie in [0, 1]")
    poses = [Pose(np.asarray(r[1], dtype=float), np.asarray(r[2], dtype=float)) for r in records]
    d = poses[0].dimension
    trans = np.stack([p.translation for p in poses])
    if len(poses) == 1:
        return lambda t: poses[0]
    if d == 3:
        slerp = Slerp(times, Rotation.from_matrix(np.stack([p.rotation for p in poses])))
    else:
        angles = np.unwrap([np.arctan2(p.rotation[1, 0], p.rotation[0, 0]) for p in poses])

    def motion(t):
        t = float(np.clip(t, times[0], times[-1]))
        tr = np.array([np.interp(t, times, trans[:, i]) for i in range(d)])
        if d == 3:
            R = slerp([t]).as_matrix()[0]
        else:
            R = rotation_2d(np.interp(t, times, angles))
        return Pose(R, tr)

    return motion
