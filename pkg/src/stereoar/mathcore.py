"""3D math for a row-vector, left-handed rendering pipeline.

Conventions used consistently across the package:

* Vectors are rows and matrices multiply on the right: ``v' = v @ M``.
  Composing ``A @ B`` therefore applies ``A`` first.
* The world is left-handed with +z pointing into the screen (D3D style);
  +x is right and +y is up.
* Projected depth lands in ``[0, 1]`` after the perspective divide.
* Euler rotations compose yaw (about y), then pitch (about x), then roll
  (about z); angles are degrees in :class:`HeadPose`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Vec3",
    "Vec4",
    "Mat4",
    "HeadPose",
    "StereoParams",
    "rotation_x",
    "rotation_y",
    "rotation_z",
    "translation",
    "scaling",
    "euler_to_rotation",
    "perspective_projection",
    "orthographic_projection",
    "stereo_projection",
    "mvp_transform",
    "perspective_divide",
    "eye_position",
    "view_for_eye",
]


@dataclass(frozen=True)
class Vec3:
    """Immutable 3-component vector (scene units are meters unless noted)."""

    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def __neg__(self) -> "Vec3":
        return Vec3(-self.x, -self.y, -self.z)

    def __mul__(self, s: float) -> "Vec3":
        return Vec3(self.x * s, self.y * s, self.z * s)

    __rmul__ = __mul__

    def dot(self, other: "Vec3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def cross(self, other: "Vec3") -> "Vec3":
        return Vec3(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )

    def norm(self) -> float:
        return math.sqrt(self.dot(self))

    def normalized(self) -> "Vec3":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize a zero vector")
        return Vec3(self.x / n, self.y / n, self.z / n)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)

    @classmethod
    def from_array(cls, a) -> "Vec3":
        return cls(float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True)
class Vec4:
    """Homogeneous 4-vector; w=1 marks a point, w=0 a direction."""

    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    w: float = 0.0

    @classmethod
    def point(cls, v: Vec3) -> "Vec4":
        return cls(v.x, v.y, v.z, 1.0)

    @classmethod
    def direction(cls, v: Vec3) -> "Vec4":
        return cls(v.x, v.y, v.z, 0.0)

    @property
    def xyz(self) -> Vec3:
        return Vec3(self.x, self.y, self.z)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.w], dtype=np.float64)

    @classmethod
    def from_array(cls, a) -> "Vec4":
        return cls(float(a[0]), float(a[1]), float(a[2]), float(a[3]))


class Mat4:
    """4x4 matrix, row-major storage, applied to row vectors (``v @ M``).

    Instances are immutable: the backing array is marked read-only at
    construction, so matrices can be shared freely between threads.
    """

    __slots__ = ("a",)

    def __init__(self, entries) -> None:
        arr = np.array(entries, dtype=np.float64).reshape(4, 4)
        arr.setflags(write=False)
        self.a = arr

    @classmethod
    def identity(cls) -> "Mat4":
        return cls(np.eye(4))

    def __matmul__(self, other: "Mat4") -> "Mat4":
        return Mat4(self.a @ other.a)

    def transform(self, v: Vec4) -> Vec4:
        return Vec4.from_array(v.as_array() @ self.a)

    def transform_point(self, v: Vec3) -> Vec3:
        """Apply as an affine transform (w=1, no perspective divide)."""
        r = np.array([v.x, v.y, v.z, 1.0]) @ self.a
        return Vec3.from_array(r)

    def transform_direction(self, v: Vec3) -> Vec3:
        """Apply the linear part only (w=0)."""
        r = np.array([v.x, v.y, v.z, 0.0]) @ self.a
        return Vec3.from_array(r)

    def transposed(self) -> "Mat4":
        return Mat4(self.a.T)

    def __repr__(self) -> str:
        rows = "\n  ".join(
            "[" + ", ".join(f"{x:.6g}" for x in row) + "]" for row in self.a
        )
        return f"Mat4(\n  {rows}\n)"


@dataclass(frozen=True)
class HeadPose:
    """Head orientation as yaw/pitch/roll in degrees; all-zero is identity."""

    yaw: float = 0.0
    pitch: float = 0.0
    roll: float = 0.0


@dataclass(frozen=True)
class StereoParams:
    """Per-eye projection skew parameters.

    ``side`` is -1 for the left eye and +1 for the right.  ``separation``
    is the interaxial offset normalized by the virtual screen width (a
    direct config value; dimensionless).  ``convergence`` is the depth of
    the zero-disparity plane in scene units.
    """

    side: int
    separation: float
    convergence: float

    def __post_init__(self) -> None:
        if self.side not in (-1, 1):
            raise ValueError(f"side must be -1 or +1, got {self.side}")
        if self.separation < 0:
            raise ValueError("separation must be >= 0")
        if self.convergence <= 0:
            raise ValueError("convergence must be > 0")


def rotation_x(angle: float) -> Mat4:
    """Rotation about the x-axis by ``angle`` radians."""
    c, s = math.cos(angle), math.sin(angle)
    return Mat4([[1, 0, 0, 0], [0, c, s, 0], [0, -s, c, 0], [0, 0, 0, 1]])


def rotation_y(angle: float) -> Mat4:
    """Rotation about the y-axis by ``angle`` radians."""
    c, s = math.cos(angle), math.sin(angle)
    return Mat4([[c, 0, -s, 0], [0, 1, 0, 0], [s, 0, c, 0], [0, 0, 0, 1]])


def rotation_z(angle: float) -> Mat4:
    """Rotation about the z-axis by ``angle`` radians."""
    c, s = math.cos(angle), math.sin(angle)
    return Mat4([[c, s, 0, 0], [-s, c, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])


def translation(t: Vec3) -> Mat4:
    return Mat4([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [t.x, t.y, t.z, 1]])


def scaling(s: Vec3) -> Mat4:
    return Mat4([[s.x, 0, 0, 0], [0, s.y, 0, 0], [0, 0, s.z, 0], [0, 0, 0, 1]])


def euler_to_rotation(pose: HeadPose) -> Mat4:
    """Rotation matrix for a head pose, composed yaw -> pitch -> roll.

    The result is orthonormal with determinant +1; angles wrap naturally.
    """
    return (
        rotation_y(math.radians(pose.yaw))
        @ rotation_x(math.radians(pose.pitch))
        @ rotation_z(math.radians(pose.roll))
    )


def perspective_projection(fov_y: float, aspect: float, near: float, far: float) -> Mat4:
    """Perspective projection mapping the view frustum to the NDC box.

    ``fov_y`` is the full vertical field of view in radians.  After the
    perspective divide, x and y land in [-1, 1] and depth in [0, 1]
    (0 at ``near``, 1 at ``far``).
    """
    if not 0.0 < fov_y < math.pi:
        raise ValueError(f"fov_y must be in (0, pi), got {fov_y}")
    if aspect <= 0.0:
        raise ValueError(f"aspect must be positive, got {aspect}")
    if near <= 0.0:
        raise ValueError(f"near must be positive, got {near}")
    if far <= near:
        raise ValueError(f"far ({far}) must exceed near ({near})")
    h = 1.0 / math.tan(fov_y / 2.0)
    w = h / aspect
    q = far / (far - near)
    return Mat4([[w, 0, 0, 0], [0, h, 0, 0], [0, 0, q, 1], [0, 0, -near * q, 0]])


def orthographic_projection(width: float, height: float, near: float, far: float) -> Mat4:
    """Orthographic projection for screen-space quads.

    Maps [0, width] x [0, height] (origin top-left, y down) exactly onto
    full NDC, with (0, 0) landing at (-1, +1); depth maps [near, far] to
    [0, 1].
    """
    if width <= 0.0 or height <= 0.0:
        raise ValueError("viewport extents must be positive")
    if far <= near:
        raise ValueError(f"far ({far}) must exceed near ({near})")
    q = 1.0 / (far - near)
    return Mat4(
        [
            [2.0 / width, 0, 0, 0],
            [0, -2.0 / height, 0, 0],
            [0, 0, q, 0],
            [-1.0, 1.0, -near * q, 1],
        ]
    )


def stereo_projection(mono: Mat4, params: StereoParams) -> Mat4:
    """Skew a mono perspective projection for one eye.

    Exactly two entries change: the (3,1) entry gains ``side*separation``
    and the (4,1) entry becomes ``-side*separation*convergence``.  With
    ``separation == 0`` the input is returned unchanged (bit-identical;
    adding 0.0 could still flip a negative zero, so no arithmetic is done).
    """
    if params.separation == 0.0:
        return mono
    a = mono.a.copy()
    a[2, 0] = a[2, 0] + params.side * params.separation
    a[3, 0] = -params.side * params.separation * params.convergence
    return Mat4(a)


def mvp_transform(v: Vec4, model: Mat4, view: Mat4, proj: Mat4) -> Vec4:
    """Transform a homogeneous vertex into clip space (``v @ M @ V @ P``)."""
    return Vec4.from_array(v.as_array() @ model.a @ view.a @ proj.a)


def perspective_divide(v: Vec4) -> Vec3:
    """Clip space to normalized device coordinates."""
    if v.w == 0.0:
        raise ValueError("cannot divide by w=0")
    return Vec3(v.x / v.w, v.y / v.w, v.z / v.w)


def eye_position(pose: HeadPose, head_position: Vec3, eye_side: int, half_ipd: float) -> Vec3:
    """World position of one eye: the head offset along its local x-axis."""
    if eye_side not in (-1, 1):
        raise ValueError(f"eye_side must be -1 or +1, got {eye_side}")
    if half_ipd < 0:
        raise ValueError("half_ipd must be >= 0")
    right = euler_to_rotation(pose).transform_direction(Vec3(1.0, 0.0, 0.0))
    return head_position + right * (eye_side * half_ipd)


def view_for_eye(pose: HeadPose, head_position: Vec3, eye_side: int, half_ipd: float) -> Mat4:
    """View matrix of the head camera shifted to one eye.

    The camera is rotated by ``pose``, translated ``eye_side * half_ipd``
    along its local x-axis, and the result is inverted so the eye sits at
    the origin looking down +z.
    """
    eye = eye_position(pose, head_position, eye_side, half_ipd)
    rot = euler_to_rotation(pose)
    return translation(-eye) @ rot.transposed()
