"""Planar geometry primitives shared by the simulator, chains, and metrics."""
from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.fmod(a, TWO_PI)
    if a > math.pi:
        a -= TWO_PI
    elif a <= -math.pi:
        a += TWO_PI
    return a


def rotate(yaw: float, x: float, y: float) -> tuple[float, float]:
    """Rotate a 2D vector by yaw."""
    c = math.cos(yaw)
    s = math.sin(yaw)
    return (c * x - s * y, s * x + c * y)


@dataclass(frozen=True, slots=True)
class Pose2:
    """SE(2) pose. yaw is stored wrapped to (-pi, pi]."""

    x: float
    y: float
    yaw: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))

    def to_world(self, px: float, py: float) -> tuple[float, float]:
        """Map a point from this pose's local frame to the world frame."""
        wx, wy = rotate(self.yaw, px, py)
        return (self.x + wx, self.y + wy)

    def to_local(self, wx: float, wy: float) -> tuple[float, float]:
        """Map a world point into this pose's local frame."""
        return rotate(-self.yaw, wx - self.x, wy - self.y)

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.yaw)


@dataclass(frozen=True, slots=True)
class Twist2:
    """Planar velocity: linear (vx, vy) plus yaw rate."""

    vx: float
    vy: float
    omega: float

    def is_finite(self) -> bool:
        return math.isfinite(self.vx) and math.isfinite(self.vy) and math.isfinite(self.omega)

    def rotated(self, yaw: float) -> "Twist2":
        """Rotate the linear part by yaw; omega is frame-independent in the plane."""
        vx, vy = rotate(yaw, self.vx, self.vy)
        return Twist2(vx, vy, self.omega)

    def speed(self) -> float:
        return math.hypot(self.vx, self.vy)


ZERO_TWIST = Twist2(0.0, 0.0, 0.0)


def norm2(x: float, y: float) -> float:
    return math.hypot(x, y)


def twist_diff_norm(a: Twist2, b: Twist2, yaw_len: float) -> float:
    """Twist-space distance with the angular rate scaled by yaw_len (meters/radian)."""
    return math.sqrt(
        (a.vx - b.vx) ** 2 + (a.vy - b.vy) ** 2 + (yaw_len * (a.omega - b.omega)) ** 2
    )


def pose_error(a: Pose2, b: Pose2, yaw_len: float) -> float:
    """Position error plus yaw_len-weighted heading error between two poses."""
    return norm2(a.x - b.x, a.y - b.y) + yaw_len * abs(wrap_angle(a.yaw - b.yaw))
