"""Time-parameterized 3D target trajectories, radar at the origin.

Coordinate convention (fixed package-wide): x points along boresight,
y to the left, z up.  Azimuth is measured in the x-y plane from the x
axis toward +y; elevation is measured from the x-y plane toward +z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class TrajectoryDomainError(ValueError):
    """The trajectory is not defined at the requested time."""


def _vec3(v) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {a.shape}")
    return a


class Trajectory:
    """Base class; subclasses provide position/velocity/acceleration."""

    end_time: float = math.inf

    def position(self, t: float) -> np.ndarray:
        raise NotImplementedError

    def velocity(self, t: float) -> np.ndarray:
        raise NotImplementedError

    def acceleration(self, t: float) -> np.ndarray:
        raise NotImplementedError

    def _check(self, t: float) -> None:
        if t < 0.0 or t > self.end_time:
            raise TrajectoryDomainError(
                f"trajectory not defined at t={t:g} (domain [0, {self.end_time:g}])"
            )

    def range_to_radar(self, t: float) -> float:
        return float(np.linalg.norm(self.position(t)))

    def radial_velocity(self, t: float) -> float:
        """d/dt of the range to the radar (positive = receding)."""
        p = self.position(t)
        v = self.velocity(t)
        r = float(np.linalg.norm(p))
        if r == 0.0:
            raise ValueError("radial velocity undefined at the origin")
        return float(p @ v) / r

    def radial_acceleration(self, t: float) -> float:
        """Second time derivative of the range to the radar."""
        p = self.position(t)
        v = self.velocity(t)
        a = self.acceleration(t)
        r = float(np.linalg.norm(p))
        if r == 0.0:
            raise ValueError("radial acceleration undefined at the origin")
        pv = float(p @ v)
        return (float(v @ v) + float(p @ a)) / r - pv * pv / r**3

    def spherical(self, t: float) -> tuple[float, float, float]:
        """(range m, azimuth rad, elevation rad) at time t."""
        x, y, z = self.position(t)
        r = math.sqrt(x * x + y * y + z * z)
        if r == 0.0:
            raise ValueError("angles undefined at the origin")
        return r, math.atan2(y, x), math.asin(z / r)


@dataclass
class StaticPosition(Trajectory):
    point: np.ndarray

    def __post_init__(self):
        self.point = _vec3(self.point)

    def position(self, t: float) -> np.ndarray:
        self._check(t)
        return self.point.copy()

    def velocity(self, t: float) -> np.ndarray:
        self._check(t)
        return np.zeros(3)

    def acceleration(self, t: float) -> np.ndarray:
        self._check(t)
        return np.zeros(3)


@dataclass
class ConstantVelocity(Trajectory):
    start: np.ndarray
    vel: np.ndarray

    def __post_init__(self):
        self.start = _vec3(self.start)
        self.vel = _vec3(self.vel)

    def position(self, t: float) -> np.ndarray:
        self._check(t)
        return self.start + self.vel * t

    def velocity(self, t: float) -> np.ndarray:
        self._check(t)
        return self.vel.copy()

    def acceleration(self, t: float) -> np.ndarray:
        self._check(t)
        return np.zeros(3)


@dataclass
class Segment:
    """One constant-acceleration piece of a chained trajectory.

    ``velocity`` overrides the chained velocity at the segment start, which
    makes plain constant-velocity segment lists expressible (acceleration
    zero, velocity given per segment).
    """

    duration: float
    acceleration: np.ndarray = field(default_factory=lambda: np.zeros(3))
    velocity: np.ndarray | None = None

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("segment duration must be positive")
        self.acceleration = _vec3(self.acceleration)
        if self.velocity is not None:
            self.velocity = _vec3(self.velocity)


class PiecewiseTrajectory(Trajectory):
    """Chain of constant-acceleration segments, position-continuous."""

    def __init__(self, start, initial_velocity, segments: list[Segment]):
        if not segments:
            raise ValueError("at least one segment required")
        self._t0 = []  # segment start times
        self._p0 = []  # segment start positions
        self._v0 = []  # segment start velocities
        self._acc = []
        p = _vec3(start)
        v = _vec3(initial_velocity)
        t = 0.0
        for seg in segments:
            if seg.velocity is not None:
                v = seg.velocity.copy()
            self._t0.append(t)
            self._p0.append(p.copy())
            self._v0.append(v.copy())
            self._acc.append(seg.acceleration.copy())
            dt = seg.duration
            p = p + v * dt + 0.5 * seg.acceleration * dt * dt
            v = v + seg.acceleration * dt
            t += dt
        self.end_time = t

    def _locate(self, t: float) -> int:
        self._check(t)
        # rightmost segment with t0 <= t
        lo, hi = 0, len(self._t0) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self._t0[mid] <= t:
                lo = mid
            else:
                hi = mid - 1
        return lo

    def position(self, t: float) -> np.ndarray:
        i = self._locate(t)
        dt = t - self._t0[i]
        return self._p0[i] + self._v0[i] * dt + 0.5 * self._acc[i] * dt * dt

    def velocity(self, t: float) -> np.ndarray:
        i = self._locate(t)
        dt = t - self._t0[i]
        return self._v0[i] + self._acc[i] * dt

    def acceleration(self, t: float) -> np.ndarray:
        i = self._locate(t)
        return self._acc[i].copy()


class WaypointTrajectory(Trajectory):
    """Sampled waypoints with linear interpolation between them."""

    def __init__(self, times, points):
        self.times = np.asarray(times, dtype=float)
        self.points = np.asarray(points, dtype=float)
        if self.times.ndim != 1 or len(self.times) < 2:
            raise ValueError("need at least two waypoints")
        if self.points.shape != (len(self.times), 3):
            raise ValueError("points must be (n, 3) matching times")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("waypoint times must be strictly increasing")
        if self.times[0] != 0.0:
            raise ValueError("waypoint times must start at 0")
        self.end_time = float(self.times[-1])

    def _segment(self, t: float) -> int:
        self._check(t)
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        return min(max(i, 0), len(self.times) - 2)

    def position(self, t: float) -> np.ndarray:
        i = self._segment(t)
        f = (t - self.times[i]) / (self.times[i + 1] - self.times[i])
        return (1.0 - f) * self.points[i] + f * self.points[i + 1]

    def velocity(self, t: float) -> np.ndarray:
        i = self._segment(t)
        return (self.points[i + 1] - self.points[i]) / (self.times[i + 1] - self.times[i])

    def acceleration(self, t: float) -> np.ndarray:
        self._check(t)
        return np.zeros(3)


def trajectory_from_dict(doc: dict) -> Trajectory:
    """Build a trajectory from its JSON form; rejects unknown keys."""
    if "type" not in doc:
        raise ValueError("missing trajectory key: 'type'")
    kind = doc["type"]
    builders = {
        "static": (_build_static, {"type", "position"}),
        "constant_velocity": (_build_cv, {"type", "position", "velocity"}),
        "segments": (_build_segments, {"type", "position", "velocity", "segments"}),
        "waypoints": (_build_waypoints, {"type", "times", "points"}),
    }
    if kind not in builders:
        raise ValueError(f"unknown trajectory type: {kind!r}")
    builder, allowed = builders[kind]
    unknown = set(doc) - allowed
    if unknown:
        raise ValueError(f"unknown trajectory key: {sorted(unknown)[0]!r}")
    return builder(doc)


def _build_static(doc):
    return StaticPosition(doc["position"])


def _build_cv(doc):
    return ConstantVelocity(doc["position"], doc["velocity"])


def _build_segments(doc):
    segs = []
    for raw in doc["segments"]:
        allowed = {"duration", "acceleration", "velocity"}
        unknown = set(raw) - allowed
        if unknown:
            raise ValueError(f"unknown segment key: {sorted(unknown)[0]!r}")
        segs.append(
            Segment(
                duration=raw["duration"],
                acceleration=raw.get("acceleration", (0.0, 0.0, 0.0)),
                velocity=raw.get("velocity"),
            )
        )
    return PiecewiseTrajectory(doc["position"], doc.get("velocity", (0.0, 0.0, 0.0)), segs)


def _build_waypoints(doc):
    return WaypointTrajectory(doc["times"], doc["points"])
