import math

import numpy as np
import pytest

from dragonfly_sim.trajectory import (
    ConstantVelocity,
    PiecewiseTrajectory,
    Segment,
    StaticPosition,
    Trajectory,
    TrajectoryDomainError,
    WaypointTrajectory,
    trajectory_from_dict,
)


def finite_diff_radial(traj: Trajectory, t: float, h: float = 1e-5):
    r = lambda tt: traj.range_to_radar(tt)
    v = (r(t + h) - r(t - h)) / (2 * h)
    a = (r(t + h) - 2 * r(t) + r(t - h)) / h**2
    return v, a


def sample_trajectories():
    yield StaticPosition((5.0, 1.0, 0.5))
    yield ConstantVelocity((7.0, -2.0, 0.3), (0.5, 1.0, -0.2))
    yield PiecewiseTrajectory(
        (6.0, 0.0, 0.0), (1.0, 0.5, 0.0),
        [
            Segment(1.0, (0.5, -1.0, 0.2)),
            Segment(2.0, (-0.3, 0.4, 0.0)),
            Segment(1.5, (0.0, 0.0, -0.5), velocity=(0.2, 0.2, 0.2)),
        ],
    )


@pytest.mark.parametrize("traj", list(sample_trajectories()), ids=["static", "cv", "piecewise"])
def test_radial_derivatives_match_finite_differences(traj):
    for t in (0.2, 0.7, 1.4, 2.9):
        if t > traj.end_time - 0.1:
            continue
        v_fd, a_fd = finite_diff_radial(traj, t)
        assert traj.radial_velocity(t) == pytest.approx(v_fd, abs=1e-6)
        assert traj.radial_acceleration(t) == pytest.approx(a_fd, abs=1e-3)


def test_position_continuity_piecewise():
    traj = PiecewiseTrajectory(
        (5.0, 0.0, 0.0), (1.0, 0.0, 0.0),
        [Segment(1.0, (1.0, 0.0, 0.0)), Segment(1.0, (-2.0, 0.5, 0.0))],
    )
    for boundary in (1.0, 2.0):
        before = traj.position(boundary - 1e-9)
        after = traj.position(min(boundary + 1e-9, traj.end_time))
        assert np.allclose(before, after, atol=1e-6)


def test_domain_errors():
    traj = WaypointTrajectory([0.0, 1.0, 2.0], [(5, 0, 0), (6, 1, 0), (7, 0, 1)])
    with pytest.raises(TrajectoryDomainError):
        traj.position(-0.1)
    with pytest.raises(TrajectoryDomainError):
        traj.position(2.1)
    cv = ConstantVelocity((1, 0, 0), (1, 0, 0))
    cv.position(1e6)  # unbounded domain


def test_waypoint_interpolation():
    traj = WaypointTrajectory([0.0, 2.0], [(4.0, 0.0, 0.0), (6.0, 2.0, 1.0)])
    assert np.allclose(traj.position(1.0), (5.0, 1.0, 0.5))
    assert np.allclose(traj.velocity(0.5), (1.0, 1.0, 0.5))
    assert np.allclose(traj.acceleration(1.0), 0.0)


def test_spherical():
    traj = StaticPosition((math.sqrt(3) / 2 * 10, 5.0, 0.0))
    r, az, el = traj.spherical(0.0)
    assert r == pytest.approx(10.0, rel=1e-12)
    assert math.degrees(az) == pytest.approx(30.0, rel=1e-9)
    assert el == 0.0


def test_from_dict_builders():
    t1 = trajectory_from_dict({"type": "static", "position": [1, 2, 3]})
    assert isinstance(t1, StaticPosition)
    t2 = trajectory_from_dict(
        {"type": "constant_velocity", "position": [1, 0, 0], "velocity": [0, 1, 0]}
    )
    assert np.allclose(t2.position(2.0), (1.0, 2.0, 0.0))
    t3 = trajectory_from_dict(
        {
            "type": "segments",
            "position": [5, 0, 0],
            "velocity": [1, 0, 0],
            "segments": [{"duration": 1.0, "acceleration": [0, 1, 0]}],
        }
    )
    assert np.allclose(t3.position(1.0), (6.0, 0.5, 0.0))
    t4 = trajectory_from_dict(
        {"type": "waypoints", "times": [0, 1], "points": [[1, 0, 0], [2, 0, 0]]}
    )
    assert t4.end_time == 1.0


def test_from_dict_rejects_unknown_keys():
    with pytest.raises(ValueError, match="surprise"):
        trajectory_from_dict({"type": "static", "position": [1, 0, 0], "surprise": 1})
    with pytest.raises(ValueError, match="unknown trajectory type"):
        trajectory_from_dict({"type": "warp", "position": [1, 0, 0]})
    with pytest.raises(ValueError, match="jerk"):
        trajectory_from_dict(
            {
                "type": "segments",
                "position": [1, 0, 0],
                "segments": [{"duration": 1.0, "jerk": [0, 0, 0]}],
            }
        )
