"""Minimal linear Kalman filter used by the elevation exception handler."""

from __future__ import annotations

import numpy as np


class KalmanFilter:
    """Linear Kalman filter with Joseph-form covariance updates.

    Args:
        f: State transition matrix.
        q: Process noise covariance.
        h: Observation matrix.
        r: Measurement noise covariance.
        x0: Initial state.
        p0: Initial state covariance.
    """

    def __init__(self, f, q, h, r, x0, p0):
        self.F = np.asarray(f, dtype=float)
        self.Q = np.asarray(q, dtype=float)
        self.H = np.atleast_2d(np.asarray(h, dtype=float))
        self.R = np.atleast_2d(np.asarray(r, dtype=float))
        self.x = np.asarray(x0, dtype=float).copy()
        self.P = np.asarray(p0, dtype=float).copy()

    def predict(self) -> np.ndarray:
        self.x = self.F @ self.x
        self.P = self.F @ self.P @ self.F.T + self.Q
        self.P = 0.5 * (self.P + self.P.T)
        return self.x.copy()

    def update(self, z) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=float))
        y = z - self.H @ self.x
        s = self.H @ self.P @ self.H.T + self.R
        k = self.P @ self.H.T @ np.linalg.inv(s)
        self.x = self.x + k @ y
        i_kh = np.eye(len(self.x)) - k @ self.H
        # Joseph form keeps P symmetric positive-definite under roundoff.
        self.P = i_kh @ self.P @ i_kh.T + k @ self.R @ k.T
        self.P = 0.5 * (self.P + self.P.T)
        return self.x.copy()

    @property
    def predicted_measurement(self) -> float:
        return float((self.H @ self.x)[0])

    @property
    def innovation_variance(self) -> float:
        return float((self.H @ self.P @ self.H.T + self.R)[0, 0])


def white_noise_2d(dt: float, intensity: float) -> np.ndarray:
    """Process covariance of a [value, rate] state driven by white rate noise."""
    return intensity * np.array(
        [[dt**3 / 3.0, dt**2 / 2.0], [dt**2 / 2.0, dt]]
    )


def make_tracking_filter(
    dt: float,
    process_intensity: float,
    measurement_std: float,
    initial_value: float = 0.0,
    initial_std: tuple[float, float] = (1.0, 1.0),
) -> KalmanFilter:
    """[value, rate] filter observing the value; constant-rate transition."""
    f = np.array([[1.0, dt], [0.0, 1.0]])
    q = white_noise_2d(dt, process_intensity)
    h = np.array([[1.0, 0.0]])
    r = np.array([[measurement_std**2]])
    x0 = np.array([initial_value, 0.0])
    p0 = np.diag([initial_std[0] ** 2, initial_std[1] ** 2])
    return KalmanFilter(f, q, h, r, x0, p0)
