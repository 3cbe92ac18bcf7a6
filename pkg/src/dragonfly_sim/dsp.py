"""Small DSP helpers shared by the spectrum, elevation, and baseline stages."""

from __future__ import annotations

import math

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_two_pi(x):
    """Wrap to [0, 2*pi)."""
    return np.mod(x, TWO_PI)


def wrap_pi(x):
    """Wrap to [0, pi)."""
    return np.mod(x, math.pi)


def wrap_pm_pi(x):
    """Wrap to [-pi, pi)."""
    return np.mod(x + math.pi, TWO_PI) - math.pi


def wrap_pm_half_pi(x):
    """Wrap to [-pi/2, pi/2)."""
    return np.mod(x + math.pi / 2, math.pi) - math.pi / 2


def circular_distance(a, b, period: float = TWO_PI):
    """Shortest distance between two angles on a circle of the given period."""
    d = np.mod(a - b, period)
    return np.minimum(d, period - d)


def hann_window(n: int) -> np.ndarray:
    """Periodic Hann window (sums to exactly n/2 for even n)."""
    return 0.5 - 0.5 * np.cos(TWO_PI * np.arange(n) / n)


def make_window(name: str, n: int) -> np.ndarray:
    if name == "hann":
        return hann_window(n)
    if name == "rect":
        return np.ones(n)
    raise ValueError(f"unknown window {name!r} (expected 'hann' or 'rect')")


def quadratic_peak_offset(y_m1: float, y_0: float, y_p1: float) -> float:
    """Sub-bin offset of a peak from three consecutive log-magnitude samples.

    Returns the abscissa of the parabola vertex relative to the center
    sample, clipped to [-0.5, 0.5]; 0 when the samples are degenerate.
    """
    denom = y_m1 - 2.0 * y_0 + y_p1
    if denom >= 0.0 or not np.isfinite(denom):
        return 0.0
    delta = 0.5 * (y_m1 - y_p1) / denom
    return float(np.clip(delta, -0.5, 0.5))


def interpolate_peak(log_mag: np.ndarray, idx: int) -> float:
    """Interpolated (fractional) peak position around an integer maximum."""
    if idx <= 0 or idx >= len(log_mag) - 1:
        return float(idx)
    return idx + quadratic_peak_offset(log_mag[idx - 1], log_mag[idx], log_mag[idx + 1])


def dtft_point(x: np.ndarray, freq_cycles_per_sample: float) -> complex:
    """Single-frequency DTFT of a 1-D signal, X(f) = sum x[j] e^{-2i pi f j}."""
    j = np.arange(len(x))
    return complex(np.sum(x * np.exp(-2j * math.pi * freq_cycles_per_sample * j)))


def unwrap_increments(values: np.ndarray, period: float) -> np.ndarray:
    """Unwrap a sequence whose true increments stay below period/2.

    The first element is kept as-is; each increment is wrapped into
    (-period/2, period/2] before accumulating.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return values.copy()
    inc = np.mod(np.diff(values) + period / 2, period) - period / 2
    out = np.empty_like(values)
    out[0] = values[0]
    out[1:] = values[0] + np.cumsum(inc)
    return out
