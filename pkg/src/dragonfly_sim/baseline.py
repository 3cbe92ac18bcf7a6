"""Slow-time (Doppler-space) tag localizer used as a comparison baseline.

Aggregates many chirps of one Tx channel and localizes a tag by the
Doppler-axis tone its slow RCS modulation produces.  Motion shifts that
tone by the Doppler frequency, so a moving tag changes its apparent
modulation frequency; the intra-chirp pipeline does not suffer this,
which is exactly what this module exists to demonstrate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chirp2d import NoTagDetected
from .core import RadarConfig, range_from_beat
from .dsp import interpolate_peak, make_window
from .synth import IfFrame

_MEDIAN_TO_MEAN = math.log(2.0)


@dataclass
class RangeDopplerMap:
    """Doppler-by-range magnitude map from one Tx channel's chirps.

    values[d][r]: Doppler bin d (fftshifted, 0 Hz centered), range bin r.
    """

    values: np.ndarray
    doppler_hz: np.ndarray   # per Doppler bin, ascending
    range_bin_hz: float      # fast-time bin width (Hz of beat frequency)
    chirp_interval: float    # time between the aggregated chirps (s)

    def doppler_span(self) -> float:
        """Half-span of the Doppler axis: 1 / (2 * chirp interval)."""
        return 0.5 / self.chirp_interval


def range_doppler_map(
    cfg: RadarConfig,
    frames: list[IfFrame],
    n_chirps: int,
    *,
    tx_channel: int = 0,
    rx_channel: int = 0,
    doppler_pad: int = 4,
    window: str = "hann",
) -> RangeDopplerMap:
    """FFT over fast time per chirp, then over chirps per range bin.

    Uses the first n_chirps frames transmitted on tx_channel; their spacing
    must be uniform (it is, under the alternating schedule).
    """
    selected = [f for f in frames if f.tx_channel == tx_channel][:n_chirps]
    if len(selected) < n_chirps:
        raise ValueError(
            f"need {n_chirps} frames on tx_channel {tx_channel}, got {len(selected)}"
        )
    starts = np.array([f.t_start for f in selected])
    intervals = np.diff(starts)
    if len(intervals) and not np.allclose(intervals, intervals[0], rtol=1e-9):
        raise ValueError("frames are not uniformly spaced in time")
    interval = float(intervals[0]) if len(intervals) else cfg.tx_period

    fast = np.stack([f.samples[rx_channel].astype(float) for f in selected])
    fast *= make_window(window, cfg.samples_per_chirp)[None, :]
    range_fft = np.fft.rfft(fast, n=cfg.range_fft_len, axis=1)[:, : cfg.range_fft_len // 2]

    n_dopp = n_chirps * doppler_pad
    dopp = np.fft.fftshift(np.fft.fft(range_fft, n=n_dopp, axis=0), axes=0)
    doppler_hz = np.fft.fftshift(np.fft.fftfreq(n_dopp, d=interval))
    return RangeDopplerMap(
        values=np.abs(dopp),
        doppler_hz=doppler_hz,
        range_bin_hz=cfg.sample_rate / cfg.range_fft_len,
        chirp_interval=interval,
    )


def slow_time_localize(
    rd_map: RangeDopplerMap,
    f_m: float,
    *,
    search_halfwidth_hz: float = 250.0,
    snr_threshold_db: float = 10.0,
) -> tuple[float, float, float]:
    """Strongest peak near the expected modulation line.

    Returns (range_bin_beat_hz, apparent_frequency_hz, snr_db).  The
    apparent frequency moves with target Doppler, which scrambles
    frequency-coded identities for moving tags.
    """
    mask = np.abs(rd_map.doppler_hz - f_m) <= search_halfwidth_hz
    if not np.any(mask):
        raise NoTagDetected(f"no Doppler bins within {search_halfwidth_hz:g} Hz of {f_m:g} Hz")
    sub = rd_map.values[mask, :]
    power = sub**2
    noise = float(np.median(power)) / _MEDIAN_TO_MEAN
    d_idx, r_idx = np.unravel_index(int(np.argmax(power)), power.shape)
    peak = float(power[d_idx, r_idx])
    if noise <= 0 or peak < noise * 10.0 ** (snr_threshold_db / 10.0):
        raise NoTagDetected("no slow-time peak above the detection threshold")

    dopp_idx_all = np.nonzero(mask)[0][d_idx]
    log_d = np.log(np.maximum(rd_map.values[:, r_idx], 1e-300))
    dopp_frac = interpolate_peak(log_d, int(dopp_idx_all))
    dstep = rd_map.doppler_hz[1] - rd_map.doppler_hz[0]
    apparent = float(rd_map.doppler_hz[0] + dopp_frac * dstep)

    log_r = np.log(np.maximum(rd_map.values[dopp_idx_all, :], 1e-300))
    r_frac = interpolate_peak(log_r, int(r_idx))
    beat_hz = float(r_frac * rd_map.range_bin_hz)
    snr_db = 10.0 * math.log10(peak / noise)
    return beat_hz, apparent, snr_db


def baseline_range(cfg: RadarConfig, beat_hz: float) -> float:
    return range_from_beat(cfg, beat_hz)
