"""Single-chirp 2D localization: range-azimuth spectrum and peak pairing.

A modulated tag shows up as two peaks, at f_m + f_b and f_m - f_b, with
mirrored angular positions.  Peak frequencies give range, the upper peak's
angular position gives azimuth, and the two phases feed the elevation
stage.  Everything here is stateless per frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .core import RadarConfig, range_from_beat
from .dsp import interpolate_peak, make_window, wrap_two_pi
from .synth import IfFrame

# Noise power is estimated from the median of the band profile; exponential
# noise has median = ln(2) * mean, so divide the median out by this.
_MEDIAN_TO_MEAN = math.log(2.0)


class NoTagDetected(RuntimeError):
    """No peak pair above the detection threshold in the search band."""


class AmbiguousPair(RuntimeError):
    """More than one plausible pairing in the band (channel collision)."""


@dataclass(frozen=True)
class TagChannel:
    """Search description for one tag's frequency channel."""

    tag_id: str
    f_m: float
    search_halfwidth_hz: float = 30e3


@dataclass
class PeakPair:
    """The two tag peaks of one chirp, interpolated."""

    f_plus: float
    f_minus: float
    phi_plus: float
    phi_minus: float
    azimuth_bin_plus: float   # signed fractional angular index of the upper peak
    azimuth_bin_minus: float  # signed fractional angular index of the lower peak
    snr_plus_db: float
    snr_minus_db: float

    def __post_init__(self):
        if not self.f_plus > self.f_minus > 0.0:
            raise ValueError(f"need f_plus > f_minus > 0, got {self.f_plus}, {self.f_minus}")


@dataclass
class Detection:
    """Per-chirp tag observation."""

    chirp_index: int
    tx_channel: int
    tag_id: str
    f_b: float
    range_m: float
    azimuth: float  # rad
    phi_plus: float
    phi_minus: float
    snr_db: float


class RangeAzimuthSpectrum:
    """Windowed 2-D spectrum of one frame, positive-frequency half.

    The fast-time FFT is computed eagerly (it is needed for everything);
    the channel-axis FFT is computed per range bin on demand so that the
    full angle-by-range matrix is only materialized when asked for.
    """

    def __init__(self, cfg: RadarConfig, frame: IfFrame, window: str = "hann"):
        if frame.samples.shape != (cfg.n_rx, cfg.samples_per_chirp):
            raise ValueError(
                f"frame shape {frame.samples.shape} does not match config "
                f"({cfg.n_rx}, {cfg.samples_per_chirp})"
            )
        self.cfg = cfg
        self.frame = frame
        self.window = make_window(window, cfg.samples_per_chirp)
        self.windowed = frame.samples.astype(float) * self.window[None, :]
        # rfft of the zero-padded fast-time axis: (n_rx, range_fft_len//2 + 1)
        self.range_fft = np.fft.rfft(self.windowed, n=cfg.range_fft_len, axis=1)
        self.n_range_bins = cfg.range_fft_len // 2
        self.time_centroid = (cfg.samples_per_chirp - 1) / 2.0
        self.channel_centroid = (cfg.n_rx - 1) / 2.0

    @property
    def bin_hz(self) -> float:
        """Frequency step of the zero-padded range axis."""
        return self.cfg.sample_rate / self.cfg.range_fft_len

    def freq_of_bin(self, b: float) -> float:
        return b * self.bin_hz

    def bin_of_freq(self, f: float) -> float:
        return f / self.bin_hz

    def sin_theta_of_bin(self, u: float) -> float:
        """Signed fractional angular bin to sin(azimuth)."""
        return self.cfg.wavelength * u / (self.cfg.d_rx * self.cfg.angle_fft_len)

    @cached_property
    def values(self) -> np.ndarray:
        """Full complex spectrum [angle_fft_len][range_fft_len//2]."""
        return np.fft.fft(
            self.range_fft[:, : self.n_range_bins], n=self.cfg.angle_fft_len, axis=0
        )

    def band_power(self, lo_bin: int, hi_bin: int) -> np.ndarray:
        """Channel-summed power profile over range bins [lo_bin, hi_bin]."""
        block = self.range_fft[:, lo_bin : hi_bin + 1]
        return np.sum(np.abs(block) ** 2, axis=0)

    def angular_slice(self, range_bin: int) -> np.ndarray:
        """Angular FFT (angle_fft_len) at one range bin."""
        return np.fft.fft(self.range_fft[:, range_bin], n=self.cfg.angle_fft_len)

    def dtft_point(self, freq_hz: float, angle_bin: float) -> complex:
        """Exact 2-D DTFT of the windowed frame at an interpolated peak.

        Time and channel axes are referenced to their centroids, where the
        window spectrum is real-symmetric: the returned phase is then
        insensitive (to first order) to errors in the interpolated peak
        position, instead of picking up the window group delay.  Reported
        peak phases are therefore mid-chirp, array-center referenced.
        """
        j = np.arange(self.cfg.samples_per_chirp) - self.time_centroid
        time_vec = np.exp(-2j * math.pi * freq_hz / self.cfg.sample_rate * j)
        per_channel = self.windowed @ time_vec
        n = np.arange(self.cfg.n_rx) - self.channel_centroid
        ang_vec = np.exp(-2j * math.pi * angle_bin * n / self.cfg.angle_fft_len)
        return complex(per_channel @ ang_vec)

    def energy(self) -> float:
        """Total spectral energy, normalized to equal windowed time energy."""
        full = self.range_fft  # includes the Nyquist bin
        weights = np.full(full.shape[1], 2.0)
        weights[0] = 1.0
        if self.cfg.range_fft_len % 2 == 0:
            weights[-1] = 1.0
        per_channel = np.sum(weights[None, :] * np.abs(full) ** 2, axis=1)
        return float(np.sum(per_channel)) / self.cfg.range_fft_len


def range_azimuth_spectrum(
    cfg: RadarConfig, frame: IfFrame, window: str = "hann"
) -> RangeAzimuthSpectrum:
    """Window the frame and take the zero-padded 2-D FFT (lazy in angle)."""
    return RangeAzimuthSpectrum(cfg, frame, window)


def _local_maxima(profile: np.ndarray) -> np.ndarray:
    left = profile[1:-1] > profile[:-2]
    right = profile[1:-1] >= profile[2:]
    return np.nonzero(left & right)[0] + 1


def _interp_angle(ang_power_log: np.ndarray, idx: int, n: int) -> float:
    """Circular quadratic interpolation of an angular peak, signed bins."""
    y_m1 = ang_power_log[(idx - 1) % n]
    y_0 = ang_power_log[idx]
    y_p1 = ang_power_log[(idx + 1) % n]
    denom = y_m1 - 2.0 * y_0 + y_p1
    delta = 0.0 if denom >= 0 else float(np.clip(0.5 * (y_m1 - y_p1) / denom, -0.5, 0.5))
    u = idx + delta
    if u > n / 2:
        u -= n
    return u


def _signed_to_index(u: float, n: int) -> int:
    return int(round(u)) % n


def detect_tag_peaks(
    spectrum: RangeAzimuthSpectrum,
    channel: TagChannel,
    *,
    snr_threshold_db: float = 10.0,
    pair_tolerance_bins: float = 2.0,
    max_candidates: int = 8,
    ambiguity_margin_db: float = 15.0,
) -> PeakPair:
    """Find the tag's symmetric peak pair inside its frequency channel.

    Raises NoTagDetected if no pair clears the SNR threshold, and
    AmbiguousPair if a second, disjoint pairing qualifies within
    ``ambiguity_margin_db`` of the best one (a channel collision; window
    sidelobes of the true pair sit far below that margin).
    """
    cfg = spectrum.cfg
    lo = max(1, int(math.floor(spectrum.bin_of_freq(channel.f_m - channel.search_halfwidth_hz))))
    hi = min(
        spectrum.n_range_bins - 2,
        int(math.ceil(spectrum.bin_of_freq(channel.f_m + channel.search_halfwidth_hz))),
    )
    if hi - lo < 8:
        raise ValueError(f"search band for {channel.tag_id} is empty or too narrow")

    profile = spectrum.band_power(lo, hi)
    # The band-profile median estimates the summed-over-channels noise power
    # per bin, which equals the noise power of one coherent angular bin.
    noise_power = float(np.median(profile)) / _MEDIAN_TO_MEAN
    if noise_power <= 0.0:
        raise NoTagDetected(f"{channel.tag_id}: empty band")
    threshold = noise_power * 10.0 ** (snr_threshold_db / 10.0)
    # The non-coherent profile is n_rx below the coherent peak, so candidates
    # are screened at a reduced level and confirmed on the angular FFT.
    profile_threshold = threshold / cfg.n_rx

    maxima = _local_maxima(profile)
    maxima = maxima[profile[maxima] >= profile_threshold]
    if len(maxima) < 2:
        raise NoTagDetected(
            f"{channel.tag_id}: fewer than two peaks above {snr_threshold_db:g} dB"
        )
    # Strongest candidates first; deterministic tie-break on lower frequency.
    order = np.lexsort((maxima, -profile[maxima]))
    maxima = (maxima[order] + lo)[:max_candidates]  # absolute range bins

    n_a = cfg.angle_fft_len
    confirmed: dict[int, tuple[float, np.ndarray]] = {}
    for b in maxima:
        ang = np.abs(spectrum.angular_slice(int(b)))
        peak_power = float(np.max(ang) ** 2)
        if peak_power >= threshold:
            confirmed[int(b)] = (peak_power, ang)
    if len(confirmed) < 2:
        raise NoTagDetected(
            f"{channel.tag_id}: fewer than two peaks above {snr_threshold_db:g} dB"
        )

    tol_hz = pair_tolerance_bins * spectrum.bin_hz
    bins = sorted(confirmed)
    pairs = []
    for ia in range(len(bins)):
        for ib in range(ia + 1, len(bins)):
            b_lo, b_hi = bins[ia], bins[ib]
            mid = spectrum.freq_of_bin(0.5 * (b_lo + b_hi))
            if abs(mid - channel.f_m) <= tol_hz:
                score = min(confirmed[b_lo][0], confirmed[b_hi][0])
                pairs.append((score, b_lo, b_hi))
    if not pairs:
        raise NoTagDetected(f"{channel.tag_id}: no symmetric pair about f_m")
    pairs.sort(key=lambda p: (-p[0], p[1]))
    best = pairs[0]
    rival_floor = best[0] / 10.0 ** (ambiguity_margin_db / 10.0)
    for other in pairs[1:]:
        if other[0] >= rival_floor and {other[1], other[2]}.isdisjoint({best[1], best[2]}):
            raise AmbiguousPair(
                f"{channel.tag_id}: two comparable disjoint peak pairs in the channel"
            )

    _, bin_minus, bin_plus = best
    log_prof = np.log(np.maximum(profile, 1e-300))
    f_plus = spectrum.freq_of_bin(lo + interpolate_peak(log_prof, bin_plus - lo))
    f_minus = spectrum.freq_of_bin(lo + interpolate_peak(log_prof, bin_minus - lo))

    ang_plus = confirmed[bin_plus][1]
    u_plus = _interp_angle(np.log(np.maximum(ang_plus, 1e-300)), int(np.argmax(ang_plus)), n_a)

    # The lower peak carries the negated spatial phase, so it is searched
    # around the mirrored angular index of the upper peak.
    ang_minus = confirmed[bin_minus][1]
    mirror = _signed_to_index(-u_plus, n_a)
    halfwidth = max(2, n_a // cfg.n_rx)
    offsets = np.arange(-halfwidth, halfwidth + 1)
    window_idx = (mirror + offsets) % n_a
    local = ang_minus[window_idx]
    idx_minus = int(window_idx[np.argmax(local)])
    u_minus = _interp_angle(np.log(np.maximum(ang_minus, 1e-300)), idx_minus, n_a)

    phi_plus = float(np.angle(spectrum.dtft_point(f_plus, u_plus)))
    phi_minus = float(np.angle(spectrum.dtft_point(f_minus, u_minus)))

    snr_plus = float(ang_plus[_signed_to_index(u_plus, n_a)] ** 2 / noise_power)
    snr_minus = float(ang_minus[idx_minus] ** 2 / noise_power)

    return PeakPair(
        f_plus=f_plus,
        f_minus=f_minus,
        phi_plus=wrap_two_pi(phi_plus),
        phi_minus=wrap_two_pi(phi_minus),
        azimuth_bin_plus=u_plus,
        azimuth_bin_minus=u_minus,
        snr_plus_db=10.0 * math.log10(max(snr_plus, 1e-300)),
        snr_minus_db=10.0 * math.log10(max(snr_minus, 1e-300)),
    )


def localize2d(
    cfg: RadarConfig,
    pair: PeakPair,
    k: int,
    tx_channel: int = 0,
    tag_id: str = "",
    *,
    mirror_average: bool = False,
) -> Detection:
    """Range and azimuth from a peak pair.

    Azimuth comes from the upper peak's angular position; with
    ``mirror_average`` the (negated) lower-peak position is averaged in.
    """
    f_b = 0.5 * (pair.f_plus - pair.f_minus)
    r = range_from_beat(cfg, f_b)
    u = pair.azimuth_bin_plus
    if mirror_average:
        u = 0.5 * (pair.azimuth_bin_plus - pair.azimuth_bin_minus)
    sin_theta = cfg.wavelength * u / (cfg.d_rx * cfg.angle_fft_len)
    if abs(sin_theta) >= 1.0:
        raise ValueError(f"angular index {u:g} implies |sin(azimuth)| >= 1")
    return Detection(
        chirp_index=k,
        tx_channel=tx_channel,
        tag_id=tag_id,
        f_b=f_b,
        range_m=r,
        azimuth=math.asin(sin_theta),
        phi_plus=pair.phi_plus,
        phi_minus=pair.phi_minus,
        snr_db=min(pair.snr_plus_db, pair.snr_minus_db),
    )
