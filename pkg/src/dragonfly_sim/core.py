"""Radar configuration and the closed-form quantities derived from it.

All other modules consume :class:`RadarConfig` and the pure functions below.
Units are SI throughout: Hz, s, m, m/s, dBm where stated.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict
from pathlib import Path

# Fixed for the whole package; never use 3e8 shortcuts.
SPEED_OF_LIGHT = 299_792_458.0  # m/s

# The ADC keeps sampling a little past the nominal chirp time on real
# hardware (4096 samples at 1.2 Msps is 3.413 ms against a nominal 3.4 ms
# chirp), so the samples-vs-duration check allows a 2% overrun.
_SAMPLE_OVERRUN_TOL = 1.02


@dataclass(frozen=True)
class RadarConfig:
    """Complete FMCW radar configuration.

    Attributes:
        f0: Chirp start frequency (Hz).
        bandwidth: RF sweep bandwidth (Hz).
        chirp_time: Duration of one chirp (s).
        sample_rate: ADC rate (samples/s).
        samples_per_chirp: Fast-time samples acquired per chirp.
        n_rx: Receive channel count (horizontal array).
        d_rx: Rx element spacing (m).
        n_tx: Transmit channel count (vertical pair); 1 or 2.
        d_tx: Tx element spacing (m).
        tx_period: Time between successive transmitted chirps of
            consecutive Tx channels (s).
        range_fft_len: Zero-padded fast-time FFT length.
        angle_fft_len: Zero-padded channel-axis FFT length.
        eirp: Transmit EIRP (dBm).
        clutter_suppression: Cross-polarization attenuation applied to
            co-polarized clutter returns (dB, positive).
    """

    f0: float
    bandwidth: float
    chirp_time: float
    sample_rate: float
    samples_per_chirp: int
    n_rx: int
    d_rx: float
    n_tx: int
    d_tx: float
    tx_period: float
    range_fft_len: int
    angle_fft_len: int
    eirp: float = 29.0
    clutter_suppression: float = 30.0

    def __post_init__(self) -> None:
        if self.f0 <= 0:
            raise ValueError("f0 must be positive")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if self.chirp_time <= 0:
            raise ValueError("chirp_time must be positive")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if self.samples_per_chirp <= 0:
            raise ValueError("samples_per_chirp must be positive")
        if self.samples_per_chirp > self.chirp_time * self.sample_rate * _SAMPLE_OVERRUN_TOL:
            raise ValueError(
                f"samples_per_chirp={self.samples_per_chirp} does not fit in "
                f"chirp_time*sample_rate={self.chirp_time * self.sample_rate:.1f}"
            )
        if self.tx_period < self.chirp_time:
            raise ValueError("tx_period must be >= chirp_time (channels are time-divided)")
        if self.d_rx <= 0 or self.d_tx <= 0:
            raise ValueError("antenna spacings must be positive")
        if self.n_rx < 1:
            raise ValueError("n_rx must be >= 1")
        if self.n_tx not in (1, 2):
            raise ValueError(
                f"n_tx={self.n_tx} is not supported: the elevation disambiguation "
                "is specified for exactly 2 Tx channels (1 allowed for Doppler-space use)"
            )
        if self.range_fft_len < self.samples_per_chirp:
            raise ValueError("range_fft_len must be >= samples_per_chirp")
        if self.angle_fft_len < self.n_rx:
            raise ValueError("angle_fft_len must be >= n_rx")

    @property
    def wavelength(self) -> float:
        """Wavelength at the chirp start frequency (m)."""
        return SPEED_OF_LIGHT / self.f0

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict) -> "RadarConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown radar config key: {sorted(unknown)[0]!r}")
        missing = {f.name for f in _required_fields(cls)} - set(doc)
        if missing:
            raise ValueError(f"missing radar config key: {sorted(missing)[0]!r}")
        return cls(**doc)

    @classmethod
    def from_json(cls, text_or_path: str | Path) -> "RadarConfig":
        """Load a config from a JSON string or a path to a JSON file."""
        if isinstance(text_or_path, Path) or str(text_or_path).lstrip().startswith("{") is False:
            text = Path(text_or_path).read_text()
        else:
            text = str(text_or_path)
        return cls.from_dict(json.loads(text))


def _required_fields(cls):
    import dataclasses

    for f in dataclasses.fields(cls):
        if f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING:
            yield f


def default_radar(bandwidth: float = 250e6) -> RadarConfig:
    """The 24 GHz 8 Rx / 2 Tx radar used throughout as the reference unit.

    The RF bandwidth is not pinned by the hardware description; 250 MHz is
    the value consistent with the quoted 60 cm range resolution and can be
    overridden.
    """
    f0 = 24e9
    lam = SPEED_OF_LIGHT / f0
    return RadarConfig(
        f0=f0,
        bandwidth=bandwidth,
        chirp_time=3.4e-3,
        sample_rate=1.2e6,
        samples_per_chirp=4096,
        n_rx=8,
        d_rx=lam / 2,
        n_tx=2,
        d_tx=2 * lam,
        tx_period=6.8e-3,  # one unsampled chirp between channels
        range_fft_len=16384,
        angle_fft_len=1024,
        eirp=29.0,
        clutter_suppression=30.0,
    )


def wavelength(cfg: RadarConfig) -> float:
    """Wavelength at the chirp start frequency (m)."""
    return SPEED_OF_LIGHT / cfg.f0


def chirp_slope(cfg: RadarConfig) -> float:
    """Chirp frequency sweep rate (Hz/s)."""
    return cfg.bandwidth / cfg.chirp_time


def beat_frequency(cfg: RadarConfig, range_m: float) -> float:
    """IF beat frequency of a reflector at the given range (Hz)."""
    if range_m < 0:
        raise ValueError(f"range must be >= 0, got {range_m}")
    return 2.0 * range_m * chirp_slope(cfg) / SPEED_OF_LIGHT


def range_from_beat(cfg: RadarConfig, f_b: float) -> float:
    """Inverse of :func:`beat_frequency`."""
    return f_b * SPEED_OF_LIGHT / (2.0 * chirp_slope(cfg))


def range_resolution(cfg: RadarConfig) -> float:
    """Smallest resolvable range separation (m), c / (2 * bandwidth)."""
    return SPEED_OF_LIGHT / (2.0 * cfg.bandwidth)


def max_unambiguous_range(cfg: RadarConfig) -> float:
    """Practical unambiguous range limit set by the chirp length (m)."""
    return cfg.chirp_time * cfg.sample_rate * SPEED_OF_LIGHT / (4.0 * cfg.bandwidth)


def doppler_frequency(cfg: RadarConfig, velocity: float) -> float:
    """Doppler shift of a target moving at the given radial speed (Hz, signed)."""
    return 2.0 * velocity * cfg.f0 / SPEED_OF_LIGHT


def velocity_ambiguity(cfg: RadarConfig) -> float:
    """Modulus of the radial velocity recoverable from inter-chirp phase (m/s).

    Velocities are only measurable modulo this value because the phase they
    induce between consecutive transmissions wraps.
    """
    return SPEED_OF_LIGHT / (8.0 * cfg.f0 * cfg.tx_period)


def max_acceleration(cfg: RadarConfig) -> float:
    """Largest radial acceleration the phase-proximity tracking tolerates (m/s^2).

    Beyond this value the velocity-induced phase moves more than a quarter
    turn between transmissions and the candidate nearest the predecessor is
    no longer the right one.
    """
    return SPEED_OF_LIGHT / (16.0 * cfg.f0 * cfg.tx_period**2)


def db_to_linear(db: float) -> float:
    """Power ratio from dB."""
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    """dB from power ratio."""
    if x <= 0:
        raise ValueError("dB of a non-positive power ratio")
    return 10.0 * math.log10(x)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(w: float) -> float:
    if w <= 0:
        raise ValueError("dBm of a non-positive power")
    return 10.0 * math.log10(w) + 30.0
