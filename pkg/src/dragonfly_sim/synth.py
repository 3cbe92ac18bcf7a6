"""Per-chirp IF sample synthesis for tags, clutter, and noise.

The target is frozen within each chirp (stop-and-go): ranges, angles, and
phases are evaluated at the chirp start, so inter-chirp phase evolution
carries all motion information while beat frequencies stay Doppler-free.
Channels are real-valued (I only); the analyzer works on the positive
half-spectrum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import RadarConfig, chirp_slope, SPEED_OF_LIGHT
from .dsp import TWO_PI
from .scenario import Scenario, TagScenario
from .trajectory import TrajectoryDomainError


@dataclass
class IfFrame:
    """One chirp's real IF samples, [rx channel][fast-time sample]."""

    chirp_index: int
    tx_channel: int
    t_start: float
    samples: np.ndarray  # float32, shape (n_rx, samples_per_chirp)

    def __post_init__(self):
        if self.samples.ndim != 2:
            raise ValueError("samples must be 2-D [n_rx][n_samples]")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("samples must be finite")


@dataclass
class TagChirpState:
    """Ground-truth per-chirp quantities for one tag (reference channel 0)."""

    range_m: float
    azimuth: float
    elevation: float
    f_b: float
    fm_inst: float
    psi_plus: float   # rad, mod 2*pi
    psi_minus: float  # rad, mod 2*pi
    mu_cycles: float  # per-channel azimuth phase step, cycles
    phi0_cycles: float
    phi_m_cycles: float
    elev_cycles: float
    amplitude: float


def tx_channel_of(cfg: RadarConfig, k: int) -> int:
    return k % cfg.n_tx


def chirp_start_time(cfg: RadarConfig, k: int) -> float:
    return k * cfg.tx_period


def chirp_noise_seed(seed: int, k: int) -> int:
    """Per-chirp noise seed, a pure function of (seed, k)."""
    return int(np.random.SeedSequence([seed, k]).generate_state(1)[0])


def _frac(x: float) -> float:
    return x - math.floor(x)


def _tag_disturbances(
    tag: TagScenario, cfg: RadarConfig, k: int, rng: np.random.Generator | None
) -> tuple[float, float]:
    """(extra range m, extra propagation phase rad) for chirp k.

    Without an rng the seeded disturbances (random spikes, jitter) are
    skipped, which is what ground-truth evaluation wants; the explicit
    spike list is deterministic and always applied.
    """
    extra_range = 0.0
    extra_phase = 0.0
    if tag.spike_chirps is not None:
        spiked = k in tag.spike_chirps
    elif tag.spike_rate > 0.0 and rng is not None:
        spiked = rng.random() < tag.spike_rate
    else:
        spiked = False
    if spiked:
        disp = tag.spike_displacement_m
        if disp is None:
            disp = cfg.wavelength / 8.0
        extra_range += disp
    if tag.phase_jitter_rms > 0.0 and rng is not None:
        extra_phase += tag.phase_jitter_rms * rng.standard_normal()
    return extra_range, extra_phase


def tag_chirp_state(
    cfg: RadarConfig,
    tag: TagScenario,
    k: int,
    *,
    amplitude_calibration: float = 1.0,
    nlos_attenuation_db: float = 0.0,
    disturbance_rng: np.random.Generator | None = None,
) -> TagChirpState:
    """Evaluate every per-chirp tag quantity at the chirp start time."""
    t0 = chirp_start_time(cfg, k)
    try:
        pos = tag.trajectory.position(t0)
    except TrajectoryDomainError:
        raise
    r = float(np.linalg.norm(pos))
    if r <= 0.0:
        raise ValueError(f"tag {tag.tag_id} is at the radar origin at t={t0:g}")
    azimuth = math.atan2(pos[1], pos[0])
    elevation = math.asin(pos[2] / r)

    extra_range, extra_phase = _tag_disturbances(tag, cfg, k, disturbance_rng)
    r_phase = r + extra_range

    lam = cfg.wavelength
    f_b = 2.0 * r * chirp_slope(cfg) / SPEED_OF_LIGHT
    # Phase bookkeeping is done in cycles: the large whole-cycle counts drop
    # out exactly instead of degrading float precision in radians.
    phi0_cycles = _frac(2.0 * r_phase / lam + extra_phase / TWO_PI)
    elev_cycles = tx_channel_of(cfg, k) * cfg.d_tx * math.sin(elevation) / lam
    phi_m_cycles = _frac(tag.modulation_phase_cycles(t0))
    mu_cycles = cfg.d_rx * math.sin(azimuth) / lam
    fm_inst = tag.f_m * (1.0 + 1e-6 * tag.oscillator_drift * t0)

    direction_to_radar = -pos / r
    sigma = tag.rcs_at(direction_to_radar)
    amplitude = (
        amplitude_calibration
        * math.sqrt(sigma)
        / r**2
        * 10.0 ** (-nlos_attenuation_db / 20.0)
    )

    psi_plus = TWO_PI * _frac(phi_m_cycles + phi0_cycles + elev_cycles)
    psi_minus = TWO_PI * _frac(phi_m_cycles - phi0_cycles - elev_cycles)
    return TagChirpState(
        range_m=r,
        azimuth=azimuth,
        elevation=elevation,
        f_b=f_b,
        fm_inst=fm_inst,
        psi_plus=psi_plus,
        psi_minus=psi_minus,
        mu_cycles=mu_cycles,
        phi0_cycles=phi0_cycles,
        phi_m_cycles=phi_m_cycles,
        elev_cycles=elev_cycles,
        amplitude=amplitude,
    )


def tag_if_phases(cfg: RadarConfig, tag: TagScenario, k: int) -> tuple[float, float, float]:
    """Ground-truth phases of the two tag components on Rx channel 0.

    Returns (psi_plus, psi_minus, f_b): the phases (rad, mod 2*pi) of the
    f_m+f_b and f_m-f_b tones, and the beat frequency (Hz), at chirp k.
    Deterministic disturbances (explicit spike chirps) are included; seeded
    ones are not, matching a noiseless synthesis.
    """
    st = tag_chirp_state(cfg, tag, k)
    return st.psi_plus, st.psi_minus, st.f_b


def tag_measured_phases(cfg: RadarConfig, tag: TagScenario, k: int) -> tuple[float, float]:
    """Ground truth for the phases the spectrum analyzer reports.

    The analyzer references phases to the fast-time window centroid and the
    array center (see RangeAzimuthSpectrum.dtft_point); this helper applies
    the same deterministic reference shift to the channel-0, chirp-start
    phases of :func:`tag_if_phases`.
    """
    st = tag_chirp_state(cfg, tag, k)
    j0 = (cfg.samples_per_chirp - 1) / 2.0
    n0 = (cfg.n_rx - 1) / 2.0
    shift_time_plus = (st.fm_inst + st.f_b) * j0 / cfg.sample_rate
    shift_time_minus = (st.fm_inst - st.f_b) * j0 / cfg.sample_rate
    mu = TWO_PI * st.mu_cycles
    psi_plus = TWO_PI * _frac(st.psi_plus / TWO_PI + shift_time_plus) + n0 * mu
    psi_minus = TWO_PI * _frac(st.psi_minus / TWO_PI + shift_time_minus) - n0 * mu
    return psi_plus % TWO_PI, psi_minus % TWO_PI


def noise_sigma(noise_floor_dbm: float | None) -> float:
    """Per-sample noise standard deviation for a dBm floor.

    Sample amplitudes are 'ADC units'; the dBm convention is that noise of
    unit variance has 0 dBm power, i.e. floor_dbm = 10*log10(sigma^2).
    """
    if noise_floor_dbm is None:
        return 0.0
    return 10.0 ** (noise_floor_dbm / 20.0)


def processing_gain(cfg: RadarConfig, window: np.ndarray) -> float:
    """Linear SNR gain from the windowed 2-D FFT relative to one sample."""
    wsum = float(np.sum(window))
    wsq = float(np.sum(window**2))
    return (wsum * wsum / wsq) * cfg.n_rx


def peak_component_amplitude(state: TagChirpState, mode: str) -> float:
    """Time-domain amplitude of each of the two spectral components."""
    if mode == "harmonic":
        return state.amplitude / 2.0
    # 0/1 square wave: fundamental Fourier coefficient is 2/pi.
    return state.amplitude / math.pi


def expected_peak_snr_db(
    cfg: RadarConfig,
    scenario: Scenario,
    tag: TagScenario,
    window: np.ndarray,
    k: int = 0,
) -> float:
    """Predicted post-2DFFT single-peak SNR at chirp k (dB)."""
    sigma = noise_sigma(scenario.noise_floor_dbm)
    if sigma == 0.0:
        return math.inf
    st = tag_chirp_state(
        cfg, tag, k,
        amplitude_calibration=scenario.amplitude_calibration,
        nlos_attenuation_db=scenario.nlos_attenuation_db,
    )
    a = peak_component_amplitude(st, tag.modulation_mode)
    snr = a * a / (4.0 * sigma * sigma) * processing_gain(cfg, window)
    return 10.0 * math.log10(snr)


def noise_floor_for_snr(
    cfg: RadarConfig,
    scenario_amplitude_calibration: float,
    tag: TagScenario,
    window: np.ndarray,
    target_snr_db: float,
    k: int = 0,
) -> float:
    """Noise floor (dBm) that puts the tag's peaks at the target SNR."""
    st = tag_chirp_state(cfg, tag, k, amplitude_calibration=scenario_amplitude_calibration)
    a = peak_component_amplitude(st, tag.modulation_mode)
    snr = 10.0 ** (target_snr_db / 10.0)
    sigma_sq = a * a * processing_gain(cfg, window) / (4.0 * snr)
    return 10.0 * math.log10(sigma_sq)


def _square_wave(fm: float, t: np.ndarray, phase_cycles: float, nyquist: float) -> np.ndarray:
    """Bandlimited 50% duty 0/1 square, high where cos of the phase is >= 0.

    Harmonics above the Nyquist frequency are omitted, as the receiver's
    anti-aliasing filter would remove them; an ideal sampled square would
    fold them back onto the kept lines.
    """
    theta = TWO_PI * (fm * t + phase_cycles)
    m = np.full(t.shape, 0.5)
    n = 1
    sign = 1.0
    while n * fm < nyquist:
        m += sign * (2.0 / (math.pi * n)) * np.cos(n * theta)
        sign = -sign
        n += 2
    return m


def synth_chirp(
    cfg: RadarConfig, scenario: Scenario, k: int, noise_seed: int
) -> IfFrame:
    """Synthesize the IF frame of chirp k.

    Pure function of its arguments: the same (cfg, scenario, k, noise_seed)
    always yields bit-identical samples, so chirps can be generated in any
    order or in parallel.
    """
    n = cfg.samples_per_chirp
    t = np.arange(n) / cfg.sample_rate
    acc = np.zeros((cfg.n_rx, n))
    rx = np.arange(cfg.n_rx)

    ss = np.random.SeedSequence([noise_seed])
    children = ss.spawn(1 + len(scenario.tags))
    noise_rng = np.random.Generator(np.random.PCG64(children[0]))

    for i, tag in enumerate(scenario.tags):
        rng = np.random.Generator(np.random.PCG64(children[1 + i]))
        st = tag_chirp_state(
            cfg, tag, k,
            amplitude_calibration=scenario.amplitude_calibration,
            nlos_attenuation_db=scenario.nlos_attenuation_db,
            disturbance_rng=rng,
        )
        if tag.modulation_mode == "harmonic":
            z_plus = np.exp(2j * math.pi * (st.fm_inst + st.f_b) * t)
            z_minus = np.exp(2j * math.pi * (st.fm_inst - st.f_b) * t)
            ph_plus = st.psi_plus + TWO_PI * st.mu_cycles * rx
            ph_minus = st.psi_minus - TWO_PI * st.mu_cycles * rx
            acc += (st.amplitude / 2.0) * (
                np.real(np.exp(1j * ph_plus)[:, None] * z_plus[None, :])
                + np.real(np.exp(1j * ph_minus)[:, None] * z_minus[None, :])
            )
        else:
            m = _square_wave(st.fm_inst, t, st.phi_m_cycles, cfg.sample_rate / 2.0)
            z_beat = np.exp(2j * math.pi * st.f_b * t)
            phi_geo = TWO_PI * (st.phi0_cycles + st.elev_cycles + st.mu_cycles * rx)
            acc += st.amplitude * m[None, :] * np.real(
                np.exp(1j * phi_geo)[:, None] * z_beat[None, :]
            )

    lam = cfg.wavelength
    slope = chirp_slope(cfg)
    t0 = chirp_start_time(cfg, k)
    for scat in scenario.clutter:
        pos = scat.trajectory().position(t0)
        r = float(np.linalg.norm(pos))
        azimuth = math.atan2(pos[1], pos[0])
        elevation = math.asin(pos[2] / r)
        f_b = 2.0 * r * slope / SPEED_OF_LIGHT
        amp = scenario.amplitude_calibration * math.sqrt(scat.rcs) / r**2
        if scat.co_polarized:
            amp *= 10.0 ** (-cfg.clutter_suppression / 20.0)
        phi0 = TWO_PI * _frac(2.0 * r / lam)
        elev = TWO_PI * tx_channel_of(cfg, k) * cfg.d_tx * math.sin(elevation) / lam
        mu = TWO_PI * cfg.d_rx * math.sin(azimuth) / lam
        z_beat = np.exp(2j * math.pi * f_b * t)
        phi_geo = phi0 + elev + mu * rx
        acc += amp * np.real(np.exp(1j * phi_geo)[:, None] * z_beat[None, :])

    sigma = noise_sigma(scenario.noise_floor_dbm)
    if sigma > 0.0:
        acc += sigma * noise_rng.standard_normal((cfg.n_rx, n))

    return IfFrame(
        chirp_index=k,
        tx_channel=tx_channel_of(cfg, k),
        t_start=t0,
        samples=acc.astype(np.float32),
    )


def synth_sequence(
    cfg: RadarConfig, scenario: Scenario, n_chirps: int, seed: int
) -> list[IfFrame]:
    """Frames for chirps 0..n_chirps-1 under the alternating Tx schedule."""
    return [
        synth_chirp(cfg, scenario, k, chirp_noise_seed(seed, k))
        for k in range(n_chirps)
    ]


def iter_frames(cfg: RadarConfig, scenario: Scenario, n_chirps: int, seed: int):
    """Generator version of :func:`synth_sequence` for streaming pipelines."""
    for k in range(n_chirps):
        yield synth_chirp(cfg, scenario, k, chirp_noise_seed(seed, k))
