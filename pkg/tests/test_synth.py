import math

import numpy as np
import pytest

from dragonfly_sim import Scenario, TagScenario, synth_chirp, synth_sequence
from dragonfly_sim.core import beat_frequency, chirp_slope, SPEED_OF_LIGHT
from dragonfly_sim.dsp import TWO_PI, hann_window, wrap_pm_pi
from dragonfly_sim.scenario import ClutterScatterer
from dragonfly_sim.synth import (
    chirp_noise_seed,
    noise_floor_for_snr,
    noise_sigma,
    tag_chirp_state,
    tag_if_phases,
)
from dragonfly_sim.trajectory import ConstantVelocity, StaticPosition

from conftest import direction, radial_tag, single_tag_scenario, static_tag


def test_empty_scenario_zero_noise_is_all_zero(cfg):
    sc = Scenario(radar=cfg, tags=[], duration_s=0.1, noise_floor_dbm=None)
    frame = synth_chirp(cfg, sc, 0, 1)
    assert frame.samples.shape == (cfg.n_rx, cfg.samples_per_chirp)
    assert np.all(frame.samples == 0.0)


def test_single_tag_two_dominant_bins(cfg):
    # on-bin tone placement makes the plain DFT an exact oracle
    natural_bin = cfg.sample_rate / cfg.samples_per_chirp
    f_m = 512 * natural_bin  # 150 kHz
    f_b = 35 * natural_bin
    r = f_b * SPEED_OF_LIGHT / (2 * chirp_slope(cfg))
    tag = TagScenario(tag_id="t", f_m=f_m, trajectory=StaticPosition((r, 0.0, 0.0)))
    sc = single_tag_scenario(cfg, tag, duration_s=0.1)
    frame = synth_chirp(cfg, sc, 0, 1)
    spec = np.abs(np.fft.rfft(frame.samples[0].astype(float)))
    order = np.argsort(spec)[::-1]
    assert {order[0], order[1]} == {512 - 35, 512 + 35}
    # everything else is at least 60 dB down
    rest = np.delete(spec, [512 - 35, 512 + 35])
    assert np.max(rest) < np.max(spec) * 1e-3


def test_square_mode_third_harmonic(cfg):
    natural_bin = cfg.sample_rate / cfg.samples_per_chirp
    f_m = 512 * natural_bin
    f_b = 35 * natural_bin
    r = f_b * SPEED_OF_LIGHT / (2 * chirp_slope(cfg))
    tag = TagScenario(
        tag_id="t", f_m=f_m, modulation_mode="square",
        trajectory=StaticPosition((r, 0.0, 0.0)),
    )
    sc = single_tag_scenario(cfg, tag, duration_s=0.1)
    frame = synth_chirp(cfg, sc, 0, 1)
    spec = np.abs(np.fft.rfft(frame.samples[0].astype(float)))
    fundamental = spec[512 + 35]
    third = spec[3 * 512 + 35]
    assert third / fundamental == pytest.approx(1.0 / 3.0, rel=1e-6)
    # the unmodulated RCS component leaves a beat line in the clutter band
    assert spec[35] == pytest.approx(fundamental * math.pi / 2.0, rel=1e-6)


def test_square_and_harmonic_fundamentals_agree(cfg):
    # non-commensurate f_m so no square harmonic aliases onto the fundamental
    f_m = 130e3
    tag_kw = dict(range_m=9.3, azimuth_deg=7.0, elevation_deg=3.0, f_m=f_m)
    tag_h = static_tag(**tag_kw)
    tag_s = static_tag(modulation_mode="square", **tag_kw)
    sc_h = single_tag_scenario(cfg, tag_h, duration_s=0.1)
    sc_s = single_tag_scenario(cfg, tag_s, duration_s=0.1)
    xh = synth_chirp(cfg, sc_h, 0, 1).samples[0].astype(float)
    xs = synth_chirp(cfg, sc_s, 0, 1).samples[0].astype(float)

    w = hann_window(cfg.samples_per_chirp)
    j = np.arange(cfg.samples_per_chirp)
    f_b = beat_frequency(cfg, 9.3)
    for f in (f_m + f_b, f_m - f_b):
        e = np.exp(-2j * math.pi * f / cfg.sample_rate * j)
        zh = np.sum(w * xh * e)
        zs = np.sum(w * xs * e)
        assert abs(np.angle(zs / zh)) < 1e-6
        # square-wave fundamental coefficient: 2/pi of the 0/1 amplitude
        assert abs(zs) / abs(zh) == pytest.approx(2.0 / math.pi, rel=1e-6)


def test_tag_if_phases_static_geometry(cfg):
    r = 7.0
    tag = static_tag(range_m=r, azimuth_deg=0.0, elevation_deg=0.0)
    psi_p, psi_m, f_b = tag_if_phases(cfg, tag, 0)  # k even: no elevation term
    assert f_b == pytest.approx(beat_frequency(cfg, r), rel=1e-12)
    expected = TWO_PI * ((2 * r / cfg.wavelength) % 1.0)
    diff = (psi_p - psi_m) % TWO_PI
    assert diff == pytest.approx((2 * expected) % TWO_PI, abs=1e-6)


def test_stop_and_go_phase_recurrence(cfg):
    # ground-truth radial phase steps carry exactly the motion-induced phase
    v = 1.3
    tag = radial_tag(8.0, v, azimuth_deg=0.0, elevation_deg=0.0)
    phases = {}
    for k in range(8):
        psi_p, psi_m, _ = tag_if_phases(cfg, tag, k)
        phases[k] = (psi_p - psi_m) / 2.0
    step = 8 * math.pi * v * cfg.f0 * cfg.tx_period / SPEED_OF_LIGHT
    for k in range(2, 8):
        got = (phases[k] - phases[k - 2]) % TWO_PI
        assert min(abs(got - step % TWO_PI), TWO_PI - abs(got - step % TWO_PI)) < 1e-6


def test_tx_channel_alternation(cfg):
    sc = single_tag_scenario(cfg, static_tag(), duration_s=0.1)
    frames = synth_sequence(cfg, sc, 4, seed=0)
    assert [f.tx_channel for f in frames] == [0, 1, 0, 1]
    assert [f.chirp_index for f in frames] == [0, 1, 2, 3]
    assert frames[2].t_start == pytest.approx(2 * cfg.tx_period, rel=1e-12)


def test_determinism_bit_identical(cfg):
    sc = single_tag_scenario(cfg, static_tag(), duration_s=0.1, snr_db=15.0)
    a = synth_sequence(cfg, sc, 3, seed=9)
    b = synth_sequence(cfg, sc, 3, seed=9)
    for fa, fb in zip(a, b):
        assert np.array_equal(fa.samples, fb.samples)
    c = synth_sequence(cfg, sc, 3, seed=10)
    assert not np.array_equal(a[0].samples, c[0].samples)


def test_constant_velocity_beat_tracks_range(cfg):
    v = 2.0
    tag = radial_tag(9.0, v, azimuth_deg=0.0, elevation_deg=0.0)
    for k in (0, 3, 10):
        st = tag_chirp_state(cfg, tag, k)
        r_true = 9.0 + v * k * cfg.tx_period
        assert st.f_b == pytest.approx(beat_frequency(cfg, r_true), rel=1e-12)


def test_clutter_energy_stays_below_50khz(cfg):
    sc = Scenario(
        radar=cfg,
        tags=[],
        clutter=[
            ClutterScatterer(position=np.array([3.0, 1.0, 0.0]), rcs=10.0),
            ClutterScatterer(position=np.array([25.0, -5.0, 1.0]), rcs=100.0),
            ClutterScatterer(position=np.array([55.0, 10.0, -2.0]), rcs=400.0,
                             velocity=np.array([1.0, 0.0, 0.0])),
        ],
        duration_s=0.1,
    )
    frame = synth_chirp(cfg, sc, 0, 1)
    w = hann_window(cfg.samples_per_chirp)
    spec = np.abs(np.fft.rfft(frame.samples.astype(float) * w[None, :], axis=1)) ** 2
    freqs = np.fft.rfftfreq(cfg.samples_per_chirp, d=1.0 / cfg.sample_rate)
    total = spec.sum()
    below = spec[:, freqs < 50e3].sum()
    assert below / total >= 0.99


def test_tag_energy_in_channel(cfg):
    tag = static_tag(range_m=20.0)
    sc = single_tag_scenario(cfg, tag, duration_s=0.1)
    frame = synth_chirp(cfg, sc, 0, 1)
    w = hann_window(cfg.samples_per_chirp)
    spec = np.abs(np.fft.rfft(frame.samples.astype(float) * w[None, :], axis=1)) ** 2
    freqs = np.fft.rfftfreq(cfg.samples_per_chirp, d=1.0 / cfg.sample_rate)
    f_b = beat_frequency(cfg, 20.0)
    inside = spec[:, np.abs(freqs - tag.f_m) <= f_b + 2e3].sum()
    assert inside / spec.sum() >= 0.99


def test_noise_power_and_reproducibility(cfg):
    floor = -23.0
    sc = Scenario(radar=cfg, tags=[], duration_s=1.0, noise_floor_dbm=floor, seed=5)
    frames = [synth_chirp(cfg, sc, k, chirp_noise_seed(5, k)) for k in range(31)]
    samples = np.concatenate([f.samples.ravel() for f in frames]).astype(float)
    assert samples.size >= 1_000_000
    power = float(np.mean(samples**2))
    assert abs(power - 10 ** (floor / 10.0)) / 10 ** (floor / 10.0) < 0.05
    again = synth_chirp(cfg, sc, 4, chirp_noise_seed(5, 4))
    assert np.array_equal(again.samples, frames[4].samples)


def test_noise_floor_for_snr_round_trip(cfg):
    tag = static_tag()
    w = hann_window(cfg.samples_per_chirp)
    floor = noise_floor_for_snr(cfg, 1.0, tag, w, 20.0)
    from dragonfly_sim.synth import expected_peak_snr_db

    sc = single_tag_scenario(cfg, tag, duration_s=0.1)
    sc.noise_floor_dbm = floor
    assert expected_peak_snr_db(cfg, sc, tag, w) == pytest.approx(20.0, abs=1e-9)
    assert noise_sigma(None) == 0.0


def test_oscillator_drift_shifts_modulation_phase(cfg):
    drift = 5.0  # ppm/s
    tag = static_tag(oscillator_drift=drift)
    t = 10 * cfg.tx_period
    base = static_tag()
    d_cycles = tag.modulation_phase_cycles(t) - base.modulation_phase_cycles(t)
    assert d_cycles == pytest.approx(0.5e-6 * drift * t**2 * tag.f_m, rel=1e-9)


def test_spike_displaces_radial_phase_quarter_turn(cfg):
    tag = static_tag(spike_chirps=[3])
    clean = static_tag()
    pp_s, pm_s, _ = tag_if_phases(cfg, tag, 3)
    pp_c, pm_c, _ = tag_if_phases(cfg, clean, 3)
    d_radial = wrap_pm_pi(((pp_s - pm_s) - (pp_c - pm_c)) / 2.0)
    assert abs(d_radial) == pytest.approx(math.pi / 2.0, abs=1e-9)
    # other chirps untouched
    assert tag_if_phases(cfg, tag, 2) == tag_if_phases(cfg, clean, 2)


def test_nlos_attenuation_scales_amplitude(cfg):
    tag = static_tag()
    st0 = tag_chirp_state(cfg, tag, 0)
    st1 = tag_chirp_state(cfg, tag, 0, nlos_attenuation_db=6.0)
    assert st1.amplitude == pytest.approx(st0.amplitude * 10 ** (-6.0 / 20.0), rel=1e-12)


def test_co_polarized_clutter_suppressed(cfg):
    pos = np.array([10.0, 0.0, 0.0])
    base = Scenario(radar=cfg, tags=[], duration_s=0.1,
                    clutter=[ClutterScatterer(position=pos, rcs=1.0, co_polarized=False)])
    supp = Scenario(radar=cfg, tags=[], duration_s=0.1,
                    clutter=[ClutterScatterer(position=pos, rcs=1.0, co_polarized=True)])
    a = synth_chirp(cfg, base, 0, 1).samples
    b = synth_chirp(cfg, supp, 0, 1).samples
    ratio = np.linalg.norm(b.astype(float)) / np.linalg.norm(a.astype(float))
    assert ratio == pytest.approx(10 ** (-cfg.clutter_suppression / 20.0), rel=1e-5)
