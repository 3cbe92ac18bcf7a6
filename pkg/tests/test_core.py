import json
import math

import numpy as np
import pytest

from dragonfly_sim import core
from dragonfly_sim.core import RadarConfig, default_radar

C = 299_792_458.0


def test_wavelength_values(cfg):
    assert core.wavelength(cfg) == pytest.approx(0.012491352416666667, rel=1e-12)
    c_cfg = default_radar()
    assert core.wavelength(
        RadarConfig(**{**c_cfg.__dict__, "f0": C})
    ) == pytest.approx(1.0, rel=1e-12)
    assert core.wavelength(
        RadarConfig(**{**c_cfg.__dict__, "f0": 299.792458e9})
    ) == pytest.approx(1e-3, rel=1e-12)


def test_chirp_slope(cfg):
    assert core.chirp_slope(cfg) == pytest.approx(250e6 / 3.4e-3, rel=1e-12)
    fast = RadarConfig(**{**cfg.__dict__, "bandwidth": 1e9, "chirp_time": 1e-3,
                          "sample_rate": 4.2e6})
    assert core.chirp_slope(fast) == pytest.approx(1e12, rel=1e-12)


def test_beat_frequency_and_inverse(cfg):
    assert core.beat_frequency(cfg, 7.0) == pytest.approx(3433.748038804507, rel=1e-12)
    assert core.beat_frequency(cfg, 0.0) == 0.0
    for r in (1.0, 10.0, 50.0):
        assert core.range_from_beat(cfg, core.beat_frequency(cfg, r)) == pytest.approx(
            r, rel=1e-9
        )
    with pytest.raises(ValueError):
        core.beat_frequency(cfg, -1.0)


def test_range_resolution(cfg):
    res = core.range_resolution(cfg)
    assert res == pytest.approx(0.599584916, rel=1e-12)
    assert abs(res - 0.60) < 0.01
    double = RadarConfig(**{**cfg.__dict__, "bandwidth": 500e6})
    assert core.range_resolution(double) == pytest.approx(res / 2, rel=1e-12)
    # monotone decreasing in bandwidth
    prev = math.inf
    for bw in (100e6, 250e6, 500e6, 1e9, 4e9):
        cur = core.range_resolution(RadarConfig(**{**cfg.__dict__, "bandwidth": bw}))
        assert cur < prev
        prev = cur


def test_max_unambiguous_range(cfg):
    assert core.max_unambiguous_range(cfg) == pytest.approx(1223.15322864, rel=1e-12)
    double_bw = RadarConfig(**{**cfg.__dict__, "bandwidth": 500e6})
    assert core.max_unambiguous_range(double_bw) == pytest.approx(
        core.max_unambiguous_range(cfg) / 2, rel=1e-12
    )


def test_doppler_frequency(cfg):
    f = core.doppler_frequency(cfg, 1.0)
    assert f == pytest.approx(160.11076569511297, rel=1e-12)
    assert abs(f - 160.0) / 160.0 < 0.01
    assert core.doppler_frequency(cfg, 0.0) == 0.0
    assert core.doppler_frequency(cfg, -1.0) == pytest.approx(-f, rel=1e-12)


def test_velocity_ambiguity(cfg):
    v = core.velocity_ambiguity(cfg)
    assert v == pytest.approx(0.2296204488357843, rel=1e-12)
    assert abs(v - 0.23) / 0.23 < 0.01
    half = RadarConfig(**{**cfg.__dict__, "tx_period": 3.4e-3})
    assert core.velocity_ambiguity(half) == pytest.approx(2 * v, rel=1e-12)
    low = RadarConfig(**{**cfg.__dict__, "f0": 12e9})
    assert core.velocity_ambiguity(low) == pytest.approx(0.4592408976715686, rel=1e-12)


def test_max_acceleration(cfg):
    a = core.max_acceleration(cfg)
    assert a == pytest.approx(16.883856532042966, rel=1e-12)
    assert abs(a - 16.895) / 16.895 < 0.002
    slow = RadarConfig(**{**cfg.__dict__, "tx_period": 68e-3})
    assert core.max_acceleration(slow) == pytest.approx(a / 100, rel=1e-12)
    assert abs(core.max_acceleration(slow) - 0.169) / 0.169 < 0.002
    high = RadarConfig(**{**cfg.__dict__, "f0": 48e9})
    assert core.max_acceleration(high) == pytest.approx(a / 2, rel=1e-12)


def test_scaling_laws_random_configs(cfg):
    rng = np.random.default_rng(7)
    for _ in range(50):
        f0 = rng.uniform(5e9, 80e9)
        bw = rng.uniform(50e6, 2e9)
        tc = rng.uniform(0.2e-3, 10e-3)
        fs = rng.uniform(0.5e6, 5e6)
        n = int(tc * fs * 0.9)
        base = RadarConfig(
            f0=f0, bandwidth=bw, chirp_time=tc, sample_rate=fs,
            samples_per_chirp=max(n, 8), n_rx=4, d_rx=1e-3, n_tx=2, d_tx=4e-3,
            tx_period=2 * tc, range_fft_len=1 << 16, angle_fft_len=64,
        )
        s = rng.uniform(1.5, 4.0)
        longer = RadarConfig(**{**base.__dict__, "chirp_time": tc * s,
                                "tx_period": 2 * tc * s})
        # R_MAX scales with chirp time, a_max with 1/tx_period^2
        assert core.max_unambiguous_range(longer) == pytest.approx(
            s * core.max_unambiguous_range(base), rel=1e-9
        )
        assert core.max_acceleration(longer) == pytest.approx(
            core.max_acceleration(base) / s**2, rel=1e-9
        )
        wider = RadarConfig(**{**base.__dict__, "bandwidth": bw * s})
        assert core.range_resolution(wider) == pytest.approx(
            core.range_resolution(base) / s, rel=1e-9
        )
        higher = RadarConfig(**{**base.__dict__, "f0": f0 * s})
        assert core.velocity_ambiguity(higher) == pytest.approx(
            core.velocity_ambiguity(base) / s, rel=1e-9
        )
        r = rng.uniform(0.1, 500.0)
        assert core.range_from_beat(base, core.beat_frequency(base, r)) == pytest.approx(
            r, rel=1e-9
        )


def test_determinism(cfg):
    a = (core.wavelength(cfg), core.beat_frequency(cfg, 12.3), core.max_acceleration(cfg))
    b = (core.wavelength(cfg), core.beat_frequency(cfg, 12.3), core.max_acceleration(cfg))
    assert a == b  # bit-identical


def test_default_radar_values(cfg):
    assert cfg.f0 == 24e9
    assert cfg.chirp_time == 3.4e-3
    assert cfg.samples_per_chirp == 4096
    assert cfg.sample_rate == 1.2e6
    assert cfg.n_rx == 8
    assert cfg.d_rx == pytest.approx(cfg.wavelength / 2, rel=1e-12)
    assert cfg.n_tx == 2
    assert cfg.d_tx == pytest.approx(2 * cfg.wavelength, rel=1e-12)
    assert cfg.tx_period == 6.8e-3
    assert cfg.range_fft_len == 16384
    assert cfg.angle_fft_len == 1024
    assert cfg.eirp == 29.0


def test_config_validation(cfg):
    with pytest.raises(ValueError, match="n_tx"):
        RadarConfig(**{**cfg.__dict__, "n_tx": 3})
    with pytest.raises(ValueError, match="tx_period"):
        RadarConfig(**{**cfg.__dict__, "tx_period": 1e-3})
    with pytest.raises(ValueError, match="range_fft_len"):
        RadarConfig(**{**cfg.__dict__, "range_fft_len": 1024})
    with pytest.raises(ValueError, match="samples_per_chirp"):
        RadarConfig(**{**cfg.__dict__, "samples_per_chirp": 8192})
    with pytest.raises(ValueError, match="f0"):
        RadarConfig(**{**cfg.__dict__, "f0": -1.0})
    # n_tx = 1 is allowed for Doppler-space use
    RadarConfig(**{**cfg.__dict__, "n_tx": 1})


def test_config_json_round_trip(cfg, tmp_path):
    path = tmp_path / "radar.json"
    path.write_text(cfg.to_json())
    loaded = RadarConfig.from_json(path)
    assert loaded == cfg
    assert RadarConfig.from_json(cfg.to_json()) == cfg


def test_config_json_unknown_and_missing_keys(cfg):
    doc = json.loads(cfg.to_json())
    doc["extra_key"] = 1.0
    with pytest.raises(ValueError, match="extra_key"):
        RadarConfig.from_dict(doc)
    doc2 = json.loads(cfg.to_json())
    del doc2["bandwidth"]
    with pytest.raises(ValueError, match="bandwidth"):
        RadarConfig.from_dict(doc2)


def test_db_conversions():
    rng = np.random.default_rng(3)
    for _ in range(100):
        db = rng.uniform(-80, 80)
        assert core.linear_to_db(core.db_to_linear(db)) == pytest.approx(db, abs=1e-12)
        w = 10 ** rng.uniform(-18, 3)
        assert core.dbm_to_watts(core.watts_to_dbm(w)) == pytest.approx(w, rel=1e-12)
