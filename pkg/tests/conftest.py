import math

import numpy as np
import pytest

from dragonfly_sim import (
    Scenario,
    TagChannel,
    TagScenario,
    default_radar,
    detect_tag_peaks,
    localize2d,
    range_azimuth_spectrum,
    synth_chirp,
)
from dragonfly_sim.dsp import make_window
from dragonfly_sim.synth import chirp_noise_seed, noise_floor_for_snr
from dragonfly_sim.trajectory import ConstantVelocity, StaticPosition


@pytest.fixture(scope="session")
def cfg():
    return default_radar()


def direction(azimuth_deg: float, elevation_deg: float) -> np.ndarray:
    az = math.radians(azimuth_deg)
    el = math.radians(elevation_deg)
    return np.array(
        [math.cos(el) * math.cos(az), math.cos(el) * math.sin(az), math.sin(el)]
    )


def static_tag(range_m=7.0, azimuth_deg=10.0, elevation_deg=5.0, f_m=250e3, **kw):
    return TagScenario(
        tag_id=kw.pop("tag_id", "tag"),
        f_m=f_m,
        trajectory=StaticPosition(range_m * direction(azimuth_deg, elevation_deg)),
        **kw,
    )


def radial_tag(range_m, v_r, azimuth_deg=10.0, elevation_deg=5.0, f_m=250e3, **kw):
    u = direction(azimuth_deg, elevation_deg)
    return TagScenario(
        tag_id=kw.pop("tag_id", "tag"),
        f_m=f_m,
        trajectory=ConstantVelocity(range_m * u, v_r * u),
        **kw,
    )


def single_tag_scenario(cfg, tag, duration_s=5.0, snr_db=None, **kw):
    floor = None
    if snr_db is not None:
        floor = noise_floor_for_snr(
            cfg, kw.get("amplitude_calibration", 1.0), tag,
            make_window("hann", cfg.samples_per_chirp), snr_db,
        )
    return Scenario(
        radar=cfg, tags=[tag], duration_s=duration_s, noise_floor_dbm=floor, **kw
    )


def detect_chirps(cfg, scenario, ks, tag_id=None, **detect_kw):
    """Synthesize and detect the given chirps for one tag; returns Detections."""
    tag = scenario.tags[0] if tag_id is None else next(
        t for t in scenario.tags if t.tag_id == tag_id
    )
    channel = TagChannel(tag.tag_id, tag.f_m)
    out = []
    for k in ks:
        frame = synth_chirp(cfg, scenario, k, chirp_noise_seed(scenario.seed, k))
        spectrum = range_azimuth_spectrum(cfg, frame)
        pair = detect_tag_peaks(spectrum, channel, **detect_kw)
        out.append(localize2d(cfg, pair, k, frame.tx_channel, tag.tag_id))
    return out
