import json

import pytest

from dragonfly_sim.scenario import (
    PipelineSettings,
    Scenario,
    TagScenario,
    load_scenario,
    scenario_from_dict,
)
from dragonfly_sim.trajectory import StaticPosition

from conftest import static_tag


def minimal_doc():
    return {
        "radar": "default",
        "duration_s": 0.5,
        "seed": 3,
        "tags": [
            {
                "tag_id": "a",
                "f_m": 250e3,
                "trajectory": {"type": "static", "position": [7.0, 0.0, 0.0]},
            }
        ],
    }


def test_load_minimal(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps(minimal_doc()))
    sc = load_scenario(path)
    assert sc.seed == 3
    assert sc.tags[0].tag_id == "a"
    assert sc.noise_floor_dbm is None
    assert sc.n_chirps() == int(0.5 / sc.radar.tx_period)


def test_unknown_keys_named():
    doc = minimal_doc()
    doc["oops_top"] = 1
    with pytest.raises(ValueError, match="oops_top"):
        scenario_from_dict(doc)
    doc = minimal_doc()
    doc["tags"][0]["oops_tag"] = 1
    with pytest.raises(ValueError, match="oops_tag"):
        scenario_from_dict(doc)
    doc = minimal_doc()
    doc["tags"][0]["trajectory"]["oops_traj"] = 1
    with pytest.raises(ValueError, match="oops_traj"):
        scenario_from_dict(doc)
    doc = minimal_doc()
    doc["pipeline"] = {"oops_pipe": 1}
    with pytest.raises(ValueError, match="oops_pipe"):
        scenario_from_dict(doc)
    doc = minimal_doc()
    doc["clutter"] = [{"position": [5, 0, 0], "rcs": 1.0, "oops_cl": 2}]
    with pytest.raises(ValueError, match="oops_cl"):
        scenario_from_dict(doc)


def test_missing_keys_named():
    doc = minimal_doc()
    del doc["duration_s"]
    with pytest.raises(ValueError, match="duration_s"):
        scenario_from_dict(doc)
    doc = minimal_doc()
    del doc["tags"][0]["f_m"]
    with pytest.raises(ValueError, match="f_m"):
        scenario_from_dict(doc)


def test_band_enforced(cfg):
    with pytest.raises(ValueError, match="intra-chirp"):
        Scenario(radar=cfg, tags=[static_tag(f_m=50e3)], duration_s=0.1)
    with pytest.raises(ValueError, match="intra-chirp"):
        Scenario(radar=cfg, tags=[static_tag(f_m=700e3)], duration_s=0.1)
    # slow_time scenarios may use low modulation frequencies
    Scenario(
        radar=cfg, tags=[static_tag(f_m=300.0)],
        duration_s=0.1, modulation_band="slow_time",
    )


def test_guard_spacing(cfg):
    # two tags 100 kHz apart at short range: fine
    Scenario(
        radar=cfg,
        tags=[static_tag(tag_id="a", f_m=200e3), static_tag(tag_id="b", f_m=300e3)],
        duration_s=0.1,
    )
    # 10 kHz apart at 50 m: beat bands overlap
    with pytest.raises(ValueError, match="guard"):
        Scenario(
            radar=cfg,
            tags=[
                static_tag(tag_id="a", range_m=50.0, f_m=300e3),
                static_tag(tag_id="b", range_m=50.0, f_m=310e3),
            ],
            duration_s=0.1,
        )


def test_duplicate_tag_ids(cfg):
    with pytest.raises(ValueError, match="unique"):
        Scenario(
            radar=cfg,
            tags=[static_tag(tag_id="x", f_m=200e3), static_tag(tag_id="x", f_m=400e3)],
            duration_s=0.1,
        )


def test_trajectory_must_cover_duration(cfg):
    from dragonfly_sim.trajectory import WaypointTrajectory

    short = TagScenario(
        tag_id="w", f_m=250e3,
        trajectory=WaypointTrajectory([0.0, 0.05], [(7, 0, 0), (7.1, 0, 0)]),
    )
    with pytest.raises(ValueError, match="before the scenario duration"):
        Scenario(radar=cfg, tags=[short], duration_s=0.5)


def test_pipeline_settings_validation():
    with pytest.raises(ValueError, match="prior"):
        PipelineSettings(prior="best_guess")
    with pytest.raises(ValueError, match="window"):
        PipelineSettings(window="kaiser")


def test_gain_table_lookup(cfg):
    tag = static_tag(gain_table=[(0.0, 0.0), (50.0, -12.0)])
    import numpy as np

    toward_radar = -tag.trajectory.position(0.0)
    toward_radar = toward_radar / np.linalg.norm(toward_radar)
    assert tag.rcs_at(toward_radar) == pytest.approx(tag.rcs, rel=1e-6)
    # pinned boresight: a direction 50 degrees off reads the -12 dB entry,
    # and 25 degrees interpolates linearly in dB
    tag2 = static_tag(
        range_m=7.0, azimuth_deg=0.0, elevation_deg=0.0,
        gain_table=[(0.0, 0.0), (50.0, -12.0)], boresight=(1.0, 0.0, 0.0),
    )
    import math

    off50 = np.array([math.cos(math.radians(50)), math.sin(math.radians(50)), 0.0])
    assert tag2.rcs_at(off50) == pytest.approx(tag2.rcs * 10 ** (-1.2), rel=1e-6)
    off25 = np.array([math.cos(math.radians(25)), math.sin(math.radians(25)), 0.0])
    assert tag2.rcs_at(off25) == pytest.approx(tag2.rcs * 10 ** (-0.6), rel=1e-6)
