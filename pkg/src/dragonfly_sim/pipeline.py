"""End-to-end runner: scenario -> frames -> detections -> elevation -> track."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .chirp2d import (
    AmbiguousPair,
    Detection,
    NoTagDetected,
    TagChannel,
    detect_tag_peaks,
    localize2d,
    range_azimuth_spectrum,
)
from .core import RadarConfig
from .elevation import ElevationTracker, PhaseRow
from .scenario import Scenario
from .synth import IfFrame, chirp_noise_seed, synth_chirp
from .tracker import TrackPoint, assemble_track

log = logging.getLogger(__name__)


@dataclass
class PipelineResult:
    detections: dict[str, list[Detection]] = field(default_factory=dict)
    elevation_rows: dict[str, list[PhaseRow]] = field(default_factory=dict)
    track: dict[str, list[TrackPoint]] = field(default_factory=dict)
    dropped: dict[str, int] = field(default_factory=dict)

    def all_detections(self) -> list[Detection]:
        out = []
        for tag_id in sorted(self.detections):
            out.extend(self.detections[tag_id])
        return out

    def all_track_points(self) -> list[TrackPoint]:
        out = []
        for tag_id in sorted(self.track):
            out.extend(self.track[tag_id])
        return out


def detect_frame(
    cfg: RadarConfig,
    frame: IfFrame,
    channels: list[TagChannel],
    scenario: Scenario,
) -> list[Detection]:
    """All per-tag detections in one frame; missed channels are skipped."""
    ps = scenario.pipeline
    spectrum = range_azimuth_spectrum(cfg, frame, window=ps.window)
    out = []
    for ch in channels:
        try:
            pair = detect_tag_peaks(
                spectrum, ch,
                snr_threshold_db=ps.snr_threshold_db,
                pair_tolerance_bins=ps.pair_tolerance_bins,
            )
        except (NoTagDetected, AmbiguousPair) as exc:
            log.debug("chirp %d %s: %s", frame.chirp_index, ch.tag_id, exc)
            continue
        try:
            out.append(
                localize2d(
                    cfg, pair, frame.chirp_index, frame.tx_channel, ch.tag_id,
                    mirror_average=ps.mirror_average,
                )
            )
        except ValueError as exc:
            log.debug("chirp %d %s rejected: %s", frame.chirp_index, ch.tag_id, exc)
    return out


def scenario_channels(scenario: Scenario) -> list[TagChannel]:
    w = scenario.pipeline.search_halfwidth_hz
    return [TagChannel(t.tag_id, t.f_m, w) for t in scenario.tags]


def run_pipeline(
    scenario: Scenario,
    n_chirps: int | None = None,
    *,
    frames=None,
    threads: int = 1,
) -> PipelineResult:
    """Run the full localization chain.

    Frames come from the scenario's synthesizer unless an iterable of
    prebuilt frames is given.  Synthesis and per-chirp detection may be
    parallelized; the elevation stage consumes detections in chirp order,
    so results do not depend on the thread count.
    """
    cfg = scenario.radar
    if n_chirps is None:
        n_chirps = scenario.n_chirps()
    channels = scenario_channels(scenario)
    ps = scenario.pipeline

    trackers = {
        t.tag_id: ElevationTracker(
            cfg,
            enable_exception_handler=ps.exception_handler,
            accel_correction=ps.accel_correction,
        )
        for t in scenario.tags
    }
    result = PipelineResult(
        detections={t.tag_id: [] for t in scenario.tags},
        elevation_rows={t.tag_id: [] for t in scenario.tags},
        dropped={t.tag_id: 0 for t in scenario.tags},
    )

    def produce(k: int) -> list[Detection]:
        frame = synth_chirp(cfg, scenario, k, chirp_noise_seed(scenario.seed, k))
        return detect_frame(cfg, frame, channels, scenario)

    if frames is not None:
        detection_lists = (detect_frame(cfg, f, channels, scenario) for f in frames)
    elif threads > 1:
        pool = ThreadPoolExecutor(max_workers=threads)
        detection_lists = pool.map(produce, range(n_chirps))
    else:
        detection_lists = (produce(k) for k in range(n_chirps))

    expected = {t.tag_id for t in scenario.tags}
    for dets in detection_lists:
        seen = set()
        for det in dets:
            seen.add(det.tag_id)
            result.detections[det.tag_id].append(det)
            result.elevation_rows[det.tag_id].extend(trackers[det.tag_id].push(det))
        for tag_id in expected - seen:
            result.dropped[tag_id] += 1
    for tag_id, tr in trackers.items():
        result.elevation_rows[tag_id].extend(tr.finalize())

    for tag_id in result.detections:
        result.track[tag_id] = assemble_track(
            result.detections[tag_id],
            result.elevation_rows[tag_id],
            cfg.tx_period,
            tag_id,
        )
    return result


def ground_truth_samples(scenario: Scenario, n_chirps: int) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Per-tag (t, xyz) truth sampled at every chirp start."""
    out = {}
    for tag in scenario.tags:
        t = np.arange(n_chirps) * scenario.radar.tx_period
        xyz = np.stack([tag.trajectory.position(float(tt)) for tt in t])
        out[tag.tag_id] = (t, xyz)
    return out
