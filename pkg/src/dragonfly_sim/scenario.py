"""Scenario description: tags, clutter, noise, and pipeline settings.

Scenario files are JSON; every object is validated with unknown keys
rejected by name before any computation starts.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import RadarConfig, beat_frequency, default_radar
from .trajectory import ConstantVelocity, StaticPosition, Trajectory, trajectory_from_dict

# Modulation band reserved for intra-chirp tags; below it the spectrum
# belongs to clutter beat frequencies.
TAG_BAND_LO = 100e3
TAG_BAND_HI = 600e3

MODULATION_MODES = ("harmonic", "square")
MODULATION_BANDS = ("intra_chirp", "slow_time")


@dataclass
class TagScenario:
    """One modulated backscatter tag and its motion.

    Attributes:
        tag_id: Identifier carried through every output stream.
        f_m: Modulation frequency (Hz); doubles as the tag's channel.
        trajectory: Tag motion, radar at the origin.
        phi_m0: Modulation phase at t=0 (rad).
        modulation_mode: 'harmonic' (pure tone RCS) or 'square' (on-off).
        rcs: Boresight radar cross-section (m^2).
        gain_table: Optional [(angle_deg, gain_db), ...] relative RCS vs
            angle off the tag's boresight; linear interpolation in dB.
        boresight: Tag boresight direction; defaults to pointing from the
            tag's initial position back at the radar.
        oscillator_drift: Relative modulation-frequency drift (ppm/s).
        phase_jitter_rms: Per-chirp propagation phase jitter (rad RMS),
            emulating vibration; 0 disables.
        spike_rate: Fraction of chirps hit by a transient radial
            displacement (vibration outlier); 0 disables.
        spike_displacement_m: Displacement of one spike (m); None means
            wavelength/8, which flips the radial phase by a quarter turn.
        spike_chirps: Explicit chirp indices to spike (overrides rate).
    """

    tag_id: str
    f_m: float
    trajectory: Trajectory
    phi_m0: float = 0.0
    modulation_mode: str = "harmonic"
    rcs: float = 0.01
    gain_table: list[tuple[float, float]] | None = None
    boresight: np.ndarray | None = None
    oscillator_drift: float = 0.0
    phase_jitter_rms: float = 0.0
    spike_rate: float = 0.0
    spike_displacement_m: float | None = None
    spike_chirps: list[int] | None = None

    def __post_init__(self):
        if self.f_m <= 0:
            raise ValueError(f"tag {self.tag_id}: f_m must be positive")
        if self.modulation_mode not in MODULATION_MODES:
            raise ValueError(
                f"tag {self.tag_id}: unknown modulation_mode {self.modulation_mode!r}"
            )
        if self.rcs <= 0:
            raise ValueError(f"tag {self.tag_id}: rcs must be positive")
        if self.gain_table is not None:
            angles = [a for a, _ in self.gain_table]
            if len(angles) < 2 or any(b <= a for a, b in zip(angles, angles[1:])):
                raise ValueError(
                    f"tag {self.tag_id}: gain_table needs >= 2 strictly increasing angles"
                )
        if self.boresight is not None:
            b = np.asarray(self.boresight, dtype=float)
            n = np.linalg.norm(b)
            if n == 0:
                raise ValueError(f"tag {self.tag_id}: boresight must be a nonzero vector")
            self.boresight = b / n
        if not 0.0 <= self.spike_rate < 1.0:
            raise ValueError(f"tag {self.tag_id}: spike_rate must be in [0, 1)")

    def rcs_at(self, direction_to_radar: np.ndarray) -> float:
        """Effective RCS (m^2) for the given unit vector toward the radar."""
        if self.gain_table is None:
            return self.rcs
        bore = self.boresight
        if bore is None:
            bore = direction_to_radar  # pointed at the radar: always boresight
        cosang = float(np.clip(np.dot(bore, direction_to_radar), -1.0, 1.0))
        angle_deg = math.degrees(math.acos(cosang))
        angles = np.array([a for a, _ in self.gain_table])
        gains = np.array([g for _, g in self.gain_table])
        gain_db = float(np.interp(angle_deg, angles, gains))
        return self.rcs * 10.0 ** (gain_db / 10.0)

    def modulation_phase_cycles(self, t: float) -> float:
        """Accumulated modulation phase at absolute time t, in cycles."""
        cycles = self.f_m * t * (1.0 + 0.5e-6 * self.oscillator_drift * t)
        return cycles + self.phi_m0 / (2.0 * math.pi)


@dataclass
class ClutterScatterer:
    """Unmodulated reflector; static or drifting at constant velocity."""

    position: np.ndarray
    rcs: float
    velocity: np.ndarray | None = None
    co_polarized: bool = True

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        if self.position.shape != (3,):
            raise ValueError("clutter position must be a 3-vector")
        if self.rcs <= 0:
            raise ValueError("clutter rcs must be positive")
        if self.velocity is not None:
            self.velocity = np.asarray(self.velocity, dtype=float)

    def trajectory(self) -> Trajectory:
        if self.velocity is None:
            return StaticPosition(self.position)
        return ConstantVelocity(self.position, self.velocity)


@dataclass
class PipelineSettings:
    """Knobs of the localization pipeline, carried in the scenario file."""

    window: str = "hann"
    snr_threshold_db: float = 10.0
    search_halfwidth_hz: float = 30e3
    pair_tolerance_bins: float = 2.0
    prior: str = "range_rate"  # or "min_speed"
    exception_handler: bool = True
    accel_correction: bool = True
    mirror_average: bool = False

    def __post_init__(self):
        if self.prior not in ("range_rate", "min_speed"):
            raise ValueError(f"unknown prior {self.prior!r}")
        if self.window not in ("hann", "rect"):
            raise ValueError(f"unknown window {self.window!r}")


@dataclass
class Scenario:
    """Everything one reproducible run needs."""

    radar: RadarConfig
    tags: list[TagScenario]
    clutter: list[ClutterScatterer] = field(default_factory=list)
    noise_floor_dbm: float | None = None
    duration_s: float = 1.0
    seed: int = 0
    amplitude_calibration: float = 1.0
    nlos_attenuation_db: float = 0.0
    modulation_band: str = "intra_chirp"
    pipeline: PipelineSettings = field(default_factory=PipelineSettings)
    outputs: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ValueError("duration_s must be positive")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        if self.modulation_band not in MODULATION_BANDS:
            raise ValueError(f"unknown modulation_band {self.modulation_band!r}")
        self._validate_tags()

    def n_chirps(self) -> int:
        return int(self.duration_s / self.radar.tx_period)

    def _validate_tags(self) -> None:
        ids = [t.tag_id for t in self.tags]
        if len(set(ids)) != len(ids):
            raise ValueError("tag_ids must be unique")
        nyquist = self.radar.sample_rate / 2.0
        if self.modulation_band == "intra_chirp":
            lo = TAG_BAND_LO
            hi = min(TAG_BAND_HI, nyquist)
            for t in self.tags:
                if not lo <= t.f_m <= hi:
                    raise ValueError(
                        f"tag {t.tag_id}: f_m={t.f_m:g} Hz outside the intra-chirp "
                        f"band [{lo:g}, {hi:g}] Hz"
                    )
            self._validate_guard_spacing()
        for t in self.tags:
            if t.trajectory.end_time < self.duration_s and math.isfinite(t.trajectory.end_time):
                raise ValueError(
                    f"tag {t.tag_id}: trajectory ends at {t.trajectory.end_time:g} s "
                    f"before the scenario duration {self.duration_s:g} s"
                )
        for i, c in enumerate(self.clutter):
            for tt in np.linspace(0.0, self.duration_s, 16):
                if np.linalg.norm(c.trajectory().position(float(tt))) <= 0.0:
                    raise ValueError(f"clutter[{i}] passes through the radar origin")

    def _validate_guard_spacing(self) -> None:
        # Adjacent channels must stay separated even at the largest beat
        # frequency either tag can reach, plus a leakage margin.
        if len(self.tags) < 2:
            return
        natural_bin = self.radar.sample_rate / self.radar.samples_per_chirp
        margin = 10.0 * natural_bin
        fb_max = {t.tag_id: self._max_beat(t) for t in self.tags}
        tags = sorted(self.tags, key=lambda t: t.f_m)
        for a, b in zip(tags, tags[1:]):
            needed = fb_max[a.tag_id] + fb_max[b.tag_id] + margin
            if b.f_m - a.f_m <= needed:
                raise ValueError(
                    f"tags {a.tag_id} and {b.tag_id}: channel spacing "
                    f"{b.f_m - a.f_m:g} Hz below the required {needed:g} Hz guard"
                )

    def _max_beat(self, tag: TagScenario) -> float:
        ts = np.linspace(0.0, self.duration_s, 64)
        rmax = max(tag.trajectory.range_to_radar(float(t)) for t in ts)
        return beat_frequency(self.radar, rmax)


# --- JSON loading -----------------------------------------------------------


def _reject_unknown(doc: dict, allowed: set[str], where: str) -> None:
    unknown = set(doc) - allowed
    if unknown:
        raise ValueError(f"unknown {where} key: {sorted(unknown)[0]!r}")


def _require(doc: dict, keys: list[str], where: str) -> None:
    for k in keys:
        if k not in doc:
            raise ValueError(f"missing {where} key: {k!r}")


def tag_from_dict(doc: dict) -> TagScenario:
    allowed = {
        "tag_id", "f_m", "trajectory", "phi_m0", "modulation_mode", "rcs",
        "gain_table", "boresight", "oscillator_drift", "phase_jitter_rms",
        "spike_rate", "spike_displacement_m", "spike_chirps",
    }
    _reject_unknown(doc, allowed, "tag")
    _require(doc, ["tag_id", "f_m", "trajectory"], "tag")
    kwargs = dict(doc)
    kwargs["trajectory"] = trajectory_from_dict(doc["trajectory"])
    if "gain_table" in kwargs and kwargs["gain_table"] is not None:
        kwargs["gain_table"] = [tuple(row) for row in kwargs["gain_table"]]
    return TagScenario(**kwargs)


def clutter_from_dict(doc: dict) -> ClutterScatterer:
    allowed = {"position", "rcs", "velocity", "co_polarized"}
    _reject_unknown(doc, allowed, "clutter")
    _require(doc, ["position", "rcs"], "clutter")
    return ClutterScatterer(**doc)


def scenario_from_dict(doc: dict) -> Scenario:
    allowed = {
        "radar", "tags", "clutter", "noise_floor_dbm", "duration_s", "seed",
        "amplitude_calibration", "nlos_attenuation_db", "modulation_band",
        "pipeline", "outputs",
    }
    _reject_unknown(doc, allowed, "scenario")
    _require(doc, ["radar", "tags", "duration_s"], "scenario")

    radar_doc = doc["radar"]
    if radar_doc == "default":
        radar = default_radar()
    elif isinstance(radar_doc, dict):
        radar = RadarConfig.from_dict(radar_doc)
    else:
        raise ValueError("scenario key 'radar' must be 'default' or a config object")

    pipeline_doc = doc.get("pipeline", {})
    _reject_unknown(pipeline_doc, set(PipelineSettings.__dataclass_fields__), "pipeline")
    outputs = doc.get("outputs", {})
    _reject_unknown(
        outputs, {"frames", "detections", "elevation", "track", "truth", "report"}, "outputs"
    )

    return Scenario(
        radar=radar,
        tags=[tag_from_dict(t) for t in doc["tags"]],
        clutter=[clutter_from_dict(c) for c in doc.get("clutter", [])],
        noise_floor_dbm=doc.get("noise_floor_dbm"),
        duration_s=doc["duration_s"],
        seed=doc.get("seed", 0),
        amplitude_calibration=doc.get("amplitude_calibration", 1.0),
        nlos_attenuation_db=doc.get("nlos_attenuation_db", 0.0),
        modulation_band=doc.get("modulation_band", "intra_chirp"),
        pipeline=PipelineSettings(**pipeline_doc),
        outputs=dict(outputs),
    )


def load_scenario(path: str | Path) -> Scenario:
    return scenario_from_dict(json.loads(Path(path).read_text()))
