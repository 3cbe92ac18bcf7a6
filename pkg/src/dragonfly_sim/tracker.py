"""Track assembly, multi-tag channelization, and error statistics.

Coordinate convention: x boresight, y left, z up;
x = R cos(el) cos(az), y = R cos(el) sin(az), z = R sin(el).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .chirp2d import Detection, PeakPair
from .core import RadarConfig
from .elevation import PhaseRow
from .scenario import TAG_BAND_HI, TAG_BAND_LO


@dataclass
class TrackPoint:
    t: float
    tag_id: str
    range_m: float
    azimuth: float   # rad
    elevation: float  # rad
    x: float
    y: float
    z: float
    valid: bool = True


def spherical_to_cartesian(r: float, azimuth: float, elevation: float) -> tuple[float, float, float]:
    return (
        r * math.cos(elevation) * math.cos(azimuth),
        r * math.cos(elevation) * math.sin(azimuth),
        r * math.sin(elevation),
    )


def cartesian_to_spherical(x: float, y: float, z: float) -> tuple[float, float, float]:
    r = math.sqrt(x * x + y * y + z * z)
    if r == 0.0:
        raise ValueError("angles undefined at the origin")
    return r, math.atan2(y, x), math.asin(z / r)


def assemble_track(
    detections: list[Detection],
    elevation_rows: list[PhaseRow],
    tx_period: float,
    tag_id: str = "",
) -> list[TrackPoint]:
    """Join per-chirp detections with elevation rows on the chirp index.

    Chirps missing either side (or with an invalid elevation) produce
    invalid points so gaps stay visible in the output.
    """
    elev_by_k = {r.k: r for r in elevation_rows}
    points = []
    for det in detections:
        t = det.chirp_index * tx_period
        row = elev_by_k.get(det.chirp_index)
        if row is None or not row.valid or row.elevation is None:
            points.append(
                TrackPoint(
                    t=t, tag_id=tag_id or det.tag_id,
                    range_m=det.range_m, azimuth=det.azimuth, elevation=math.nan,
                    x=math.nan, y=math.nan, z=math.nan, valid=False,
                )
            )
            continue
        x, y, z = spherical_to_cartesian(det.range_m, det.azimuth, row.elevation)
        points.append(
            TrackPoint(
                t=t, tag_id=tag_id or det.tag_id,
                range_m=det.range_m, azimuth=det.azimuth, elevation=row.elevation,
                x=x, y=y, z=z, valid=True,
            )
        )
    return points


@dataclass
class ChannelPlan:
    """Assignment of peak pairs to tag channels plus capacity accounting."""

    assignments: dict[str, list]  # tag_id -> list of (chirp_index, PeakPair)
    collisions: int
    channel_spacing_hz: float
    capacity: int


def channel_capacity(
    band_lo: float = TAG_BAND_LO,
    band_hi: float = TAG_BAND_HI,
    spacing_hz: float = 330.0,
) -> int:
    """How many frequency channels the modulation band accommodates.

    The published assumption: a channel needs one natural resolution bin
    (about 293 Hz at the default settings) plus drift margin, rounded to
    330 Hz.  Motion does not consume extra spacing because the midpoint of
    a tag's peak pair is Doppler-free.
    """
    return int((band_hi - band_lo) / spacing_hz)


def channelize(
    cfg: RadarConfig,
    detected_pairs: list[tuple[int, PeakPair]],
    nominal_fms: dict[str, float],
    *,
    spacing_hz: float = 330.0,
) -> ChannelPlan:
    """Assign peak pairs to the nearest nominal channel.

    A pair lands in the channel whose f_m is nearest to the pair midpoint;
    pairs farther than half the minimum channel spacing from every channel
    (or claiming an already-filled (chirp, tag) slot) are counted as
    collisions and dropped.
    """
    if not nominal_fms:
        raise ValueError("no channels defined")
    ids = sorted(nominal_fms, key=lambda tid: nominal_fms[tid])
    fms = np.array([nominal_fms[tid] for tid in ids])
    if len(fms) > 1:
        min_gap = float(np.min(np.diff(fms)))
    else:
        min_gap = math.inf
    tol = min_gap / 2.0
    assignments: dict[str, list] = {tid: [] for tid in ids}
    filled: set[tuple[int, str]] = set()
    collisions = 0
    for k, pair in detected_pairs:
        mid = 0.5 * (pair.f_plus + pair.f_minus)
        i = int(np.argmin(np.abs(fms - mid)))
        if abs(fms[i] - mid) > tol or (k, ids[i]) in filled:
            collisions += 1
            continue
        filled.add((k, ids[i]))
        assignments[ids[i]].append((k, pair))
    return ChannelPlan(
        assignments=assignments,
        collisions=collisions,
        channel_spacing_hz=spacing_hz,
        capacity=channel_capacity(spacing_hz=spacing_hz),
    )


@dataclass
class ErrorReport:
    """Per-axis and 3D error statistics against ground truth."""

    n_points: int
    median: dict[str, float]
    p90: dict[str, float]
    cdf: dict[str, list[float]] = field(default_factory=dict)
    cdf_quantiles: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "n_points": self.n_points,
            "median": self.median,
            "p90": self.p90,
            "cdf_quantiles": self.cdf_quantiles,
            "cdf": self.cdf,
        }


AXES = ("x", "y", "z", "3d", "range_m", "azimuth_deg", "elevation_deg")


def error_report(
    track: list[TrackPoint],
    truth_t: np.ndarray,
    truth_xyz: np.ndarray,
    quantile_step: float = 0.01,
) -> ErrorReport:
    """Errors of the valid track points against interpolated ground truth.

    Truth is sampled (t, xyz) and linearly interpolated to each track
    point's timestamp; spherical errors are derived from the same truth.
    """
    pts = [p for p in track if p.valid]
    if not pts:
        raise ValueError("no valid track points")
    truth_t = np.asarray(truth_t, dtype=float)
    truth_xyz = np.asarray(truth_xyz, dtype=float)
    t = np.array([p.t for p in pts])
    tx = np.interp(t, truth_t, truth_xyz[:, 0])
    ty = np.interp(t, truth_t, truth_xyz[:, 1])
    tz = np.interp(t, truth_t, truth_xyz[:, 2])

    ex = np.abs(np.array([p.x for p in pts]) - tx)
    ey = np.abs(np.array([p.y for p in pts]) - ty)
    ez = np.abs(np.array([p.z for p in pts]) - tz)
    e3 = np.sqrt(ex**2 + ey**2 + ez**2)

    tr = np.sqrt(tx**2 + ty**2 + tz**2)
    taz = np.arctan2(ty, tx)
    tel = np.arcsin(np.clip(tz / tr, -1.0, 1.0))
    er = np.abs(np.array([p.range_m for p in pts]) - tr)
    eaz = np.degrees(np.abs(np.array([p.azimuth for p in pts]) - taz))
    eel = np.degrees(np.abs(np.array([p.elevation for p in pts]) - tel))

    errors = {"x": ex, "y": ey, "z": ez, "3d": e3, "range_m": er,
              "azimuth_deg": eaz, "elevation_deg": eel}
    qs = np.arange(0.0, 1.0 + 1e-9, quantile_step)
    report = ErrorReport(
        n_points=len(pts),
        median={a: float(np.median(v)) for a, v in errors.items()},
        p90={a: float(np.quantile(v, 0.9)) for a, v in errors.items()},
        cdf={a: [float(x) for x in np.quantile(v, qs)] for a, v in errors.items()},
        cdf_quantiles=[float(q) for q in qs],
    )
    return report
