"""CSV and JSON writers for the pipeline outputs.

All floats are printed with 9 significant digits and a '.' decimal
separator regardless of locale.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from .chirp2d import Detection
from .elevation import PhaseRow
from .tracker import ErrorReport, TrackPoint

DETECTIONS_HEADER = "k,tx_channel,tag_id,f_b,range_m,azimuth_deg,phi_plus_rad,phi_minus_rad,snr_db"
ELEVATION_HEADER = "k,tag_id,beta_chosen_rad,delta_rad,elevation_deg,v_r_est_mps,exception_flag"
TRACK_HEADER = "t,tag_id,x,y,z,range,azimuth_deg,elevation_deg,valid"
TRUTH_HEADER = "t,tag_id,x,y,z"


def _fmt(x: float) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return format(float(x), ".9g")


def write_detections_csv(path: str | Path, detections: list[Detection]) -> None:
    lines = [DETECTIONS_HEADER]
    for d in detections:
        lines.append(
            f"{d.chirp_index},{d.tx_channel},{d.tag_id},{_fmt(d.f_b)},{_fmt(d.range_m)},"
            f"{_fmt(math.degrees(d.azimuth))},{_fmt(d.phi_plus)},{_fmt(d.phi_minus)},{_fmt(d.snr_db)}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def write_elevation_csv(path: str | Path, rows_by_tag: dict[str, list[PhaseRow]]) -> None:
    lines = [ELEVATION_HEADER]
    for tag_id in sorted(rows_by_tag):
        for r in sorted(rows_by_tag[tag_id], key=lambda r: r.k):
            if not r.valid:
                continue
            lines.append(
                f"{r.k},{tag_id},{_fmt(r.beta_chosen)},{_fmt(r.delta)},"
                f"{_fmt(math.degrees(r.elevation))},{_fmt(r.v_r_est)},{int(r.exception)}"
            )
    Path(path).write_text("\n".join(lines) + "\n")


def write_track_csv(path: str | Path, points: list[TrackPoint]) -> None:
    lines = [TRACK_HEADER]
    for p in sorted(points, key=lambda p: (p.tag_id, p.t)):
        lines.append(
            f"{_fmt(p.t)},{p.tag_id},{_fmt(p.x)},{_fmt(p.y)},{_fmt(p.z)},{_fmt(p.range_m)},"
            f"{_fmt(math.degrees(p.azimuth))},"
            f"{_fmt(math.degrees(p.elevation)) if p.valid else 'nan'},{int(p.valid)}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def write_truth_csv(path: str | Path, rows: list[tuple[float, str, float, float, float]]) -> None:
    lines = [TRUTH_HEADER]
    for t, tag_id, x, y, z in rows:
        lines.append(f"{_fmt(t)},{tag_id},{_fmt(x)},{_fmt(y)},{_fmt(z)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_track_csv(path: str | Path) -> list[TrackPoint]:
    points = []
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != TRACK_HEADER:
        raise ValueError(f"not a track CSV (expected header {TRACK_HEADER!r})")
    for line in lines[1:]:
        t, tag_id, x, y, z, r, az, el, valid = line.split(",")
        points.append(
            TrackPoint(
                t=float(t), tag_id=tag_id, x=float(x), y=float(y), z=float(z),
                range_m=float(r), azimuth=math.radians(float(az)),
                elevation=math.radians(float(el)) if el != "nan" else math.nan,
                valid=bool(int(valid)),
            )
        )
    return points


def read_truth_csv(path: str | Path) -> dict[str, tuple]:
    """tag_id -> (t array-like list, xyz list) from a truth CSV."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != TRUTH_HEADER:
        raise ValueError(f"not a truth CSV (expected header {TRUTH_HEADER!r})")
    out: dict[str, tuple[list, list]] = {}
    for line in lines[1:]:
        t, tag_id, x, y, z = line.split(",")
        ts, xyz = out.setdefault(tag_id, ([], []))
        ts.append(float(t))
        xyz.append((float(x), float(y), float(z)))
    return out


def write_report_json(path: str | Path, reports: dict[str, ErrorReport], extra: dict | None = None) -> None:
    doc = {tag_id: rep.to_dict() for tag_id, rep in sorted(reports.items())}
    if extra:
        doc["_meta"] = extra
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
