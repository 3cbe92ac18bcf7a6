"""Command-line interface binding the pipeline into reproducible runs."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import frameio
from .baseline import range_doppler_map, slow_time_localize
from .core import range_from_beat
from .demos import DEMO_NAMES, run_demo
from .pipeline import ground_truth_samples, run_pipeline
from .reports import (
    read_track_csv,
    read_truth_csv,
    write_detections_csv,
    write_elevation_csv,
    write_report_json,
    write_track_csv,
    write_truth_csv,
)
from .rfdesign import LensDesign, LinkBudget, design_report, load_rcs_table, range_vs_angle
from .scenario import load_scenario
from .synth import iter_frames
from .tracker import error_report

log = logging.getLogger("dragonfly_sim")


def _setup_logging() -> None:
    level = os.environ.get("DRAGONFLY_SIM_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _fail(message: str, code: int = 1) -> int:
    print(json.dumps({"error": message}), file=sys.stderr)
    return code


def _out_dir(args) -> Path:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_scenario(args):
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario.seed = args.seed
    return scenario


def cmd_synth(args) -> int:
    scenario = _load_scenario(args)
    out = _out_dir(args)
    n = scenario.n_chirps()
    path = out / "frames.bin"
    count = frameio.write_frames(
        path, iter_frames(scenario.radar, scenario, n, scenario.seed)
    )
    log.info("wrote %d frames to %s", count, path)
    print(json.dumps({"frames": count, "path": str(path)}))
    return 0


def cmd_localize(args) -> int:
    scenario = _load_scenario(args)
    frames = frameio.iter_frames(args.frames)
    result = run_pipeline(scenario, frames=frames)
    out = _out_dir(args)
    write_detections_csv(out / "detections.csv", result.all_detections())
    print(json.dumps({"detections": sum(len(v) for v in result.detections.values())}))
    return 0


def cmd_track(args) -> int:
    scenario = _load_scenario(args)
    out = _out_dir(args)
    if args.frames:
        result = run_pipeline(scenario, frames=frameio.iter_frames(args.frames))
    else:
        result = run_pipeline(scenario, threads=args.threads)
    write_detections_csv(out / "detections.csv", result.all_detections())
    write_elevation_csv(out / "elevation.csv", result.elevation_rows)
    write_track_csv(out / "track.csv", result.all_track_points())
    n = scenario.n_chirps()
    truth = ground_truth_samples(scenario, n)
    rows = []
    for tag_id in sorted(truth):
        t, xyz = truth[tag_id]
        rows.extend((float(tt), tag_id, *map(float, p)) for tt, p in zip(t, xyz))
    write_truth_csv(out / "truth.csv", rows)
    print(json.dumps({"tracked": {k: len(v) for k, v in sorted(result.track.items())}}))
    return 0


def cmd_eval(args) -> int:
    points = read_track_csv(args.track)
    truth = read_truth_csv(args.truth)
    by_tag: dict[str, list] = {}
    for p in points:
        by_tag.setdefault(p.tag_id, []).append(p)
    reports = {}
    for tag_id, pts in sorted(by_tag.items()):
        if tag_id not in truth:
            return _fail(f"truth file has no rows for tag {tag_id!r}", 2)
        t, xyz = truth[tag_id]
        reports[tag_id] = error_report(pts, np.array(t), np.array(xyz))
    out = _out_dir(args)
    write_report_json(out / "report.json", reports)
    print(json.dumps({t: r.median["3d"] for t, r in sorted(reports.items())}))
    return 0


def cmd_design(args) -> int:
    doc = json.loads(Path(args.design).read_text())
    unknown = set(doc) - {"lens", "budget", "rcs_table", "angles_deg"}
    if unknown:
        return _fail(f"unknown design key: {sorted(unknown)[0]!r}", 2)
    lens = None
    if "lens" in doc:
        lens = LensDesign(
            focal_length=doc["lens"]["focal_length_m"],
            half_extent=doc["lens"]["half_extent_m"],
            epsilon_r=doc["lens"]["epsilon_r"],
        )
    budget = None
    if "budget" in doc:
        b = doc["budget"]
        budget = LinkBudget.from_db(
            b["p_t_dbm"], b["p_r_min_dbm"], b["g_t_dbi"], b["g_r_dbi"],
            b["wavelength_m"], b["rcs_m2"],
        )
    report = design_report(lens, budget)
    if "rcs_table" in doc:
        if budget is None:
            return _fail("rcs_table requires a budget section", 2)
        table = load_rcs_table(doc["rcs_table"])
        angles = doc.get("angles_deg")
        report["range_vs_angle"] = [
            {"angle_deg": a, "max_range_m": r}
            for a, r in range_vs_angle(budget, table, angles)
        ]
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        out = _out_dir(args)
        (out / "design_report.json").write_text(text + "\n")
    print(text)
    return 0


def cmd_baseline(args) -> int:
    scenario = _load_scenario(args)
    out = _out_dir(args)
    if args.frames:
        frames = frameio.read_frames(args.frames)
    else:
        n = scenario.n_chirps()
        frames = list(iter_frames(scenario.radar, scenario, n, scenario.seed))
    n_use = args.chirps or sum(1 for f in frames if f.tx_channel == 0)
    rd = range_doppler_map(scenario.radar, frames, n_use)
    np.save(out / "range_doppler.npy", rd.values)
    lines = ["tag_id,f_m,beat_hz,range_m,apparent_hz,snr_db"]
    for tag in scenario.tags:
        beat, apparent, snr = slow_time_localize(rd, tag.f_m)
        r = range_from_beat(scenario.radar, beat)
        lines.append(
            f"{tag.tag_id},{tag.f_m:.9g},{beat:.9g},{r:.9g},{apparent:.9g},{snr:.9g}"
        )
    (out / "baseline_peaks.csv").write_text("\n".join(lines) + "\n")
    print(json.dumps({"chirps": n_use, "out": str(out)}))
    return 0


def cmd_demo(args) -> int:
    info = run_demo(args.name, args.out or f"demo_{args.name}",
                    seed=args.seed if args.seed is not None else 42,
                    cycles=args.cycles, threads=args.threads)
    print(json.dumps(info))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dragonfly-sim",
        description="Simulate and localize intra-chirp-modulated backscatter tags.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario=True):
        if scenario:
            p.add_argument("--scenario", required=True, help="scenario JSON file")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=1, help="worker threads")

    p = sub.add_parser("synth", help="scenario -> binary frame dump")
    common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("localize", help="frame dump -> detections CSV")
    common(p)
    p.add_argument("--frames", required=True, help="frame dump file")
    p.set_defaults(func=cmd_localize)

    p = sub.add_parser("track", help="scenario (or frames) -> track + elevation CSVs")
    common(p)
    p.add_argument("--frames", default=None, help="frame dump file (else synthesize)")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("eval", help="track + truth CSVs -> error report JSON")
    p.add_argument("--track", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("design", help="lens/link design file -> derived quantities")
    p.add_argument("--design", required=True, help="design JSON file")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("baseline", help="slow-time range-Doppler localization")
    common(p)
    p.add_argument("--frames", default=None, help="frame dump file (else synthesize)")
    p.add_argument("--chirps", type=int, default=None, help="chirps to aggregate")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("demo", help="built-in scenarios")
    p.add_argument("name", choices=DEMO_NAMES)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--cycles", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_demo)

    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, KeyError) as exc:
        return _fail(str(exc), 2)
    except Exception as exc:  # pragma: no cover - unexpected
        log.exception("unhandled error")
        return _fail(f"internal error: {exc}", 1)


if __name__ == "__main__":
    sys.exit(main())
