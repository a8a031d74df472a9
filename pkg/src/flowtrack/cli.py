"""Command-line interface.

Subcommands: track, bench, synth, eval, oracle, tracks-to-gt. Settings are
resolved as command line > config file (--config or $FLOWTRACK_CONFIG) >
built-in defaults. Exit codes: 0 success, 1 usage error, 2 bad input data,
3 internal invariant failure.
"""
from __future__ import annotations

import argparse
import os
import sys

from . import io as ftio
from .bench import run_bench, write_bench
from .cost_model import CostModel
from .errors import DataError, InvariantBreach
from .graph import Trajectory, build_batch_graph
from .metrics import clear_mot
from .online import OnlineTracker, TrackerConfig
from .oracle import brute_force_optimum
from .ssp import solve_dp_greedy, solve_dssp, solve_ssp
from .synthetic import SyntheticConfig, generate_synthetic

CONFIG_ENV = "FLOWTRACK_CONFIG"

_MODEL_KEYS = {
    "beta": float,
    "entry_cost": float,
    "exit_cost": float,
    "det_offset": float,
    "det_weight": float,
    "det_cost_form": str,
}
_TUPLE_KEYS = ("feature_offsets", "feature_weights")
_RUN_KEYS = {
    "gating": lambda s: s.lower() in ("1", "true", "yes", "on"),
    "gate_radius_factor": float,
    "window": int,
    "cache_size": int,
    "clip_entry_mode": str,
    "iou_threshold": float,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _load_settings(args) -> dict:
    settings: dict = {}
    path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV)
    if path:
        raw = ftio.load_config(path)
        for key, value in raw.items():
            if key in _MODEL_KEYS:
                settings[key] = _MODEL_KEYS[key](value)
            elif key in _TUPLE_KEYS:
                settings[key] = tuple(float(v) for v in value.split(","))
            elif key in _RUN_KEYS:
                settings[key] = _RUN_KEYS[key](value)
            else:
                raise DataError(f"unknown config key {key!r}")
    for key in list(_MODEL_KEYS) + list(_RUN_KEYS):
        cli_value = getattr(args, key, None)
        if cli_value is not None:
            settings[key] = cli_value
    return settings


def _make_model(settings: dict) -> CostModel:
    kwargs = {k: settings[k] for k in list(_MODEL_KEYS) + list(_TUPLE_KEYS)
              if k in settings}
    return CostModel(**kwargs)


def _add_model_args(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key=value settings file "
                   f"(default: ${CONFIG_ENV})")
    for key, conv in _MODEL_KEYS.items():
        p.add_argument(f"--{key.replace('_', '-')}", type=conv, dest=key)
    p.add_argument("--no-gating", dest="gating", action="store_const",
                   const=False)
    p.add_argument("--gate-radius-factor", type=float, dest="gate_radius_factor")


def _open_in(path):
    return sys.stdin if path in (None, "-") else open(path, newline="")


def _open_out(path):
    return sys.stdout if path in (None, "-") else open(path, "w", newline="")


# -- track ---------------------------------------------------------------------

def _cmd_track(args) -> int:
    settings = _load_settings(args)
    model = _make_model(settings)
    gating = settings.get("gating", True)
    factor = settings.get("gate_radius_factor", 2.0)
    solver = args.solver
    window = args.window if args.window is not None else settings.get("window")
    if solver == "mbodssp" and window is None:
        raise DataError("mbodssp needs --window")

    if args.stream:
        return _track_stream(args, model, settings, gating, factor, window)

    fin = _open_in(args.input)
    try:
        detections = ftio.parse_detections(fin)
    finally:
        if fin is not sys.stdin:
            fin.close()

    if solver in ("ssp", "dssp", "dp"):
        graph = build_batch_graph(detections, model, gating=gating,
                                  gate_radius_factor=factor)
        solve = {"ssp": solve_ssp, "dssp": solve_dssp, "dp": solve_dp_greedy}[solver]
        solution, _ = solve(graph)
        tracks = solution.trajectories
        total = solution.total_cost
    else:
        config = TrackerConfig(
            model=model, window=window if solver == "mbodssp" else None,
            cache_size=settings.get("cache_size"), gating=gating,
            gate_radius_factor=factor,
            clip_entry_mode=settings.get("clip_entry_mode", "prefix"))
        tracker = OnlineTracker(config, bounded=solver == "mbodssp")
        for f in sorted(detections):
            tracker.process_frame(detections[f], frame=f)
        tracks = tracker.final_tracks()
        total = tracker.total_output_cost()

    fout = _open_out(args.output)
    try:
        ftio.write_tracks(fout, tracks)
    finally:
        if fout is not sys.stdout:
            fout.close()
    print(f"tracks: {len(tracks)}  total cost: {total:.6g}", file=sys.stderr)
    return 0


def _track_stream(args, model, settings, gating, factor, window) -> int:
    """Read blank-line-terminated frame blocks from stdin and emit track rows
    once they are --confirm-lag frames old (0 = emit and possibly revise)."""
    if args.solver not in ("odssp", "mbodssp"):
        raise DataError("--stream requires an online solver")
    config = TrackerConfig(
        model=model, window=window if args.solver == "mbodssp" else None,
        cache_size=settings.get("cache_size"), gating=gating,
        gate_radius_factor=factor,
        clip_entry_mode=settings.get("clip_entry_mode", "prefix"))
    tracker = OnlineTracker(config, bounded=args.solver == "mbodssp")
    lag = args.confirm_lag
    fout = _open_out(args.output)
    emitted = set()

    def emit_through(frame):
        rows = []
        for traj in tracker.final_tracks():
            for d in traj.detections:
                if d.frame <= frame and (d.frame, traj.track_id) not in emitted:
                    x, y, w, h = d.box
                    rows.append((d.frame, traj.track_id, x, y, w, h))
        rows.sort()
        for f, tid, x, y, w, h in rows:
            emitted.add((f, tid))
            fout.write(f"{f},{tid},{'%.6g' % x},{'%.6g' % y},"
                       f"{'%.6g' % w},{'%.6g' % h}\n")
        fout.flush()

    last = None
    while True:
        block = ftio.parse_stream_frame(sys.stdin)
        if block is None:
            break
        frame, dets = block
        if last is not None:
            while frame > last + 1:  # fill skipped frames as empty
                last += 1
                tracker.process_frame([], frame=last)
        tracker.process_frame(dets, frame=frame)
        last = frame
        emit_through(frame - lag)
    if last is not None:
        emit_through(last)
    if fout is not sys.stdout:
        fout.close()
    return 0


# -- other subcommands -----------------------------------------------------------

def _cmd_synth(args) -> int:
    cfg = SyntheticConfig(
        n_frames=args.frames, n_initial_tracks=args.tracks,
        miss_rate=args.miss_rate, fp_rate=args.fp_rate,
        crossing=args.crossing)
    detections, gt = generate_synthetic(cfg, args.seed)
    fout = _open_out(args.output)
    try:
        ftio.write_detections(fout, detections)
    finally:
        if fout is not sys.stdout:
            fout.close()
    if args.gt_output:
        from .cost_model import Detection
        gt_dets = {}
        row_ids = {}
        for f in sorted(gt.frames):
            dets = []
            for gid, box in gt.frames[f]:
                d = Detection(frame=f, box=box, score=1.0,
                              local_index=len(dets))
                dets.append(d)
                row_ids[d.key] = gid
            gt_dets[f] = dets
        ftio.write_detections(args.gt_output, gt_dets, gt_ids=row_ids)
    return 0


def _cmd_eval(args) -> int:
    _, gt = ftio.parse_ground_truth(args.gt)
    hypotheses = ftio.parse_tracks(args.tracks)
    settings = _load_settings(args)
    iou_threshold = (args.iou if args.iou is not None
                     else settings.get("iou_threshold", 0.5))
    report = clear_mot(gt, hypotheses, iou_threshold=iou_threshold)
    print(f"MOTA {report.mota:.4f}")
    print(f"MOTP {report.motp:.4f}")
    print(f"MT {report.mostly_tracked:.4f}")
    print(f"PT {report.partially_tracked:.4f}")
    print(f"ML {report.mostly_lost:.4f}")
    print(f"IDS {report.id_switches}")
    print(f"FRAG {report.fragmentations}")
    print(f"FAR {report.false_alarm_rate:.4f}")
    print(f"TP {report.true_positives}  FP {report.false_positives}  "
          f"FN {report.false_negatives}  GT {report.total_gt}")
    return 0


def _cmd_oracle(args) -> int:
    settings = _load_settings(args)
    model = _make_model(settings)
    fin = _open_in(args.input)
    try:
        detections = ftio.parse_detections(fin)
    finally:
        if fin is not sys.stdin:
            fin.close()
    graph = build_batch_graph(detections, model,
                              gating=settings.get("gating", True),
                              gate_radius_factor=settings.get(
                                  "gate_radius_factor", 2.0))
    solution = brute_force_optimum(graph, seed=args.seed,
                                   max_detections=args.max_detections)
    fout = _open_out(args.output)
    try:
        ftio.write_tracks(fout, solution.trajectories)
    finally:
        if fout is not sys.stdout:
            fout.close()
    print(f"optimum cost: {solution.total_cost:.6g}", file=sys.stderr)
    return 0


def _cmd_bench(args) -> int:
    settings = _load_settings(args)
    model = _make_model(settings)
    fin = _open_in(args.input)
    try:
        detections = ftio.parse_detections(fin)
    finally:
        if fin is not sys.stdin:
            fin.close()
    rows = run_bench(detections, model,
                     solvers=tuple(args.solvers.split(",")),
                     taus=tuple(int(t) for t in args.taus.split(",")),
                     gating=settings.get("gating", True),
                     gate_radius_factor=settings.get("gate_radius_factor", 2.0))
    fout = _open_out(args.output)
    try:
        write_bench(fout, rows)
    finally:
        if fout is not sys.stdout:
            fout.close()
    return 0


def _cmd_tracks_to_gt(args) -> int:
    from .cost_model import Detection
    frames = ftio.parse_tracks(args.input)
    gt_dets = {}
    row_ids = {}
    for f in sorted(frames):
        dets = []
        for tid, box in frames[f]:
            d = Detection(frame=f, box=box, score=1.0, local_index=len(dets))
            dets.append(d)
            row_ids[d.key] = tid
        gt_dets[f] = dets
    fout = _open_out(args.output)
    try:
        ftio.write_detections(fout, gt_dets, gt_ids=row_ids)
    finally:
        if fout is not sys.stdout:
            fout.close()
    return 0


# -- entry point -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="flowtrack",
                     description="Min-cost flow multi-object tracking")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("track", help="associate detections into tracks")
    p.add_argument("--input", "-i", help="detection CSV ('-' = stdin)")
    p.add_argument("--output", "-o", help="track CSV ('-' = stdout)")
    p.add_argument("--solver", default="ssp",
                   choices=["ssp", "dssp", "dp", "odssp", "mbodssp"])
    p.add_argument("--window", type=int, help="frame budget for mbodssp")
    p.add_argument("--stream", action="store_true",
                   help="read blank-line-separated frame blocks from stdin")
    p.add_argument("--confirm-lag", type=int, default=0,
                   help="frames to wait before emitting streamed rows")
    _add_model_args(p)
    p.set_defaults(func=_cmd_track)

    p = sub.add_parser("synth", help="generate a synthetic sequence")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--frames", type=int, default=50)
    p.add_argument("--tracks", type=int, default=3)
    p.add_argument("--miss-rate", type=float, default=0.0)
    p.add_argument("--fp-rate", type=float, default=0.0)
    p.add_argument("--crossing", action="store_true")
    p.add_argument("--output", "-o", help="detection CSV ('-' = stdout)")
    p.add_argument("--gt-output", help="ground-truth CSV path")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("eval", help="CLEAR-MOT metrics for a track file")
    p.add_argument("--gt", required=True, help="ground-truth CSV")
    p.add_argument("--tracks", required=True, help="track CSV")
    p.add_argument("--iou", type=float, help="match threshold (default 0.5)")
    p.add_argument("--config")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("oracle", help="brute-force optimum for tiny inputs")
    p.add_argument("--input", "-i", help="detection CSV ('-' = stdin)")
    p.add_argument("--output", "-o", help="track CSV ('-' = stdout)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--max-detections", type=int, default=12)
    _add_model_args(p)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("bench", help="time the solvers over a detection set")
    p.add_argument("--input", "-i", help="detection CSV ('-' = stdin)")
    p.add_argument("--output", "-o", help="CSV report ('-' = stdout)")
    p.add_argument("--solvers", default="ssp,dssp,dp,odssp,mbodssp")
    p.add_argument("--taus", default="10")
    _add_model_args(p)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("tracks-to-gt",
                       help="reinterpret a track file as ground truth")
    p.add_argument("--input", "-i", required=True, help="track CSV")
    p.add_argument("--output", "-o", help="ground-truth CSV ('-' = stdout)")
    p.set_defaults(func=_cmd_tracks_to_gt)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    except BrokenPipeError:
        return 0
    except DataError as exc:
        print(f"flowtrack: data error: {exc}", file=sys.stderr)
        return 2
    except InvariantBreach as exc:
        print(f"flowtrack: internal invariant violated: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"flowtrack: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
