"""File formats: detection/track/ground-truth CSV and flat key=value configs.

Detections: ``frame,id,x,y,w,h,score[,extra...]`` — the id column is parsed
but ignored (detections carry no identity), extra columns become additional
pairwise features. Tracks: ``frame,track_id,x,y,w,h`` sorted by
(frame, track_id). Ground truth: detection columns plus a trailing gt_id.
Floats are written with ``%.6g`` so output is byte-identical across runs.
"""
from __future__ import annotations

import csv
import io as _io
import math
import os

from .cost_model import Detection
from .errors import DataError
from .metrics import GroundTruth


def _parse_float(text: str, what: str, lineno: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"line {lineno}: bad {what} {text!r}") from None
    if math.isnan(value):
        raise DataError(f"line {lineno}: {what} is NaN")
    return value


def _parse_int(text: str, what: str, lineno: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise DataError(f"line {lineno}: bad {what} {text!r}") from None


def _rows(fobj):
    for lineno, row in enumerate(csv.reader(fobj), start=1):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if row[0].lstrip().startswith("#"):
            continue
        yield lineno, [c.strip() for c in row]


def _detection_from_row(row, lineno, with_gt_id=False):
    tail = 1 if with_gt_id else 0
    if len(row) < 7 + tail:
        raise DataError(f"line {lineno}: expected at least {7 + tail} columns, "
                        f"got {len(row)}")
    frame = _parse_int(row[0], "frame", lineno)
    x = _parse_float(row[2], "x", lineno)
    y = _parse_float(row[3], "y", lineno)
    w = _parse_float(row[4], "w", lineno)
    h = _parse_float(row[5], "h", lineno)
    score = _parse_float(row[6], "score", lineno)
    extra_cols = row[7:len(row) - tail] if with_gt_id else row[7:]
    extras = tuple(_parse_float(c, f"extra column {i}", lineno)
                   for i, c in enumerate(extra_cols, start=7))
    gt_id = _parse_int(row[-1], "gt id", lineno) if with_gt_id else None
    try:
        det = Detection(frame=frame, box=(x, y, w, h), score=score,
                        local_index=0, extras=extras)
    except DataError as exc:
        raise DataError(f"line {lineno}: {exc}") from None
    return det, gt_id


def _finish_frames(per_frame: dict, n_extras: int | None):
    if not per_frame:
        return {}
    out = {}
    for f in range(min(per_frame), max(per_frame) + 1):
        dets = []
        for i, d in enumerate(per_frame.get(f, [])):
            dets.append(Detection(frame=d.frame, box=d.box, score=d.score,
                                  local_index=i, extras=d.extras))
        out[f] = dets
    return out


def parse_detections(source) -> dict[int, list[Detection]]:
    """Read a detection CSV into {frame: [Detection, ...]}.

    Frames inside the observed range with no detections map to empty lists;
    local indices follow file order within each frame.
    """
    close = False
    if isinstance(source, (str, os.PathLike)):
        fobj = open(source, newline="")
        close = True
    else:
        fobj = source
    try:
        per_frame: dict[int, list[Detection]] = {}
        n_extras = None
        for lineno, row in _rows(fobj):
            det, _ = _detection_from_row(row, lineno)
            if n_extras is None:
                n_extras = len(det.extras)
            elif len(det.extras) != n_extras:
                raise DataError(f"line {lineno}: inconsistent column count")
            per_frame.setdefault(det.frame, []).append(det)
        return _finish_frames(per_frame, n_extras)
    finally:
        if close:
            fobj.close()


def parse_ground_truth(source) -> tuple[dict[int, list[Detection]], GroundTruth]:
    """Read a ground-truth CSV (detection columns plus trailing gt_id)."""
    close = False
    if isinstance(source, (str, os.PathLike)):
        fobj = open(source, newline="")
        close = True
    else:
        fobj = source
    try:
        per_frame: dict[int, list[Detection]] = {}
        gt = GroundTruth()
        for lineno, row in _rows(fobj):
            det, gt_id = _detection_from_row(row, lineno, with_gt_id=True)
            per_frame.setdefault(det.frame, []).append(det)
            gt.add(det.frame, gt_id, det.box)
        return _finish_frames(per_frame, None), gt
    finally:
        if close:
            fobj.close()


def _fmt(x: float) -> str:
    return "%.6g" % x


def write_detections(dest, detections: dict[int, list[Detection]],
                     gt_ids: dict[tuple, int] | None = None):
    """Write detections (optionally with trailing gt ids) deterministically."""
    close = False
    if isinstance(dest, (str, os.PathLike)):
        fobj = open(dest, "w", newline="")
        close = True
    else:
        fobj = dest
    try:
        for f in sorted(detections):
            for d in detections[f]:
                x, y, w, h = d.box
                row = [str(d.frame), str(d.local_index), _fmt(x), _fmt(y),
                       _fmt(w), _fmt(h), _fmt(d.score)]
                row.extend(_fmt(e) for e in d.extras)
                if gt_ids is not None:
                    gid = gt_ids.get(d.key)
                    row.append(str(-1 if gid is None else gid))
                fobj.write(",".join(row) + "\n")
    finally:
        if close:
            fobj.close()


def write_tracks(dest, trajectories):
    """Write ``frame,track_id,x,y,w,h`` rows sorted by (frame, track_id)."""
    rows = []
    for traj in trajectories:
        for d in traj.detections:
            x, y, w, h = d.box
            rows.append((d.frame, traj.track_id, x, y, w, h))
    rows.sort(key=lambda r: (r[0], r[1]))
    close = False
    if isinstance(dest, (str, os.PathLike)):
        fobj = open(dest, "w", newline="")
        close = True
    else:
        fobj = dest
    try:
        for f, tid, x, y, w, h in rows:
            fobj.write(f"{f},{tid},{_fmt(x)},{_fmt(y)},{_fmt(w)},{_fmt(h)}\n")
    finally:
        if close:
            fobj.close()


def parse_tracks(source) -> dict[int, list[tuple[int, tuple]]]:
    """Read a track CSV into {frame: [(track_id, box), ...]} hypotheses."""
    close = False
    if isinstance(source, (str, os.PathLike)):
        fobj = open(source, newline="")
        close = True
    else:
        fobj = source
    try:
        frames: dict[int, list[tuple[int, tuple]]] = {}
        for lineno, row in _rows(fobj):
            if len(row) < 6:
                raise DataError(f"line {lineno}: expected 6 columns, got {len(row)}")
            f = _parse_int(row[0], "frame", lineno)
            tid = _parse_int(row[1], "track id", lineno)
            box = tuple(_parse_float(row[i], "box", lineno) for i in range(2, 6))
            if any(tid == t for t, _ in frames.get(f, [])):
                raise DataError(f"line {lineno}: duplicate track id {tid} "
                                f"in frame {f}")
            frames.setdefault(f, []).append((tid, box))
        return frames
    finally:
        if close:
            fobj.close()


def tracks_to_gt(source) -> GroundTruth:
    """Reinterpret a track file as ground truth (for self-evaluation)."""
    gt = GroundTruth()
    for f, objs in parse_tracks(source).items():
        for tid, box in objs:
            gt.add(f, tid, box)
    return gt


def load_config(source) -> dict[str, str]:
    """Flat ``key = value`` config file; '#' starts a comment."""
    close = False
    if isinstance(source, (str, os.PathLike)):
        fobj = open(source)
        close = True
    else:
        fobj = source
    try:
        out: dict[str, str] = {}
        for lineno, line in enumerate(fobj, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise DataError(f"line {lineno}: expected key=value, got {text!r}")
            key, value = text.split("=", 1)
            key = key.strip()
            if not key:
                raise DataError(f"line {lineno}: empty key")
            out[key] = value.strip()
        return out
    finally:
        if close:
            fobj.close()


def parse_stream_frame(fobj) -> tuple[int, list[Detection]] | None:
    """Read one blank-line-terminated block of detection rows from a stream.

    Returns (frame, detections) or None at end of input. All rows in a block
    must share one frame index.
    """
    per: list[Detection] = []
    frame = None
    saw_any = False
    for line in fobj:
        saw_any = True
        text = line.strip()
        if not text:
            if frame is not None:
                break
            continue  # leading blank lines
        row = [c.strip() for c in text.split(",")]
        det, _ = _detection_from_row(row, lineno=0)
        if frame is None:
            frame = det.frame
        elif det.frame != frame:
            raise DataError(f"stream block mixes frames {frame} and {det.frame}")
        per.append(Detection(frame=det.frame, box=det.box, score=det.score,
                             local_index=len(per), extras=det.extras))
    if frame is None:
        return None if not saw_any else None
    return frame, per
