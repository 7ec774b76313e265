"""On-disk recording suites.

A suite directory holds one event file and one label sidecar per recording
plus ``manifest.jsonl`` (one JSON record per line) and the resolved
``config.txt`` used to write it.

Label sidecar: CSV with header ``window_index,object_id,angle_deg``, one
row per window at the configured window count and stride.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .config import RunConfig
from .events import num_windows, read_event_file, write_event_file
from .pipeline import Dataset, stream_dataset
from .synth import RecordingSpec, generate_suite, render

log = logging.getLogger(__name__)

MANIFEST = "manifest.jsonl"
LABEL_HEADER = ("window_index", "object_id", "angle_deg")


class DataError(ValueError):
    pass


def window_angles(angle_fn, n_events_t: np.ndarray, n_w: int, stride: int) -> np.ndarray:
    """Annotated angle at the midpoint timestamp of every window."""
    n = num_windows(len(n_events_t), n_w, stride)
    starts = np.arange(n) * stride
    mids = 0.5 * (n_events_t[starts] + n_events_t[starts + n_w - 1])
    return angle_fn(mids)


def labels_csv(object_id: int, angles: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LABEL_HEADER)
    for i, a in enumerate(angles):
        w.writerow((i, object_id, repr(float(a))))
    return buf.getvalue()


def read_labels(path) -> tuple:
    """``(window_index, object_id, angle_deg)`` arrays from a sidecar file."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != LABEL_HEADER:
        raise DataError(f"{path}: expected header {','.join(LABEL_HEADER)}")
    try:
        body = [(int(r[0]), int(r[1]), float(r[2])) for r in rows[1:] if r]
    except (ValueError, IndexError) as e:
        raise DataError(f"{path}: malformed label row ({e})") from None
    arr = np.array(body, dtype=np.float64).reshape(-1, 3)
    return arr[:, 0].astype(np.int64), arr[:, 1].astype(np.int64), arr[:, 2]


def write_suite(out_dir, cfg: RunConfig) -> list:
    """Render every recording of the configured suite into ``out_dir``.

    Returns the manifest records. Output bytes depend only on ``cfg``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    suite = cfg.suite()
    ext = ".csv" if cfg.fmt == "evt-csv" else ".evtb"
    records = []
    for spec in generate_suite(suite):
        rec = render(spec, suite)
        ev_name = spec.stem + ext
        lab_name = spec.stem + ".labels.csv"
        write_event_file(out / ev_name, rec.stream, cfg.fmt)
        angles = window_angles(rec.stream.meta.angle_at, rec.stream.t, cfg.n_w, cfg.stride)
        (out / lab_name).write_text(labels_csv(spec.object_id, angles))
        r = asdict(spec)
        r.update(path=ev_name, labels=lab_name, windows=len(angles), events=len(rec.stream))
        records.append(r)
        log.info("wrote %s (%d events, %d windows)", ev_name, len(rec.stream), len(angles))
    with open(out / MANIFEST, "w") as fh:
        for r in records:
            fh.write(json.dumps(r, sort_keys=True) + "\n")
    (out / "config.txt").write_text(cfg.to_text())
    return records


def read_manifest(data_dir) -> list:
    path = Path(data_dir) / MANIFEST
    if not path.exists():
        raise DataError(f"no {MANIFEST} in {data_dir}")
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def load_split(data_dir, split: str, cfg: RunConfig, records=None) -> Dataset:
    """Featurize every recording of ``split`` listed in the manifest."""
    records = read_manifest(data_dir) if records is None else records
    chosen = [r for r in records if r["split"] == split]
    if not chosen:
        raise DataError(f"manifest has no {split!r} recordings")
    fp = cfg.features()
    parts = []
    for r in chosen:
        stream = read_event_file(os.path.join(data_dir, r["path"]), width=cfg.width, height=cfg.height)
        widx, obj, angles = read_labels(os.path.join(data_dir, r["labels"]))
        n = num_windows(len(stream), fp.n_w, fp.stride)
        if len(widx) != n:
            raise DataError(
                f"{r['labels']}: {len(widx)} label rows but {n} windows at n_w={fp.n_w}, stride={fp.stride}"
            )
        stream.meta.omega = r.get("omega")
        ds = stream_dataset(stream, fp, recording=r["index"], object_id=int(obj[0]) if n else r["object_id"],
                            distance=r.get("distance", ""), angles=angles)
        parts.append(ds)
    return Dataset.concat(parts)


def synth_split(cfg: RunConfig, split: str) -> Dataset:
    """Featurize a split straight from the generator, skipping the disk."""
    suite = cfg.suite()
    fp = cfg.features()
    parts = []
    for spec in generate_suite(suite):
        if spec.split != split:
            continue
        rec = render(spec, suite)
        parts.append(stream_dataset(rec.stream, fp, recording=spec.index, distance=spec.distance))
    return Dataset.concat(parts)


def spec_from_record(r: dict) -> RecordingSpec:
    keys = RecordingSpec.__dataclass_fields__
    return RecordingSpec(**{k: r[k] for k in keys})
