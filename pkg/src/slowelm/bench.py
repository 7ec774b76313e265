"""Single-sample inference throughput and latency."""

from __future__ import annotations

import os
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import elm
from .roi import RoiTracker


@dataclass
class BenchResult:
    label: str
    k: int
    n: int
    samples: int
    seconds: float
    mean_ms: float
    p99_ms: float
    cls_per_s: float
    workers: int = 1

    def as_row(self) -> dict:
        return asdict(self)


def hardware() -> str:
    cpu = platform.processor() or platform.machine()
    try:
        with open("/proc/cpuinfo") as fh:
            for line in fh:
                if line.startswith("model name"):
                    cpu = line.split(":", 1)[1].strip()
                    break
    except OSError:
        pass
    return f"{cpu}; {os.cpu_count()} cpu; numpy {np.__version__}; python {platform.python_version()}"


def time_loop(fn: Callable[[int], object], n_items: int, duration: float, label: str, k: int, n: int,
              min_samples: int = 50) -> BenchResult:
    """Call ``fn(i % n_items)`` until ``duration`` seconds pass, timing each call."""
    lat = []
    i = 0
    start = time.perf_counter()
    while True:
        t0 = time.perf_counter()
        fn(i % n_items)
        t1 = time.perf_counter()
        lat.append(t1 - t0)
        i += 1
        if t1 - start >= duration and i >= min_samples:
            break
    total = time.perf_counter() - start
    lat = np.array(lat) * 1e3
    return BenchResult(label, k, n, i, total, float(lat.mean()), float(np.percentile(lat, 99)), i / total)


def bench_vectors(model: elm.SlowElmModel, X: np.ndarray, duration: float, label: str = "vector") -> BenchResult:
    """Eq-chain inference (hidden, projection, scores, argmax) on pre-extracted vectors."""
    pred = elm.FastPredictor(model)
    X = np.asarray(X, dtype=np.float32)
    pred.predict(X[0])  # warm-up
    return time_loop(lambda i: pred.predict(X[i]), len(X), duration, label, model.projection.k, model.hidden.n)


def bench_windows(model: elm.SlowElmModel, windows: Sequence, duration: float, width: int, height: int,
                  trim_fraction: float = 0.9, smooth_dist: float = 10.0) -> BenchResult:
    """Same as :func:`bench_vectors` but starting from raw event windows (ROI included)."""
    pred = elm.FastPredictor(model)
    side = int(round(np.sqrt(model.hidden.input_dim)))
    tracker = RoiTracker(trim_fraction, smooth_dist, side, width, height)

    def one(i):
        img = tracker(windows[i])
        return pred.predict(img.ravel().astype(np.float32) * 2 - 1)

    one(0)
    return time_loop(one, len(windows), duration, "with_roi", model.projection.k, model.hidden.n)


def bench_parallel(model: elm.SlowElmModel, X: np.ndarray, duration: float, workers: int) -> BenchResult:
    """Aggregate throughput with ``workers`` threads each classifying single samples."""
    pred = elm.FastPredictor(model)
    X = np.asarray(X, dtype=np.float32)

    def worker(offset):
        count, i = 0, offset
        end = time.perf_counter() + duration
        while time.perf_counter() < end:
            pred.predict(X[i % len(X)])
            i += 1
            count += 1
        return count

    start = time.perf_counter()
    with ThreadPoolExecutor(workers) as ex:
        counts = list(ex.map(worker, range(workers)))
    total = time.perf_counter() - start
    n = sum(counts)
    return BenchResult("parallel", model.projection.k, model.hidden.n, n, total,
                       1e3 * total * workers / max(n, 1), float("nan"), n / total, workers)


def with_k(model: elm.SlowElmModel, k: int) -> elm.SlowElmModel:
    """Model truncated to its first ``k`` projections (output layer sliced to match).

    Timing only: the sliced output layer is not a refit.
    """
    if k > model.projection.k:
        raise elm.RankError(k, model.projection.k)
    p = model.projection
    proj = elm.SlowProjection(p.mean_H, p.W_slow[:, :k], p.delta_energies[:k], p.mode)
    out = elm.OutputLayer(model.output.W_out[:k], model.output.C)
    return elm.SlowElmModel(model.hidden, proj, out, model.num_objects, model.pose_bins)
