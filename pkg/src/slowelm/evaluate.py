"""Evaluation sweeps: confusion, speed/distance grid, projection count and multi-view span.

All tables are written as CSV. Schemas:

``summary.csv``          metric,value
``confusion_flat.csv``   true_class,c0,...,c{M-1}   (8N x 8N, balanced test set)
``confusion_object.csv`` true_object,o0,...,o{N-1}
``speed_distance.csv``   omega,distance,samples,accuracy
``projection_sweep.csv`` k,mode,accuracy
``multiview.csv``        mode,span_deg,n_views,accuracy
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import elm
from .pipeline import (
    Dataset,
    confusion,
    hidden_matrix,
    multiview_accuracy,
    object_accuracy,
    views_for_span,
    window_step_deg,
)
from .pose import balance_by_duplication, encode_targets

log = logging.getLogger(__name__)

SWEEPS = ("projection_count", "multiview", "speed_distance")


@dataclass
class EvalReport:
    num_objects: int
    pose_bins: int
    object_accuracy: float
    confusion_flat: np.ndarray
    confusion_object: np.ndarray
    test_samples: int
    speed_distance: list = field(default_factory=list)  # (omega, distance, samples, accuracy)
    projection_sweep: list = field(default_factory=list)  # (k, mode, accuracy)
    multiview: list = field(default_factory=list)  # (mode, span_deg, n_views, accuracy)
    timing: dict = field(default_factory=dict)  # not written to the CSVs

    def write(self, out_dir) -> list:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        M, N = self.confusion_flat.shape[0], self.num_objects
        files = []

        def table(name, header, rows):
            with open(out / name, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(header)
                w.writerows(rows)
            files.append(out / name)

        table("summary.csv", ("metric", "value"), [
            ("object_accuracy", _fmt(self.object_accuracy)),
            ("test_samples", self.test_samples),
            ("num_objects", N),
            ("pose_bins", self.pose_bins),
        ])
        table("confusion_flat.csv", ["true_class"] + [f"c{i}" for i in range(M)],
              [[i] + row.tolist() for i, row in enumerate(self.confusion_flat)])
        table("confusion_object.csv", ["true_object"] + [f"o{i}" for i in range(N)],
              [[i] + row.tolist() for i, row in enumerate(self.confusion_object)])
        if self.speed_distance:
            table("speed_distance.csv", ("omega", "distance", "samples", "accuracy"),
                  [(_fmt(o), d, n, _fmt(a)) for o, d, n, a in self.speed_distance])
        if self.projection_sweep:
            table("projection_sweep.csv", ("k", "mode", "accuracy"),
                  [(k, m, _fmt(a)) for k, m, a in self.projection_sweep])
        if self.multiview:
            table("multiview.csv", ("mode", "span_deg", "n_views", "accuracy"),
                  [(m, _fmt(s), n, _fmt(a)) for m, s, n, a in self.multiview])
        return files


def _fmt(v: float) -> str:
    return repr(float(v))


def read_csv_table(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def predict_batched(X: np.ndarray, hidden: elm.HiddenLayer, heads: dict, batch: int = 4096) -> dict:
    """Flat-class predictions for several (projection, output) heads sharing one hidden layer."""
    preds = {name: [] for name in heads}
    for lo in range(0, len(X), batch):
        H = hidden_matrix(X[lo : lo + batch], hidden)
        for name, (proj, out, bins) in heads.items():
            s = elm.predict_scores(elm.project(H, proj), out)
            preds[name].append(np.argmax(s, axis=1))
    return {k: np.concatenate(v) if v else np.zeros(0, dtype=np.int64) for k, v in preds.items()}


def fit_mode_heads(
    train: Dataset,
    hidden: elm.HiddenLayer,
    modes,
    ks,
    C: float,
    num_objects: int,
    pose_bins: int,
    eps: float,
) -> dict:
    """``{(mode, k): (projection, output, bins)}`` sharing ``hidden``.

    Each mode is fitted once at its largest feasible k; smaller k use the
    leading columns, which is what a direct fit at that k returns.
    """
    H = hidden_matrix(train.X, hidden)
    T = encode_targets(train.flat_class(pose_bins), num_objects * pose_bins)
    heads = {}
    for mode in modes:
        k_max = max(ks)
        try:
            proj = elm.fit_projection(H, k_max, mode, eps, segments=train.recording)
        except elm.RankError as e:
            log.warning("%s: %s", mode, e)
            proj = elm.fit_projection(H, e.achievable, mode, eps, segments=train.recording)
        Y = elm.project(H, proj)
        for k in ks:
            if k > proj.k:
                log.warning("skipping %s k=%d (achievable %d)", mode, k, proj.k)
                continue
            sub = elm.SlowProjection(proj.mean_H, proj.W_slow[:, :k], proj.delta_energies[:k], mode)
            heads[(mode, k)] = (sub, elm.fit_output(Y[:, :k], T, C), pose_bins)
    return heads


def evaluate(
    model: elm.SlowElmModel,
    test: Dataset,
    train: Optional[Dataset] = None,
    sweeps=(),
    k_sweep=(10, 25, 50, 100, 200, 400, 800),
    sweep_modes=("slow", "pca", "identity", "fast"),
    spans=(0, 45, 90, 135, 180, 270, 360),
    multiview_modes=("slow", "pca"),
    C: Optional[float] = None,
    eps: float = 1e-10,
    seed: int = 0,
) -> EvalReport:
    """Run the single-sample evaluation plus the requested ``sweeps``.

    The test set is balanced by duplication (per flat class) before any
    single-sample accuracy is computed. Sweeps that refit projections need
    ``train`` and reuse the model's hidden layer.
    """
    unknown = set(sweeps) - set(SWEEPS)
    if unknown:
        raise ValueError(f"unknown sweeps {sorted(unknown)}; expected some of {SWEEPS}")
    N, bins = model.num_objects, model.pose_bins
    M = N * bins
    C = model.output.C if C is None else C
    flat = test.flat_class(bins)
    idx = balance_by_duplication(flat, seed, M)

    own = ("model", model.projection.k)
    heads = {own: (model.projection, model.output, bins)}
    need_modes = set()
    if "projection_count" in sweeps:
        need_modes.update(sweep_modes)
    if "multiview" in sweeps:
        need_modes.update(m for m in multiview_modes if m != model.projection.mode)
    if need_modes:
        if train is None:
            raise ValueError("projection/multiview sweeps need the training split")
        ks = sorted(set(k_sweep) | {model.projection.k})
        t0 = time.perf_counter()
        heads.update(fit_mode_heads(train, model.hidden, sorted(need_modes), ks, C, N, bins, eps))
        log.info("fitted %d sweep heads in %.1fs", len(heads) - 1, time.perf_counter() - t0)

    t0 = time.perf_counter()
    flat_preds = predict_batched(test.X, model.hidden, heads)
    elapsed = time.perf_counter() - t0
    preds = {key: v // bins for key, v in flat_preds.items()}
    flat_pred, p = flat_preds[own], preds[own]

    report = EvalReport(
        num_objects=N,
        pose_bins=bins,
        object_accuracy=object_accuracy(p[idx], test.object_id[idx]),
        confusion_flat=confusion(flat[idx], flat_pred[idx], M),
        confusion_object=confusion(test.object_id[idx], p[idx], N),
        test_samples=len(idx),
        timing={"batch_predict_s": elapsed, "heads": len(heads), "samples": len(test)},
    )

    if "speed_distance" in sweeps:
        om, dist = test.omega[idx], test.distance[idx]
        for o in np.unique(om):
            for d in sorted(set(dist.tolist())):
                m = (om == o) & (dist == d)
                if m.any():
                    report.speed_distance.append(
                        (float(o), d, int(m.sum()), object_accuracy(p[idx][m], test.object_id[idx][m]))
                    )

    if "projection_count" in sweeps:
        for k in k_sweep:
            for mode in sweep_modes:
                if (mode, k) in heads:
                    pk = preds[(mode, k)]
                    report.projection_sweep.append((k, mode, object_accuracy(pk[idx], test.object_id[idx])))

    if "multiview" in sweeps:
        step = window_step_deg(test)
        for mode in multiview_modes:
            key = own if mode == model.projection.mode else (mode, model.projection.k)
            if key not in preds:
                continue
            for span in spans:
                nv = views_for_span(span, step)
                report.multiview.append((mode, float(span), nv, multiview_accuracy(preds[key], test, nv, N, bins, seed)))
    return report
