"""End-to-end glue: streams to input vectors, training and evaluation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import elm
from .events import EventStream, iter_windows
from .pose import balance_by_duplication, encode_targets, pose_bins_array, sliding_votes
from .roi import RoiTracker

log = logging.getLogger(__name__)


@dataclass(eq=False)
class Dataset:
    """Input vectors with per-window annotations.

    ``X`` holds {-1, +1} as int8 to keep memory down; rows are time-ordered
    within each recording.
    """

    X: np.ndarray  # (N, side*side) int8
    object_id: np.ndarray
    angle: np.ndarray  # degrees, window midpoint
    recording: np.ndarray  # recording index per row
    window_index: np.ndarray
    omega: np.ndarray
    distance: np.ndarray  # label strings
    n_fallbacks: int = 0

    def __len__(self) -> int:
        return len(self.X)

    def flat_class(self, bins: int = 8) -> np.ndarray:
        return self.object_id * bins + pose_bins_array(self.angle, bins)

    def take(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(
            self.X[idx], self.object_id[idx], self.angle[idx], self.recording[idx],
            self.window_index[idx], self.omega[idx], self.distance[idx], self.n_fallbacks,
        )

    @staticmethod
    def concat(parts: Sequence["Dataset"]) -> "Dataset":
        cat = np.concatenate
        return Dataset(
            cat([p.X for p in parts]), cat([p.object_id for p in parts]), cat([p.angle for p in parts]),
            cat([p.recording for p in parts]), cat([p.window_index for p in parts]),
            cat([p.omega for p in parts]), cat([p.distance for p in parts]),
            sum(p.n_fallbacks for p in parts),
        )


@dataclass(frozen=True)
class FeatureParams:
    n_w: int = 2000
    stride: Optional[int] = None
    trim_fraction: float = 0.9
    smooth_dist: float = 10.0
    side: int = 60


def stream_images(stream: EventStream, fp: FeatureParams) -> tuple:
    """Binary ROI images, window midpoint timestamps and fallback count."""
    tracker = RoiTracker(fp.trim_fraction, fp.smooth_dist, fp.side, stream.width, stream.height)
    imgs, mids = [], []
    for w in iter_windows(stream, fp.n_w, fp.stride):
        imgs.append(tracker(w))
        mids.append(w.mid_t)
    imgs = np.array(imgs, dtype=np.uint8).reshape(-1, fp.side, fp.side)
    return imgs, np.array(mids, dtype=np.float64), tracker.n_fallbacks


def stream_dataset(
    stream: EventStream,
    fp: FeatureParams,
    recording: int = 0,
    object_id: Optional[int] = None,
    distance: str = "",
    angles: Optional[np.ndarray] = None,
) -> Dataset:
    """Featurize one recording. Window angles come from ``angles`` or the stream annotation."""
    imgs, mids, n_fb = stream_images(stream, fp)
    n = len(imgs)
    if angles is None:
        angles = stream.meta.angle_at(mids) if n else np.zeros(0)
    if object_id is None:
        object_id = stream.meta.object_id
    if object_id is None:
        raise ValueError("no object id for recording")
    X = (imgs.reshape(n, -1).astype(np.int8) * 2 - 1)
    omega = stream.meta.omega if stream.meta.omega is not None else np.nan
    return Dataset(
        X,
        np.full(n, object_id, dtype=np.int64),
        np.asarray(angles, dtype=np.float64)[:n],
        np.full(n, recording, dtype=np.int64),
        np.arange(n, dtype=np.int64),
        np.full(n, omega, dtype=np.float64),
        np.full(n, distance, dtype=object),
        n_fb,
    )


def hidden_matrix(X: np.ndarray, hidden: elm.HiddenLayer, batch: int = 2048) -> np.ndarray:
    out = np.empty((len(X), hidden.n))
    for lo in range(0, len(X), batch):
        out[lo : lo + batch] = elm.hidden_activations(X[lo : lo + batch].astype(np.float64), hidden)
    return out


@dataclass
class TrainLog:
    mode: str
    k: int
    n: int
    C: float
    samples: int
    residuals: dict = field(default_factory=dict)
    delta_energies: list = field(default_factory=list)
    roi_fallbacks: int = 0


def fit_head(
    H: np.ndarray,
    ds: Dataset,
    hidden: elm.HiddenLayer,
    k: int,
    mode: str,
    C: float,
    num_objects: int,
    pose_bins: int = 8,
    eps: float = 1e-10,
) -> tuple:
    """Projection + output layer on precomputed hidden activations."""
    proj = elm.fit_projection(H, k, mode, eps, segments=ds.recording)
    Y = elm.project(H, proj)
    T = encode_targets(ds.flat_class(pose_bins), num_objects * pose_bins)
    out = elm.fit_output(Y, T, C)
    model = elm.SlowElmModel(hidden, proj, out, num_objects, pose_bins)
    res = elm.constraint_residuals(Y) if mode in ("slow", "fast") else {}
    tlog = TrainLog(mode, k, hidden.n, C, len(ds), res, proj.delta_energies.tolist(), ds.n_fallbacks)
    return model, tlog


def train(
    ds: Dataset,
    n_hidden: int,
    k: int,
    mode: str = "slow",
    C: float = 1.0,
    seed: int = 0,
    num_objects: Optional[int] = None,
    pose_bins: int = 8,
    eps: float = 1e-10,
) -> tuple:
    if len(ds) < 2:
        raise ValueError("training set needs at least two windows")
    num_objects = int(ds.object_id.max()) + 1 if num_objects is None else num_objects
    hidden = elm.init_hidden(ds.X.shape[1], n_hidden, seed)
    H = hidden_matrix(ds.X, hidden)
    return fit_head(H, ds, hidden, k, mode, C, num_objects, pose_bins, eps)


def object_accuracy(pred, truth) -> float:
    pred, truth = np.asarray(pred), np.asarray(truth)
    return float(np.mean(pred == truth)) if len(truth) else float("nan")


def confusion(truth, pred, num_classes: int) -> np.ndarray:
    cm = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(truth), np.asarray(pred)), 1)
    return cm


def multiview_accuracy(
    decisions: np.ndarray,
    ds: Dataset,
    n_views: int,
    num_objects: int,
    pose_bins: int = 8,
    seed: int = 0,
) -> float:
    """Voted accuracy over every start position in every recording, class-balanced.

    Each start position is labelled by the flat class of its first window;
    positions are balanced by duplication before averaging.
    """
    correct, cls = [], []
    flat = ds.flat_class(pose_bins)
    for r in np.unique(ds.recording):
        rows = np.flatnonzero(ds.recording == r)
        rows = rows[np.argsort(ds.window_index[rows], kind="stable")]
        voted = sliding_votes(decisions[rows], n_views, num_objects)
        if len(voted) == 0:
            continue
        correct.append(voted == ds.object_id[rows[: len(voted)]])
        cls.append(flat[rows[: len(voted)]])
    if not correct:
        return float("nan")
    correct = np.concatenate(correct)
    cls = np.concatenate(cls)
    idx = balance_by_duplication(cls, seed)
    return float(np.mean(correct[idx]))


def views_for_span(span_deg: float, step_deg: float) -> int:
    """Windows needed to cover ``span_deg`` of rotation at ``step_deg`` per window."""
    if span_deg <= 0:
        return 1
    return max(1, int(round(span_deg / step_deg)))


def window_step_deg(ds: Dataset) -> float:
    steps = []
    for r in np.unique(ds.recording):
        a = np.sort(ds.angle[ds.recording == r])
        if len(a) > 1:
            steps.append(np.diff(a))
    if not steps:
        raise ValueError("cannot infer window spacing from single-window recordings")
    return float(np.median(np.concatenate(steps)))
