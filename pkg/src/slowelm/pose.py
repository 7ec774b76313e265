"""Pose-binned labels, class decisions and multi-view voting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

POSE_BINS = 8


def pose_bin(angle: float, bins: int = POSE_BINS) -> int:
    """Index of the ``360/bins`` degree sector containing ``angle``.

    >>> pose_bin(50.0), pose_bin(-10.0), pose_bin(360.0)
    (1, 7, 0)
    """
    if not math.isfinite(angle):
        raise ValueError(f"non-finite angle {angle}")
    a = math.fmod(angle, 360.0)
    if a < 0:
        a += 360.0
    if a >= 360.0:  # -tiny + 360 rounds up to 360
        a = 0.0
    return min(int(a * bins // 360.0), bins - 1)


def pose_bins_array(angles, bins: int = POSE_BINS) -> np.ndarray:
    angles = np.asarray(angles, dtype=np.float64)
    if not np.isfinite(angles).all():
        raise ValueError("non-finite angle")
    a = np.mod(angles, 360.0)
    a[a >= 360.0] = 0.0
    return np.minimum((a * bins // 360.0).astype(np.int64), bins - 1)


@dataclass(frozen=True)
class PoseLabel:
    object_id: int
    pose_bin: int
    bins: int = POSE_BINS

    def __post_init__(self):
        if self.object_id < 0 or not 0 <= self.pose_bin < self.bins:
            raise ValueError(f"invalid label {self}")

    @classmethod
    def from_angle(cls, object_id: int, angle: float, bins: int = POSE_BINS) -> "PoseLabel":
        return cls(object_id, pose_bin(angle, bins), bins)

    @property
    def flat_class(self) -> int:
        return self.object_id * self.bins + self.pose_bin


def encode_target(label: PoseLabel, num_objects: int) -> np.ndarray:
    if label.object_id >= num_objects:
        raise ValueError(f"object {label.object_id} out of range for {num_objects} objects")
    t = np.zeros(num_objects * label.bins)
    t[label.flat_class] = 1.0
    return t


def encode_targets(flat_classes, num_classes: int) -> np.ndarray:
    """One-hot rows for an array of flat class indices."""
    flat_classes = np.asarray(flat_classes, dtype=np.int64)
    T = np.zeros((len(flat_classes), num_classes))
    T[np.arange(len(flat_classes)), flat_classes] = 1.0
    return T


def classify_single(scores, num_objects: int, bins: int = POSE_BINS) -> int:
    """Object owning the highest-scoring pose class (lowest index on ties)."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (num_objects * bins,):
        raise ValueError(f"expected {num_objects * bins} scores, got shape {scores.shape}")
    if not np.isfinite(scores).all():
        raise ValueError("non-finite score")
    return int(np.argmax(scores)) // bins


@dataclass(frozen=True)
class VoteState:
    counts: tuple = field(default_factory=tuple)
    samples_seen: int = 0

    @classmethod
    def empty(cls, num_objects: int) -> "VoteState":
        return cls((0,) * num_objects, 0)


def vote_update(state: VoteState, object_id: int) -> VoteState:
    counts = list(state.counts)
    if not 0 <= object_id < len(counts):
        raise ValueError(f"object {object_id} out of range for {len(counts)} objects")
    counts[object_id] += 1
    return VoteState(tuple(counts), state.samples_seen + 1)


def vote_decide(state: VoteState) -> int:
    if state.samples_seen < 1:
        raise ValueError("no votes cast")
    return int(np.argmax(state.counts))


def vote(object_ids, num_objects: int) -> int:
    """Majority object over a sequence of per-view decisions."""
    counts = np.bincount(np.asarray(object_ids, dtype=np.int64), minlength=num_objects)
    if counts.sum() == 0:
        raise ValueError("no votes cast")
    return int(np.argmax(counts))


def sliding_votes(decisions, n_views: int, num_objects: int) -> np.ndarray:
    """Voted decision for every run of ``n_views`` consecutive decisions."""
    d = np.asarray(decisions, dtype=np.int64)
    if n_views < 1:
        raise ValueError("n_views must be >= 1")
    if len(d) < n_views:
        return np.zeros(0, dtype=np.int64)
    onehot = np.zeros((len(d) + 1, num_objects), dtype=np.int64)
    onehot[1:][np.arange(len(d)), d] = 1
    csum = np.cumsum(onehot, axis=0)
    counts = csum[n_views:] - csum[:-n_views]
    return np.argmax(counts, axis=1)


def balance_by_duplication(classes, seed: int, num_classes=None) -> np.ndarray:
    """Indices resampling the set so every class has the largest class's count.

    Original indices come first (in order); each short class is topped up
    with indices drawn uniformly with replacement from its own members.

    Raises
    ------
    ValueError
        A class in ``range(num_classes)`` has no samples.
    """
    classes = np.asarray(classes, dtype=np.int64)
    if num_classes is None:
        labels = np.unique(classes)
    else:
        labels = np.arange(num_classes)
    members = {int(c): np.flatnonzero(classes == c) for c in labels}
    empty = [c for c, m in members.items() if len(m) == 0]
    if empty:
        raise ValueError(f"class {empty[0]} has no samples")
    target = max(len(m) for m in members.values())
    rng = np.random.default_rng(seed)
    extra = [rng.choice(m, size=target - len(m), replace=True) for m in members.values() if len(m) < target]
    return np.concatenate([np.arange(len(classes))] + extra).astype(np.int64)
