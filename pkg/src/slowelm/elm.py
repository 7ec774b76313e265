"""Slow-ELM: random sigmoid hidden layer, slow-feature projection selection
and a ridge-regularized least-squares output layer.

Shapes follow the row-sample convention: a batch of inputs is ``(N, d)``,
hidden activations ``(N, n)``, projected features ``(N, k)`` and class
scores ``(N, M)``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg
from scipy.special import expit

MODES = ("slow", "fast", "pca", "identity")
MODEL_MAGIC = b"SELM"
MODEL_VERSION = 1
_HEADER = struct.Struct("<4sH6I")
_TRAILER = struct.Struct("<Bd")


class RankError(ValueError):
    """Requested more projections than the data supports."""

    def __init__(self, k: int, achievable: int):
        super().__init__(f"k={k} exceeds the retained rank; achievable k is at most {achievable}")
        self.k = k
        self.achievable = achievable


class ModelFileError(ValueError):
    pass


@dataclass(eq=False)
class HiddenLayer:
    W_in: np.ndarray  # (input_dim, n)

    @property
    def input_dim(self) -> int:
        return self.W_in.shape[0]

    @property
    def n(self) -> int:
        return self.W_in.shape[1]


@dataclass(eq=False)
class SlowProjection:
    mean_H: np.ndarray  # (n,)
    W_slow: np.ndarray  # (n, k)
    delta_energies: np.ndarray  # (k,)
    mode: str = "slow"

    @property
    def n(self) -> int:
        return self.W_slow.shape[0]

    @property
    def k(self) -> int:
        return self.W_slow.shape[1]


@dataclass(eq=False)
class OutputLayer:
    W_out: np.ndarray  # (k, M)
    C: float


@dataclass(eq=False)
class SlowElmModel:
    hidden: HiddenLayer
    projection: SlowProjection
    output: OutputLayer
    num_objects: int
    pose_bins: int = 8

    def __post_init__(self):
        if self.hidden.n != self.projection.n:
            raise ValueError(f"hidden width {self.hidden.n} != projection input {self.projection.n}")
        if self.projection.k != self.output.W_out.shape[0]:
            raise ValueError(f"projection k {self.projection.k} != output rows {self.output.W_out.shape[0]}")
        if self.output.W_out.shape[1] != self.num_objects * self.pose_bins:
            raise ValueError(
                f"output width {self.output.W_out.shape[1]} != {self.num_objects} objects x {self.pose_bins} bins"
            )

    @property
    def num_classes(self) -> int:
        return self.num_objects * self.pose_bins

    def features(self, X: np.ndarray) -> np.ndarray:
        return project(hidden_activations(X, self.hidden), self.projection)

    def scores(self, X: np.ndarray) -> np.ndarray:
        return predict_scores(self.features(X), self.output)

    def predict_objects(self, X: np.ndarray) -> np.ndarray:
        """Object id per row of ``X``; ties go to the lowest flat class."""
        s = self.scores(np.atleast_2d(X))
        return np.argmax(s, axis=1) // self.pose_bins


def init_hidden(input_dim: int, n: int, seed: int) -> HiddenLayer:
    """Input weights drawn i.i.d. from N(0, 1), reproducible from ``seed``."""
    if input_dim < 1 or n < 1:
        raise ValueError("input_dim and n must be positive")
    rng = np.random.default_rng(seed)
    return HiddenLayer(rng.standard_normal((input_dim, n)))


def sigmoid(z):
    return expit(z)


def hidden_activations(x: np.ndarray, hidden: HiddenLayer) -> np.ndarray:
    """``f(W_in^T x)`` with the logistic sigmoid; accepts one vector or a batch.

    In float64 the sigmoid rounds to exactly 1.0 for pre-activations above
    ~37, which happens routinely with 3600 inputs and unit-variance weights.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != hidden.input_dim:
        raise ValueError(f"input has {x.shape[-1]} components, hidden layer expects {hidden.input_dim}")
    return expit(x @ hidden.W_in)


def _pair_mask(N: int, segments: Optional[np.ndarray]) -> np.ndarray:
    """True at ``i`` when rows ``i`` and ``i + 1`` belong to the same recording."""
    if segments is None:
        return np.ones(max(N - 1, 0), dtype=bool)
    segments = np.asarray(segments)
    return segments[1:] == segments[:-1]


def _segment_diffs(Z: np.ndarray, segments: Optional[np.ndarray]) -> np.ndarray:
    return np.diff(Z, axis=0)[_pair_mask(len(Z), segments)]


def _fix_signs(W: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(W), axis=0)
    s = np.sign(W[idx, np.arange(W.shape[1])])
    s[s == 0] = 1.0
    return W * s


def _covariances(H: np.ndarray, mean: np.ndarray, segments, chunk: int = 4096):
    """Covariance of ``H`` and second moment of its within-segment differences.

    Accumulated over row blocks so no centred copy of ``H`` is kept.
    """
    N, n = H.shape
    pairs = _pair_mask(N, segments)
    cov = np.zeros((n, n))
    dcov = np.zeros((n, n))
    for lo in range(0, N, chunk):
        hi = min(lo + chunk, N)
        B = H[lo:hi] - mean
        cov += B.T @ B
        # differences for rows lo..hi, reaching one row past the block
        D = np.diff(H[lo : min(hi + 1, N)], axis=0)[pairs[lo : hi]]
        dcov += D.T @ D
    return cov / N, dcov / max(int(pairs.sum()), 1), int(pairs.sum())


def sphering(H_centered: np.ndarray, eps: float = 1e-10):
    """Whitening matrix ``S`` (n x r) for centred data, dropping directions
    whose covariance eigenvalue is below ``eps`` times the largest.

    Returns ``(S, eigenvalues, eigenvectors)`` with eigenvalues descending
    (all of them, not only the retained ones).
    """
    cov = H_centered.T @ H_centered / H_centered.shape[0]
    return _sphering_from_cov(cov, eps)


def _sphering_from_cov(cov: np.ndarray, eps: float):
    d, U = np.linalg.eigh(cov)
    d, U = d[::-1], U[:, ::-1]
    keep = d > eps * d[0] if d[0] > 0 else np.zeros(len(d), dtype=bool)
    S = U[:, keep] / np.sqrt(d[keep])
    return S, d, U


def fit_projection(
    H: np.ndarray,
    k: int,
    mode: str = "slow",
    eps: float = 1e-10,
    segments: Optional[np.ndarray] = None,
) -> SlowProjection:
    """Fit the projection between hidden layer and output layer.

    Parameters
    ----------
    H : ndarray of shape (N, n)
        Hidden activations, time-ordered within each recording.
    k : int
        Number of projections to keep.
    mode : {'slow', 'fast', 'pca', 'identity'}
        ``slow`` keeps the k sphered directions with the smallest mean squared
        temporal difference (ascending), ``fast`` the k largest (descending),
        ``pca`` the k leading principal directions of centred ``H`` and
        ``identity`` the first k raw hidden units.
    eps : float
        Relative eigenvalue cut-off for the sphering step.
    segments : array_like of shape (N,), optional
        Recording id per row. Differences are only taken between adjacent
        rows with equal id. ``None`` treats ``H`` as a single recording.

    Returns
    -------
    SlowProjection
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    H = np.asarray(H, dtype=np.float64)
    N, n = H.shape
    if N < 2:
        raise ValueError("need at least two samples")
    if not 1 <= k <= n:
        raise RankError(k, n)
    if segments is not None and len(segments) != N:
        raise ValueError("segments must have one entry per row of H")

    if mode == "identity":
        W = np.eye(n)[:, :k]
        dH = _segment_diffs(H[:, :k], segments)
        de = np.mean(dH**2, axis=0) if len(dH) else np.zeros(k)
        return SlowProjection(np.zeros(n), W, de, mode)

    mean = H.mean(axis=0)
    cov, dcov_H, n_pairs = _covariances(H, mean, segments)
    S, d, U = _sphering_from_cov(cov, eps)
    r = S.shape[1]
    if k > r:
        raise RankError(k, r)

    if mode == "pca":
        W = _fix_signs(U[:, :k].copy())
        return SlowProjection(mean, W, np.einsum("ij,ik,kj->j", W, dcov_H, W), mode)

    if n_pairs == 0:
        raise ValueError("no consecutive pairs inside any segment")
    dcov = S.T @ dcov_H @ S
    e, V = np.linalg.eigh((dcov + dcov.T) / 2)  # ascending; ties keep LAPACK's order
    sel = np.arange(k) if mode == "slow" else np.arange(r - 1, r - 1 - k, -1)
    W = _fix_signs(S @ V[:, sel])
    return SlowProjection(mean, W, e[sel].copy(), mode)


def project(H: np.ndarray, proj: SlowProjection) -> np.ndarray:
    """``W_slow^T (H - mean_H)`` for one vector or a batch."""
    H = np.asarray(H, dtype=np.float64)
    if H.shape[-1] != proj.n:
        raise ValueError(f"H has {H.shape[-1]} components, projection expects {proj.n}")
    return (H - proj.mean_H) @ proj.W_slow


def delta_energy(Y: np.ndarray, segments: Optional[np.ndarray] = None) -> np.ndarray:
    """Mean squared difference of each column over consecutive rows."""
    d = _segment_diffs(np.asarray(Y, dtype=np.float64), segments)
    return np.mean(d**2, axis=0)


def constraint_residuals(Y: np.ndarray) -> dict:
    """Worst-case violation of zero mean, unit variance and decorrelation."""
    Y = np.asarray(Y, dtype=np.float64)
    mean = Y.mean(axis=0)
    Yc = Y - mean
    cov = Yc.T @ Yc / len(Y)
    var = np.diag(cov)
    corr = cov / np.sqrt(np.outer(var, var))
    np.fill_diagonal(corr, 0.0)
    return {
        "mean": float(np.max(np.abs(mean))),
        "var": float(np.max(np.abs(var - 1.0))),
        "corr": float(np.max(np.abs(corr))) if Y.shape[1] > 1 else 0.0,
    }


def fit_output(Y: np.ndarray, T: np.ndarray, C: float = 1.0) -> OutputLayer:
    """Solve ``(I/C + Y^T Y) W_out = Y^T T`` by Cholesky, not by inversion."""
    Y = np.asarray(Y, dtype=np.float64)
    T = np.asarray(T, dtype=np.float64)
    if Y.shape[0] != T.shape[0]:
        raise ValueError(f"Y has {Y.shape[0]} rows, T has {T.shape[0]}")
    if not C > 0:
        raise ValueError(f"C must be positive, got {C}")
    if not (np.isfinite(Y).all() and np.isfinite(T).all() and np.isfinite(C)):
        raise ValueError("non-finite values in Y, T or C")
    A = Y.T @ Y
    A[np.diag_indices_from(A)] += 1.0 / C
    W = scipy.linalg.solve(A, Y.T @ T, assume_a="pos")
    return OutputLayer(W, float(C))


def predict_scores(Y: np.ndarray, out: OutputLayer) -> np.ndarray:
    Y = np.asarray(Y, dtype=np.float64)
    if Y.shape[-1] != out.W_out.shape[0]:
        raise ValueError(f"Y has {Y.shape[-1]} components, output layer expects {out.W_out.shape[0]}")
    return Y @ out.W_out


def model_file_size(input_dim: int, n: int, k: int, M: int) -> int:
    return _HEADER.size + 8 * (input_dim * n + n + n * k + k + k * M) + _TRAILER.size


def save_model(model: SlowElmModel, path) -> None:
    h, p, o = model.hidden, model.projection, model.output
    M = o.W_out.shape[1]
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MODEL_MAGIC, MODEL_VERSION, h.input_dim, h.n, p.k, M, model.num_objects, model.pose_bins))
        for a in (h.W_in, p.mean_H, p.W_slow, p.delta_energies, o.W_out):
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())
        fh.write(_TRAILER.pack(MODES.index(p.mode), o.C))


def load_model(path) -> SlowElmModel:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise ModelFileError("truncated header")
    magic, version, d, n, k, M, N, bins = _HEADER.unpack_from(data)
    if magic != MODEL_MAGIC:
        raise ModelFileError(f"bad magic {magic!r}")
    if version != MODEL_VERSION:
        raise ModelFileError(f"unsupported model version {version}")
    expected = model_file_size(d, n, k, M)
    if len(data) != expected:
        raise ModelFileError(f"file is {len(data)} bytes, layout needs {expected}")
    pos = _HEADER.size
    arrays = []
    for shape in ((d, n), (n,), (n, k), (k,), (k, M)):
        size = int(np.prod(shape))
        arrays.append(np.frombuffer(data, "<f8", size, pos).reshape(shape).astype(np.float64))
        pos += 8 * size
    mode_idx, C = _TRAILER.unpack_from(data, pos)
    if mode_idx >= len(MODES):
        raise ModelFileError(f"bad mode byte {mode_idx}")
    W_in, mean_H, W_slow, de, W_out = arrays
    return SlowElmModel(
        HiddenLayer(W_in),
        SlowProjection(mean_H, W_slow, de, MODES[mode_idx]),
        OutputLayer(W_out, C),
        num_objects=N,
        pose_bins=bins,
    )


class FastPredictor:
    """Single-sample float32 inference for {-1, +1} input vectors.

    ``W_in^T x = 2 * sum(active rows) - colsum``, so sparse inputs touch only
    the rows of the smaller of the active/inactive pixel sets. Past
    ``gather_below`` of the pixels a dense BLAS product is cheaper.
    """

    gather_below = 0.25

    def __init__(self, model: SlowElmModel, dtype=np.float32):
        self.W_in = np.ascontiguousarray(model.hidden.W_in, dtype=dtype)
        self.colsum = self.W_in.sum(axis=0)
        self.mean_H = model.projection.mean_H.astype(dtype)
        self.W_slow = np.ascontiguousarray(model.projection.W_slow, dtype=dtype)
        self.W_out = np.ascontiguousarray(model.output.W_out, dtype=dtype)
        self.pose_bins = model.pose_bins

    def scores(self, x: np.ndarray) -> np.ndarray:
        on = x > 0
        n_on = int(np.count_nonzero(on))
        limit = self.gather_below * len(x)
        if n_on <= limit:
            z = 2.0 * self.W_in.take(np.flatnonzero(on), axis=0).sum(axis=0) - self.colsum
        elif len(x) - n_on <= limit:
            z = self.colsum - 2.0 * self.W_in.take(np.flatnonzero(~on), axis=0).sum(axis=0)
        else:
            z = np.where(on, 1.0, -1.0).astype(self.W_in.dtype) @ self.W_in
        H = expit(z)
        return ((H - self.mean_H) @ self.W_slow) @ self.W_out

    def predict(self, x: np.ndarray) -> int:
        return int(np.argmax(self.scores(x))) // self.pose_bins
