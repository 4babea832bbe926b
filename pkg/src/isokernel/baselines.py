"""Gaussian-kernel comparators: exact GDK, Nystrom GDK, point detectors and a KDE.

The Gaussian kernel is ``exp(-||x - y||^2 / (2 sigma^2))``. These exist to
compare against the isolation-based detectors; none of them adapt to local
data density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Literal

import numpy as np
from scipy.spatial.distance import cdist

from isokernel.distributional import ScoredItem, rank
from isokernel.errors import InputError, ParameterError
from isokernel.kernel import as_dataset

SIGMA_GRID = tuple(2.0**m for m in range(-5, 6))
EIGEN_FLOOR = 1e-10

_BLOCK_ROWS = 2048


def _check_sigma(sigma: float) -> float:
    sigma = float(sigma)
    if not sigma > 0 or not math.isfinite(sigma):
        raise ParameterError(f"sigma must be a positive finite number, got {sigma}")
    return sigma


def gaussian_kernel(x: Any, y: Any, sigma: float) -> float:
    sigma = _check_sigma(sigma)
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if x.shape != y.shape:
        raise InputError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(np.exp(-np.sum((x - y) ** 2) / (2.0 * sigma * sigma)))


def gaussian_gram(X: np.ndarray, Y: np.ndarray, sigma: float) -> np.ndarray:
    sigma = _check_sigma(sigma)
    return np.exp(-cdist(X, Y, "sqeuclidean") / (2.0 * sigma * sigma))


def _row_means(X: np.ndarray, Y: np.ndarray, sigma: float) -> np.ndarray:
    """Mean of each row of the Gaussian Gram matrix, built block by block."""
    out = np.empty(X.shape[0])
    for lo in range(0, X.shape[0], _BLOCK_ROWS):
        out[lo : lo + _BLOCK_ROWS] = gaussian_gram(X[lo : lo + _BLOCK_ROWS], Y, sigma).mean(axis=1)
    return out


def gdk_exact(S: Any, T: Any, sigma: float) -> float:
    """Empirical Gaussian distributional kernel: mean of all pairwise kernel values."""
    S = as_dataset(S, "S")
    T = as_dataset(T, "T")
    if S.shape[1] != T.shape[1]:
        raise InputError(f"dimension mismatch: {S.shape[1]} vs {T.shape[1]}")
    return float(_row_means(S, T, sigma).mean())


@dataclass(frozen=True)
class NystromMap:
    """Approximate Gaussian feature map ``phi(x) = k(x, landmarks) @ whitener``."""

    landmarks: np.ndarray
    whitener: np.ndarray
    sigma: float

    @property
    def s(self) -> int:
        return int(self.landmarks.shape[0])

    def embed(self, X: Any) -> np.ndarray:
        X = as_dataset(X, "X")
        if X.shape[1] != self.landmarks.shape[1]:
            raise InputError(
                f"X has dimension {X.shape[1]}, landmarks have {self.landmarks.shape[1]}"
            )
        return gaussian_gram(X, self.landmarks, self.sigma) @ self.whitener

    def mean_embedding(self, S: Any) -> np.ndarray:
        return self.embed(S).mean(axis=0)


def nystrom_fit(D: Any, s: int, sigma: float, seed: int = 0) -> NystromMap:
    """Pick ``s`` landmarks uniformly without replacement and whiten their Gram matrix.

    The whitener is the pseudo-inverse square root of the landmark Gram
    matrix; eigenvalues below ``EIGEN_FLOOR`` are dropped.
    """
    D = as_dataset(D)
    sigma = _check_sigma(sigma)
    if int(s) != s or not 1 <= s <= D.shape[0]:
        raise ParameterError(f"landmark count s must be in [1, {D.shape[0]}], got {s}")
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(D.shape[0], size=int(s), replace=False))
    L = D[idx]
    w, V = np.linalg.eigh(gaussian_gram(L, L, sigma))
    keep = w > EIGEN_FLOOR
    inv_sqrt = np.zeros_like(w)
    inv_sqrt[keep] = 1.0 / np.sqrt(w[keep])
    W = (V * inv_sqrt) @ V.T
    W = 0.5 * (W + W.T)
    return NystromMap(landmarks=L, whitener=W, sigma=sigma)


def nystrom_embed(nm: NystromMap, x: Any) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    return nm.embed(x[None, :])[0]


def gdk_nystrom(nm: NystromMap, S: Any, T: Any) -> float:
    return float(np.dot(nm.mean_embedding(S), nm.mean_embedding(T)))


def default_landmarks(n: int) -> int:
    return max(1, min(n, math.ceil(math.sqrt(n))))


def gdk_point_similarities(
    D: Any,
    sigma: float,
    mode: Literal["exact", "nystrom"] = "exact",
    s: int | None = None,
    seed: int = 0,
) -> np.ndarray:
    """Similarity of each point's Dirac measure to the dataset, in input order."""
    D = as_dataset(D)
    if D.shape[0] < 2:
        raise InputError(f"need at least 2 points to score, got {D.shape[0]}")
    if mode == "exact":
        return _row_means(D, D, sigma)
    if mode == "nystrom":
        nm = nystrom_fit(D, default_landmarks(D.shape[0]) if s is None else s, sigma, seed)
        F = nm.embed(D)
        return F @ F.mean(axis=0)
    raise ParameterError(f"mode must be 'exact' or 'nystrom', got {mode!r}")


def gdk_point_scores(
    D: Any,
    sigma: float,
    mode: Literal["exact", "nystrom"] = "exact",
    s: int | None = None,
    seed: int = 0,
) -> list[ScoredItem]:
    return rank(gdk_point_similarities(D, sigma, mode, s, seed))


def kde_curve(D: Any, sigma: float, X: Any) -> np.ndarray:
    """Unnormalised Gaussian KDE ``mean_y k(x, y)`` at each query row."""
    D = as_dataset(D)
    X = as_dataset(X, "X")
    return _row_means(X, D, sigma)


def kde_density(D: Any, sigma: float, x: Any) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    return float(kde_curve(D, sigma, x[None, :])[0])
