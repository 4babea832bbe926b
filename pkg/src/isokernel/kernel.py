"""Isolation Kernel built from nearest-neighbour hyperspheres.

Each of ``t`` partitionings samples ``psi`` points from the data without
replacement. Every sampled point becomes the centre of a hypersphere whose
radius is the distance to its nearest other sampled point. A query falls
into the containing sphere with the closest centre (lowest index on exact
ties) or into none of them.

The feature map is stored compactly as one slot index per partitioning,
with ``NONE`` (-1) for "outside every sphere". The dense binary image
``Phi(x)`` in ``{0,1}^(t*psi)`` is available through :func:`to_dense`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from isokernel._parallel import pmap
from isokernel.errors import InputError, ParameterError

NONE = -1
DEFAULT_PSI = 16
DEFAULT_T = 100
PSI_GRID = tuple(2**m for m in range(1, 13))
MODEL_FORMAT = "isokernel.model"
MODEL_VERSION = 1

# elements per temporary difference block in pairwise_distances
_CHUNK_ELEMENTS = 1 << 22


def as_dataset(D: Any, name: str = "D") -> np.ndarray:
    """Coerce to a finite float64 array of shape (n, d).

    A 1-D input is read as n points in one dimension.
    """
    arr = np.asarray(D, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise InputError(f"{name} must be 2-D (n, d), got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise InputError(f"{name} is empty")
    if arr.shape[1] == 0:
        raise InputError(f"{name} has zero dimensions")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains NaN or Inf")
    return arr


def as_point(x: Any, d: int, name: str = "x") -> np.ndarray:
    arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if arr.ndim != 1:
        raise InputError(f"{name} must be a single point, got shape {arr.shape}")
    if arr.shape[0] != d:
        raise InputError(f"{name} has dimension {arr.shape[0]}, model expects {d}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains NaN or Inf")
    return arr


def pairwise_distances(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Euclidean distances between rows of X (n, d) and C (k, d).

    Computed from explicit coordinate differences rather than the
    ``|x|^2 + |c|^2 - 2x.c`` expansion, so that a query equal to a centre
    gets distance exactly 0 and the value for a given pair does not depend
    on which other rows are in the batch. Fitting and embedding both go
    through here, which keeps boundary decisions consistent.
    """
    n, d = X.shape
    k = C.shape[0]
    out = np.empty((n, k), dtype=np.float64)
    step = max(1, _CHUNK_ELEMENTS // max(1, k * d))
    for lo in range(0, n, step):
        diff = X[lo : lo + step, None, :] - C[None, :, :]
        np.square(diff, out=diff)
        out[lo : lo + step] = np.sqrt(diff.sum(axis=-1))
    return out


@dataclass(frozen=True, eq=False)
class IsolationModel:
    """A fitted Isolation Kernel: ``t`` partitionings of ``psi`` hyperspheres.

    Attributes:
        centers: (t, psi, d) sphere centres.
        radii: (t, psi) sphere radii.
        sample_indices: (t, psi) row indices into the training data that
            produced each centre, kept for audit and reproduction.
    """

    centers: np.ndarray
    radii: np.ndarray
    sample_indices: np.ndarray
    psi: int
    t: int
    seed: int
    threads: int | None = field(default=None, compare=False)

    @property
    def d(self) -> int:
        return int(self.centers.shape[2])

    @property
    def dim(self) -> int:
        """Length of the dense feature vector, ``t * psi``."""
        return self.t * self.psi

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IsolationModel):
            return NotImplemented
        return (
            self.psi == other.psi
            and self.t == other.t
            and self.seed == other.seed
            and np.array_equal(self.centers, other.centers)
            and np.array_equal(self.radii, other.radii)
            and np.array_equal(self.sample_indices, other.sample_indices)
        )

    def embed(self, X: Any) -> np.ndarray:
        """Slot index per (point, partitioning); ``NONE`` where uncovered."""
        X = as_dataset(X, "X")
        if X.shape[1] != self.d:
            raise InputError(f"X has dimension {X.shape[1]}, model expects {self.d}")
        cols = pmap(lambda i: _assign(X, self.centers[i], self.radii[i]), range(self.t), self.threads)
        return np.stack(cols, axis=1)

    def to_dict(self) -> dict[str, Any]:
        # json's float repr round-trips float64 exactly
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "d": self.d,
            "psi": self.psi,
            "t": self.t,
            "seed": self.seed,
            "centers": self.centers.tolist(),
            "radii": self.radii.tolist(),
            "sample_indices": self.sample_indices.tolist(),
        }

    @classmethod
    def from_dict(cls, record: dict[str, Any]) -> IsolationModel:
        if record.get("format") != MODEL_FORMAT:
            raise InputError(f"not an isokernel model record: format={record.get('format')!r}")
        if record.get("version") != MODEL_VERSION:
            raise InputError(f"unsupported model version {record.get('version')!r}")
        t, psi, d = int(record["t"]), int(record["psi"]), int(record["d"])
        centers = np.asarray(record["centers"], dtype=np.float64).reshape(t, psi, d)
        radii = np.asarray(record["radii"], dtype=np.float64).reshape(t, psi)
        idx = np.asarray(record["sample_indices"], dtype=np.int64).reshape(t, psi)
        return cls(centers, radii, idx, psi=psi, t=t, seed=int(record["seed"]))


def _assign(X: np.ndarray, centers: np.ndarray, radii: np.ndarray) -> np.ndarray:
    dist = pairwise_distances(X, centers)
    inside = dist <= radii[None, :]
    dist[~inside] = np.inf
    slots = np.argmin(dist, axis=1)  # first minimum = lowest index on ties
    slots[~inside.any(axis=1)] = NONE
    return slots.astype(np.int32)


def _check_psi_t(psi: int, t: int) -> None:
    if int(psi) != psi or psi < 2:
        raise ParameterError(f"psi must be an integer >= 2, got {psi}")
    if int(t) != t or t < 1:
        raise ParameterError(f"t must be an integer >= 1, got {t}")


def fit_isolation_model(
    D: Any,
    psi: int = DEFAULT_PSI,
    t: int = DEFAULT_T,
    seed: int = 0,
    threads: int | None = None,
) -> IsolationModel:
    """Fit ``t`` hypersphere partitionings on ``D``.

    Partitioning ``i`` draws its ``psi`` centres without replacement from a
    generator seeded by ``(seed, i)``, so partitionings are independent of
    each other and of the thread count.

    Raises:
        InputError: ``D`` is empty or non-finite.
        ParameterError: ``psi`` outside ``[2, |D|]``, ``t < 1`` or negative seed.
    """
    D = as_dataset(D)
    _check_psi_t(psi, t)
    psi, t = int(psi), int(t)
    if psi > D.shape[0]:
        raise ParameterError(f"psi={psi} exceeds the number of points ({D.shape[0]})")
    if seed < 0:
        raise ParameterError(f"seed must be non-negative, got {seed}")

    def one(i: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        rng = np.random.default_rng([seed, i])
        idx = rng.choice(D.shape[0], size=psi, replace=False)
        C = D[idx]
        dist = pairwise_distances(C, C)
        np.fill_diagonal(dist, np.inf)
        return C, dist.min(axis=1), idx

    parts = pmap(one, range(t), threads)
    return IsolationModel(
        centers=np.stack([p[0] for p in parts]),
        radii=np.stack([p[1] for p in parts]),
        sample_indices=np.stack([p[2] for p in parts]).astype(np.int64),
        psi=psi,
        t=t,
        seed=int(seed),
        threads=threads,
    )


def embed_point(model: IsolationModel, x: Any) -> np.ndarray:
    """Feature vector of one point: ``t`` slot indices, ``NONE`` if uncovered."""
    x = as_point(x, model.d)
    return model.embed(x[None, :])[0]


def to_dense(model: IsolationModel, slots: np.ndarray) -> np.ndarray:
    """Expand slot indices (n, t) or (t,) into the binary ``{0,1}^(t*psi)`` image."""
    slots = np.asarray(slots)
    single = slots.ndim == 1
    S = np.atleast_2d(slots)
    out = np.zeros((S.shape[0], model.t, model.psi), dtype=np.float64)
    rows, parts = np.nonzero(S != NONE)
    out[rows, parts, S[rows, parts]] = 1.0
    out = out.reshape(S.shape[0], model.dim)
    return out[0] if single else out


def ik_similarity(model: IsolationModel, x: Any, y: Any) -> float:
    """Isolation Kernel value via the exact feature map: ``<Phi(x), Phi(y)> / t``."""
    fx = embed_point(model, x)
    fy = embed_point(model, y)
    return int(np.count_nonzero((fx == fy) & (fx != NONE))) / model.t


def ik_gram(model: IsolationModel, X: Any, Y: Any | None = None) -> np.ndarray:
    """Kernel matrix between two point sets."""
    FX = model.embed(X)
    FY = FX if Y is None else model.embed(Y)
    same = (FX[:, None, :] == FY[None, :, :]) & (FX[:, None, :] != NONE)
    return same.sum(axis=-1) / model.t


def ik_bruteforce(model: IsolationModel, x: Any, y: Any) -> float:
    """Isolation Kernel by direct indicator counting over every sphere.

    No feature vectors are built: for each partitioning and each sphere we
    decide membership of x and y from scratch (contained, and no other
    containing sphere has a closer centre or an equally close lower index)
    and add the product of the two indicators. Plain Python floats and
    tuple comparison are used for the decisions.
    """
    x = as_point(x, model.d, "x")
    y = as_point(y, model.d, "y")
    flat = model.centers.reshape(model.t * model.psi, model.d)
    dx = pairwise_distances(x[None, :], flat)[0].reshape(model.t, model.psi).tolist()
    dy = pairwise_distances(y[None, :], flat)[0].reshape(model.t, model.psi).tolist()
    total = 0
    for i, radii in enumerate(model.radii.tolist()):
        in_x = _memberships(dx[i], radii)
        in_y = _memberships(dy[i], radii)
        total += sum(a * b for a, b in zip(in_x, in_y))
    return total / model.t


def _memberships(dist: list[float], radii: list[float]) -> list[int]:
    """Indicator of ``x in theta_j`` for every sphere j of one partitioning."""
    containing = [(d, j) for j, (d, r) in enumerate(zip(dist, radii)) if d <= r]
    out = [0] * len(dist)
    if containing:
        # closest containing centre, lower index on equal distance
        out[min(containing)[1]] = 1
    return out


def feature_norm(model: IsolationModel, x: Any) -> float:
    """``||Phi(x)|| / sqrt(t)`` in [0, 1]; higher means more normal."""
    slots = embed_point(model, x)
    return float(np.sqrt(np.count_nonzero(slots != NONE) / model.t))


def feature_norms(model: IsolationModel, X: Any) -> np.ndarray:
    """Batch version of :func:`feature_norm`."""
    slots = model.embed(X)
    return np.sqrt(np.count_nonzero(slots != NONE, axis=1) / model.t)


def save_model(model: IsolationModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model.to_dict()), encoding="utf-8")


def load_model(path: str | Path) -> IsolationModel:
    return IsolationModel.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
