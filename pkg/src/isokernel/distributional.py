"""Kernel mean maps in the Isolation Kernel feature space and the IDK point detector."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from isokernel.errors import InputError, ParameterError
from isokernel.kernel import NONE, IsolationModel


@dataclass(frozen=True)
class MeanMap:
    """Empirical kernel mean map: the average of ``Phi(x)`` over a sample.

    ``values`` is dense with length ``t * psi``; block ``i`` (entries
    ``i*psi .. (i+1)*psi``) holds the fraction of the sample that fell into
    each sphere of partitioning ``i``.
    """

    values: np.ndarray
    t: int
    psi: int

    @property
    def blocks(self) -> np.ndarray:
        return self.values.reshape(self.t, self.psi)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


@dataclass(frozen=True)
class ScoredItem:
    """One ranked result. ``similarity`` is high for normal items."""

    id: int
    similarity: float


def mean_map_from_slots(slots: np.ndarray, t: int, psi: int) -> MeanMap:
    """Mean map from precomputed slot indices of shape (n, t)."""
    slots = np.asarray(slots)
    n = slots.shape[0]
    if n == 0:
        raise InputError("cannot build a mean map from an empty set")
    # flat index i*psi + slot for covered entries; bincount sums are exact integers
    parts = np.broadcast_to(np.arange(t) * psi, slots.shape)
    covered = slots != NONE
    counts = np.bincount((parts + slots)[covered], minlength=t * psi)
    return MeanMap(counts / n, t=t, psi=psi)


def mean_map(model: IsolationModel, S: Any) -> MeanMap:
    """Average feature vector of ``S`` under ``model``."""
    S = np.asarray(S, dtype=np.float64)
    if S.size == 0:
        raise InputError("S is empty")
    return mean_map_from_slots(model.embed(S), model.t, model.psi)


def point_map(model: IsolationModel, x: Any) -> MeanMap:
    """Mean map of the Dirac measure at ``x``, i.e. ``Phi(x)`` as a MeanMap."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    return mean_map(model, x[None, :])


def idk(mapS: MeanMap, mapT: MeanMap) -> float:
    """Isolation Distributional Kernel ``<mapS, mapT> / t``, in [0, 1]."""
    if (mapS.t, mapS.psi) != (mapT.t, mapT.psi):
        raise ParameterError(
            f"mean maps come from different models: (t={mapS.t}, psi={mapS.psi}) "
            f"vs (t={mapT.t}, psi={mapT.psi})"
        )
    return float(np.dot(mapS.values, mapT.values)) / mapS.t


def similarities_to(slots: np.ndarray, reference: MeanMap) -> np.ndarray:
    """``idk(Phi(x), reference)`` for every row of a slot matrix.

    Dotting a one-hot-per-block vector with the reference reduces to a
    lookup of the reference entry at each covered slot.
    """
    blocks = reference.blocks
    covered = slots != NONE
    rows = np.broadcast_to(np.arange(reference.t), slots.shape)
    picked = np.where(covered, blocks[rows, np.where(covered, slots, 0)], 0.0)
    return picked.sum(axis=1) / reference.t


def rank(scores: np.ndarray) -> list[ScoredItem]:
    """Ascending by similarity; ties keep the original index order."""
    scores = np.asarray(scores, dtype=np.float64)
    order = np.argsort(scores, kind="stable")
    return [ScoredItem(int(i), float(scores[i])) for i in order]


def idk_point_similarities(model: IsolationModel, D: Any) -> np.ndarray:
    """Similarity of each point's Dirac measure to the whole dataset, in input order."""
    D = np.asarray(D, dtype=np.float64)
    if D.ndim == 1:
        D = D[:, None]
    if D.shape[0] < 2:
        raise InputError(f"need at least 2 points to score, got {D.shape[0]}")
    slots = model.embed(D)
    reference = mean_map_from_slots(slots, model.t, model.psi)
    return similarities_to(slots, reference)


def idk_point_scores(model: IsolationModel, D: Any) -> list[ScoredItem]:
    """IDK point anomaly detector: least similar to the dataset's mean map first."""
    return rank(idk_point_similarities(model, D))
