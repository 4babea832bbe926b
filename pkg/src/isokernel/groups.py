"""Group anomaly detection by treating each group's mean map as a point.

IDK² maps every group to its level-1 IDK mean map, then runs the IDK point
detector on that set of mean maps with a second Isolation Kernel fitted on
them. IDK-GDK and GDK² swap the second (or both) levels for Gaussian-kernel
versions and exist for comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from isokernel.baselines import default_landmarks, gaussian_gram, nystrom_fit
from isokernel.distributional import (
    ScoredItem,
    mean_map_from_slots,
    rank,
    similarities_to,
)
from isokernel.errors import InputError, ParameterError
from isokernel.kernel import DEFAULT_PSI, DEFAULT_T, IsolationModel, as_dataset, fit_isolation_model


@dataclass(frozen=True)
class Group:
    id: int
    points: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", as_dataset(self.points, f"group {self.id}"))


@dataclass(frozen=True)
class Idk2Result:
    """Everything IDK² computed, in input group order."""

    ids: np.ndarray
    alphas: np.ndarray
    level1: IsolationModel
    level2: IsolationModel
    mean_maps: np.ndarray  # (n, t*psi), the level-1 images of the groups

    def ranked(self) -> list[ScoredItem]:
        return _rank_with_ids(self.alphas, self.ids)


def as_groups(M: Sequence[Any]) -> list[Group]:
    groups = [g if isinstance(g, Group) else Group(i, g) for i, g in enumerate(M)]
    if not groups:
        raise InputError("no groups given")
    d = groups[0].points.shape[1]
    for g in groups:
        if g.points.shape[1] != d:
            raise InputError(f"group {g.id} has dimension {g.points.shape[1]}, expected {d}")
    return groups


def default_psi2(psi: int, n: int) -> int:
    """``min(psi, n/2)`` rounded down to a power of two, at least 2."""
    cap = max(2, min(psi, n // 2))
    return max(2, 1 << int(math.floor(math.log2(cap))))


def _canonical_fit(X: np.ndarray, psi: int, t: int, seed: int, threads: int | None) -> IsolationModel:
    # lexicographic row order makes the fit depend only on the multiset of rows,
    # so reordering the groups reorders the output and nothing else
    order = np.lexsort(X.T[::-1])
    return fit_isolation_model(X[order], psi=psi, t=t, seed=seed, threads=threads)


def _rank_with_ids(scores: np.ndarray, ids: np.ndarray) -> list[ScoredItem]:
    return [ScoredItem(int(ids[item.id]), item.similarity) for item in rank(scores)]


def level1_mean_maps(
    groups: Sequence[Group], psi: int, t: int, seed: int, threads: int | None = None
) -> tuple[IsolationModel, np.ndarray]:
    """Fit the level-1 kernel on all pooled points and map each group to its mean map."""
    pooled = np.vstack([g.points for g in groups])
    if psi > pooled.shape[0]:
        raise ParameterError(f"psi={psi} exceeds the pooled point count ({pooled.shape[0]})")
    model = _canonical_fit(pooled, psi, t, seed, threads)
    slots = model.embed(pooled)
    bounds = np.cumsum([0] + [g.points.shape[0] for g in groups])
    maps = np.stack(
        [mean_map_from_slots(slots[lo:hi], t, psi).values for lo, hi in zip(bounds[:-1], bounds[1:])]
    )
    return model, maps


def idk2(
    M: Sequence[Any],
    psi: int = DEFAULT_PSI,
    psi2: int | None = None,
    t: int = DEFAULT_T,
    seed: int = 0,
    threads: int | None = None,
) -> Idk2Result:
    groups = as_groups(M)
    n = len(groups)
    if n < 2:
        raise InputError(f"need at least 2 groups, got {n}")
    psi2 = default_psi2(psi, n) if psi2 is None else psi2
    if psi2 > n:
        raise ParameterError(f"psi2={psi2} exceeds the number of groups ({n})")
    level1, maps = level1_mean_maps(groups, psi, t, seed, threads)
    level2 = _canonical_fit(maps, psi2, t, seed, threads)
    slots2 = level2.embed(maps)
    alphas = similarities_to(slots2, mean_map_from_slots(slots2, t, psi2))
    return Idk2Result(
        ids=np.array([g.id for g in groups]),
        alphas=alphas,
        level1=level1,
        level2=level2,
        mean_maps=maps,
    )


def idk2_scores(
    M: Sequence[Any],
    psi: int = DEFAULT_PSI,
    psi2: int | None = None,
    t: int = DEFAULT_T,
    seed: int = 0,
    threads: int | None = None,
) -> list[ScoredItem]:
    """IDK² group anomaly scores, most anomalous (lowest alpha) first."""
    return idk2(M, psi, psi2, t, seed, threads).ranked()


def idk_gdk_similarities(
    M: Sequence[Any],
    psi: int = DEFAULT_PSI,
    t: int = DEFAULT_T,
    sigma2: float = 1.0,
    seed: int = 0,
    threads: int | None = None,
) -> np.ndarray:
    """Level-1 IDK mean maps, then exact Gaussian GDK of each one against all of them."""
    groups = as_groups(M)
    if len(groups) < 2:
        raise InputError(f"need at least 2 groups, got {len(groups)}")
    _, maps = level1_mean_maps(groups, psi, t, seed, threads)
    return gaussian_gram(maps, maps, sigma2).mean(axis=1)


def idk_gdk_scores(
    M: Sequence[Any],
    psi: int = DEFAULT_PSI,
    t: int = DEFAULT_T,
    sigma2: float = 1.0,
    seed: int = 0,
    threads: int | None = None,
) -> list[ScoredItem]:
    groups = as_groups(M)
    alphas = idk_gdk_similarities(groups, psi, t, sigma2, seed, threads)
    return _rank_with_ids(alphas, np.array([g.id for g in groups]))


def gdk2_level1_maps(groups: Sequence[Group], s: int, sigma1: float, seed: int = 0) -> np.ndarray:
    """Nystrom mean embedding of each group, fitted on the pooled points."""
    pooled = np.vstack([g.points for g in groups])
    feats = nystrom_fit(pooled, s, sigma1, seed).embed(pooled)
    bounds = np.cumsum([0] + [g.points.shape[0] for g in groups])
    return np.stack([feats[lo:hi].mean(axis=0) for lo, hi in zip(bounds[:-1], bounds[1:])])


def gdk2_from_maps(maps: np.ndarray, s2: int, sigma2: float, seed: int = 0) -> np.ndarray:
    """Level-2 Nystrom GDK of each level-1 map against all of them."""
    F2 = nystrom_fit(maps, s2, sigma2, seed + 1).embed(maps)
    return F2 @ F2.mean(axis=0)


def gdk2_similarities(
    M: Sequence[Any],
    s: int | None = None,
    sigma1: float = 1.0,
    sigma2: float = 1.0,
    seed: int = 0,
    s2: int | None = None,
) -> np.ndarray:
    """Two levels of Nystrom-approximated Gaussian mean maps.

    ``s`` landmarks at level 1 default to ``ceil(sqrt(#points))`` capped at
    the group count; level 2 uses ``s2`` (default: same as ``s``) and seed
    ``seed + 1``.
    """
    groups = as_groups(M)
    n = len(groups)
    if n < 2:
        raise InputError(f"need at least 2 groups, got {n}")
    total = sum(g.points.shape[0] for g in groups)
    s, s2 = gdk2_landmarks(total, n, s, s2)
    return gdk2_from_maps(gdk2_level1_maps(groups, s, sigma1, seed), s2, sigma2, seed)


def gdk2_landmarks(total: int, n: int, s: int | None = None, s2: int | None = None) -> tuple[int, int]:
    """Resolve level-1 and level-2 landmark counts for ``total`` points in ``n`` groups."""
    if s is None:
        s = min(default_landmarks(total), n)
    s2 = s if s2 is None else s2
    if s > total or s2 > n:
        raise ParameterError(f"landmark counts s={s}, s2={s2} exceed the data ({total} points, {n} groups)")
    return s, s2


def gdk2_scores(
    M: Sequence[Any],
    s: int | None = None,
    sigma1: float = 1.0,
    sigma2: float = 1.0,
    seed: int = 0,
    s2: int | None = None,
) -> list[ScoredItem]:
    groups = as_groups(M)
    alphas = gdk2_similarities(groups, s, sigma1, sigma2, seed, s2)
    return _rank_with_ids(alphas, np.array([g.id for g in groups]))


def pairwise_gdk_matrix(M: Sequence[Any], sigma: float) -> np.ndarray:
    """Exact GDK between every pair of groups, O(n^2 m^2) kernel evaluations.

    Used as the quadratic reference in the scaleup benchmark.
    """
    groups = as_groups(M)
    pooled = np.vstack([g.points for g in groups])
    sizes = np.array([g.points.shape[0] for g in groups])
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    n = len(groups)
    sums = np.empty((n, n))
    per_block = max(1, 2048 // int(sizes.max()))
    for g0 in range(0, n, per_block):
        g1 = min(n, g0 + per_block)
        lo, hi = starts[g0], starts[g1 - 1] + sizes[g1 - 1]
        K = gaussian_gram(pooled[lo:hi], pooled, sigma)
        by_col = np.add.reduceat(K, starts, axis=1)
        sums[g0:g1] = np.add.reduceat(by_col, starts[g0:g1] - lo, axis=0)
    return sums / np.outer(sizes, sizes)
