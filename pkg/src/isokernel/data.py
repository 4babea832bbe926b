"""CSV loading, min-max normalisation and synthetic data generators.

The generators reconstruct the constructed datasets used to exercise the
detectors. Their exact parameters were never published, so the values
below are documented reconstructions rather than ground truth.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Literal, Sequence

import numpy as np
from scipy.stats import chi2

from isokernel.errors import InputError, ParameterError
from isokernel.groups import Group


@dataclass(frozen=True)
class LabeledDataset:
    """Points with optional per-point anomaly labels and group ids.

    ``labels`` is boolean with True meaning anomaly.
    """

    points: np.ndarray
    labels: np.ndarray | None = None
    groups: np.ndarray | None = None

    def __post_init__(self) -> None:
        n = self.points.shape[0]
        for name in ("labels", "groups"):
            arr = getattr(self, name)
            if arr is not None and arr.shape[0] != n:
                raise InputError(f"{name} has {arr.shape[0]} entries for {n} points")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LabeledDataset):
            return NotImplemented
        return all(
            (a is None and b is None) or (a is not None and b is not None and np.array_equal(a, b))
            for a, b in (
                (self.points, other.points),
                (self.labels, other.labels),
                (self.groups, other.groups),
            )
        )

    @property
    def n(self) -> int:
        return int(self.points.shape[0])

    def to_groups(self) -> tuple[list[Group], np.ndarray | None]:
        """Split into groups (ordered by id); a group is anomalous if any point is."""
        if self.groups is None:
            raise InputError("dataset has no group column")
        ids = np.unique(self.groups)
        groups = [Group(int(g), self.points[self.groups == g]) for g in ids]
        labels = None
        if self.labels is not None:
            labels = np.array([bool(self.labels[self.groups == g].any()) for g in ids])
        return groups, labels


def _resolve_column(col: int | str | None, header: list[str] | None, width: int, flag: str) -> int | None:
    if col is None:
        return None
    if isinstance(col, str) and not col.lstrip("-").isdigit():
        if header is None:
            raise InputError(f"{flag}={col!r} names a column but the file has no header")
        if col not in header:
            raise InputError(f"{flag}={col!r} not found in header {header}")
        return header.index(col)
    idx = int(col)
    if idx < 0:
        idx += width
    if not 0 <= idx < width:
        raise InputError(f"{flag}={col} is out of range for {width} columns")
    return idx


def load_csv(
    path: str | Path,
    label_column: int | str | None = None,
    group_column: int | str | None = None,
    header: bool = False,
) -> LabeledDataset:
    """Read a numeric CSV. Labels must be 0 (normal) or 1 (anomaly); groups non-negative ints.

    Raises:
        InputError: missing file, ragged rows or non-numeric cells, with the
            offending 1-based line number.
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [(i, r) for i, r in enumerate(csv.reader(fh), start=1) if r and any(c.strip() for c in r)]
    names = None
    if header:
        if not rows:
            raise InputError(f"{path}: empty file")
        names = [c.strip() for c in rows[0][1]]
        rows = rows[1:]
    if not rows:
        raise InputError(f"{path}: no data rows")
    width = len(rows[0][1])
    li = _resolve_column(label_column, names, width, "label_column")
    gi = _resolve_column(group_column, names, width, "group_column")
    if li is not None and li == gi:
        raise InputError("label and group columns must differ")
    feat_cols = [c for c in range(width) if c not in (li, gi)]
    if not feat_cols:
        raise InputError(f"{path}: no feature columns left")

    X = np.empty((len(rows), len(feat_cols)))
    labels = np.empty(len(rows), dtype=bool) if li is not None else None
    groups = np.empty(len(rows), dtype=np.int64) if gi is not None else None
    for k, (lineno, row) in enumerate(rows):
        if len(row) != width:
            raise InputError(f"{path}:{lineno}: expected {width} columns, found {len(row)}")
        try:
            X[k] = [float(row[c]) for c in feat_cols]
        except ValueError as exc:
            raise InputError(f"{path}:{lineno}: non-numeric feature ({exc})") from None
        if labels is not None:
            cell = row[li].strip()
            if cell not in ("0", "1", "0.0", "1.0"):
                raise InputError(f"{path}:{lineno}: label must be 0 or 1, got {cell!r}")
            labels[k] = float(cell) == 1.0
        if groups is not None:
            cell = row[gi].strip()
            try:
                gid = int(float(cell))
            except ValueError:
                raise InputError(f"{path}:{lineno}: group id must be an integer, got {cell!r}") from None
            if gid < 0 or float(cell) != gid:
                raise InputError(f"{path}:{lineno}: group id must be a non-negative integer, got {cell!r}")
            groups[k] = gid
    if not np.all(np.isfinite(X)):
        raise InputError(f"{path}: features contain NaN or Inf")
    return LabeledDataset(X, labels, groups)


def save_csv(ds: LabeledDataset, path: str | Path, header: bool = True) -> None:
    """Write group id (if any), features, then label (if any).

    Floats are written with ``repr`` so a reload is bit-identical.
    """
    d = ds.points.shape[1]
    cols = (["group"] if ds.groups is not None else []) + [f"x{j}" for j in range(d)]
    cols += ["label"] if ds.labels is not None else []
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow(cols)
        for k in range(ds.n):
            row = [str(int(ds.groups[k]))] if ds.groups is not None else []
            row += [repr(float(v)) for v in ds.points[k]]
            row += [str(int(ds.labels[k]))] if ds.labels is not None else []
            w.writerow(row)


def csv_layout(ds: LabeledDataset) -> dict[str, int | None]:
    """Column indices :func:`save_csv` uses, for reloading with :func:`load_csv`."""
    g = 0 if ds.groups is not None else None
    lab = (1 if g is not None else 0) + ds.points.shape[1] if ds.labels is not None else None
    return {"group_column": g, "label_column": lab}


def normalize_unit_interval(ds: LabeledDataset) -> LabeledDataset:
    """Per-attribute min-max scaling to [0, 1]; constant attributes become 0."""
    X = np.asarray(ds.points, dtype=np.float64)
    if X.size == 0:
        raise InputError("cannot normalise an empty dataset")
    if not np.all(np.isfinite(X)):
        raise InputError("dataset contains NaN or Inf")
    lo = X.min(axis=0)
    span = X.max(axis=0) - lo
    safe = np.where(span > 0, span, 1.0)
    Z = np.where(span > 0, (X - lo) / safe, 0.0)
    return replace(ds, points=np.clip(Z, 0.0, 1.0))


# Three 1-d normal clusters (mean, std, count) plus a small anomaly cluster.
# Peak heights go as count/std: 18 > 8 > -2. Putting most mass on the right
# keeps the anomaly cluster (just past 18 + 5 std) from being the most
# remote mass at wide bandwidths, so Gaussian scoring cannot isolate it.
THREE_GAUSSIANS = ((-2.0, 1.5, 300), (8.0, 1.0, 500), (18.0, 0.6, 700))
ANOMALY_CLUSTER = (21.2, 0.5)


def gen_three_gaussians_1d(seed: int = 0, n_anomalies: int = 20) -> LabeledDataset:
    """1500 normal points in three 1-d Gaussians and a 20-point anomaly cluster to the right.

    Points are in generator units (not normalised); labels mark the cluster.
    """
    if n_anomalies < 0:
        raise ParameterError(f"n_anomalies must be >= 0, got {n_anomalies}")
    rng = np.random.default_rng(seed)
    parts = [rng.normal(mu, sd, size=k) for mu, sd, k in THREE_GAUSSIANS]
    mu_a, sd_a = ANOMALY_CLUSTER
    parts.append(rng.normal(mu_a, sd_a, size=n_anomalies))
    n_normal = sum(k for _, _, k in THREE_GAUSSIANS)
    labels = np.r_[np.zeros(n_normal, dtype=bool), np.ones(n_anomalies, dtype=bool)]
    return LabeledDataset(np.concatenate(parts)[:, None], labels)


MAX_ANOMALY_FRACTION = 0.05

GroupVariant = Literal["single", "mixture", "two-density"]


def _ellipse_radius(d: int) -> float:
    """Radius of the 99.9% probability ball of a standard normal in d dims."""
    return math.sqrt(chi2.ppf(0.999, d))


def _shell(rng: np.random.Generator, k: int, d: int, r_lo: float, r_hi: float) -> np.ndarray:
    u = rng.normal(size=(k, d))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    return u * rng.uniform(r_lo, r_hi, size=(k, 1))


def gen_gaussian_groups(
    n_normal: int,
    n_anom: int,
    m: int,
    d: int = 2,
    seed: int = 0,
    variant: GroupVariant = "single",
) -> tuple[list[Group], np.ndarray]:
    """Groups of ``m`` points, each drawn from an isotropic Gaussian around a group mean.

    Group means are drawn as follows (unit within-group std throughout):

    * ``single``: normal means ~ N(0, I); anomalous means on a shell of
      radius 1.15-1.5 times the 99.9% radius, so outside the normal-mean
      ellipse but still overlapping the normal point cloud.
    * ``mixture``: normal means from an equal mixture of N(+-(R + 1.5) e1, I)
      where R is the 99.9% radius; anomalous means within 1 of the origin,
      between the components and outside both of their 99.9% ellipses.
    * ``two-density``: half the normal means ~ N(-5 e1, 0.25 I) (dense),
      half ~ N(+5 e1, 4 I) (sparse); anomalies on shells just outside each.

    Returns the groups (ids 0..n-1, normals first) and a boolean anomaly label per group.
    """
    for name, v in (("n_normal", n_normal), ("m", m), ("d", d)):
        if int(v) != v or v < 1:
            raise ParameterError(f"{name} must be a positive integer, got {v}")
    if int(n_anom) != n_anom or n_anom < 0:
        raise ParameterError(f"n_anom must be a non-negative integer, got {n_anom}")
    if n_anom > MAX_ANOMALY_FRACTION * n_normal:
        raise ParameterError(
            f"anomalous groups must be rare: n_anom/n_normal = {n_anom / n_normal:.3f} "
            f"> {MAX_ANOMALY_FRACTION}"
        )
    rng = np.random.default_rng(seed)
    R = _ellipse_radius(d)
    e1 = np.zeros(d)
    e1[0] = 1.0

    if variant == "single":
        normal_means = rng.normal(size=(n_normal, d))
        anom_means = _shell(rng, n_anom, d, 1.15 * R, 1.5 * R)
    elif variant == "mixture":
        side = np.where(rng.random(n_normal) < 0.5, -1.0, 1.0)
        normal_means = rng.normal(size=(n_normal, d)) + (R + 1.5) * side[:, None] * e1
        # within 1 of the origin means at least R + 0.5 from both component centres
        anom_means = _shell(rng, n_anom, d, 0.0, 1.0)
    elif variant == "two-density":
        half = n_normal // 2
        dense = rng.normal(scale=0.5, size=(half, d)) - 5.0 * e1
        sparse = rng.normal(scale=2.0, size=(n_normal - half, d)) + 5.0 * e1
        normal_means = np.vstack([dense, sparse])
        k_dense = n_anom // 2
        anom_means = np.vstack(
            [
                _shell(rng, k_dense, d, 1.15 * 0.5 * R, 1.5 * 0.5 * R) - 5.0 * e1,
                _shell(rng, n_anom - k_dense, d, 1.15 * 2.0 * R, 1.5 * 2.0 * R) + 5.0 * e1,
            ]
        )
    else:
        raise ParameterError(f"unknown variant {variant!r}")

    means = np.vstack([normal_means, anom_means])
    groups = [Group(j, mu + rng.normal(size=(m, d))) for j, mu in enumerate(means)]
    labels = np.r_[np.zeros(n_normal, dtype=bool), np.ones(n_anom, dtype=bool)]
    return groups, labels


def group_means(groups: Sequence[Group]) -> np.ndarray:
    return np.stack([g.points.mean(axis=0) for g in groups])


# Group-mean density peaks for the 1-d group experiment: (centre, std, weight).
THREE_PEAKS = ((18.0, 1.0, 0.5), (8.0, 1.5, 0.3), (-2.0, 2.0, 0.2))
PEAK_RANGE = (-15.0, 25.0)


def gen_three_peak_groups_1d(n_groups: int = 1500, m: int = 100, seed: int = 0) -> list[Group]:
    """1-d groups whose means cluster into three density peaks (highest at 18, then 8, then -2).

    Group means are drawn from the weighted peak mixture and clipped to
    [-15, 25]; each group is ``m`` points from N(mean, 1). No labels: the
    hard and easy group anomalies are the low-density means by construction.
    """
    if n_groups < 2 or m < 1:
        raise ParameterError(f"need n_groups >= 2 and m >= 1, got {n_groups}, {m}")
    rng = np.random.default_rng(seed)
    centres = np.array([c for c, _, _ in THREE_PEAKS])
    stds = np.array([s for _, s, _ in THREE_PEAKS])
    weights = np.array([w for _, _, w in THREE_PEAKS])
    comp = rng.choice(len(THREE_PEAKS), size=n_groups, p=weights)
    means = np.clip(rng.normal(centres[comp], stds[comp]), *PEAK_RANGE)
    return [Group(j, (mu + rng.normal(size=m))[:, None]) for j, mu in enumerate(means)]


def groups_to_dataset(groups: Sequence[Group], labels: np.ndarray | None = None) -> LabeledDataset:
    pts = np.vstack([g.points for g in groups])
    gid = np.concatenate([np.full(g.points.shape[0], g.id, dtype=np.int64) for g in groups])
    lab = None
    if labels is not None:
        lab = np.concatenate([np.full(g.points.shape[0], bool(l)) for g, l in zip(groups, labels)])
    return LabeledDataset(pts, lab, gid)
