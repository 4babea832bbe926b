"""AUC and the experiment harnesses: stability, contamination and scaleup.

Every harness returns an :class:`ExperimentReport`, which holds one row of
metrics per run plus an aggregate that can be recomputed from those rows.
Reports serialise to JSON and to flat CSV rows for external plotting.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Literal, Sequence

import numpy as np
from scipy.stats import rankdata

from isokernel._parallel import pmap
from isokernel.distributional import idk_point_similarities, mean_map_from_slots, similarities_to
from isokernel.errors import InputError, ParameterError
from isokernel.groups import gdk2_similarities, idk2, pairwise_gdk_matrix
from isokernel.kernel import DEFAULT_PSI, DEFAULT_T, as_dataset, feature_norms, fit_isolation_model

REPORT_FORMAT = "isokernel.report"


@dataclass(frozen=True)
class LabeledScores:
    """Similarities with a parallel anomaly flag (True = anomaly)."""

    similarity: np.ndarray
    anomaly: np.ndarray

    def __post_init__(self) -> None:
        s = np.asarray(self.similarity, dtype=np.float64).ravel()
        a = np.asarray(self.anomaly, dtype=bool).ravel()
        if s.shape != a.shape:
            raise InputError(f"{s.size} scores but {a.size} labels")
        object.__setattr__(self, "similarity", s)
        object.__setattr__(self, "anomaly", a)


def auc(ls: LabeledScores | Any, anomaly: Any = None) -> float:
    """Probability that a random anomaly scores strictly below a random normal point.

    Ties count one half (the Mann-Whitney statistic). Accepts either a
    :class:`LabeledScores` or ``(similarity, anomaly)`` arrays.

    Raises:
        InputError: only one class is present.
    """
    if not isinstance(ls, LabeledScores):
        ls = LabeledScores(ls, anomaly)
    n_a = int(ls.anomaly.sum())
    n_n = ls.anomaly.size - n_a
    if n_a == 0 or n_n == 0:
        raise InputError(f"AUC needs both classes, got {n_a} anomalies and {n_n} normal points")
    # midranks give exactly the half-counted ties
    ranks = rankdata(ls.similarity)
    u = ranks[~ls.anomaly].sum() - n_n * (n_n + 1) / 2.0
    return float(u / (n_n * n_a))


def _aggregate(values: Sequence[float]) -> dict[str, float]:
    v = np.asarray(values, dtype=np.float64)
    return {
        "mean": float(v.mean()),
        "std": float(v.std()),
        "min": float(v.min()),
        "max": float(v.max()),
        "median": float(np.median(v)),
    }


@dataclass
class ExperimentReport:
    """Per-run metric rows plus summary statistics.

    ``aggregate`` maps each value of the ``key`` column (as a string) to summary
    statistics of ``metric`` over the runs carrying that key.
    """

    name: str
    parameters: dict[str, Any]
    runs: list[dict[str, Any]]
    metric: str
    key: str
    aggregate: dict[str, dict[str, float]] = field(default_factory=dict)
    extra: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.runs:
            raise InputError("a report needs at least one run")
        if not self.aggregate:
            self.aggregate = self.recompute_aggregate()

    def recompute_aggregate(self) -> dict[str, dict[str, float]]:
        keys: dict[str, list[float]] = {}
        for row in self.runs:
            keys.setdefault(str(row[self.key]), []).append(float(row[self.metric]))
        return {k: _aggregate(v) for k, v in keys.items()}

    def to_dict(self) -> dict[str, Any]:
        return {
            "format": REPORT_FORMAT,
            "name": self.name,
            "parameters": self.parameters,
            "metric": self.metric,
            "key": self.key,
            "runs": self.runs,
            "aggregate": self.aggregate,
            "extra": self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, record: dict[str, Any]) -> ExperimentReport:
        if record.get("format") != REPORT_FORMAT:
            raise InputError(f"not an isokernel report: format={record.get('format')!r}")
        return cls(
            name=record["name"],
            parameters=record["parameters"],
            runs=record["runs"],
            metric=record["metric"],
            key=record["key"],
            aggregate=record["aggregate"],
            extra=record.get("extra", {}),
        )

    @classmethod
    def from_json(cls, text: str) -> ExperimentReport:
        return cls.from_dict(json.loads(text))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    def to_csv(self) -> str:
        cols: list[str] = []
        for row in self.runs:
            cols += [c for c in row if c not in cols]
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        w.writerows(self.runs)
        return buf.getvalue()


def _seed_list(n_seeds: int | None, seeds: Sequence[int] | None) -> list[int]:
    if seeds is None:
        if n_seeds is None or int(n_seeds) != n_seeds or n_seeds < 1:
            raise ParameterError(f"n_seeds must be a positive integer, got {n_seeds}")
        return list(range(int(n_seeds)))
    return [int(s) for s in seeds]


def stability_report(
    D: Any,
    t_values: Sequence[int],
    n_seeds: int | None = 10,
    psi: int = DEFAULT_PSI,
    seeds: Sequence[int] | None = None,
    threads: int | None = None,
) -> ExperimentReport:
    """Spread of IDK point scores across seeds, for each ``t``.

    For each ``t`` the detector is fitted once per seed; the per-point
    standard deviation of the similarity across seeds is averaged over the
    points. One run row per ``t``.
    """
    D = as_dataset(D)
    if not t_values:
        raise ParameterError("t_values is empty")
    seed_list = _seed_list(n_seeds, seeds)
    if len(seed_list) < 2:
        raise ParameterError(f"need at least 2 seeds, got {len(seed_list)}")
    runs = []
    for t in t_values:
        if int(t) != t or t < 1:
            raise ParameterError(f"t must be a positive integer, got {t}")
        scores = np.stack(
            pmap(
                lambda s, t=int(t): idk_point_similarities(fit_isolation_model(D, psi, t, s), D),
                seed_list,
                threads,
            )
        )
        per_point = scores.std(axis=0)
        per_point[np.ptp(scores, axis=0) == 0] = 0.0  # std of equal values can round above 0
        runs.append(
            {
                "t": int(t),
                "mean_std": float(per_point.mean()),
                "max_std": float(per_point.max()),
            }
        )
    return ExperimentReport(
        name="stability",
        parameters={"psi": psi, "t_values": [int(t) for t in t_values], "seeds": seed_list, "n": D.shape[0]},
        runs=runs,
        metric="mean_std",
        key="t",
    )


def contamination_report(
    D_normal: Any,
    D_anom: Any,
    gammas: Sequence[float],
    n_seeds: int | None = 10,
    ratio: float | None = None,
    psi: int = DEFAULT_PSI,
    t: int = DEFAULT_T,
    seeds: Sequence[int] | None = None,
    threads: int | None = None,
) -> ExperimentReport:
    """AUC of the IDK and norm detectors as training contamination grows.

    The training set is ``D_normal`` plus ``round(gamma * ratio * |D_normal|)``
    anomalies sampled without replacement from ``D_anom``. Both detectors are
    then scored on all of ``D_normal`` and ``D_anom``, so the evaluation set
    is the same for every gamma. ``ratio`` is the base anomaly rate
    (``gamma = 1``); it defaults to ``|D_anom| / |D_normal|``.

    Raises:
        InputError: ``D_anom`` has too few points for the largest gamma.
    """
    N = as_dataset(D_normal, "D_normal")
    A = as_dataset(D_anom, "D_anom")
    if N.shape[1] != A.shape[1]:
        raise InputError(f"dimension mismatch: {N.shape[1]} vs {A.shape[1]}")
    if not gammas:
        raise ParameterError("gammas is empty")
    if any(g < 0 or not math.isfinite(g) for g in gammas):
        raise ParameterError(f"gammas must be non-negative, got {list(gammas)}")
    r = A.shape[0] / N.shape[0] if ratio is None else float(ratio)
    counts = {float(g): int(round(g * r * N.shape[0])) for g in gammas}
    need = max(counts.values())
    if need > A.shape[0]:
        raise InputError(f"gamma={max(gammas)} needs {need} anomalies, only {A.shape[0]} available")
    seed_list = _seed_list(n_seeds, seeds)
    ev = np.vstack([N, A])
    lab = np.r_[np.zeros(N.shape[0], dtype=bool), np.ones(A.shape[0], dtype=bool)]

    def one(job: tuple[float, int]) -> dict[str, Any]:
        g, s = job
        k = counts[g]
        # sampling stream separate from the partitioning stream of the same seed
        pick = np.random.default_rng([s, 1]).choice(A.shape[0], size=k, replace=False)
        train = np.vstack([N, A[pick]])
        model = fit_isolation_model(train, psi, t, s)
        reference = mean_map_from_slots(model.embed(train), model.t, model.psi)
        slots = model.embed(ev)
        return {
            "gamma": g,
            "seed": s,
            "n_anomalies_train": k,
            "auc_idk": auc(similarities_to(slots, reference), lab),
            "auc_norm": auc(feature_norms(model, ev), lab),
        }

    runs = pmap(one, [(float(g), s) for g in gammas for s in seed_list], threads)
    report = ExperimentReport(
        name="contamination",
        parameters={
            "gammas": [float(g) for g in gammas],
            "ratio": r,
            "psi": psi,
            "t": t,
            "seeds": seed_list,
            "n_normal": N.shape[0],
            "n_anomalies": A.shape[0],
        },
        runs=runs,
        metric="auc_idk",
        key="gamma",
    )
    report.extra["aggregate_norm"] = _grouped(runs, "gamma", "auc_norm")
    report.extra["auc_range"] = {
        det: auc_range(runs, f"auc_{det}") for det in ("idk", "norm")
    }
    return report


def _grouped(runs: Sequence[dict[str, Any]], key: str, metric: str) -> dict[str, dict[str, float]]:
    keys: dict[str, list[float]] = {}
    for row in runs:
        keys.setdefault(str(row[key]), []).append(float(row[metric]))
    return {k: _aggregate(v) for k, v in keys.items()}


def auc_range(runs: Sequence[dict[str, Any]], metric: str, key: str = "gamma") -> float:
    """Max minus min over gammas of the per-gamma median ``metric``."""
    medians = [a["median"] for a in _grouped(runs, key, metric).values()]
    return float(max(medians) - min(medians))


Detector = Literal["idk2", "gdk2", "gdk_exact_pairwise"]
SCALEUP_DETECTORS: tuple[str, ...] = ("idk2", "gdk2", "gdk_exact_pairwise")


def _scaleup_job(detector: str, psi: int, t: int, sigma: float, seed: int) -> Callable[[list], Any]:
    if detector == "idk2":
        return lambda G: idk2(G, psi=psi, t=t, seed=seed, threads=1)
    if detector == "gdk2":
        return lambda G: gdk2_similarities(G, sigma1=sigma, sigma2=sigma, seed=seed)
    if detector == "gdk_exact_pairwise":
        return lambda G: pairwise_gdk_matrix(G, sigma)
    raise ParameterError(f"detector must be one of {SCALEUP_DETECTORS}, got {detector!r}")


def scaleup_bench(
    group_counts: Sequence[int],
    m: int,
    detector: Detector = "idk2",
    repeats: int = 3,
    psi: int = DEFAULT_PSI,
    t: int = DEFAULT_T,
    sigma: float = 1.0,
    d: int = 2,
    seed: int = 0,
    timeout: float | None = None,
) -> ExperimentReport:
    """Wall-clock time of one group detector as the number of groups grows.

    Each size is timed ``repeats`` times after one untimed warm-up and the
    median is kept. Runs are single-threaded. ``ratio`` is the time at this
    size over the time at the previous size (absent for the first). With
    ``timeout`` set, sizes stop being measured once a median exceeds it.
    """
    from isokernel.data import gen_gaussian_groups

    counts = [int(n) for n in group_counts]
    if not counts:
        raise ParameterError("group_counts is empty")
    if any(b <= a for a, b in zip(counts, counts[1:])) or counts[0] < 2:
        raise ParameterError(f"group_counts must be ascending and >= 2, got {counts}")
    if repeats < 1:
        raise ParameterError(f"repeats must be >= 1, got {repeats}")
    job = _scaleup_job(detector, psi, t, sigma, seed)
    runs: list[dict[str, Any]] = []
    prev = None
    for n in counts:
        # anomalies are irrelevant to timing; keep every group normal
        groups, _ = gen_gaussian_groups(n, 0, m, d, seed)
        job(groups)
        times = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            job(groups)
            times.append(time.perf_counter() - t0)
        med = float(np.median(times))
        runs.append(
            {
                "detector": detector,
                "n_groups": n,
                "m": m,
                "seconds": med,
                "ratio": "" if prev is None else med / prev,
            }
        )
        prev = med
        if timeout is not None and med > timeout:
            break
    return ExperimentReport(
        name="scaleup",
        parameters={
            "detector": detector,
            "group_counts": counts,
            "m": m,
            "d": d,
            "psi": psi,
            "t": t,
            "sigma": sigma,
            "repeats": repeats,
            "seed": seed,
        },
        runs=runs,
        metric="seconds",
        key="n_groups",
    )


def best_over_grid(
    score: Callable[[Any], np.ndarray], grid: Sequence[Any], anomaly: np.ndarray
) -> tuple[Any, float, list[tuple[Any, float]]]:
    """Evaluate ``score(p)`` for each grid value; return the best value, its AUC and all AUCs."""
    table = [(p, auc(score(p), anomaly)) for p in grid]
    best = max(table, key=lambda pa: pa[1])
    return best[0], best[1], table

