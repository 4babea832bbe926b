"""Acceptance gate: one test per criterion, each printing a PASS or FAIL line.

Run on its own with ``pytest -m acceptance -v``; the collected verdicts are
also repeated in the terminal summary.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from isokernel.baselines import (
    SIGMA_GRID,
    gaussian_gram,
    gdk_exact,
    gdk_nystrom,
    gdk_point_similarities,
    nystrom_fit,
)
from isokernel.data import gen_gaussian_groups, gen_three_gaussians_1d, normalize_unit_interval
from isokernel.distributional import idk, idk_point_similarities, mean_map, similarities_to
from isokernel.eval import auc, auc_range, contamination_report, scaleup_bench, stability_report
from isokernel.groups import Group, gdk2_from_maps, gdk2_landmarks, gdk2_level1_maps, idk2
from isokernel.kernel import NONE, fit_isolation_model, ik_bruteforce, ik_gram, ik_similarity, to_dense

pytestmark = pytest.mark.acceptance


def three_gaussians_data(n_anomalies: int = 20):
    return normalize_unit_interval(gen_three_gaussians_1d(0, n_anomalies=n_anomalies))


def bottom_k_holds_all(sims: np.ndarray, anomaly: np.ndarray, k: int) -> bool:
    lowest = np.argsort(sims, kind="stable")[:k]
    return bool(anomaly[lowest].sum() == anomaly.sum())


def test_1_exact_map_matches_bruteforce(verdict):
    rng = np.random.default_rng(1)
    D = rng.random((200, 5))
    model = fit_isolation_model(D, psi=16, t=50, seed=1)
    # half the pairs are data points, half fresh points in and around the cube
    pairs = [(D[i], D[j]) for i, j in rng.integers(0, 200, (500, 2))]
    pairs += [(x, y) for x, y in rng.uniform(-0.1, 1.1, (500, 2, 5))]
    start = time.perf_counter()
    mismatches = sum(ik_similarity(model, x, y) != ik_bruteforce(model, x, y) for x, y in pairs)
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 5.0
    verdict(1, ok, f"{mismatches} mismatches over {len(pairs)} pairs in {elapsed:.2f}s")
    assert mismatches == 0
    assert elapsed < 5.0


def test_2_ranges_over_random_cases(verdict):
    rng = np.random.default_rng(2)
    failures: list[str] = []
    for case in range(10_000):
        n = int(rng.integers(4, 30))
        d = int(rng.integers(1, 4))
        psi = int(rng.choice([p for p in (2, 4, 8, 16) if p <= n]))
        t = int(rng.integers(1, 7))
        D = rng.normal(0, rng.uniform(0.01, 10), (n, d)) * rng.uniform(0.1, 3, d)
        model = fit_isolation_model(D, psi=psi, t=t, seed=case)
        Q = np.vstack([D[rng.integers(0, n, 3)], rng.normal(0, 20, (3, d)), np.full((1, d), 1e9)])

        G = ik_gram(model, Q)
        slots = model.embed(Q)
        norms = np.linalg.norm(to_dense(model, slots), axis=1)
        S = mean_map(model, D[: n // 2])
        T = mean_map(model, Q[:-1])
        k_hat = idk(S, T)
        point_alpha = similarities_to(slots, mean_map(model, D))
        cuts = np.sort(rng.choice(np.arange(1, n), size=min(n - 1, int(rng.integers(1, 5))), replace=False))
        groups = [g for g in np.split(D, cuts) if len(g)]
        alphas = idk2(groups, psi=2, t=t, seed=case).alphas if len(groups) >= 2 else np.zeros(1)

        checks = {
            "kappa": np.all((G >= 0) & (G <= 1)),
            "idk": 0 <= k_hat <= 1,
            "alpha": np.all((alphas >= 0) & (alphas <= 1)) and np.all((point_alpha >= 0) & (point_alpha <= 1)),
            "norm": np.all((norms >= 0) & (norms <= math.sqrt(t) + 1e-12)),
            "far": np.all(slots[-1] == NONE) and point_alpha[-1] == 0.0 and norms[-1] == 0.0 and G[-1, -1] == 0.0,
        }
        failures += [f"case {case}: {name}" for name, good in checks.items() if not good]
    ok = not failures
    verdict(2, ok, f"10000 cases, {len(failures)} violations" + (f" (first: {failures[0]})" if failures else ""))
    assert not failures


def test_3_sparse_reference_gives_higher_similarity(verdict):
    x, y = np.array([0.050]), np.array([0.053])
    start = time.perf_counter()
    wins = 0
    margins = []
    for seed in range(10):
        rng = np.random.default_rng([3, seed])
        sparse = rng.uniform(0.0, 1.0, (1000, 1))
        dense = rng.uniform(0.0, 0.1, (1000, 1))
        k_sparse = ik_similarity(fit_isolation_model(sparse, psi=16, t=10_000, seed=seed), x, y)
        k_dense = ik_similarity(fit_isolation_model(dense, psi=16, t=10_000, seed=seed), x, y)
        wins += k_sparse > k_dense
        margins.append(k_sparse - k_dense)
    elapsed = time.perf_counter() - start
    ok = wins == 10 and elapsed < 60.0
    verdict(3, ok, f"sparse > dense on {wins}/10 seeds (min margin {min(margins):.3f}) in {elapsed:.1f}s")
    assert wins == 10
    assert elapsed < 60.0


def test_4_local_anomalies_idk_versus_gaussian(verdict):
    ds = three_gaussians_data()
    model = fit_isolation_model(ds.points, psi=16, t=100, seed=0)
    sims = idk_point_similarities(model, ds.points)
    idk_auc = auc(sims, ds.labels)
    idk_bottom = bottom_k_holds_all(sims, ds.labels, 40)
    idk_ok = idk_auc >= 0.95 and idk_bottom

    gaussian_passes = []
    best_sigma, best_auc = None, -1.0
    for sigma in SIGMA_GRID:
        g = gdk_point_similarities(ds.points, sigma)
        a = auc(g, ds.labels)
        if a > best_auc:
            best_sigma, best_auc = sigma, a
        if a >= 0.95 and bottom_k_holds_all(g, ds.labels, 40):
            gaussian_passes.append(sigma)
    ok = idk_ok and not gaussian_passes
    verdict(
        4,
        ok,
        f"IDK auc={idk_auc:.3f} bottom40={idk_bottom}; Gaussian best auc={best_auc:.3f} "
        f"at sigma={best_sigma}, sigmas meeting both conditions: {gaussian_passes}",
    )
    assert idk_ok
    assert not gaussian_passes


def test_5_more_partitionings_are_more_stable(verdict):
    rep = stability_report(three_gaussians_data().points, [100, 1000], n_seeds=10)
    low, high = rep.runs[0]["mean_std"], rep.runs[1]["mean_std"]
    ok = high < low
    verdict(5, ok, f"mean std t=100: {low:.5f}, t=1000: {high:.5f}")
    assert ok


def test_6_contamination_range(verdict):
    ds = three_gaussians_data(n_anomalies=80)
    normal, anomalies = ds.points[~ds.labels], ds.points[ds.labels]
    rep = contamination_report(normal, anomalies, [0, 1, 2, 4], n_seeds=10, ratio=20 / 1500)
    r_idk = auc_range(rep.runs, "auc_idk")
    r_norm = auc_range(rep.runs, "auc_norm")
    ok = r_idk <= r_norm
    verdict(6, ok, f"AUC range IDK={r_idk:.4f}, norm={r_norm:.4f}")
    assert ok


def test_7_group_anomalies_idk2_versus_gaussian(verdict):
    start = time.perf_counter()
    rows = []
    for seed in range(10):
        raw, labels = gen_gaussian_groups(300, 3, 100, 2, seed=seed)
        pooled = np.vstack([g.points for g in raw])
        lo, span = pooled.min(axis=0), np.ptp(pooled, axis=0)
        groups = [Group(g.id, (g.points - lo) / span) for g in raw]

        res = idk2(groups, psi=16, t=100, seed=seed)
        a_idk2 = auc(res.alphas, labels)
        # level-1 maps are shared with IDK², only the level-2 kernel differs
        maps = res.mean_maps
        a_idk_gdk = max(auc(gaussian_gram(maps, maps, s2).mean(axis=1), labels) for s2 in SIGMA_GRID)
        s, s2 = gdk2_landmarks(pooled.shape[0], len(groups))
        a_gdk2 = -1.0
        for s1 in SIGMA_GRID:
            level1 = gdk2_level1_maps(groups, s, s1, seed)
            a_gdk2 = max(a_gdk2, *(auc(gdk2_from_maps(level1, s2, sg, seed), labels) for sg in SIGMA_GRID))
        rows.append((a_idk2, a_idk_gdk, a_gdk2))
    elapsed = time.perf_counter() - start

    a = np.array(rows)
    idk2_ok = bool(np.all(a[:, 0] >= 0.90))
    lower_idk_gdk = int(np.sum(a[:, 1] < a[:, 0]))
    lower_gdk2 = int(np.sum(a[:, 2] < a[:, 0]))
    ok = idk2_ok and lower_idk_gdk >= 8 and lower_gdk2 >= 8 and elapsed < 120.0
    verdict(
        7,
        ok,
        f"IDK² auc min={a[:, 0].min():.3f} median={np.median(a[:, 0]):.3f}; "
        f"IDK-GDK (best sigma) lower on {lower_idk_gdk}/10, median {np.median(a[:, 1]):.3f}; "
        f"GDK² (best sigmas) lower on {lower_gdk2}/10, median {np.median(a[:, 2]):.3f}; {elapsed:.1f}s",
    )
    assert idk2_ok
    assert elapsed < 120.0
    assert lower_idk_gdk >= 8
    assert lower_gdk2 >= 8


SCALEUP_M = 40


def test_8_scaleup_ratios(verdict):
    lin = scaleup_bench([500, 1000], m=SCALEUP_M, detector="idk2", repeats=3)
    quad = scaleup_bench([500, 1000], m=SCALEUP_M, detector="gdk_exact_pairwise", repeats=3)
    r_lin, r_quad = lin.runs[1]["ratio"], quad.runs[1]["ratio"]
    ok = r_lin <= 2.5 and r_quad >= 3.0
    verdict(8, ok, f"m={SCALEUP_M}: IDK² ratio {r_lin:.2f}, all-pairs exact GDK ratio {r_quad:.2f}")
    assert r_lin <= 2.5
    assert r_quad >= 3.0


def test_9_nystrom_fidelity(verdict):
    n, sigma = 200, 0.25
    sizes = [math.isqrt(n), n // 2, n]
    errors = np.empty((10, len(sizes)))
    for seed in range(10):
        D = np.random.default_rng([9, seed]).random((n, 2))
        S, T = D[:100], D[100:]
        exact = gdk_exact(S, T, sigma)
        for k, s in enumerate(sizes):
            errors[seed, k] = abs(gdk_nystrom(nystrom_fit(D, s, sigma, seed), S, T) - exact)
    medians = np.median(errors, axis=0)
    full_ok = bool(errors[:, -1].max() <= 1e-6)
    monotone = bool(np.all(np.diff(medians) <= 0))
    verdict(9, full_ok and monotone, f"median errors at s={sizes}: {medians.tolist()}; max at s=n {errors[:, -1].max():.2e}")
    assert full_ok
    assert monotone
