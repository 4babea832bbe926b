from __future__ import annotations

import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isokernel.errors import InputError, ParameterError
from isokernel.eval import (
    ExperimentReport,
    LabeledScores,
    auc,
    auc_range,
    contamination_report,
    scaleup_bench,
    stability_report,
)


def auc_by_pairs(sims, anomaly) -> float:
    wins = 0.0
    pairs = 0
    for a, n in itertools.product(np.flatnonzero(anomaly), np.flatnonzero(~np.asarray(anomaly))):
        pairs += 1
        wins += 1.0 if sims[a] < sims[n] else 0.5 if sims[a] == sims[n] else 0.0
    return wins / pairs


class TestAuc:
    def test_four_scores(self):
        ls = LabeledScores([0.1, 0.2, 0.3, 0.4], [True, False, True, False])
        assert auc(ls) == 0.75

    def test_perfect_and_flat(self):
        assert auc([0.0, 0.1, 0.5, 0.9], [True, True, False, False]) == 1.0
        assert auc([0.3] * 6, [True, False] * 3) == 0.5

    def test_single_class(self):
        with pytest.raises(InputError):
            auc([0.1, 0.2], [False, False])

    def test_length_mismatch(self):
        with pytest.raises(InputError):
            auc([0.1, 0.2, 0.3], [True, False])

    @settings(max_examples=200, deadline=None)
    @given(
        st.lists(
            st.tuples(st.integers(0, 6).map(lambda v: v / 6), st.booleans()), min_size=2, max_size=25
        ).filter(lambda rows: 0 < sum(r[1] for r in rows) < len(rows))
    )
    def test_matches_pair_enumeration(self, rows):
        sims = np.array([r[0] for r in rows])
        lab = np.array([r[1] for r in rows])
        assert auc(sims, lab) == pytest.approx(auc_by_pairs(sims, lab), abs=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.integers(-500, 500), min_size=4, max_size=30, unique=True), st.randoms(use_true_random=False))
    def test_monotone_invariance_and_flip(self, values, rnd):
        sims = np.array(values) / 100.0
        lab = np.array([rnd.random() < 0.5 for _ in values])
        lab[0], lab[1] = True, False
        base = auc(sims, lab)
        assert auc(np.exp(3 * sims) - 7, lab) == pytest.approx(base, abs=1e-12)
        assert auc(sims, ~lab) == pytest.approx(1 - base, abs=1e-12)


class TestReport:
    def make(self):
        runs = [{"t": 1, "v": 1.0}, {"t": 1, "v": 3.0}, {"t": 2, "v": 5.0}]
        return ExperimentReport(name="x", parameters={"a": [1, 2]}, runs=runs, metric="v", key="t")

    def test_aggregate(self):
        agg = self.make().aggregate
        assert agg["1"] == {"mean": 2.0, "std": 1.0, "min": 1.0, "max": 3.0, "median": 2.0}
        assert agg["2"]["mean"] == 5.0

    def test_json_round_trip(self):
        rep = self.make()
        back = ExperimentReport.from_json(rep.to_json())
        assert back == rep
        assert back.recompute_aggregate() == back.aggregate

    def test_csv_rows(self):
        lines = self.make().to_csv().splitlines()
        assert lines == ["t,v", "1,1.0", "1,3.0", "2,5.0"]

    def test_needs_runs(self):
        with pytest.raises(InputError):
            ExperimentReport(name="x", parameters={}, runs=[], metric="v", key="t")

    def test_rejects_foreign_json(self):
        with pytest.raises(InputError):
            ExperimentReport.from_json(json.dumps({"format": "nope"}))


class TestStability:
    def test_identical_seeds_have_zero_spread(self, rng):
        rep = stability_report(rng.random((60, 2)), [10], seeds=[3, 3, 3])
        assert rep.runs[0]["mean_std"] == 0.0

    def test_more_partitionings_are_steadier(self, rng):
        rep = stability_report(rng.normal(size=(150, 2)), [1, 200], n_seeds=5)
        assert rep.aggregate["1"]["mean"] > rep.aggregate["200"]["mean"]

    @pytest.mark.parametrize("t_values", [[0], [5, -1], []])
    def test_invalid_t(self, rng, t_values):
        with pytest.raises(ParameterError):
            stability_report(rng.random((20, 1)), t_values, n_seeds=2)

    def test_needs_two_seeds(self, rng):
        with pytest.raises(ParameterError):
            stability_report(rng.random((20, 1)), [5], n_seeds=1)


class TestContamination:
    def data(self, rng):
        return rng.normal(0, 1, (200, 2)), rng.normal(6, 0.3, (24, 2))

    def test_shape_and_training_counts(self, rng):
        N, A = self.data(rng)
        rep = contamination_report(N, A, [0, 1, 2, 4], n_seeds=2, ratio=0.03, t=20)
        assert len(rep.runs) == 8
        by_gamma = {r["gamma"]: r["n_anomalies_train"] for r in rep.runs}
        assert by_gamma == {0.0: 0, 1.0: 6, 2.0: 12, 4.0: 24}
        assert set(rep.aggregate) == {"0.0", "1.0", "2.0", "4.0"}
        assert set(rep.extra["aggregate_norm"]) == set(rep.aggregate)

    def test_default_ratio_is_given_composition(self, rng):
        N, A = self.data(rng)
        rep = contamination_report(N, A, [1], n_seeds=1, t=10)
        assert rep.runs[0]["n_anomalies_train"] == 24

    def test_not_enough_anomalies(self, rng):
        N, A = self.data(rng)
        with pytest.raises(InputError, match="needs 48"):
            contamination_report(N, A, [0, 2], n_seeds=1)

    def test_negative_gamma(self, rng):
        N, A = self.data(rng)
        with pytest.raises(ParameterError):
            contamination_report(N, A, [-1], n_seeds=1)

    def test_auc_range_uses_medians(self):
        runs = [
            {"gamma": 0, "m": 0.9},
            {"gamma": 0, "m": 0.5},
            {"gamma": 0, "m": 0.8},
            {"gamma": 1, "m": 0.7},
        ]
        assert auc_range(runs, "m") == pytest.approx(0.1)


class TestScaleup:
    @pytest.mark.parametrize("detector", ["idk2", "gdk2", "gdk_exact_pairwise"])
    def test_rows_and_ratio_column(self, detector):
        rep = scaleup_bench([4, 8, 16], m=5, detector=detector, repeats=1, psi=4, t=5)
        assert [r["n_groups"] for r in rep.runs] == [4, 8, 16]
        assert rep.runs[0]["ratio"] == ""
        assert rep.runs[2]["ratio"] == pytest.approx(rep.runs[2]["seconds"] / rep.runs[1]["seconds"])

    def test_unknown_detector(self):
        with pytest.raises(ParameterError):
            scaleup_bench([4, 8], m=5, detector="kmeans")

    def test_counts_must_ascend(self):
        with pytest.raises(ParameterError):
            scaleup_bench([8, 4], m=5)
