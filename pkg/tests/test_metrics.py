"""Coverage/size metrics, stratified reports, SSCV, SAT, lambda search."""

import numpy as np
import pytest

import scalar_oracle as oracle
from ecp.conformal import PredictionSetBatch, build_sets, calibrate
from ecp.dataset import SplitSpec, split
from ecp.errors import AllBinsEmpty, AllSetsEmpty, UncoveredSize
from ecp.metrics import (
    SizeBins,
    default_difficulty_bins,
    default_size_bins,
    difficulty_stratified,
    marginal_coverage,
    mean_set_size,
    raps_lambda_search,
    sat,
    sat_size_bins,
    size_stratified,
    sscv,
)
from ecp.runner import synth
from ecp.scores import compute_scores, fit_temperature


def make_batch(sizes, hits, difficulty=None, k=12):
    """Consistent batch with label 0 as every example's true label."""
    sizes = np.asarray(sizes, dtype=np.int64)
    hits = np.asarray(hits, dtype=bool)
    n = sizes.size
    member = np.zeros((n, k), dtype=bool)
    for i in range(n):
        if hits[i]:
            member[i, :sizes[i]] = True
        else:
            member[i, 1 : sizes[i] + 1] = True
    difficulty = (
        np.zeros(n, dtype=np.int64) if difficulty is None else np.asarray(difficulty)
    )
    return PredictionSetBatch(
        member=member, sizes=sizes, hits=hits, difficulty=difficulty
    )


class TestBasicMetrics:
    def test_marginal_coverage_mean(self):
        assert marginal_coverage(make_batch([1, 1, 1, 1], [1, 1, 0, 1])) == 0.75

    def test_full_sets_always_cover(self):
        batch = make_batch([12, 12], [1, 1])
        assert marginal_coverage(batch) == 1.0

    def test_empty_sets_never_cover(self):
        batch = make_batch([0, 0], [0, 0])
        assert marginal_coverage(batch) == 0.0

    def test_mean_size_skip_empty(self):
        batch = make_batch([1, 3, 0, 2], [1, 1, 0, 1])
        assert mean_set_size(batch, skip_empty=True) == 2.0
        assert mean_set_size(batch, skip_empty=False) == 1.5

    def test_mean_size_constant(self):
        batch = make_batch([1, 1, 1], [1, 0, 1])
        assert mean_set_size(batch) == 1.0
        assert mean_set_size(batch, skip_empty=True) == 1.0

    def test_all_sets_empty_raises(self):
        with pytest.raises(AllSetsEmpty):
            mean_set_size(make_batch([0, 0], [0, 0]), skip_empty=True)


class TestSizeBins:
    def test_default_bins_cover_zero_to_k(self):
        for k in (2, 3, 5, 10, 47, 1000, 1500):
            bins = default_size_bins(k)
            assert bins.ranges[0][0] == 0 and bins.ranges[-1][1] == k
            flat = [v for lo, hi in bins.ranges for v in range(lo, hi + 1)]
            assert flat == list(range(k + 1))

    def test_default_templates_at_k1000(self):
        assert default_size_bins(1000).ranges == (
            (0, 1), (2, 3), (4, 6), (7, 10), (11, 100), (101, 1000),
        )
        assert sat_size_bins(1000).ranges == (
            (0, 1), (2, 3), (4, 10), (11, 100), (101, 1000),
        )
        assert default_difficulty_bins(1000).ranges == (
            (1, 1), (2, 3), (4, 6), (7, 10), (11, 100), (101, 1000),
        )

    def test_noncontiguous_rejected(self):
        with pytest.raises(ValueError):
            SizeBins(((0, 1), (3, 4)))
        with pytest.raises(ValueError):
            SizeBins(((2, 1),))

    def test_labels(self):
        assert SizeBins(((0, 1), (2, 3))).labels == ["0 to 1", "2 to 3"]
        assert SizeBins(((1, 1), (2, 4))).labels == ["1", "2 to 4"]


class TestStratified:
    def test_direct_bucketing(self):
        batch = make_batch([1, 2, 5], [1, 0, 1])
        report = size_stratified(batch, SizeBins(((0, 1), (2, 3), (4, 6))))
        np.testing.assert_array_equal(report.counts, [1, 1, 1])
        np.testing.assert_array_equal(report.coverage, [1.0, 0.0, 1.0])

    def test_empty_bin_is_undefined(self):
        batch = make_batch([1, 1], [1, 0])
        report = size_stratified(batch, SizeBins(((0, 1), (2, 5))))
        assert report.counts[1] == 0
        assert np.isnan(report.coverage[1]) and np.isnan(report.mean_size[1])
        assert report.as_records()[1]["coverage"] is None

    def test_single_bin_reproduces_marginal(self):
        rng = np.random.default_rng(0)
        batch = make_batch(rng.integers(0, 13, 50), rng.random(50) < 0.8)
        report = size_stratified(batch, SizeBins(((0, 12),)))
        assert report.coverage[0] == marginal_coverage(batch)

    def test_uncovered_size_raises(self):
        batch = make_batch([1, 7], [1, 1])
        with pytest.raises(UncoveredSize):
            size_stratified(batch, SizeBins(((0, 3),)))

    def test_aggregation_identity_exact(self):
        rng = np.random.default_rng(1)
        batch = make_batch(rng.integers(0, 13, 200), rng.random(200) < 0.85)
        for bins in (SizeBins(((0, 1), (2, 3), (4, 12))), SizeBins(((0, 5), (6, 12)))):
            report = size_stratified(batch, bins)
            assert report.covered.sum() == batch.hits.sum()  # integer-exact
            weighted = report.covered.sum() / batch.n_examples
            assert weighted == marginal_coverage(batch)

    def test_difficulty_all_rank_zero(self):
        batch = make_batch([1, 2, 1], [1, 1, 1], difficulty=[0, 0, 0])
        report = difficulty_stratified(batch, SizeBins(((1, 1), (2, 3))))
        np.testing.assert_array_equal(report.counts, [3, 0])

    def test_difficulty_one_indexed_display(self):
        batch = make_batch([1, 2, 3], [1, 1, 0], difficulty=[0, 1, 2])
        report = difficulty_stratified(batch, SizeBins(((1, 1), (2, 3))))
        np.testing.assert_array_equal(report.counts, [1, 2])
        assert report.bins.labels == ["1", "2 to 3"]

    def test_difficulty_bin_mean_size(self):
        batch = make_batch([2, 4, 6], [1, 1, 1], difficulty=[1, 1, 0])
        report = difficulty_stratified(batch, SizeBins(((1, 1), (2, 3))))
        assert report.mean_size[0] == 6.0
        assert report.mean_size[1] == 3.0

    def test_ecp_coverage_drops_with_difficulty(self):
        ds = synth(10, 8000, 2.5, seed=23, sharpness=1.0)
        idx = split(ds, SplitSpec(0.3, seed=23))
        cal, val = idx.calibration, idx.validation
        t = fit_temperature(ds.logits[cal], ds.labels[cal])
        matrix = compute_scores("ecp", ds.logits, temperature=t)
        q = calibrate(matrix.true_label_scores(ds.labels)[cal], 0.1).q_hat
        batch = build_sets(matrix.take(val), q, ds.labels[val])
        report = difficulty_stratified(batch, default_difficulty_bins(10))
        populated = report.counts > 0
        covs = report.coverage[populated]
        assert covs[0] > covs[-1]  # easy bin covers better than the hardest


class TestSscvSat:
    def test_two_bin_example(self):
        # coverages {0.92, 0.85} at delta=0.1 -> max(0.02, 0.05)
        sizes = [1] * 100 + [2] * 100
        hits = [1] * 92 + [0] * 8 + [1] * 85 + [0] * 15
        batch = make_batch(sizes, hits)
        bins = SizeBins(((0, 1), (2, 12)))
        assert sscv(batch, bins, 0.1) == pytest.approx(0.05, abs=1e-12)

    def test_exact_conditional_coverage_scores_zero(self):
        sizes = [1] * 10 + [2] * 10
        hits = [1] * 9 + [0] + [1] * 9 + [0]
        batch = make_batch(sizes, hits)
        assert sscv(batch, SizeBins(((0, 1), (2, 12))), 0.1) == pytest.approx(0.0)

    def test_single_populated_bin_full_coverage(self):
        batch = make_batch([1] * 10, [1] * 10)
        assert sscv(batch, SizeBins(((0, 12),)), 0.1) == pytest.approx(0.1, abs=1e-12)

    def test_single_bin_sscv_is_marginal_gap(self):
        rng = np.random.default_rng(3)
        batch = make_batch(rng.integers(0, 13, 80), rng.random(80) < 0.7)
        gap = abs(marginal_coverage(batch) - 0.9)
        assert sscv(batch, SizeBins(((0, 12),)), 0.1) == pytest.approx(gap, abs=1e-15)

    def test_empty_bins_skipped(self):
        batch = make_batch([1] * 10, [1] * 9 + [0])
        bins = SizeBins(((0, 1), (2, 3), (4, 12)))
        assert sscv(batch, bins, 0.1) == pytest.approx(0.0, abs=1e-12)

    def test_all_bins_empty(self):
        empty = PredictionSetBatch(
            member=np.zeros((0, 5), dtype=bool),
            sizes=np.zeros(0, dtype=np.int64),
            hits=np.zeros(0, dtype=bool),
            difficulty=np.zeros(0, dtype=np.int64),
        )
        with pytest.raises(AllBinsEmpty):
            sscv(empty, SizeBins(((0, 5),)), 0.1)

    def test_sat_perfect_classifier(self):
        batch = make_batch([1] * 10, [1] * 9 + [0])
        bins = SizeBins(((0, 1), (2, 12)))
        assert sat(batch, bins, 0.1) == pytest.approx(1.0, abs=1e-12)

    def test_sat_reported_operating_point(self):
        # a reference operating point: SSCV=0.077 with mu=1.785 gives 0.517
        assert (1 - 0.077) / 1.785 == pytest.approx(0.517, abs=5e-4)

    def test_sat_direct_evaluation(self):
        assert (1 - 0.5) / 2.0 == 0.25
        sizes = [2] * 2 + [2] * 2
        batch = make_batch(sizes, [1, 0, 1, 0])  # coverage 0.5 in one bin
        bins = SizeBins(((0, 12),))
        assert sat(batch, bins, 0.0001) == pytest.approx(
            (1 - abs(0.5 - 0.9999)) / 2.0, abs=1e-9
        )

    def test_sat_monotone_in_mu_and_sscv(self):
        for s1, s2 in [(0.0, 0.1), (0.3, 0.5)]:
            assert (1 - s1) / 2.0 > (1 - s2) / 2.0
        for m1, m2 in [(1.0, 2.0), (3.0, 7.0)]:
            assert (1 - 0.1) / m1 > (1 - 0.1) / m2

    def test_against_scalar_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(40):
            n = int(rng.integers(1, 20))
            sizes = rng.integers(0, 6, n)
            hits = (rng.random(n) < 0.8) & (sizes > 0)
            delta = float(rng.uniform(0.05, 0.3))
            batch = make_batch(sizes, hits, k=5)
            bins = SizeBins(((0, 1), (2, 3), (4, 5)))
            want = oracle.sscv(list(sizes), list(hits), list(bins.ranges), delta)
            assert sscv(batch, bins, delta) == pytest.approx(want, abs=1e-12)
            if sizes.sum() > 0:
                want_sat = oracle.sat(list(sizes), list(hits), list(bins.ranges), delta)
                assert sat(batch, bins, delta) == pytest.approx(want_sat, abs=1e-12)


class TestLambdaSearch:
    def setup_method(self):
        self.ds = synth(8, 3000, 2.3, seed=31, sharpness=1.5)
        self.idx = split(self.ds, SplitSpec(0.3, seed=31))

    def test_singleton_grid(self):
        best, records = raps_lambda_search(
            self.ds, self.idx, lambda_grid=(0.01,), delta=0.1
        )
        assert best == 0.01 and len(records) == 1

    def test_zero_grid_reduces_to_aps(self):
        best, records = raps_lambda_search(
            self.ds, self.idx, lambda_grid=(0.0,), delta=0.1
        )
        t = fit_temperature(
            self.ds.logits[self.idx.calibration], self.ds.labels[self.idx.calibration]
        )
        matrix = compute_scores("aps", self.ds.logits, temperature=t)
        cal = matrix.true_label_scores(self.ds.labels)[self.idx.calibration]
        q = calibrate(cal, 0.1).q_hat
        batch = build_sets(matrix.take(self.idx.validation), q, self.ds.labels[self.idx.validation])
        assert records[0]["mean_size"] == mean_set_size(batch)
        assert records[0]["coverage"] == marginal_coverage(batch)

    def test_returned_lambda_minimizes_sscv(self):
        grid = (1e-4, 1e-3, 1e-2, 0.1, 1.0)
        best, records = raps_lambda_search(self.ds, self.idx, lambda_grid=grid, delta=0.1)
        best_sscv = next(r["sscv"] for r in records if r["lambda"] == best)
        assert all(best_sscv <= r["sscv"] for r in records)
        ties = [r["lambda"] for r in records if r["sscv"] == best_sscv]
        assert best == min(ties)

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError):
            raps_lambda_search(self.ds, self.idx, lambda_grid=())
