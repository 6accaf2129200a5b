"""Tests for gplabel.toydata: long-tail counts, RNG and dataset presets."""

import numpy as np
import pytest
from pydantic import ValidationError

from gplabel.exceptions import DimensionMismatch, InvalidLabel
from gplabel.toydata import (
    FIG3_CENTERS,
    ClusterSpec,
    ImbalanceSpec,
    LabeledDataset,
    Rounding,
    box_muller,
    fig1_preset,
    fig3_preset,
    labeled_fraction,
    longtail_counts,
    longtail_dataset,
    make_rng,
    sample_clusters,
)

# =============================================================================
# Test: longtail_counts
# =============================================================================


class TestLongtailCounts:
    """N_i = N_1 gamma^(-(i-1)/(K-1)) with rounding."""

    @pytest.mark.parametrize("gamma, tail", [(150, 10), (100, 15)])
    def test_cifar10_tail(self, gamma, tail):
        """K=10, N_1=1500: the last class has N_1 / gamma samples."""
        n1 = 1500
        counts = longtail_counts(ImbalanceSpec(num_classes=10, majority_count=n1, gamma=gamma))
        assert counts[0] == n1
        assert counts[-1] == tail

    def test_cifar100_total(self):
        """K=100, N_1=150, gamma=100 totals about 3218."""
        counts = longtail_counts(ImbalanceSpec(num_classes=100, majority_count=150, gamma=100))
        assert abs(int(counts.sum()) - 3218) <= 32
        assert counts[-1] == 1

    def test_half_up(self):
        """Rounding half up turns the 1.5 tail into 2."""
        spec = ImbalanceSpec(
            num_classes=100, majority_count=150, gamma=100, rounding=Rounding.HALF_UP
        )
        assert longtail_counts(spec)[-1] == 2

    def test_non_increasing_and_positive(self):
        """Counts never increase and never drop below 1."""
        counts = longtail_counts(ImbalanceSpec(num_classes=50, majority_count=5, gamma=1000))
        assert (np.diff(counts) <= 0).all()
        assert counts.min() == 1

    def test_balanced(self):
        """gamma = 1 gives equal counts."""
        counts = longtail_counts(ImbalanceSpec(num_classes=4, majority_count=7, gamma=1))
        np.testing.assert_array_equal(counts, [7, 7, 7, 7])

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"num_classes": 1, "majority_count": 10, "gamma": 10},
            {"num_classes": 3, "majority_count": 0, "gamma": 10},
            {"num_classes": 3, "majority_count": 10, "gamma": 0.5},
        ],
    )
    def test_invalid(self, kwargs):
        """K >= 2, N_1 >= 1, gamma >= 1."""
        with pytest.raises(ValidationError):
            ImbalanceSpec(**kwargs)


# =============================================================================
# Test: random source
# =============================================================================


class TestRng:
    """Box-Muller normals over PCG64 uniforms."""

    def test_deterministic(self):
        """Same seed, same draws."""
        np.testing.assert_array_equal(box_muller(make_rng(7), 11), box_muller(make_rng(7), 11))

    def test_layout(self):
        """u1 block then u2 block, outputs interleaved cos, sin."""
        u = make_rng(3).random(4)
        r = np.sqrt(-2.0 * np.log1p(-u[:2]))
        expected = [r[0] * np.cos(2 * np.pi * u[2]), r[0] * np.sin(2 * np.pi * u[2]),
                    r[1] * np.cos(2 * np.pi * u[3])]
        np.testing.assert_allclose(box_muller(make_rng(3), 3), expected, rtol=1e-15)

    def test_moments(self):
        """Large samples have mean 0 and variance 1."""
        z = box_muller(make_rng(0), 200_000)
        assert abs(z.mean()) < 0.01
        assert abs(z.var() - 1.0) < 0.01


# =============================================================================
# Test: datasets
# =============================================================================


class TestLabeledDataset:
    """Validation of dataset containers."""

    def test_infers_classes(self):
        """num_classes defaults to max id + 1."""
        ds = LabeledDataset(np.zeros((3, 2)), [0, 2, 1])
        assert ds.num_classes == 3
        assert ds.num_unlabeled == 0

    def test_bad_label(self):
        """Ids outside [0, C) raise InvalidLabel."""
        with pytest.raises(InvalidLabel):
            LabeledDataset(np.zeros((2, 2)), [0, 3], num_classes=2)

    def test_shape_mismatch(self):
        """One id per row."""
        with pytest.raises(DimensionMismatch):
            LabeledDataset(np.zeros((2, 2)), [0])

    def test_unlabeled_width(self):
        """Unlabeled rows share the labeled width."""
        with pytest.raises(DimensionMismatch):
            LabeledDataset(np.zeros((2, 2)), [0, 1], unlabeled=np.zeros((1, 3)))


class TestClusters:
    """Seeded Gaussian clusters."""

    def test_counts_and_labels(self):
        """Each cluster contributes its count under its class id."""
        ds = sample_clusters(ClusterSpec(centers=[(0, 0), (5, 5)], counts=[3, 4], std=0.1))
        np.testing.assert_array_equal(ds.class_counts(), [3, 4])

    def test_outliers_unlabeled(self):
        """Outliers without a class go to the unlabeled pool with truth -1."""
        spec = ClusterSpec(centers=[(0, 0)], counts=[2], std=0.1, outliers=[(9, 9)])
        ds = sample_clusters(spec)
        np.testing.assert_array_equal(ds.unlabeled, [[9.0, 9.0]])
        np.testing.assert_array_equal(ds.unlabeled_truth, [-1])

    def test_mixed_dims(self):
        """Centers of different widths are rejected."""
        with pytest.raises(ValidationError):
            ClusterSpec(centers=[(0, 0), (1, 1, 1)], counts=[1, 1], std=0.1)


class TestPresets:
    """fig3, fig1 and long-tail layouts."""

    def test_fig3_counts(self):
        """Counts double clockwise from the minority at (1, 1)."""
        ds = fig3_preset(n_minority=10)
        np.testing.assert_array_equal(ds.class_counts(), [10, 20, 40, 80])
        np.testing.assert_array_equal(ds.eval_points, [[-3.0, 3.0]])

    def test_fig3_centered(self):
        """Cluster means sit near their centers."""
        ds = fig3_preset(n_minority=50, std=0.1)
        for c, center in enumerate(FIG3_CENTERS):
            mean = ds.features[ds.class_ids == c].mean(axis=0)
            np.testing.assert_allclose(mean, center, atol=0.05)

    def test_fig3_reproducible(self):
        """Same seed, identical dataset."""
        np.testing.assert_array_equal(fig3_preset(seed=4).features, fig3_preset(seed=4).features)

    def test_fig1_regions(self):
        """Regions index the unlabeled pool with the expected truths."""
        ds = fig1_preset()
        assert ds.num_labeled == 114
        assert ds.num_unlabeled == 1270
        assert (ds.unlabeled_truth[ds.regions["B"]] == 1).all()
        assert (ds.unlabeled_truth[ds.regions["C"]] == -1).all()
        assert ds.regions["C"].size == 20
        assert ds.regions["A"].size > 0
        assert np.isin(ds.unlabeled_truth[ds.regions["A"]], [2, 3]).all()

    def test_longtail(self):
        """Labeled and unlabeled pools follow their own imbalance."""
        ds = longtail_dataset(10, 100, 10.0, n1_unlabeled=400, gamma_unlabeled=100.0)
        assert ds.class_counts()[0] == 100
        assert ds.class_counts()[-1] == 10
        assert np.bincount(ds.unlabeled_truth)[-1] == 4
        assert 0 < labeled_fraction(ds) < 1

    def test_longtail_labeled_only(self):
        """Without an unlabeled pool the fraction is 1."""
        ds = longtail_dataset(3, 20, 2.0)
        assert ds.unlabeled is None
        assert labeled_fraction(ds) == 1.0
