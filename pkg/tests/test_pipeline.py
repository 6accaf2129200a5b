"""Tests for gplabel.pipeline: predictors, refined labels, confidence maps."""

import numpy as np
import pytest

from gplabel.exceptions import DimensionMismatch
from gplabel.io import ExperimentConfig, GridSpec, ModelKind
from gplabel.pipeline import Predictors, confidence_map, evaluate_grid, refine_unlabeled
from gplabel.toydata import ClusterSpec, LabeledDataset, sample_clusters


def _two_blobs(unlabeled):
    ds = sample_clusters(ClusterSpec(centers=[(-2, 0), (2, 0)], counts=[20, 20], std=0.3))
    ds.unlabeled = np.asarray(unlabeled, dtype=np.float64)
    return ds


def _config(**values):
    base = {"kernel.length_scale": 1.0, "gp.sigma": 0.5, "gp.lambda": 10.0}
    return ExperimentConfig.model_validate({**base, **values})


# =============================================================================
# Test: Predictors
# =============================================================================


class TestPredictors:
    """Classifiers built from the labeled rows."""

    @pytest.mark.parametrize("kind", list(ModelKind))
    def test_logits_shape(self, kind):
        """Every predictor returns n x C logits."""
        ds = _two_blobs([[0.0, 0.0]])
        z = Predictors(ds, _config(**{"linear.epochs": 50})).logits(kind)(np.zeros((3, 2)))
        assert z.shape == (3, 2)

    def test_bank_follows_config(self):
        """bank.capacity and bank.mode shape the memory bank."""
        ds = _two_blobs([[0.0, 0.0]])
        cfg = _config(**{"bank.capacity": 10, "bank.mode": "balanced"})
        bank = Predictors(ds, cfg).bank
        assert bank.capacity == 10
        np.testing.assert_array_equal(bank.class_counts(), [5, 5])

    def test_no_labeled_rows(self):
        """A dataset without labeled rows cannot build predictors."""
        ds = LabeledDataset(np.zeros((0, 2)), [], unlabeled=np.zeros((1, 2)), num_classes=2)
        with pytest.raises(DimensionMismatch):
            Predictors(ds, _config())


# =============================================================================
# Test: refine_unlabeled
# =============================================================================


class TestRefineUnlabeled:
    """Pseudo-labels for the unlabeled pool."""

    def test_confident_and_far_rows(self):
        """Points on a cluster get its label; a far point stays below tau."""
        ds = _two_blobs([[-2.0, 0.0], [2.0, 0.0], [10.0, 10.0]])
        out = refine_unlabeled(ds, _config())
        np.testing.assert_array_equal(out.masked, [True, True, False])
        np.testing.assert_array_equal(out.pred_class, [0, 1, -1])
        assert out.conf[2] == pytest.approx(0.5)

    def test_smooth_with_gp_source(self):
        """Smoothing with a GP aggregate keeps confident predictions."""
        ds = _two_blobs([[-2.0, 0.0], [2.0, 0.0]])
        cfg = _config(**{"refine.policy": "smooth", "refine.source": "gp"})
        out = refine_unlabeled(ds, cfg)
        np.testing.assert_array_equal(out.pred_class, [0, 1])

    def test_no_unlabeled_rows(self):
        """Nothing to refine raises DimensionMismatch."""
        ds = sample_clusters(ClusterSpec(centers=[(0, 0), (1, 1)], counts=[2, 2], std=0.1))
        with pytest.raises(DimensionMismatch):
            refine_unlabeled(ds, _config())

    def test_similarity_model(self):
        """The similarity baseline is selectable as the weak model."""
        ds = _two_blobs([[-2.0, 0.0]])
        out = refine_unlabeled(ds, _config(**{"refine.model": "similarity"}))
        assert out.pred_class[0] == 0


# =============================================================================
# Test: confidence maps
# =============================================================================


class TestConfidenceMap:
    """Grid evaluation."""

    def test_grid(self):
        """One confidence and argmax per grid point, y outer."""
        ds = _two_blobs([[0.0, 0.0]])
        grid = GridSpec.parse("-2,2,0,0,2,1")
        result = confidence_map(ds, _config(), ModelKind.GP, grid)
        np.testing.assert_array_equal(result.argmax, [0, 1])
        assert result.conf.shape == (2,)
        assert (result.conf > 0.5).all()

    def test_requires_2d(self):
        """Features must be two-dimensional."""
        ds = LabeledDataset(np.zeros((2, 3)), [0, 1])
        with pytest.raises(DimensionMismatch):
            confidence_map(ds, _config(), ModelKind.GP, GridSpec.parse("0,1,0,1,2,2"))

    def test_evaluate_grid_callable(self):
        """Any logits function can be mapped over a grid."""
        grid = GridSpec.parse("-1,1,0,0,3,1")
        result = evaluate_grid(lambda q: np.column_stack([q[:, 0], -q[:, 0]]), grid)
        np.testing.assert_array_equal(result.argmax, [1, 0, 0])
        assert result.conf[1] == pytest.approx(0.5)
