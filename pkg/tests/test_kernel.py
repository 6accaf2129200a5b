"""Tests for gplabel.kernel: RBF values, kernel matrices, clipping, params."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from pydantic import ValidationError

from gplabel.exceptions import DimensionMismatch
from gplabel.kernel import KernelParams, kernel_matrix, rbf

# =============================================================================
# Test: KernelParams
# =============================================================================


class TestKernelParams:
    """Hyper-parameter validation."""

    def test_defaults(self):
        """eta=1, l=1, no clipping."""
        p = KernelParams()
        assert (p.eta, p.length_scale, p.clip_threshold) == (1.0, 1.0, None)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"eta": 0.0},
            {"length_scale": -1.0},
            {"eta": float("inf")},
            {"clip_threshold": -0.1},
            {"eta": 1.0, "clip_threshold": 1.0},
        ],
    )
    def test_invalid(self, kwargs):
        """Non-positive, non-finite or clip >= eta values are rejected."""
        with pytest.raises(ValidationError):
            KernelParams(**kwargs)

    def test_frozen(self):
        """Params cannot be mutated after construction."""
        p = KernelParams()
        with pytest.raises(ValidationError):
            p.eta = 2.0


# =============================================================================
# Test: rbf
# =============================================================================


class TestRbf:
    """Pointwise kernel values."""

    def test_same_point(self):
        """k(x, x) = eta."""
        assert rbf([1.0, 2.0], [1.0, 2.0], KernelParams(eta=2.5)) == 2.5

    def test_unit_distance(self):
        """k at distance 1 with l=1 is exp(-1/2)."""
        assert rbf([0.0, 0.0], [1.0, 0.0], KernelParams()) == pytest.approx(np.exp(-0.5))

    def test_symmetric(self):
        """k(x, y) = k(y, x)."""
        p = KernelParams(length_scale=0.7)
        assert rbf([0.1, 0.3], [-1.0, 2.0], p) == rbf([-1.0, 2.0], [0.1, 0.3], p)

    def test_clip(self):
        """Values below the clip level become exactly zero."""
        p = KernelParams(clip_threshold=0.5)
        assert rbf([0.0], [3.0], p) == 0.0
        assert rbf([0.0], [0.5], p) == pytest.approx(np.exp(-0.125))

    def test_clip_matches_matrix(self):
        """exp(-2) < 0.2 at distance 2, so the pointwise value agrees with the matrix."""
        p = KernelParams(clip_threshold=0.2)
        assert rbf([0.0, 0.0], [0.0, 2.0], p) == 0.0
        assert kernel_matrix([[0.0, 0.0]], [[0.0, 2.0]], p)[0, 0] == 0.0

    @given(st.floats(0.0, 5.0), st.floats(0.01, 5.0))
    def test_strictly_decreasing(self, r, dr):
        """Moving further away strictly lowers the kernel value."""
        p = KernelParams(length_scale=2.0)
        near = rbf([0.0, 0.0], [r, 0.0], p)
        far = rbf([0.0, 0.0], [r + dr, 0.0], p)
        assert far < near

    def test_dimension_mismatch(self):
        """Operands of different widths raise DimensionMismatch."""
        with pytest.raises(DimensionMismatch):
            rbf([0.0, 1.0], [0.0], KernelParams())


# =============================================================================
# Test: kernel_matrix
# =============================================================================


class TestKernelMatrix:
    """Matrix construction over feature sets."""

    def test_self_symmetric_with_eta_diagonal(self):
        """K(X, X) is exactly symmetric with eta on the diagonal."""
        X = np.random.default_rng(0).standard_normal((20, 4))
        K = kernel_matrix(X, None, KernelParams(eta=1.7, length_scale=2.0))
        np.testing.assert_array_equal(K, K.T)
        np.testing.assert_array_equal(np.diag(K), np.full(20, 1.7))

    @given(
        arrays(
            np.float64,
            st.tuples(st.integers(1, 12), st.integers(1, 4)),
            elements=st.floats(-50, 50, allow_nan=False),
        ),
        st.floats(0.1, 10.0),
    )
    def test_symmetric_bounded(self, X, length_scale):
        """K(X, X) is symmetric with entries in [0, eta]."""
        K = kernel_matrix(X, None, KernelParams(length_scale=length_scale))
        np.testing.assert_array_equal(K, K.T)
        assert (K >= 0).all()
        assert (K <= 1.0).all()

    def test_same_object(self):
        """Passing X twice takes the same path as Y=None."""
        X = np.random.default_rng(1).standard_normal((6, 3))
        p = KernelParams()
        np.testing.assert_array_equal(kernel_matrix(X, X, p), kernel_matrix(X, None, p))

    def test_matches_rbf(self):
        """Every entry equals the pointwise kernel."""
        rng = np.random.default_rng(2)
        X, Y = rng.standard_normal((4, 3)), rng.standard_normal((5, 3))
        p = KernelParams(eta=0.5, length_scale=1.3)
        K = kernel_matrix(X, Y, p)
        assert K.shape == (4, 5)
        for i in range(4):
            for j in range(5):
                assert K[i, j] == pytest.approx(rbf(X[i], Y[j], p), rel=1e-12)

    def test_single_row(self):
        """One row gives [[eta]]."""
        np.testing.assert_array_equal(kernel_matrix([[1.0, 2.0]], None, KernelParams()), [[1.0]])

    def test_empty(self):
        """An empty side gives an empty matrix."""
        assert kernel_matrix(np.zeros((0, 2)), np.ones((3, 2)), KernelParams()).shape == (0, 3)

    def test_clip_keeps_diagonal(self):
        """Clipping zeroes far pairs but never the diagonal."""
        X = np.array([[0.0], [10.0]])
        K = kernel_matrix(X, None, KernelParams(clip_threshold=0.1))
        np.testing.assert_array_equal(K, np.eye(2))

    def test_width_mismatch(self):
        """Different feature widths raise DimensionMismatch."""
        with pytest.raises(DimensionMismatch):
            kernel_matrix(np.ones((2, 2)), np.ones((2, 3)), KernelParams())
