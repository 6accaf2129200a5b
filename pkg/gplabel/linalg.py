"""Dense 64-bit linear algebra for the GP inverse cache.

Provides Cholesky factorization and solves, the direct inverse, and the
block-matrix pair that maintains K^-1 when B rows of the covariance change:

    downdate_inverse        A^-1 = M11 - M12 M22^-1 M12^T
    block_inverse_assemble  K22 = (D - C^T A^-1 C)^-1, K12 = -A^-1 C K22,
                            K11 = A^-1 + A^-1 C K22 C^T A^-1
    replace_inverse         both of the above fused in place, slot order kept

Both incremental operations invert a single B x B matrix; everything else is
matrix products, so a replacement costs O(B N^2) instead of O(N^3).
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from gplabel.exceptions import (
    DimensionMismatch,
    LinalgError,
    NotPositiveDefinite,
    SchurNotPositiveDefinite,
    SingularSubBlock,
)

logger = logging.getLogger(__name__)

Matrix = NDArray[np.float64]

SYMMETRY_RTOL = 1e-9
MAX_SUBBLOCK_CONDITION = 1e12


@dataclass(frozen=True)
class SpdFactor:
    """Lower Cholesky factor L of an SPD matrix K = L L^T."""

    lower: Matrix

    @property
    def dim(self) -> int:
        return self.lower.shape[0]


def as_matrix(value: ArrayLike, name: str = "matrix") -> Matrix:
    """Coerce to a finite 2-D float64 array."""
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {arr.shape}", got=arr.shape)
    if not np.isfinite(arr).all():
        raise LinalgError(f"{name} contains non-finite entries")
    return arr


def _as_square(value: ArrayLike, name: str) -> Matrix:
    arr = as_matrix(value, name)
    if arr.shape[0] != arr.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {arr.shape}", got=arr.shape)
    return arr


def _require_symmetric(K: Matrix, name: str) -> None:
    if K.size == 0:
        return
    scale = float(np.abs(K).max())
    asym = float(np.abs(K - K.T).max())
    if asym > SYMMETRY_RTOL * scale:
        raise NotPositiveDefinite(f"{name} is not symmetric (max asymmetry {asym:.3e})")


def _index_set(indices: Sequence[int] | ArrayLike, n: int, name: str) -> NDArray[np.intp]:
    """Validate a list of distinct row indices into an n x n matrix, order kept."""
    idx = np.asarray(indices, dtype=np.intp).reshape(-1)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise DimensionMismatch(f"{name} indices out of range for dimension {n}")
    if np.unique(idx).size != idx.size:
        raise DimensionMismatch(f"{name} indices must be distinct")
    return idx


def symmetrize(M: Matrix) -> Matrix:
    """Replace M by (M + M^T) / 2 in place and return it."""
    M += M.T
    M *= 0.5
    return M


def inverse_residual(K: ArrayLike, K_inv: ArrayLike) -> float:
    """max |K K^-1 - I|."""
    K = np.asarray(K, dtype=np.float64)
    prod = K @ np.asarray(K_inv, dtype=np.float64)
    prod[np.diag_indices_from(prod)] -= 1.0
    return float(np.abs(prod).max()) if prod.size else 0.0


def spd_factor(K: ArrayLike) -> SpdFactor:
    """Cholesky-factor a symmetric positive-definite matrix.

    Raises:
        NotPositiveDefinite: K is asymmetric or a pivot is not strictly positive.
        DimensionMismatch: K is not square.
    """
    K = _as_square(K, "K")
    _require_symmetric(K, "K")
    if K.shape[0] == 0:
        return SpdFactor(np.zeros((0, 0)))
    try:
        lower = scipy.linalg.cholesky(K, lower=True, check_finite=False)
    except np.linalg.LinAlgError as e:
        n = K.shape[0]
        raise NotPositiveDefinite(f"K ({n}x{n}) is not positive definite", cause=e)
    if not (np.diag(lower) > 0).all():
        raise NotPositiveDefinite("K has a non-positive Cholesky pivot")
    return SpdFactor(lower)


def spd_solve(factor: SpdFactor, B: ArrayLike) -> Matrix:
    """Solve K X = B given the Cholesky factor of K."""
    rhs = np.asarray(B, dtype=np.float64)
    if rhs.shape[0] != factor.dim:
        raise DimensionMismatch(
            f"right-hand side has {rhs.shape[0]} rows, factor has dimension {factor.dim}",
            expected=factor.dim,
            got=rhs.shape[0],
        )
    if factor.dim == 0:
        return np.zeros_like(rhs)
    return scipy.linalg.cho_solve((factor.lower, True), rhs, check_finite=False)


def direct_inverse(K: ArrayLike) -> Matrix:
    """Invert an SPD matrix through its Cholesky factor (LAPACK potri)."""
    factor = spd_factor(K)
    n = factor.dim
    if n == 0:
        return np.zeros((0, 0))
    inv_lower, info = scipy.linalg.lapack.dpotri(factor.lower, lower=1)
    if info != 0:
        raise NotPositiveDefinite(f"potri failed with info={info}")
    # potri only fills the lower triangle
    inv = np.tril(inv_lower)
    inv += np.tril(inv_lower, -1).T
    return inv


def _small_spd_inverse(S: Matrix, error: type[NotPositiveDefinite], what: str) -> Matrix:
    symmetrize(S)
    try:
        factor = spd_factor(S)
    except NotPositiveDefinite as e:
        raise error(f"{what} is not positive definite", cause=e)
    inv = spd_solve(factor, np.eye(S.shape[0]))
    return symmetrize(inv)


def _check_subblock(M22: Matrix) -> None:
    if M22.size == 0:
        return
    cond = float(np.linalg.cond(M22))
    if not np.isfinite(cond) or cond > MAX_SUBBLOCK_CONDITION:
        raise SingularSubBlock(
            f"removed sub-block is numerically singular (condition {cond:.3e})", condition=cond
        )


def _solve_subblock(M22: Matrix, rhs: Matrix) -> Matrix:
    try:
        return scipy.linalg.solve(M22, rhs, assume_a="pos", check_finite=False)
    except np.linalg.LinAlgError as e:
        raise SingularSubBlock("removed sub-block is not positive definite", cause=e)


def block_inverse_assemble(A_inv: ArrayLike, C: ArrayLike, D: ArrayLike) -> Matrix:
    """Inverse of [[A, C], [C^T, D]] from A^-1 with one B x B inversion.

    Args:
        A_inv: (m x m) inverse of the retained block A.
        C: (m x B) cross-covariance between retained and new samples.
        D: (B x B) new-sample block, noise already on the diagonal.

    Raises:
        SchurNotPositiveDefinite: D - C^T A^-1 C is not SPD.
    """
    A_inv = _as_square(A_inv, "A_inv")
    D = _as_square(D, "D")
    C = as_matrix(C, "C")
    m, b = A_inv.shape[0], D.shape[0]
    if C.shape != (m, b):
        raise DimensionMismatch(f"C must be {m}x{b}, got {C.shape}", expected=(m, b), got=C.shape)

    AiC = A_inv @ C
    K22 = _small_spd_inverse(D - C.T @ AiC, SchurNotPositiveDefinite, "Schur complement")
    K12 = -AiC @ K22

    out = np.empty((m + b, m + b))
    out[:m, :m] = A_inv
    out[:m, :m] -= K12 @ AiC.T
    out[:m, m:] = K12
    out[m:, :m] = K12.T
    out[m:, m:] = K22
    return symmetrize(out)


def downdate_inverse(K_prev_inv: ArrayLike, removed: Sequence[int] | ArrayLike) -> Matrix:
    """Inverse of the covariance with the `removed` rows and columns deleted.

    Rows may sit anywhere; the kept rows come back in ascending index order.

    Raises:
        SingularSubBlock: the removed x removed block of K_prev_inv has
            condition number above 1e12.
    """
    M = _as_square(K_prev_inv, "K_prev_inv")
    n = M.shape[0]
    idx = _index_set(removed, n, "removed")
    keep = np.setdiff1d(np.arange(n), idx)
    if idx.size == 0:
        return M.copy()
    if keep.size == 0:
        return np.zeros((0, 0))

    M22 = M[np.ix_(idx, idx)]
    _check_subblock(M22)
    M12 = M[np.ix_(keep, idx)]
    out = M[np.ix_(keep, keep)]
    out -= M12 @ _solve_subblock(M22, M12.T)
    return symmetrize(out)


def replace_inverse(
    K_inv: Matrix,
    slots: Sequence[int] | ArrayLike,
    cross: ArrayLike,
    D: ArrayLike,
) -> Matrix:
    """Update K^-1 in place after the samples at `slots` were replaced.

    Same result as downdate_inverse(K_inv, slots) followed by
    block_inverse_assemble and a permutation back to slot order, but computed
    as two rank-B corrections on the full matrix:

        M' = M - M[:, R] M[R, R]^-1 M[R, :]        (rows/cols R become 0)
        U  = M' c,  S = D - c^T U,  W = U - E_R
        M  = M' + W S^-1 W^T

    where c is `cross` with rows R zeroed and E_R holds the identity columns
    for R. The new sample j ends up at slot `slots[j]`. gp_insert takes this
    path for replaced slots, so downdate_inverse and block_inverse_assemble
    stay the reference two-step form of the same update.

    Args:
        K_inv: N x N float64 inverse, modified in place.
        slots: B distinct slot indices, in the order of the new samples.
        cross: N x B kernel between every slot's current feature and the new
            samples (rows for `slots` are ignored).
        D: B x B kernel among the new samples plus sigma^2 I.

    Returns:
        K_inv, updated.
    """
    M = K_inv
    n = M.shape[0]
    R = _index_set(slots, n, "slots")
    b = R.size
    if b == 0:
        return M
    c = np.array(cross, dtype=np.float64)
    D = _as_square(D, "D")
    if c.shape != (n, b) or D.shape[0] != b:
        raise DimensionMismatch(
            f"cross must be {n}x{b} and D {b}x{b}, got {c.shape} and {D.shape}",
            expected=(n, b),
            got=c.shape,
        )

    # downdate: drop rows/cols R
    M22 = M[np.ix_(R, R)]
    _check_subblock(M22)
    P = M[:, R]
    M -= P @ _solve_subblock(M22, P.T)
    M[R, :] = 0.0
    M[:, R] = 0.0

    # assemble: new samples back into rows/cols R
    c[R, :] = 0.0
    U = M @ c
    K22 = _small_spd_inverse(D - c.T @ U, SchurNotPositiveDefinite, "Schur complement")
    U[R, np.arange(b)] -= 1.0
    M += (U @ K22) @ U.T
    logger.debug("replaced %d of %d rows in cached inverse", b, n)
    return symmetrize(M)
