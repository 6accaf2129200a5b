"""RBF kernel and kernel-matrix construction.

k(x, y) = eta * exp(-||x - y||^2 / (2 l^2)), optionally clipped to zero below
a threshold (an epsilon graph over the bank).
"""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.spatial.distance import cdist, pdist, squareform

from gplabel.exceptions import DimensionMismatch


class KernelParams(BaseModel):
    """RBF hyper-parameters: scale eta, length scale l, optional clip level."""

    model_config = ConfigDict(frozen=True)

    eta: float = Field(default=1.0, gt=0, allow_inf_nan=False)
    length_scale: float = Field(default=1.0, gt=0, allow_inf_nan=False)
    clip_threshold: float | None = Field(default=None, ge=0, allow_inf_nan=False)

    @model_validator(mode="after")
    def _clip_below_eta(self) -> KernelParams:
        if self.clip_threshold is not None and self.clip_threshold >= self.eta:
            raise ValueError(
                f"clip_threshold must be < eta ({self.clip_threshold} >= {self.eta})"
            )
        return self


def _features(value: ArrayLike, name: str) -> NDArray[np.float64]:
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be n x d, got shape {arr.shape}", got=arr.shape)
    return arr


def _apply(sqdist: NDArray[np.float64], p: KernelParams) -> NDArray[np.float64]:
    out = np.exp(sqdist * (-0.5 / p.length_scale**2))
    out *= p.eta
    if p.clip_threshold is not None:
        out = np.where(out < p.clip_threshold, 0.0, out)
    return out


def rbf(x: ArrayLike, y: ArrayLike, p: KernelParams) -> float:
    """Kernel value between two feature vectors."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.shape != y.shape:
        raise DimensionMismatch(
            f"rbf operands differ in dimension: {x.size} vs {y.size}",
            expected=x.size,
            got=y.size,
        )
    diff = x - y
    return float(_apply(np.asarray(diff @ diff), p))


def kernel_matrix(
    X: ArrayLike, Y: ArrayLike | None, p: KernelParams
) -> NDArray[np.float64]:
    """n x m matrix of k(X_i, Y_j).

    With Y None (or the same object as X) distances are computed once per
    unordered pair, so the result is exactly symmetric with eta on the
    diagonal. Noise is not added here.
    """
    same = Y is None or Y is X
    X = _features(X, "X")
    if same:
        n = X.shape[0]
        if n < 2:
            return np.full((n, n), p.eta)
        sq = squareform(pdist(X, "sqeuclidean"))
        return _apply(sq, p)

    Y = _features(Y, "Y")
    if X.shape[1] != Y.shape[1]:
        raise DimensionMismatch(
            f"feature widths differ: {X.shape[1]} vs {Y.shape[1]}",
            expected=X.shape[1],
            got=Y.shape[1],
        )
    if X.shape[0] == 0 or Y.shape[0] == 0:
        return np.zeros((X.shape[0], Y.shape[0]))
    return _apply(cdist(X, Y, "sqeuclidean"), p)
