"""GP classifier over a memory bank, plus the similarity and linear baselines.

The posterior mean of a GP regression on one-hot bank labels gives the logits

    logits(x) = lambda * k(x, h_Q) K^-1 y_Q,    K = k(h_Q, h_Q) + sigma^2 I

GpState caches K^-1 in bank slot order and keeps it consistent with the bank
under streaming inserts: replaced slots go through a rank-B replace, appended
slots through a block assemble, and every `refresh_period` inserts the inverse
is rebuilt directly to bound drift.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import log_softmax, softmax

from gplabel.bank import BankMode, MemoryBank
from gplabel.exceptions import (
    DegenerateData,
    DimensionMismatch,
    LinalgError,
    StaleStateError,
)
from gplabel.kernel import KernelParams, kernel_matrix
from gplabel.linalg import block_inverse_assemble, direct_inverse, replace_inverse

logger = logging.getLogger(__name__)

DEFAULT_REFRESH_PERIOD = 256


class GpConfig(BaseModel):
    """GP hyper-parameters.

    Attributes:
        kernel: RBF parameters.
        sigma: observation-noise std; sigma > 0 keeps K positive definite.
        logit_scale: lambda, multiplies the posterior mean.
        refresh_period: rebuild K^-1 directly every this many inserts
            (None never rebuilds).
    """

    model_config = ConfigDict(frozen=True)

    kernel: KernelParams = Field(default_factory=KernelParams)
    sigma: float = Field(default=1.0, gt=0, allow_inf_nan=False)
    logit_scale: float = Field(default=1.0, gt=0, allow_inf_nan=False)
    refresh_period: int | None = Field(default=DEFAULT_REFRESH_PERIOD, ge=1)


@dataclass(frozen=True)
class Posterior:
    """Posterior-mean logits and the state generation that produced them."""

    logits: NDArray[np.float64]
    generation: int


@dataclass
class GpState:
    """Cached inverse covariance tied to one memory bank.

    Rows of `K_inv` follow the bank's occupied slots in ascending order.
    Inserts and queries take `lock`, so a query never sees a half-applied
    update.
    """

    config: GpConfig
    bank: MemoryBank
    K_inv: NDArray[np.float64]
    generation: int = 0
    updates_since_refresh: int = 0
    bank_version: int = 0
    refreshes: int = 0
    _propagated: NDArray[np.float64] | None = field(default=None, repr=False)
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)


def _check_fresh(state: GpState) -> None:
    if state.bank_version != state.bank.version:
        raise StaleStateError(
            f"GP state built at bank version {state.bank_version}, "
            f"bank is now at {state.bank.version}",
            state_version=state.bank_version,
            bank_version=state.bank.version,
        )


def _bank_rows(bank: MemoryBank) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Features and labels of occupied slots, in K_inv row order."""
    if bank.is_full:
        return bank.features, bank.labels
    occ = bank.occupied()
    return bank.features[occ], bank.labels[occ]


def _covariance(features: NDArray[np.float64], config: GpConfig) -> NDArray[np.float64]:
    K = kernel_matrix(features, None, config.kernel)
    K[np.diag_indices_from(K)] += config.sigma**2
    return K


def _rebuild(state: GpState) -> None:
    snap = state.bank.snapshot()
    state.K_inv = direct_inverse(_covariance(snap.features, state.config))
    state.updates_since_refresh = 0
    state.refreshes += 1


def gp_warmup(config: GpConfig, bank: MemoryBank) -> GpState:
    """Build the GP state by direct inversion over the bank's contents.

    Raises:
        EmptyBank: nothing stored yet.
    """
    snap = bank.snapshot()
    K_inv = direct_inverse(_covariance(snap.features, config))
    logger.info(
        "gp warmup: %d samples, eta=%g l=%g sigma=%g",
        snap.features.shape[0],
        config.kernel.eta,
        config.kernel.length_scale,
        config.sigma,
    )
    return GpState(config=config, bank=bank, K_inv=K_inv, bank_version=snap.version)


def _incremental(
    state: GpState,
    old_filled: int,
    replaced: NDArray[np.intp],
    appended: NDArray[np.intp],
) -> None:
    bank, config = state.bank, state.config
    noise = config.sigma**2

    if replaced.size:
        new = bank.features[replaced]
        cross = kernel_matrix(bank.features[:old_filled], new, config.kernel)
        D = kernel_matrix(new, None, config.kernel)
        D[np.diag_indices_from(D)] += noise
        replace_inverse(state.K_inv, replaced, cross, D)

    if appended.size:
        new = bank.features[appended]
        C = kernel_matrix(bank.features[:old_filled], new, config.kernel)
        D = kernel_matrix(new, None, config.kernel)
        D[np.diag_indices_from(D)] += noise
        state.K_inv = block_inverse_assemble(state.K_inv, C, D)


def gp_insert(state: GpState, feats: ArrayLike, class_ids: ArrayLike) -> GpState:
    """Insert a batch into the bank and bring K^-1 up to date.

    Duplicate slots within one batch collapse to their final write, which is
    the same inverse the sequential rank updates would give.

    Raises:
        StaleStateError: the bank was changed without going through this state.
        NotPositiveDefinite: the rebuilt covariance cannot be factored.
    """
    with state.lock:
        _check_fresh(state)
        bank = state.bank
        was_occupied = bank.occupied().copy()
        old_filled = bank.filled

        slots = bank.insert_batch(feats, class_ids)
        touched = np.unique(slots)
        replaced = touched[was_occupied[touched]]
        appended = touched[~was_occupied[touched]]

        period = state.config.refresh_period
        reason = None
        if period is not None and state.updates_since_refresh + 1 >= period:
            reason = "refresh period"
        elif old_filled == 0 or replaced.size == old_filled:
            reason = "all samples replaced"
        elif appended.size and bank.mode is BankMode.BALANCED:
            reason = "balanced warmup"

        if reason is None:
            try:
                _incremental(state, old_filled, replaced, appended)
                state.updates_since_refresh += 1
            except LinalgError as e:
                logger.warning("incremental inverse update failed (%s); rebuilding", e)
                reason = "incremental failure"
        if reason is not None:
            _rebuild(state)
            logger.debug("K_inv rebuilt directly (%s)", reason)

        state.generation += 1
        state.bank_version = bank.version
        state._propagated = None
        logger.debug(
            "gp insert gen=%d: %d replaced, %d appended",
            state.generation,
            replaced.size,
            appended.size,
        )
    return state


def _propagated(state: GpState) -> NDArray[np.float64]:
    if state._propagated is None:
        _, labels = _bank_rows(state.bank)
        state._propagated = state.K_inv @ labels
    return state._propagated


def propagated_labels(state: GpState) -> NDArray[np.float64]:
    """K^-1 y_Q: labels propagated through the graph K defines."""
    with state.lock:
        _check_fresh(state)
        return _propagated(state).copy()


def gp_posterior(state: GpState, query: ArrayLike) -> Posterior:
    """lambda * k(query, h_Q) K^-1 y_Q, tagged with the serving generation.

    Raises:
        DimensionMismatch: query width differs from the bank's.
        StaleStateError: the bank was changed behind the state's back.
    """
    query = np.asarray(query, dtype=np.float64)
    if query.ndim == 1:
        query = query.reshape(1, -1)
    with state.lock:
        _check_fresh(state)
        if query.shape[1] != state.bank.dim:
            raise DimensionMismatch(
                f"query width {query.shape[1]} != bank width {state.bank.dim}",
                expected=state.bank.dim,
                got=query.shape[1],
            )
        features, _ = _bank_rows(state.bank)
        k = kernel_matrix(query, features, state.config.kernel)
        logits = k @ _propagated(state)
        logits *= state.config.logit_scale
        return Posterior(logits=logits, generation=state.generation)


def gp_posterior_logits(state: GpState, query: ArrayLike) -> NDArray[np.float64]:
    return gp_posterior(state, query).logits


def similarity_logits(
    bank: MemoryBank, query: ArrayLike, kernel: KernelParams
) -> NDArray[np.float64]:
    """Kernel-similarity class mass k(query, h_Q) y_Q."""
    snap = bank.snapshot()
    return kernel_matrix(query, snap.features, kernel) @ snap.labels


# -- linear baseline ---------------------------------------------------------


@dataclass
class LinearModel:
    """Multinomial logistic model in raw feature space: logits = x W^T + b."""

    weights: NDArray[np.float64]
    bias: NDArray[np.float64]
    loss_history: list[float] = field(default_factory=list, repr=False)


def linear_fit(
    features: ArrayLike,
    class_ids: ArrayLike,
    num_classes: int | None = None,
    epochs: int = 2000,
    lr: float = 0.05,
) -> LinearModel:
    """Full-batch gradient descent on mean cross-entropy.

    Inputs are standardized, weights start at zero (so training is
    deterministic), and the standardization is folded back into the returned
    raw-space weights. `loss_history[i]` is the loss before epoch i's step.

    Raises:
        DegenerateData: fewer rows than classes, or a class has no rows.
    """
    X = np.asarray(features, dtype=np.float64)
    ids = np.asarray(class_ids).reshape(-1).astype(np.intp)
    if X.ndim != 2 or X.shape[0] != ids.size:
        raise DimensionMismatch(f"features {X.shape} do not match {ids.size} class ids")
    n, d = X.shape
    C = num_classes if num_classes is not None else (int(ids.max()) + 1 if n else 0)
    if C < 2 or n < C:
        raise DegenerateData(f"need at least {max(C, 2)} rows and 2 classes, got n={n} C={C}")
    counts = np.bincount(ids, minlength=C)
    if (counts == 0).any():
        raise DegenerateData(f"classes without samples: {np.flatnonzero(counts == 0).tolist()}")

    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    Z = (X - mu) / sd
    Y = np.eye(C)[ids]

    W = np.zeros((C, d))
    b = np.zeros(C)
    history: list[float] = []
    for _ in range(epochs):
        logits = Z @ W.T + b
        history.append(float(-(Y * log_softmax(logits, axis=1)).sum(axis=1).mean()))
        grad = (softmax(logits, axis=1) - Y) / n
        W -= lr * (grad.T @ Z)
        b -= lr * grad.sum(axis=0)

    W_raw = W / sd
    b_raw = b - W_raw @ mu
    if history:
        logger.info("linear fit: %d epochs, loss %.4f -> %.4f", epochs, history[0], history[-1])
    return LinearModel(weights=W_raw, bias=b_raw, loss_history=history)


def linear_logits(model: LinearModel, query: ArrayLike) -> NDArray[np.float64]:
    """query W^T + b."""
    query = np.asarray(query, dtype=np.float64)
    if query.ndim == 1:
        query = query.reshape(1, -1)
    if query.shape[1] != model.weights.shape[1]:
        raise DimensionMismatch(
            f"query width {query.shape[1]} != model width {model.weights.shape[1]}",
            expected=model.weights.shape[1],
            got=query.shape[1],
        )
    return query @ model.weights.T + model.bias
