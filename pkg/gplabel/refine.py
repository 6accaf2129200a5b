"""Pseudo-label refinement, confidence masking and the consistency losses.

A refinement function f maps the weak-view prediction of an unlabeled sample
to its training target:

    identity  softmax(z)
    hard      one-hot at argmax z (ties go to the lowest class)
    sharpen   softmax(z / T)
    smooth    (1 - alpha) softmax(z) + alpha normalize(aggregate)

The unlabeled loss keeps a sample only when conf(z) = max softmax(z) > tau
and scores the strong-view logits against f(z) with cross-entropy.

Everything operates on the last axis, so single vectors and batches share
one code path.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import StrEnum

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field
from scipy import special

from gplabel.exceptions import DimensionMismatch, InvalidDistribution, MissingAggregate

DEFAULT_TAU = 0.8
SIMPLEX_ATOL = 1e-9
AGGREGATE_EPS = 1e-12


class RefineVariant(StrEnum):
    IDENTITY = "identity"
    HARD = "hard"
    SHARPEN = "sharpen"
    SMOOTH = "smooth"


class AggregateSource(StrEnum):
    """Where smoothing takes its auxiliary class mass from."""

    SIMILARITY = "similarity"
    GP = "gp"


class RefinementPolicy(BaseModel):
    """Choice of refinement function and its parameters."""

    model_config = ConfigDict(frozen=True)

    variant: RefineVariant = RefineVariant.IDENTITY
    temperature: float = Field(default=1.0, gt=0, allow_inf_nan=False)
    alpha: float = Field(default=0.9, ge=0, le=1)
    source: AggregateSource = AggregateSource.SIMILARITY


@dataclass(frozen=True)
class SoftLabel:
    """Probability vector over C classes."""

    probs: NDArray[np.float64]

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 1 or p.size == 0:
            raise InvalidDistribution(f"soft label must be a non-empty vector, got {p.shape}")
        if (p < -SIMPLEX_ATOL).any() or (p > 1 + SIMPLEX_ATOL).any():
            raise InvalidDistribution("soft label entries must lie in [0, 1]")
        if abs(p.sum() - 1.0) > SIMPLEX_ATOL:
            raise InvalidDistribution(f"soft label sums to {p.sum():.12g}, not 1")
        object.__setattr__(self, "probs", p)

    @property
    def num_classes(self) -> int:
        return self.probs.size

    def argmax(self) -> int:
        return int(np.argmax(self.probs))


def _logits(value: ArrayLike) -> NDArray[np.float64]:
    return np.asarray(value, dtype=np.float64)


def softmax(logits: ArrayLike) -> NDArray[np.float64]:
    return special.softmax(_logits(logits), axis=-1)


def confidence(logits: ArrayLike) -> float | NDArray[np.float64]:
    """Largest softmax entry; a float for one vector, an array for a batch."""
    conf = softmax(logits).max(axis=-1)
    return float(conf) if conf.ndim == 0 else conf


def pseudo_label_mask(conf: float | ArrayLike, tau: float = DEFAULT_TAU) -> bool | NDArray:
    """conf > tau, strictly."""
    out = np.asarray(conf) > tau
    return bool(out) if out.ndim == 0 else out


def normalize_aggregate(aggregate: ArrayLike) -> NDArray[np.float64]:
    """Clamp class mass at zero and divide by its sum; uniform when the sum vanishes."""
    mass = np.clip(_logits(aggregate), 0.0, None)
    total = mass.sum(axis=-1, keepdims=True)
    empty = total < AGGREGATE_EPS
    out = np.divide(mass, total, out=np.zeros_like(mass), where=~empty)
    return np.where(empty, 1.0 / mass.shape[-1], out)


def refine_probs(
    policy: RefinementPolicy,
    model_logits: ArrayLike,
    aggregate_logits: ArrayLike | None = None,
) -> NDArray[np.float64]:
    """Apply f along the last axis.

    Raises:
        MissingAggregate: smoothing without aggregate logits.
        DimensionMismatch: aggregate shape differs from the model logits.
    """
    z = _logits(model_logits)
    match policy.variant:
        case RefineVariant.IDENTITY:
            return softmax(z)
        case RefineVariant.HARD:
            out = np.zeros_like(z)
            winners = np.expand_dims(np.argmax(z, axis=-1), -1)
            np.put_along_axis(out, winners, 1.0, axis=-1)
            return out
        case RefineVariant.SHARPEN:
            return softmax(z / policy.temperature)
        case RefineVariant.SMOOTH:
            if aggregate_logits is None:
                raise MissingAggregate("smooth refinement needs aggregate logits")
            agg = _logits(aggregate_logits)
            if agg.shape != z.shape:
                raise DimensionMismatch(
                    f"aggregate shape {agg.shape} != logits shape {z.shape}",
                    expected=z.shape,
                    got=agg.shape,
                )
            a = policy.alpha
            return (1.0 - a) * softmax(z) + a * normalize_aggregate(agg)
    raise AssertionError(policy.variant)


def refine_label(
    policy: RefinementPolicy,
    model_logits: ArrayLike,
    aggregate_logits: ArrayLike | None = None,
) -> SoftLabel:
    """Refined target for one sample."""
    z = _logits(model_logits)
    if z.ndim != 1:
        raise DimensionMismatch(f"refine_label takes one logit vector, got {z.shape}")
    return SoftLabel(refine_probs(policy, z, aggregate_logits))


def cross_entropy(pred_logits: ArrayLike, target: SoftLabel | ArrayLike) -> float | NDArray:
    """-sum_c t_c log softmax(z)_c along the last axis."""
    t = target.probs if isinstance(target, SoftLabel) else _logits(target)
    z = _logits(pred_logits)
    if t.shape != z.shape:
        raise DimensionMismatch(f"target shape {t.shape} != logits shape {z.shape}")
    h = -(t * special.log_softmax(z, axis=-1)).sum(axis=-1)
    return float(h) if h.ndim == 0 else h


def labeled_loss(logits: ArrayLike, class_ids: ArrayLike) -> float:
    """Mean cross-entropy of weak-view logits against ground-truth classes."""
    z = np.atleast_2d(_logits(logits))
    ids = np.asarray(class_ids, dtype=np.intp).reshape(-1)
    if ids.size != z.shape[0]:
        raise DimensionMismatch(f"{z.shape[0]} logit rows but {ids.size} class ids")
    if ids.size == 0:
        return 0.0
    logp = special.log_softmax(z, axis=-1)
    return float(-logp[np.arange(ids.size), ids].mean())


def unlabeled_loss(
    strong_logits: ArrayLike,
    weak_logits: ArrayLike,
    policy: RefinementPolicy,
    tau: float = DEFAULT_TAU,
    aggregates: ArrayLike | None = None,
) -> tuple[float, int]:
    """Mean masked cross-entropy H(strong, f(weak)) and the number of kept rows.

    Rows whose weak-view confidence is <= tau are dropped entirely; with no
    row left the loss is 0.

    Raises:
        MissingAggregate: smoothing policy and no aggregates.
    """
    if policy.variant is RefineVariant.SMOOTH and aggregates is None:
        raise MissingAggregate("smooth refinement needs aggregate logits")
    strong = np.atleast_2d(_logits(strong_logits))
    weak = np.atleast_2d(_logits(weak_logits))
    if strong.shape != weak.shape:
        raise DimensionMismatch(f"strong {strong.shape} and weak {weak.shape} logits differ")

    mask = np.atleast_1d(pseudo_label_mask(confidence(weak), tau))
    count = int(mask.sum())
    if count == 0:
        return 0.0, 0
    agg = None if aggregates is None else np.atleast_2d(_logits(aggregates))[mask]
    targets = refine_probs(policy, weak[mask], agg)
    return float(np.mean(cross_entropy(strong[mask], targets))), count
