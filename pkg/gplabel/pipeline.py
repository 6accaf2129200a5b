"""End-to-end runs over a dataset: predictors, refined labels, confidence maps.

These are the pieces the CLI commands and the figure demos compose. Nothing
here touches the filesystem.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from functools import cached_property

import numpy as np
from numpy.typing import ArrayLike, NDArray

from gplabel.bank import MemoryBank
from gplabel.exceptions import DimensionMismatch
from gplabel.gp import (
    GpState,
    LinearModel,
    gp_posterior_logits,
    gp_warmup,
    linear_fit,
    linear_logits,
    similarity_logits,
)
from gplabel.io import ConfidenceGrid, ExperimentConfig, GridSpec, ModelKind, RefinedLabels
from gplabel.refine import AggregateSource, RefineVariant, confidence, refine_probs
from gplabel.toydata import LabeledDataset

logger = logging.getLogger(__name__)

Logits = Callable[[ArrayLike], NDArray[np.float64]]


class Predictors:
    """Lazily built classifiers over the labeled part of one dataset."""

    def __init__(self, ds: LabeledDataset, cfg: ExperimentConfig):
        if ds.num_labeled == 0:
            raise DimensionMismatch("dataset has no labeled rows")
        self.ds = ds
        self.cfg = cfg

    @cached_property
    def bank(self) -> MemoryBank:
        return MemoryBank.from_arrays(
            self.ds.features,
            self.ds.class_ids,
            num_classes=self.ds.num_classes,
            mode=self.cfg.bank_mode,
            capacity=self.cfg.bank_capacity,
        )

    @cached_property
    def gp_state(self) -> GpState:
        return gp_warmup(self.cfg.gp, self.bank)

    @cached_property
    def linear(self) -> LinearModel:
        return linear_fit(
            self.ds.features,
            self.ds.class_ids,
            num_classes=self.ds.num_classes,
            epochs=self.cfg.linear_epochs,
            lr=self.cfg.linear_lr,
        )

    def logits(self, kind: ModelKind) -> Logits:
        match kind:
            case ModelKind.GP:
                return lambda q: gp_posterior_logits(self.gp_state, q)
            case ModelKind.SIMILARITY:
                return lambda q: similarity_logits(self.bank, q, self.cfg.kernel)
            case ModelKind.LINEAR:
                return lambda q: linear_logits(self.linear, q)
        raise AssertionError(kind)


def refine_unlabeled(ds: LabeledDataset, cfg: ExperimentConfig) -> RefinedLabels:
    """Refined pseudo-labels for every unlabeled row.

    Weak logits come from `refine.model`; rows whose weak confidence is not
    above `refine.tau` get pred_class -1. Smoothing takes its aggregate from
    `refine.source`.
    """
    if not ds.num_unlabeled:
        raise DimensionMismatch("dataset has no unlabeled rows")
    predictors = Predictors(ds, cfg)
    query = ds.unlabeled
    weak = predictors.logits(cfg.refine_model)(query)
    conf = np.atleast_1d(confidence(weak))
    keep = conf > cfg.refine_tau

    aggregate = None
    if cfg.refine_policy is RefineVariant.SMOOTH:
        source = (
            ModelKind.GP if cfg.refine_source is AggregateSource.GP else ModelKind.SIMILARITY
        )
        aggregate = predictors.logits(source)(query)
    probs = refine_probs(cfg.policy, weak, aggregate)
    pred = np.where(keep, np.argmax(probs, axis=1), -1)
    logger.info(
        "refined %d unlabeled rows with %s/%s: %d above tau=%g",
        query.shape[0],
        cfg.refine_model.value,
        cfg.refine_policy.value,
        int(keep.sum()),
        cfg.refine_tau,
    )
    return RefinedLabels(features=query, pred_class=pred, conf=conf, masked=keep)


def confidence_map(
    ds: LabeledDataset, cfg: ExperimentConfig, kind: ModelKind, grid: GridSpec
) -> ConfidenceGrid:
    """Confidence and argmax of one classifier over a 2-D grid."""
    if ds.dim != 2:
        raise DimensionMismatch(f"confidence maps need 2-D features, got d={ds.dim}", got=ds.dim)
    return evaluate_grid(Predictors(ds, cfg).logits(kind), grid)


def evaluate_grid(logits: Logits, grid: GridSpec) -> ConfidenceGrid:
    pts = grid.points()
    z = logits(pts)
    return ConfidenceGrid(
        spec=grid,
        points=pts,
        conf=np.atleast_1d(confidence(z)),
        argmax=np.argmax(z, axis=1),
    )
