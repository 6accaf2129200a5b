"""Synthetic datasets: long-tail class counts and 2-D cluster layouts.

Randomness comes from numpy's PCG64 bit generator. Uniforms are its 53-bit
doubles in [0, 1); normals are Box-Muller pairs

    z0 = sqrt(-2 ln(1 - u1)) cos(2 pi u2),  z1 = sqrt(-2 ln(1 - u1)) sin(2 pi u2)

drawn as one block of u1 followed by one block of u2, interleaved z0, z1,
z0, z1, ... and truncated to the requested count. Given a seed every dataset
is bit-for-bit reproducible.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, model_validator

from gplabel.exceptions import DimensionMismatch, InvalidLabel

logger = logging.getLogger(__name__)

FIG3_CENTERS = ((1.0, 1.0), (1.0, -1.0), (-1.0, -1.0), (-1.0, 1.0))
FIG3_EVAL_POINT = (-3.0, 3.0)


# =============================================================================
# Random source
# =============================================================================


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def box_muller(rng: np.random.Generator, n: int) -> NDArray[np.float64]:
    """n standard normals from pairs of PCG64 uniforms."""
    pairs = (n + 1) // 2
    u1 = rng.random(pairs)
    u2 = rng.random(pairs)
    r = np.sqrt(-2.0 * np.log1p(-u1))
    theta = 2.0 * np.pi * u2
    out = np.empty(2 * pairs)
    out[0::2] = r * np.cos(theta)
    out[1::2] = r * np.sin(theta)
    return out[:n]


def _normals(rng: np.random.Generator, rows: int, dim: int) -> NDArray[np.float64]:
    return box_muller(rng, rows * dim).reshape(rows, dim)


# =============================================================================
# Long-tail counts
# =============================================================================


class Rounding(StrEnum):
    FLOOR = "floor"
    HALF_UP = "half_up"


class ImbalanceSpec(BaseModel):
    """Long-tail law N_i = N_1 * gamma^(-(i-1)/(K-1))."""

    model_config = ConfigDict(frozen=True)

    num_classes: int = Field(ge=2)
    majority_count: int = Field(ge=1)
    gamma: float = Field(ge=1, allow_inf_nan=False)
    rounding: Rounding = Rounding.FLOOR


def longtail_counts(spec: ImbalanceSpec) -> NDArray[np.intp]:
    """Per-class counts, non-increasing, each at least 1, N_1 exact.

    `floor` truncates each value; `half_up` rounds to nearest with halves up.
    Truncation reproduces the published labeled totals of the standard
    long-tail benchmarks (e.g. 3218 for K=100, N_1=150, gamma=100).
    """
    k = spec.num_classes
    exponents = np.arange(k) / (k - 1)
    raw = spec.majority_count * np.power(spec.gamma, -exponents)
    if spec.rounding is Rounding.FLOOR:
        # values that should land on an integer may come out a few ulps low
        counts = np.floor(raw + 1e-9)
    else:
        counts = np.floor(raw + 0.5)
    counts = np.maximum(counts, 1).astype(np.intp)
    counts[0] = spec.majority_count
    return counts


# =============================================================================
# Datasets
# =============================================================================


@dataclass
class LabeledDataset:
    """Labeled points, optional unlabeled pool, and evaluation metadata.

    Attributes:
        features: n x d labeled features.
        class_ids: n class ids in [0, num_classes).
        unlabeled: m x d unlabeled features.
        unlabeled_truth: m hidden class ids, -1 where no class applies.
        eval_points: query points that are not training samples.
        regions: named index sets into `unlabeled`.
        num_classes: C.
    """

    features: NDArray[np.float64]
    class_ids: NDArray[np.intp]
    unlabeled: NDArray[np.float64] | None = None
    unlabeled_truth: NDArray[np.intp] | None = None
    eval_points: NDArray[np.float64] | None = None
    regions: dict[str, NDArray[np.intp]] = field(default_factory=dict)
    num_classes: int = 0

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.class_ids = np.asarray(self.class_ids, dtype=np.intp).reshape(-1)
        if self.features.ndim != 2 or self.features.shape[0] != self.class_ids.size:
            raise DimensionMismatch(
                f"features {self.features.shape} do not match {self.class_ids.size} class ids"
            )
        if self.num_classes == 0 and self.class_ids.size:
            self.num_classes = int(self.class_ids.max()) + 1
        bad = self.class_ids[(self.class_ids < 0) | (self.class_ids >= self.num_classes)]
        if bad.size:
            raise InvalidLabel(
                f"class id {int(bad[0])} outside [0, {self.num_classes})", label=int(bad[0])
            )
        if self.unlabeled is not None:
            self.unlabeled = np.asarray(self.unlabeled, dtype=np.float64)
            if self.unlabeled.size and self.unlabeled.shape[1] != self.dim:
                raise DimensionMismatch(
                    f"unlabeled width {self.unlabeled.shape[1]} != labeled width {self.dim}"
                )

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def num_labeled(self) -> int:
        return self.features.shape[0]

    @property
    def num_unlabeled(self) -> int:
        return 0 if self.unlabeled is None else self.unlabeled.shape[0]

    def class_counts(self) -> NDArray[np.intp]:
        return np.bincount(self.class_ids, minlength=self.num_classes)


class ClusterSpec(BaseModel):
    """Isotropic Gaussian clusters, one per class, plus fixed extra points.

    Outlier points get class `outlier_class`, or go to the unlabeled pool
    when it is None.
    """

    model_config = ConfigDict(frozen=True)

    centers: list[tuple[float, ...]]
    counts: list[int]
    std: float = Field(gt=0, allow_inf_nan=False)
    seed: int = 0
    outliers: list[tuple[float, ...]] = Field(default_factory=list)
    outlier_class: int | None = None

    @model_validator(mode="after")
    def _shapes(self) -> ClusterSpec:
        if not self.centers:
            raise ValueError("at least one center is required")
        if len(self.centers) != len(self.counts):
            raise ValueError(f"{len(self.centers)} centers but {len(self.counts)} counts")
        if any(c < 1 for c in self.counts):
            raise ValueError("cluster counts must be >= 1")
        dims = {len(c) for c in (*self.centers, *self.outliers)}
        if len(dims) != 1:
            raise ValueError(f"centers and outliers mix dimensions {sorted(dims)}")
        if self.outlier_class is not None and not 0 <= self.outlier_class < len(self.centers):
            raise ValueError(f"outlier_class {self.outlier_class} is not a cluster index")
        return self


def sample_clusters(spec: ClusterSpec) -> LabeledDataset:
    """Draw every cluster in order from one seeded stream."""
    rng = make_rng(spec.seed)
    centers = np.asarray(spec.centers, dtype=np.float64)
    dim = centers.shape[1]
    parts, ids = [], []
    for c, (center, count) in enumerate(zip(centers, spec.counts, strict=True)):
        parts.append(center + spec.std * _normals(rng, count, dim))
        ids.append(np.full(count, c, dtype=np.intp))

    outliers = np.asarray(spec.outliers, dtype=np.float64).reshape(-1, dim)
    unlabeled = None
    truth = None
    if outliers.size and spec.outlier_class is not None:
        parts.append(outliers)
        ids.append(np.full(outliers.shape[0], spec.outlier_class, dtype=np.intp))
    elif outliers.size:
        unlabeled = outliers
        truth = np.full(outliers.shape[0], -1, dtype=np.intp)

    return LabeledDataset(
        features=np.concatenate(parts),
        class_ids=np.concatenate(ids),
        unlabeled=unlabeled,
        unlabeled_truth=truth,
        num_classes=len(spec.centers),
    )


def fig3_preset(n_minority: int = 25, std: float = 0.35, seed: int = 0) -> LabeledDataset:
    """Four clusters on the unit square corners, counts doubling clockwise.

    Class 0 sits at (1, 1) with n_minority points, then (1, -1), (-1, -1) and
    (-1, 1) with 2n, 4n and 8n. The far point (-3, 3) is an evaluation point.
    """
    if n_minority < 1:
        raise ValueError(f"n_minority must be >= 1, got {n_minority}")
    spec = ClusterSpec(
        centers=list(FIG3_CENTERS),
        counts=[n_minority * 2**i for i in range(4)],
        std=std,
        seed=seed,
    )
    ds = sample_clusters(spec)
    ds.eval_points = np.asarray([FIG3_EVAL_POINT])
    return ds


# Figure-1 style layout. Region A is the contact zone between two overlapping
# clusters, region B a tight minority cluster ringed by a majority annulus,
# region C a detached unlabeled group.
FIG1_RING_CENTER = (1.5, -1.0)
FIG1_RING_RADIUS = 1.1
FIG1_RING_WIDTH = 0.1
FIG1_MINORITY_STD = (0.1, 0.12)
FIG1_OVERLAP_CENTERS = ((-1.2, 1.8), (0.0, 1.8))
FIG1_OVERLAP_STD = 0.4
FIG1_OUTLIER_CENTER = (-3.0, -3.0)
FIG1_OUTLIER_STD = 0.25
FIG1_CONTACT_HALF_WIDTH = 0.3

# (labeled, unlabeled) per class: majority ring, minority, overlap pair
FIG1_COUNTS = ((80, 900), (4, 50), (15, 150), (15, 150))
FIG1_OUTLIERS = 20


def _annulus(rng: np.random.Generator, n: int) -> NDArray[np.float64]:
    theta = 2.0 * np.pi * rng.random(n)
    radius = FIG1_RING_RADIUS + FIG1_RING_WIDTH * box_muller(rng, n)
    pts = np.column_stack([np.cos(theta), np.sin(theta)]) * radius[:, None]
    return pts + np.asarray(FIG1_RING_CENTER)


def fig1_preset(seed: int = 0) -> LabeledDataset:
    """Four-class label-propagation layout with a small labeled subset.

    Regions (indices into the unlabeled pool):
        A  class-2/3 points within 0.3 of the midline between their centers
        B  the minority (class 1) cluster inside the majority ring
        C  the outlier group, ground truth -1
    """
    rng = make_rng(seed)
    ring_center = np.asarray(FIG1_RING_CENTER)

    def draw(cls: int, n: int, labeled: bool) -> NDArray[np.float64]:
        if cls == 0:
            return _annulus(rng, n)
        if cls == 1:
            std = FIG1_MINORITY_STD[0 if labeled else 1]
            return ring_center + std * _normals(rng, n, 2)
        center = np.asarray(FIG1_OVERLAP_CENTERS[cls - 2])
        return center + FIG1_OVERLAP_STD * _normals(rng, n, 2)

    feats, ids = [], []
    for cls, (n_lab, _) in enumerate(FIG1_COUNTS):
        feats.append(draw(cls, n_lab, labeled=True))
        ids.append(np.full(n_lab, cls, dtype=np.intp))
    pool, truth = [], []
    for cls, (_, n_unl) in enumerate(FIG1_COUNTS):
        pool.append(draw(cls, n_unl, labeled=False))
        truth.append(np.full(n_unl, cls, dtype=np.intp))
    outliers = FIG1_OUTLIER_STD * _normals(rng, FIG1_OUTLIERS, 2)
    pool.append(np.asarray(FIG1_OUTLIER_CENTER) + outliers)
    truth.append(np.full(FIG1_OUTLIERS, -1, dtype=np.intp))

    unlabeled = np.concatenate(pool)
    unlabeled_truth = np.concatenate(truth)
    midline = 0.5 * (FIG1_OVERLAP_CENTERS[0][0] + FIG1_OVERLAP_CENTERS[1][0])
    overlap = (unlabeled_truth == 2) | (unlabeled_truth == 3)
    contact = overlap & (np.abs(unlabeled[:, 0] - midline) < FIG1_CONTACT_HALF_WIDTH)
    regions = {
        "A": np.flatnonzero(contact),
        "B": np.flatnonzero(unlabeled_truth == 1),
        "C": np.flatnonzero(unlabeled_truth == -1),
    }
    return LabeledDataset(
        features=np.concatenate(feats),
        class_ids=np.concatenate(ids),
        unlabeled=unlabeled,
        unlabeled_truth=unlabeled_truth,
        regions=regions,
        num_classes=len(FIG1_COUNTS),
    )


def longtail_dataset(
    num_classes: int,
    n1_labeled: int,
    gamma_labeled: float,
    n1_unlabeled: int = 0,
    gamma_unlabeled: float | None = None,
    std: float = 0.15,
    seed: int = 0,
    rounding: Rounding = Rounding.FLOOR,
) -> LabeledDataset:
    """Long-tail 2-D clusters with class centers evenly spaced on the unit circle.

    gamma_unlabeled defaults to gamma_labeled (both pools equally
    imbalanced); gamma_labeled = 1 gives a balanced labeled set over an
    imbalanced unlabeled pool.
    """
    if gamma_unlabeled is None:
        gamma_unlabeled = gamma_labeled

    def counts(n1: int, gamma: float) -> NDArray[np.intp]:
        spec = ImbalanceSpec(
            num_classes=num_classes, majority_count=n1, gamma=gamma, rounding=rounding
        )
        return longtail_counts(spec)

    angles = 2.0 * np.pi * np.arange(num_classes) / num_classes
    centers = np.column_stack([np.cos(angles), np.sin(angles)])
    rng = make_rng(seed)

    def draw(counts: NDArray[np.intp]):
        ids = np.repeat(np.arange(num_classes), counts)
        return centers[ids] + std * _normals(rng, ids.size, 2), ids

    features, class_ids = draw(counts(n1_labeled, gamma_labeled))
    unlabeled = truth = None
    if n1_unlabeled > 0:
        unlabeled, truth = draw(counts(n1_unlabeled, gamma_unlabeled))
    logger.info(
        "longtail dataset: K=%d, %d labeled, %d unlabeled",
        num_classes,
        class_ids.size,
        0 if unlabeled is None else unlabeled.shape[0],
    )
    return LabeledDataset(
        features=features,
        class_ids=class_ids,
        unlabeled=unlabeled,
        unlabeled_truth=truth,
        num_classes=num_classes,
    )


def labeled_fraction(ds: LabeledDataset) -> float:
    total = ds.num_labeled + ds.num_unlabeled
    return ds.num_labeled / total if total else math.nan
