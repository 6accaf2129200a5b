"""Fixed-capacity memory bank of labeled features.

Two replacement policies:

    fifo      the B globally oldest slots are overwritten, oldest first
    balanced  the bank is split into C equal class buffers; class c owns slots
              [c*q, (c+1)*q) and each sample overwrites the oldest slot of its
              own class

Until the bank is full, inserts append. Every slot carries an insertion stamp
from a monotonic clock; the smallest stamp is the oldest sample.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import StrEnum

import numpy as np
from numpy.typing import ArrayLike, NDArray

from gplabel.exceptions import (
    ClassOverflow,
    DimensionMismatch,
    EmptyBank,
    InvalidCapacity,
    InvalidLabel,
)

logger = logging.getLogger(__name__)


class BankMode(StrEnum):
    """Replacement policy of a memory bank."""

    FIFO = "fifo"
    BALANCED = "balanced"


@dataclass(frozen=True)
class BankSnapshot:
    """Copies of the occupied slots, ascending slot order.

    Attributes:
        features: filled x d feature rows (h_Q).
        labels: filled x C one-hot rows (y_Q).
        slots: slot index of each row.
        version: bank version the snapshot was taken at.
    """

    features: NDArray[np.float64]
    labels: NDArray[np.float64]
    slots: NDArray[np.intp]
    version: int


class MemoryBank:
    """Memory bank of (feature, one-hot label) pairs.

    Single writer. `version` increments on every insert so cached state built
    from a snapshot can tell when it is stale.
    """

    def __init__(
        self,
        capacity: int,
        dim: int,
        num_classes: int,
        mode: BankMode | str = BankMode.FIFO,
    ):
        mode = BankMode(mode)
        if capacity < 1:
            raise InvalidCapacity(f"capacity must be >= 1, got {capacity}")
        if dim < 1:
            raise DimensionMismatch(f"feature dimension must be >= 1, got {dim}", got=dim)
        if num_classes < 1:
            raise InvalidCapacity(f"num_classes must be >= 1, got {num_classes}")
        if mode is BankMode.BALANCED and capacity % num_classes:
            raise InvalidCapacity(
                f"balanced capacity {capacity} is not divisible by {num_classes} classes"
            )

        self.capacity = capacity
        self.dim = dim
        self.num_classes = num_classes
        self.mode = mode
        self.features = np.zeros((capacity, dim))
        self.labels = np.zeros((capacity, num_classes))
        self.class_ids = np.full(capacity, -1, dtype=np.intp)
        self.stamps = np.full(capacity, -1, dtype=np.int64)
        self.filled = 0
        self.version = 0
        self._clock = 0
        self._class_fill = np.zeros(num_classes, dtype=np.intp)

    def __repr__(self) -> str:
        return (
            f"MemoryBank(capacity={self.capacity}, dim={self.dim}, "
            f"num_classes={self.num_classes}, mode={self.mode.value}, filled={self.filled})"
        )

    @property
    def quota(self) -> int:
        """Slots per class in balanced mode (capacity in fifo mode)."""
        if self.mode is BankMode.BALANCED:
            return self.capacity // self.num_classes
        return self.capacity

    @property
    def is_full(self) -> bool:
        return self.filled == self.capacity

    def occupied(self) -> NDArray[np.bool_]:
        return self.stamps >= 0

    def class_counts(self) -> NDArray[np.intp]:
        """Occupied slots per class."""
        return np.bincount(self.class_ids[self.occupied()], minlength=self.num_classes)

    # -- insertion -----------------------------------------------------------

    def _validate(self, feats: ArrayLike, class_ids: ArrayLike):
        feats = np.asarray(feats, dtype=np.float64)
        if feats.ndim == 1:
            feats = feats.reshape(1, -1)
        ids = np.asarray(class_ids).reshape(-1)
        if feats.ndim != 2 or feats.shape[1] != self.dim:
            raise DimensionMismatch(
                f"features must be B x {self.dim}, got shape {feats.shape}",
                expected=self.dim,
                got=feats.shape,
            )
        if ids.shape[0] != feats.shape[0]:
            raise DimensionMismatch(
                f"{feats.shape[0]} feature rows but {ids.shape[0]} class ids",
                expected=feats.shape[0],
                got=ids.shape[0],
            )
        if not np.isfinite(feats).all():
            raise DimensionMismatch("features contain non-finite entries")
        if ids.size and not np.issubdtype(ids.dtype, np.integer):
            if not np.all(ids == np.round(ids)):
                raise InvalidLabel("class ids must be integers")
        ids = ids.astype(np.intp)
        bad = ids[(ids < 0) | (ids >= self.num_classes)]
        if bad.size:
            raise InvalidLabel(
                f"class id {int(bad[0])} outside [0, {self.num_classes})", label=int(bad[0])
            )
        return feats, ids

    def _check_quotas(self, ids: NDArray[np.intp]) -> None:
        """Replay the batch against class fill counts; raise before any write."""
        fill = self._class_fill.copy()
        filled = self.filled
        q = self.quota
        for c in ids:
            if fill[c] < q:
                fill[c] += 1
                filled += 1
            elif filled < self.capacity:
                raise ClassOverflow(
                    f"class {c} exceeds its quota of {q} slots while the bank is filling "
                    f"({filled}/{self.capacity})",
                    class_id=int(c),
                    quota=q,
                )

    def _next_slot(self, class_id: int) -> int:
        if self.mode is BankMode.FIFO:
            if self.filled < self.capacity:
                return self.filled
            return int(np.argmin(self.stamps))
        q = self.quota
        start = class_id * q
        if self._class_fill[class_id] < q:
            return start + int(self._class_fill[class_id])
        return start + int(np.argmin(self.stamps[start : start + q]))

    def _write(self, slot: int, feat: NDArray[np.float64], class_id: int) -> None:
        if self.stamps[slot] < 0:
            self.filled += 1
            self._class_fill[class_id] += 1
        elif self.mode is BankMode.FIFO:
            self._class_fill[self.class_ids[slot]] -= 1
            self._class_fill[class_id] += 1
        self.features[slot] = feat
        self.labels[slot] = 0.0
        self.labels[slot, class_id] = 1.0
        self.class_ids[slot] = class_id
        self.stamps[slot] = self._clock
        self._clock += 1

    def insert_batch(self, feats: ArrayLike, class_ids: ArrayLike) -> NDArray[np.intp]:
        """Store B samples and return the slot each one was written to.

        Samples are placed one after another, so a batch that straddles the
        end of warmup first appends and then replaces. In balanced mode a
        batch carrying more samples of a class than it has slots writes some
        slots twice; the returned list then holds that slot twice.

        Raises:
            DimensionMismatch: feature width differs from the bank's.
            InvalidLabel: a class id is outside [0, C).
            ClassOverflow: balanced warmup would overfill a class buffer.
        """
        feats, ids = self._validate(feats, class_ids)
        if self.mode is BankMode.BALANCED:
            self._check_quotas(ids)

        slots = np.empty(ids.size, dtype=np.intp)
        was_full = self.is_full
        for j, (feat, c) in enumerate(zip(feats, ids, strict=True)):
            slot = self._next_slot(int(c))
            self._write(slot, feat, int(c))
            slots[j] = slot
        self.version += 1
        if not was_full and self.is_full:
            logger.info("memory bank warm: %d slots filled", self.capacity)
        logger.debug("bank v%d: wrote %d samples to slots %s", self.version, ids.size, slots)
        return slots

    # -- reading -------------------------------------------------------------

    def snapshot(self) -> BankSnapshot:
        """Occupied slots in ascending order.

        Raises:
            EmptyBank: nothing has been inserted yet.
        """
        if self.filled == 0:
            raise EmptyBank("memory bank is empty")
        slots = np.flatnonzero(self.occupied())
        return BankSnapshot(
            features=self.features[slots].copy(),
            labels=self.labels[slots].copy(),
            slots=slots,
            version=self.version,
        )

    def ages(self) -> NDArray[np.int64]:
        """Per-slot age, 0 for the newest sample, -1 for empty slots."""
        out = np.full(self.capacity, -1, dtype=np.int64)
        occ = self.occupied()
        out[occ] = self._clock - 1 - self.stamps[occ]
        return out

    @classmethod
    def from_arrays(
        cls,
        features: ArrayLike,
        class_ids: ArrayLike,
        num_classes: int | None = None,
        mode: BankMode | str = BankMode.FIFO,
        capacity: int | None = None,
        ages: ArrayLike | None = None,
    ) -> MemoryBank:
        """Build a bank from rows given in stream order.

        The bank keeps what streaming the rows would leave: the newest
        `capacity` rows in fifo mode, the newest `capacity / C` rows of each
        class in balanced mode. Default capacity holds every row (balanced:
        C times the largest class).

        With `ages` (one per row, larger is older, requires a full fifo bank
        of exactly these rows) the insertion order is set explicitly.
        """
        feats = np.asarray(features, dtype=np.float64)
        if feats.ndim != 2:
            raise DimensionMismatch(f"features must be n x d, got shape {feats.shape}")
        ids = np.asarray(class_ids).reshape(-1).astype(np.intp)
        if num_classes is None:
            num_classes = int(ids.max()) + 1 if ids.size else 1
        mode = BankMode(mode)
        if capacity is None:
            if mode is BankMode.BALANCED:
                largest = int(np.bincount(ids, minlength=num_classes).max()) if ids.size else 1
                capacity = num_classes * max(largest, 1)
            else:
                capacity = max(feats.shape[0], 1)

        bank = cls(capacity, feats.shape[1], num_classes, mode)
        feats, ids = bank._validate(feats, ids)

        if ages is not None:
            ages = np.asarray(ages, dtype=np.int64).reshape(-1)
            if mode is not BankMode.FIFO or ages.size != capacity or feats.shape[0] != capacity:
                raise InvalidCapacity("explicit ages need a full fifo bank, one age per row")
            for slot in range(capacity):
                bank._write(slot, feats[slot], int(ids[slot]))
            bank.stamps[:] = ages.max() - ages
            bank._clock = int(bank.stamps.max()) + 1
            bank.version += 1
            return bank

        if mode is BankMode.FIFO:
            keep = np.arange(max(feats.shape[0] - capacity, 0), feats.shape[0])
        else:
            q = bank.quota
            keep = np.sort(
                np.concatenate([np.flatnonzero(ids == c)[-q:] for c in range(num_classes)])
            )
        for row in keep:
            bank._write(bank._next_slot(int(ids[row])), feats[row], int(ids[row]))
        bank.version += 1
        return bank
