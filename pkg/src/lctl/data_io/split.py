"""Seeded per-class train/test splitting."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ClassTooSmall, InvalidArgs
from ..model import check_seed, make_rng


@dataclass(frozen=True)
class SplitSpec:
    """How many labeled samples of each class go to training.

    ``mode="fraction"`` takes ``max(floor, round(fraction * n_class))``
    samples per class, capped so that at least one sample is left for
    testing.  ``mode="counts"`` takes exactly ``counts[k]`` from class ``k``.
    """

    mode: str = "fraction"
    fraction: float = 0.1
    floor: int = 1
    counts: tuple | None = None
    seed: int = 0

    def __post_init__(self):
        check_seed(self.seed)
        if self.mode == "fraction":
            if not 0.0 < self.fraction < 1.0:
                raise InvalidArgs(f"fraction must be in (0, 1), got {self.fraction}")
            if self.floor < 1:
                raise InvalidArgs(f"floor must be >= 1, got {self.floor}")
        elif self.mode == "counts":
            if not self.counts:
                raise InvalidArgs("counts mode needs per-class counts")
            object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
            if min(self.counts) < 1:
                raise InvalidArgs("every per-class training count must be >= 1")
        else:
            raise InvalidArgs(f"unknown split mode {self.mode!r}")

    @classmethod
    def fraction_mode(cls, fraction: float, floor: int = 1, seed: int = 0) -> "SplitSpec":
        return cls(mode="fraction", fraction=fraction, floor=floor, seed=seed)

    @classmethod
    def counts_mode(cls, counts: Sequence[int], seed: int = 0) -> "SplitSpec":
        return cls(mode="counts", counts=tuple(counts), seed=seed)


def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


def training_counts(populations: Sequence[int], spec: SplitSpec) -> list:
    """Number of training samples drawn from each class."""
    out = []
    for k, n in enumerate(populations):
        if n < 2:
            raise ClassTooSmall(
                f"class {k + 1} has {n} samples; need at least 2 to split"
            )
        if spec.mode == "fraction":
            m = min(max(spec.floor, _round_half_up(spec.fraction * n)), n - 1)
        else:
            m = spec.counts[k]
            if m > n - 1:
                raise ClassTooSmall(
                    f"class {k + 1}: {m} training samples requested from {n}; "
                    "at least one must remain for testing"
                )
        out.append(m)
    return out


def split(labels: Sequence[int], spec: SplitSpec, n_classes: int | None = None):
    """Partition sample indices into training and test sets, per class.

    Returns sorted index arrays ``(train_idx, test_idx)``.
    """
    y = np.asarray(labels, dtype=np.int64).ravel()
    if y.size and y.min() < 0:
        raise InvalidArgs("labels must be 0-based class indices")
    if n_classes is None:
        n_classes = len(spec.counts) if spec.mode == "counts" else int(y.max()) + 1 if y.size else 0
    if spec.mode == "counts" and len(spec.counts) != n_classes:
        raise InvalidArgs(f"{len(spec.counts)} counts given for {n_classes} classes")
    if y.size and y.max() >= n_classes:
        raise InvalidArgs(f"label {y.max() + 1} exceeds class count {n_classes}")
    members = [np.flatnonzero(y == k) for k in range(n_classes)]
    counts = training_counts([m.size for m in members], spec)
    rng = make_rng(spec.seed)
    train = []
    for m, k in zip(members, counts):
        train.append(rng.permutation(m)[:k])
    train_idx = np.sort(np.concatenate(train)) if train else np.zeros(0, np.int64)
    mask = np.ones(y.size, dtype=bool)
    mask[train_idx] = False
    return train_idx, np.flatnonzero(mask)
