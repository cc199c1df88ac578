"""Planted synthetic datasets for oracle checks."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ..errors import InvalidArgs
from ..model import make_rng, one_hot


class SynthData(NamedTuple):
    x: np.ndarray
    """``d x N`` samples, class-major column order."""
    q: np.ndarray
    """``c x N`` one-hot labels."""
    planted: np.ndarray
    """Orthonormal ``d x d`` transform that sparsifies the clean samples."""

    @property
    def labels(self) -> np.ndarray:
        return np.argmax(self.q, axis=0)


def class_blocks(d: int, c: int) -> list:
    """Code-space support of each class: disjoint blocks of ``d // c`` indices."""
    b = d // c
    return [np.arange(i * b, (i + 1) * b) for i in range(c)]


def synth_dataset(d: int, c: int, n_per_class: int, noise_sigma: float, seed: int) -> SynthData:
    """Generate a dataset whose classes are sparse under a planted transform.

    Class ``i`` has a code template supported on its own index block, with
    magnitudes in [1, 2] and random signs.  Each sample's code is the
    template with every supported entry jittered by up to +/-30%, mapped
    back through the inverse of the planted transform, plus dense Gaussian
    noise of standard deviation ``noise_sigma``.
    """
    if c < 2 or d < c:
        raise InvalidArgs(f"need 2 <= classes <= features, got c={c}, d={d}")
    if n_per_class < 1:
        raise InvalidArgs(f"n_per_class must be positive, got {n_per_class}")
    if not np.isfinite(noise_sigma) or noise_sigma < 0:
        raise InvalidArgs(f"noise_sigma must be non-negative, got {noise_sigma!r}")

    rng = make_rng(seed)
    Qr, R = np.linalg.qr(rng.standard_normal((d, d)))
    planted = (Qr * np.where(np.diag(R) < 0, -1.0, 1.0)).T

    blocks = class_blocks(d, c)
    codes = np.zeros((d, c * n_per_class))
    for i, blk in enumerate(blocks):
        template = rng.uniform(1.0, 2.0, blk.size) * rng.choice([-1.0, 1.0], blk.size)
        jitter = 1.0 + 0.3 * rng.uniform(-1.0, 1.0, (blk.size, n_per_class))
        codes[np.ix_(blk, np.arange(i * n_per_class, (i + 1) * n_per_class))] = (
            template[:, None] * jitter
        )
    x = planted.T @ codes
    if noise_sigma > 0:
        x = x + noise_sigma * rng.standard_normal(x.shape)
    labels = np.repeat(np.arange(c), n_per_class)
    return SynthData(x, one_hot(labels, c), planted)
