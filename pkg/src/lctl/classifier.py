"""Test-time coding and class prediction.

Prediction is non-iterative: one transform product, one soft threshold,
one product with the classifier map and an argmax.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonFinite
from .model import LctlModel, as_matrix, threshold_for


@dataclass(frozen=True, eq=False)
class Prediction:
    class_index: int
    scores: np.ndarray
    code: np.ndarray | None = None


def _threshold(model: LctlModel, mu: float | None) -> float:
    hp = model.hyperparams
    return threshold_for(hp.mu if mu is None else mu, hp.threshold_convention)


def _vector(x, n: int, what: str) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.size != n:
        raise DimensionMismatch(f"{what} must be a vector of length {n}, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise NonFinite(f"{what} contains NaN or Inf")
    return v


def encode_test(model: LctlModel, x, mu: float | None = None) -> np.ndarray:
    """Code one sample: ``soft_threshold(T x, t)``, ``t`` set by the model's convention.

    ``mu`` overrides the sparsity weight the model was trained with.
    """
    v = model.prepare(_vector(x, model.d, "sample"))
    a = model.T @ v
    return np.sign(a) * np.maximum(np.abs(a) - _threshold(model, mu), 0.0)


def predict_scores(model: LctlModel, z) -> np.ndarray:
    return model.M @ _vector(z, model.p, "code")


def predict_class(model: LctlModel, x, mu: float | None = None, keep_code: bool = False) -> Prediction:
    z = encode_test(model, x, mu)
    scores = predict_scores(model, z)
    # np.argmax returns the first maximum: ties go to the lowest class index
    return Prediction(int(np.argmax(scores)), scores, z if keep_code else None)


def predict_arrays(model: LctlModel, x, mu: float | None = None):
    """Vectorized prediction over the columns of ``x``.

    Returns
    -------
    classes : ndarray of int, shape (N,)
    scores : ndarray, shape (c, N)
    """
    X = as_matrix(x, "data matrix")
    if X.shape[0] != model.d:
        raise DimensionMismatch(f"model expects {model.d} features, data has {X.shape[0]}")
    A = model.T @ model.prepare(X)
    Z = np.sign(A) * np.maximum(np.abs(A) - _threshold(model, mu), 0.0)
    S = model.M @ Z
    return np.argmax(S, axis=0), S


def predict_batch(model: LctlModel, x, mu: float | None = None) -> list:
    """Per-column :class:`Prediction` list, in input column order."""
    classes, S = predict_arrays(model, x, mu)
    return [Prediction(int(k), S[:, j]) for j, k in enumerate(classes)]
