"""Shared domain types and their consistency checks.

Matrices follow the columns-as-samples convention throughout: a data
matrix is ``d x N`` (features x samples), a label matrix ``c x N`` and a
coefficient matrix ``p x N``.  All floating point state is float64 and
every array held by a model is marked read-only.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidArgs, InvalidDims, InvalidLabel, NonFinite

#: Name of the bit generator used for every random draw in the package.
PRNG_NAME = "numpy.random.Philox"

THRESHOLD_CONVENTIONS = ("exact", "paper")


def make_rng(seed: int) -> np.random.Generator:
    """Return the package's seeded generator (counter-based Philox4x64)."""
    check_seed(seed)
    return np.random.Generator(np.random.Philox(int(seed)))


def check_seed(seed) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise InvalidArgs(f"seed must be an integer, got {seed!r}")
    if not 0 <= int(seed) < 2**64:
        raise InvalidArgs(f"seed must be a 64-bit unsigned integer, got {seed}")
    return int(seed)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.flags.writeable = False
    return a


def check_finite(a: np.ndarray, what: str = "array") -> None:
    if not np.all(np.isfinite(a)):
        raise NonFinite(f"{what} contains NaN or Inf")


def as_matrix(a, what: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D float64 array."""
    if isinstance(a, (DataMatrix, LabelMatrix)):
        a = a.values
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionMismatch(f"{what} must be 2-D, got shape {a.shape}")
    check_finite(a, what)
    return a


@dataclass(frozen=True, eq=False)
class DataMatrix:
    """``d x N`` real matrix, one sample per column."""

    values: np.ndarray

    def __post_init__(self):
        v = as_matrix(self.values, "data matrix")
        if v.shape[0] < 1 or v.shape[1] < 1:
            raise InvalidDims(f"data matrix must be at least 1x1, got {v.shape}")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def d(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class LabelMatrix:
    """``c x N`` one-hot class indicator matrix."""

    values: np.ndarray

    def __post_init__(self):
        v = as_matrix(self.values, "label matrix")
        check_one_hot(v)
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def from_indices(cls, indices: Sequence[int], c: int) -> "LabelMatrix":
        return cls(one_hot(indices, c))

    @property
    def c(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def indices(self) -> np.ndarray:
        return np.argmax(self.values, axis=0)


def one_hot(indices: Sequence[int], c: int) -> np.ndarray:
    idx = np.asarray(indices, dtype=np.int64).ravel()
    if c < 2:
        raise InvalidLabel(f"need at least 2 classes, got {c}")
    if idx.size and (idx.min() < 0 or idx.max() >= c):
        raise InvalidLabel(f"class indices must lie in [0, {c})")
    q = np.zeros((c, idx.size))
    q[idx, np.arange(idx.size)] = 1.0
    return q


def check_one_hot(q: np.ndarray) -> None:
    if q.shape[0] < 2:
        raise InvalidLabel(f"label matrix needs at least 2 classes, got {q.shape[0]}")
    if not np.all((q == 0.0) | (q == 1.0)):
        raise InvalidLabel("label matrix entries must be 0 or 1")
    sums = q.sum(axis=0)
    bad = np.flatnonzero(sums != 1.0)
    if bad.size:
        raise InvalidLabel(
            f"label column {bad[0]} sums to {sums[bad[0]]:g}, expected exactly 1"
        )


def validate_pair(x, q) -> None:
    """Check that a data matrix and a label matrix belong together.

    Raises
    ------
    DimensionMismatch
        If the sample counts differ.
    InvalidLabel
        If a label column is not one-hot.
    NonFinite
        If either matrix holds NaN or Inf.
    """
    xv = as_matrix(x, "data matrix")
    qv = as_matrix(q, "label matrix")
    if xv.shape[1] != qv.shape[1]:
        raise DimensionMismatch(
            f"data has {xv.shape[1]} samples but labels have {qv.shape[1]}"
        )
    check_one_hot(qv)


@dataclass(frozen=True)
class Hyperparams:
    """Training and coding hyperparameters.

    ``threshold_convention`` selects the soft-threshold level used when
    coding with the transform: ``"exact"`` uses ``mu / 2``, the true
    minimizer of ``||Tx - z||^2 + mu ||z||_1``; ``"paper"`` uses ``mu``.
    """

    atoms: int = 40
    lam: float = 0.1
    mu: float = 0.05
    max_outer: int = 50
    rel_tol: float = 1e-6
    ista_max_iters: int = 300
    ista_tol: float = 1e-8
    seed: int = 0
    threshold_convention: str = "exact"
    ridge: float = 1e-8

    def __post_init__(self):
        if isinstance(self.atoms, bool) or int(self.atoms) != self.atoms or self.atoms < 1:
            raise InvalidArgs(f"atoms must be a positive integer, got {self.atoms!r}")
        for name in ("lam", "mu", "rel_tol", "ista_tol"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise InvalidArgs(f"{name} must be positive, got {v!r}")
        if self.max_outer < 0:
            raise InvalidArgs(f"max_outer must be non-negative, got {self.max_outer}")
        if self.ista_max_iters < 1:
            raise InvalidArgs(f"ista_max_iters must be positive, got {self.ista_max_iters}")
        if not np.isfinite(self.ridge) or self.ridge < 0:
            raise InvalidArgs(f"ridge must be non-negative, got {self.ridge!r}")
        if self.threshold_convention not in THRESHOLD_CONVENTIONS:
            raise InvalidArgs(
                f"threshold_convention must be one of {THRESHOLD_CONVENTIONS}, "
                f"got {self.threshold_convention!r}"
            )
        check_seed(self.seed)

    @property
    def threshold(self) -> float:
        return threshold_for(self.mu, self.threshold_convention)

    def replace(self, **changes) -> "Hyperparams":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def threshold_for(mu: float, convention: str) -> float:
    if convention == "exact":
        return 0.5 * mu
    if convention == "paper":
        return float(mu)
    raise InvalidArgs(f"unknown threshold convention {convention!r}")


@dataclass(frozen=True, eq=False)
class TransformModel:
    """Analysis transform ``T`` (``p x d``) with the hyperparameters it was learned with."""

    T: np.ndarray
    hyperparams: Hyperparams = field(default_factory=Hyperparams)

    def __post_init__(self):
        object.__setattr__(self, "T", _frozen(as_matrix(self.T, "transform")))

    @property
    def p(self) -> int:
        return self.T.shape[0]

    @property
    def d(self) -> int:
        return self.T.shape[1]

    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.T, compute_uv=False)


@dataclass(frozen=True, eq=False)
class LctlModel:
    """Learned transform plus the linear map from codes to class scores."""

    transform: TransformModel
    M: np.ndarray
    class_names: tuple
    feature_count: int
    objective_trace: tuple = ()
    seed: int = 0
    prng: str = PRNG_NAME
    scaling: tuple | None = None
    """Optional ``(offset, scale)`` per-feature vectors; inputs become ``(x - offset) / scale``."""

    def __post_init__(self):
        M = _frozen(as_matrix(self.M, "classifier map"))
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "class_names", tuple(str(s) for s in self.class_names))
        object.__setattr__(
            self, "objective_trace", tuple(float(v) for v in self.objective_trace)
        )
        if M.shape[1] != self.transform.p:
            raise DimensionMismatch(
                f"classifier map has {M.shape[1]} columns but transform has {self.transform.p} atoms"
            )
        if len(self.class_names) != M.shape[0]:
            raise DimensionMismatch(
                f"{len(self.class_names)} class names for {M.shape[0]} classifier rows"
            )
        if self.feature_count != self.transform.d:
            raise DimensionMismatch(
                f"feature_count {self.feature_count} != transform width {self.transform.d}"
            )
        if self.scaling is not None:
            offset, scale = (_frozen(np.ravel(a)) for a in self.scaling)
            if offset.size != self.feature_count or scale.size != self.feature_count:
                raise DimensionMismatch("scaling vectors must have one entry per feature")
            check_finite(offset, "scaling offset")
            check_finite(scale, "scaling scale")
            if np.any(scale <= 0):
                raise InvalidArgs("scaling scale entries must be positive")
            object.__setattr__(self, "scaling", (offset, scale))

    def prepare(self, x: np.ndarray) -> np.ndarray:
        """Apply the stored feature scaling (if any) to samples in columns."""
        if self.scaling is None:
            return x
        offset, scale = self.scaling
        if x.ndim == 1:
            return (x - offset) / scale
        return (x - offset[:, None]) / scale[:, None]

    @property
    def T(self) -> np.ndarray:
        return self.transform.T

    @property
    def hyperparams(self) -> Hyperparams:
        return self.transform.hyperparams

    @property
    def p(self) -> int:
        return self.transform.p

    @property
    def c(self) -> int:
        return self.M.shape[0]

    @property
    def d(self) -> int:
        return self.feature_count

    def __eq__(self, other):
        if not isinstance(other, LctlModel):
            return NotImplemented
        return (
            _bits_equal(self.T, other.T)
            and _bits_equal(self.M, other.M)
            and self.hyperparams == other.hyperparams
            and self.class_names == other.class_names
            and self.feature_count == other.feature_count
            and _bits_equal(np.array(self.objective_trace), np.array(other.objective_trace))
            and self.seed == other.seed
            and self.prng == other.prng
            and _scaling_equal(self.scaling, other.scaling)
        )

    __hash__ = None


def _bits_equal(a: np.ndarray, b: np.ndarray) -> bool:
    return a.shape == b.shape and a.dtype == b.dtype and a.tobytes() == b.tobytes()


def _scaling_equal(a, b) -> bool:
    if a is None or b is None:
        return a is None and b is None
    return all(_bits_equal(u, v) for u, v in zip(a, b))


def minmax_scaling(x: np.ndarray) -> tuple:
    """Per-feature ``(offset, scale)`` mapping each row of ``x`` onto [0, 1]."""
    lo = x.min(axis=1)
    span = x.max(axis=1) - lo
    return lo, np.where(span > 0, span, 1.0)
