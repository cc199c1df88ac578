"""Alternating-minimization training loops.

``train_unsupervised`` learns a sparsifying transform alone;
``train_lctl`` adds the label-consistency term and learns the linear
classifier map jointly.  Each outer iteration updates the transform,
then the codes, then (supervised only) the classifier map.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import Degenerate, DimensionMismatch, InvalidDims, NumericalFailure
from .model import (
    PRNG_NAME,
    DataMatrix,
    Hyperparams,
    LabelMatrix,
    LctlModel,
    TransformModel,
    as_matrix,
    check_seed,
    make_rng,
    validate_pair,
)
from .prox import batch_coefficient_update, sparse_code_transform
from .transform import cholesky_factor, lctl_objective, tl_objective, transform_update

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainReport:
    """Diagnostics of one training run.

    ``objective_trace`` holds the objective after initialization and after
    every outer iteration.  ``stage_objectives`` additionally records the
    value after each individual sub-update as ``(iteration, stage, value)``.
    """

    outer_iterations: int
    objective_trace: tuple
    converged: bool
    seed: int
    wall_time_seconds: float
    stage_objectives: tuple = field(default=(), repr=False)


def init_transform(p: int, d: int, seed: int, hyperparams: Hyperparams | None = None) -> TransformModel:
    """Orthonormal-row initialization from a seeded Gaussian matrix."""
    if not (1 <= p <= d):
        raise InvalidDims(f"need 1 <= atoms <= features, got atoms={p}, features={d}")
    rng = make_rng(seed)
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    # sign fix makes the factor unique
    Q = Q * np.where(np.diag(R) < 0, -1.0, 1.0)
    hp = hyperparams if hyperparams is not None else Hyperparams(atoms=p, seed=seed)
    return TransformModel(Q[:p], hp)


def update_classifier_map(z, q, ridge: float = 0.0) -> np.ndarray:
    """Least-squares map ``M = Q Z^T (Z Z^T + ridge I)^{-1}``."""
    Z = as_matrix(z, "coefficient matrix")
    Q = as_matrix(q, "label matrix")
    if Z.shape[1] != Q.shape[1]:
        raise DimensionMismatch(f"codes have {Z.shape[1]} samples, labels have {Q.shape[1]}")
    if ridge < 0:
        raise ValueError("ridge must be non-negative")
    G = Z @ Z.T
    if ridge == 0.0 and np.linalg.matrix_rank(Z) < Z.shape[0]:
        raise NumericalFailure("codes are rank deficient; use a positive ridge")
    G[np.diag_indices_from(G)] += ridge
    try:
        cf = np.linalg.cholesky(G)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"classifier normal equations are singular: {exc}") from exc
    return scipy.linalg.cho_solve((cf, True), Z @ Q.T).T


def _check_atoms(hp: Hyperparams, d: int) -> None:
    if hp.atoms > d:
        raise InvalidDims(
            f"atoms ({hp.atoms}) must not exceed the feature count ({d})"
        )


def _converged(prev: float, cur: float, rel_tol: float) -> bool:
    return abs(prev - cur) <= rel_tol * max(abs(prev), 1e-300)


def train_unsupervised(x, hp: Hyperparams):
    """Learn a sparsifying transform by alternating code and transform updates.

    Returns
    -------
    transform : TransformModel
    codes : ndarray, shape (p, N)
    report : TrainReport
    """
    t_start = time.perf_counter()
    X = DataMatrix(x).values if not isinstance(x, DataMatrix) else x.values
    _check_atoms(hp, X.shape[0])
    thr = hp.threshold
    factor = cholesky_factor(X, hp.lam)

    T = init_transform(hp.atoms, X.shape[0], hp.seed, hp)
    Z = sparse_code_transform(T, X, thr)
    trace = [tl_objective(T, X, Z, hp.lam, hp.mu)]
    stages = [(0, "init", trace[0])]
    converged = False
    it = 0
    for it in range(1, hp.max_outer + 1):
        T = transform_update(X, Z, hp.lam, T_prev=T, hyperparams=hp, factor=factor)
        stages.append((it, "T", tl_objective(T, X, Z, hp.lam, hp.mu)))
        Z = sparse_code_transform(T, X, thr)
        f = tl_objective(T, X, Z, hp.lam, hp.mu)
        stages.append((it, "Z", f))
        trace.append(f)
        log.debug("iteration %d: objective %.12g", it, f)
        if _converged(trace[-2], f, hp.rel_tol):
            converged = True
            break
    else:
        it = hp.max_outer

    report = TrainReport(
        outer_iterations=it,
        objective_trace=tuple(trace),
        converged=converged,
        seed=hp.seed,
        wall_time_seconds=time.perf_counter() - t_start,
        stage_objectives=tuple(stages),
    )
    return T, Z, report


def train_lctl(x, q, hp: Hyperparams, class_names=None):
    """Train a label-consistent transform model.

    Parameters
    ----------
    x : DataMatrix or array, shape (d, N)
    q : LabelMatrix or array, shape (c, N)
        One-hot class indicators.
    hp : Hyperparams
    class_names : sequence of str, optional
        Defaults to ``"class 1" ... "class c"``.

    Returns
    -------
    model : LctlModel
    report : TrainReport
    """
    t_start = time.perf_counter()
    check_seed(hp.seed)
    validate_pair(x, q)
    X = x.values if isinstance(x, DataMatrix) else DataMatrix(x).values
    Q = q.values if isinstance(q, LabelMatrix) else LabelMatrix(q).values
    d, c = X.shape[0], Q.shape[0]
    _check_atoms(hp, d)
    empty = np.flatnonzero(Q.sum(axis=1) == 0)
    if empty.size:
        raise Degenerate(f"class {empty[0] + 1} has no training samples")
    if class_names is None:
        class_names = [f"class {i + 1}" for i in range(c)]
    if len(class_names) != c:
        raise DimensionMismatch(f"{len(class_names)} class names for {c} classes")

    lam, mu = hp.lam, hp.mu
    factor = cholesky_factor(X, lam)

    def objective(T, Z, M):
        return lctl_objective(T, M, X, Z, Q, lam, mu)

    T = init_transform(hp.atoms, d, hp.seed, hp)
    Z = sparse_code_transform(T, X, hp.threshold)
    M = update_classifier_map(Z, Q, hp.ridge)
    trace = [objective(T, Z, M)]
    stages = [(0, "init", trace[0])]
    converged = False
    it = 0
    for it in range(1, hp.max_outer + 1):
        T = transform_update(X, Z, lam, T_prev=T, hyperparams=hp, factor=factor)
        stages.append((it, "T", objective(T, Z, M)))
        Z = batch_coefficient_update(T, X, M, Q, mu, hp, z0=Z)
        stages.append((it, "Z", objective(T, Z, M)))
        M = update_classifier_map(Z, Q, hp.ridge)
        f = objective(T, Z, M)
        stages.append((it, "M", f))
        trace.append(f)
        log.debug("iteration %d: objective %.12g", it, f)
        if _converged(trace[-2], f, hp.rel_tol):
            converged = True
            break
    else:
        it = hp.max_outer

    model = LctlModel(
        transform=T,
        M=M,
        class_names=tuple(class_names),
        feature_count=d,
        objective_trace=tuple(trace),
        seed=hp.seed,
        prng=PRNG_NAME,
    )
    report = TrainReport(
        outer_iterations=it,
        objective_trace=tuple(trace),
        converged=converged,
        seed=hp.seed,
        wall_time_seconds=time.perf_counter() - t_start,
        stage_objectives=tuple(stages),
    )
    log.info(
        "trained LCTL: %d iterations, objective %.6g, converged=%s",
        it, trace[-1], converged,
    )
    return model, report
