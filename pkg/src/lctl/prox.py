"""Soft thresholding and iterative soft-thresholding (ISTA) solvers.

The coefficient subproblem of label-consistent training is, per sample,

    min_z  ||T x - z||^2 + ||q - M z||^2 + mu ||z||_1

i.e. an l1-regularized least squares problem with the stacked operator
``A = [I; M]`` and target ``b = [T x; q]``.  It is solved with plain ISTA
at fixed step ``1 / (1 + sigma_max(M)^2)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidArgs, NonFinite
from .model import Hyperparams, TransformModel, as_matrix, threshold_for


@dataclass(frozen=True)
class IstaReport:
    iterations_used: int
    final_rel_change: float
    converged: bool


def soft_threshold(a, t):
    """Shrink ``a`` towards zero by ``t``: ``sign(a) * max(0, |a| - t)``.

    This is the minimizer over ``z`` of ``(a - z)^2 + 2 t |z|``.  Works
    elementwise on arrays; returns a Python float for scalar input.
    """
    if np.ndim(t) != 0 or not np.isfinite(t) or t < 0:
        raise InvalidArgs(f"threshold must be a finite non-negative scalar, got {t!r}")
    arr = np.asarray(a, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise NonFinite("soft_threshold input contains NaN or Inf")
    out = np.sign(arr) * np.maximum(np.abs(arr) - t, 0.0)
    if out.ndim == 0:
        return float(out)
    return out


def sparse_code_transform(T, x, t: float) -> np.ndarray:
    """Closed-form transform coding ``Z = soft_threshold(T X, t)``.

    ``Z`` is the exact minimizer of ``||TX - Z||_F^2 + 2t ||Z||_1``.
    """
    Tm = T.T if isinstance(T, TransformModel) else as_matrix(T, "transform")
    X = as_matrix(x, "data matrix")
    if Tm.shape[1] != X.shape[0]:
        raise DimensionMismatch(
            f"transform expects {Tm.shape[1]} features, data has {X.shape[0]}"
        )
    return soft_threshold(Tm @ X, t)


def stacked_objective(z, tx, M, q, mu) -> np.ndarray:
    """Per-column value of ``||tx - z||^2 + ||q - Mz||^2 + mu ||z||_1``."""
    z = np.asarray(z, dtype=np.float64)
    r1 = tx - z
    r2 = q - M @ z
    return (r1 * r1).sum(axis=0) + (r2 * r2).sum(axis=0) + mu * np.abs(z).sum(axis=0)


def lipschitz_constant(M: np.ndarray) -> float:
    """Lipschitz constant of the gradient of ``0.5 ||[I; M] z - b||^2``."""
    if M.size == 0:
        return 1.0
    return 1.0 + float(np.linalg.norm(M, 2)) ** 2


def ista_batch(tx, M, q, mu: float, ctl: Hyperparams, z0=None):
    """Run ISTA independently on every column of ``tx`` / ``q``.

    Columns stop individually once their relative iterate change drops
    below ``ctl.ista_tol``; a stopped column is never touched again, so
    each column's result does not depend on the others.

    Returns
    -------
    z : ndarray, shape (p, K)
    iterations : ndarray of int, shape (K,)
    rel_change : ndarray, shape (K,)
    converged : ndarray of bool, shape (K,)
    """
    tx = np.asarray(tx, dtype=np.float64)
    M = np.asarray(M, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if tx.ndim != 2 or q.ndim != 2 or M.ndim != 2:
        raise DimensionMismatch("ista_batch expects 2-D tx, M and q")
    p, K = tx.shape
    if M.shape[1] != p or q.shape != (M.shape[0], K):
        raise DimensionMismatch(
            f"inconsistent shapes: tx {tx.shape}, M {M.shape}, q {q.shape}"
        )
    if not np.isfinite(mu) or mu <= 0:
        raise InvalidArgs(f"mu must be positive, got {mu!r}")
    for name, a in (("tx", tx), ("M", M), ("q", q)):
        if not np.all(np.isfinite(a)):
            raise NonFinite(f"{name} contains NaN or Inf")

    step = 1.0 / lipschitz_constant(M)
    thr = threshold_for(mu, ctl.threshold_convention) * step
    MtM = M.T @ M
    Mtq = M.T @ q

    if z0 is None:
        z = np.zeros((p, K))
    else:
        z = np.array(z0, dtype=np.float64, copy=True)
        if z.shape != (p, K):
            raise DimensionMismatch(f"warm start has shape {z.shape}, expected {(p, K)}")

    iterations = np.zeros(K, dtype=np.int64)
    rel_change = np.full(K, np.inf)
    converged = np.zeros(K, dtype=bool)
    active = np.arange(K)
    for _ in range(ctl.ista_max_iters):
        if active.size == 0:
            break
        za = z[:, active]
        grad = (za - tx[:, active]) + (MtM @ za - Mtq[:, active])
        zn = za - step * grad
        zn = np.sign(zn) * np.maximum(np.abs(zn) - thr, 0.0)
        if not np.all(np.isfinite(zn)):
            raise NonFinite("ISTA iterate became non-finite")
        delta = np.linalg.norm(zn - za, axis=0)
        scale = np.linalg.norm(zn, axis=0)
        rc = np.where(delta == 0.0, 0.0, delta / np.maximum(scale, np.finfo(float).tiny))
        z[:, active] = zn
        iterations[active] += 1
        rel_change[active] = rc
        done = rc < ctl.ista_tol
        converged[active[done]] = True
        active = active[~done]
    return z, iterations, rel_change, converged


def ista_stacked(T_x, M, q, mu: float, ctl: Hyperparams, z0=None):
    """Solve ``min_z ||T_x - z||^2 + ||q - Mz||^2 + mu ||z||_1`` for one sample.

    Non-convergence within ``ctl.ista_max_iters`` is reported, not raised.

    Returns
    -------
    z : ndarray, shape (p,)
    report : IstaReport
    """
    tx = np.asarray(T_x, dtype=np.float64).reshape(-1, 1)
    qv = np.asarray(q, dtype=np.float64).reshape(-1, 1)
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    w0 = None if z0 is None else np.asarray(z0, dtype=np.float64).reshape(-1, 1)
    z, its, rc, conv = ista_batch(tx, M, qv, mu, ctl, z0=w0)
    return z[:, 0], IstaReport(int(its[0]), float(rc[0]), bool(conv[0]))


def batch_coefficient_update(T, x, M, q, mu: float, ctl: Hyperparams, z0=None) -> np.ndarray:
    """Coefficient update for label-consistent training.

    Each column of the result is the ISTA solution of the stacked
    subproblem for the matching columns of ``x`` and ``q``; ``z0``
    optionally warm-starts every column.
    """
    Tm = T.T if isinstance(T, TransformModel) else as_matrix(T, "transform")
    X = as_matrix(x, "data matrix")
    Q = as_matrix(q, "label matrix")
    Mm = as_matrix(M, "classifier map")
    if Tm.shape[1] != X.shape[0]:
        raise DimensionMismatch(
            f"transform expects {Tm.shape[1]} features, data has {X.shape[0]}"
        )
    if X.shape[1] != Q.shape[1]:
        raise DimensionMismatch(f"data has {X.shape[1]} samples but labels have {Q.shape[1]}")
    z, _, _, _ = ista_batch(Tm @ X, Mm, Q, mu, ctl, z0=z0)
    return z
