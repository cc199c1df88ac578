"""Closed-form transform update and the training objectives.

The transform subproblem is

    min_T  ||TX - Z||_F^2 + lam * (||T||_F^2 - sum_i log sigma_i(T))

For a square ``T`` the sum of log singular values is ``log |det T|`` and
the minimizer has the closed form

    X X^T + lam I = L L^T
    L^{-1} X Z^T  = U S V^T                                (thin SVD)
    T = 0.5 V (S + (S^2 + 2 lam I)^{1/2}) U^T L^{-1}

For a rectangular ``T`` (fewer atoms than features) the closed form
minimizes the same objective with the log-det taken over ``T L`` instead
of ``T``; :func:`transform_update` refines it to a stationary point of
the objective above.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize

from .errors import DimensionMismatch, InvalidArgs, NumericalFailure, SingularTransform
from .model import Hyperparams, TransformModel, as_matrix

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CholeskyFactor:
    """Lower-triangular ``L`` with ``L L^T = X X^T + lam I``."""

    L: np.ndarray


def _check_lambda(lam: float) -> None:
    if not np.isfinite(lam) or lam <= 0:
        raise InvalidArgs(f"lambda must be positive, got {lam!r}")


def cholesky_factor(x, lam: float) -> CholeskyFactor:
    _check_lambda(lam)
    X = as_matrix(x, "data matrix")
    G = X @ X.T
    G[np.diag_indices_from(G)] += lam
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"Cholesky factorization failed: {exc}") from exc
    return CholeskyFactor(L)


def _transform_of(T) -> np.ndarray:
    return T.T if isinstance(T, TransformModel) else as_matrix(T, "transform")


def _check_xz(X: np.ndarray, Z: np.ndarray) -> None:
    if X.shape[1] != Z.shape[1]:
        raise DimensionMismatch(f"data has {X.shape[1]} samples, codes have {Z.shape[1]}")
    if Z.shape[0] > X.shape[0]:
        raise DimensionMismatch(
            f"transform update needs atoms <= features, got {Z.shape[0]} > {X.shape[0]}"
        )


def _closed_form(L: np.ndarray, C: np.ndarray, lam: float) -> np.ndarray:
    B = scipy.linalg.solve_triangular(L, C, lower=True)
    try:
        U, s, Vt = np.linalg.svd(B, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from exc
    D = 0.5 * (s + np.sqrt(s * s + 2.0 * lam))
    W = (Vt.T * D) @ U.T
    return scipy.linalg.solve_triangular(L, W.T, lower=True, trans="T").T


def transform_closed_form(x, z, lam: float, hyperparams: Hyperparams | None = None) -> TransformModel:
    """Closed-form transform update from data ``x`` (d x N) and codes ``z`` (p x N)."""
    _check_lambda(lam)
    X = as_matrix(x, "data matrix")
    Z = as_matrix(z, "coefficient matrix")
    _check_xz(X, Z)
    L = cholesky_factor(X, lam).L
    T = _closed_form(L, X @ Z.T, lam)
    if not np.all(np.isfinite(T)):
        raise NumericalFailure("closed-form transform update produced non-finite entries")
    return TransformModel(T, hyperparams if hyperparams is not None else Hyperparams(atoms=Z.shape[0], lam=lam))


def log_singular_sum(T: np.ndarray) -> float:
    s = np.linalg.svd(T, compute_uv=False)
    if s.size == 0 or s.min() <= 0.0:
        raise SingularTransform("transform is rank deficient; log-det regularizer undefined")
    return float(np.log(s).sum())


def transform_subproblem_objective(T, x, z, lam: float) -> float:
    """``||TX - Z||_F^2 + lam (||T||_F^2 - sum log sigma_i(T))``."""
    Tm = _transform_of(T)
    X = as_matrix(x, "data matrix")
    Z = as_matrix(z, "coefficient matrix")
    R = Tm @ X - Z
    return float((R * R).sum() + lam * ((Tm * Tm).sum() - log_singular_sum(Tm)))


def transform_subproblem_gradient(T, x, z, lam: float) -> np.ndarray:
    Tm = _transform_of(T)
    X = as_matrix(x, "data matrix")
    Z = as_matrix(z, "coefficient matrix")
    pinv_t = np.linalg.solve(Tm @ Tm.T, Tm)
    return 2.0 * (Tm @ X - Z) @ X.T + 2.0 * lam * Tm - lam * pinv_t


def tl_objective(T, x, z, lam: float, mu: float) -> float:
    """Unsupervised objective ``||TX - Z||^2 + lam (||T||^2 - sum log sigma(T)) + mu ||Z||_1``."""
    Z = as_matrix(z, "coefficient matrix")
    return transform_subproblem_objective(T, x, Z, lam) + mu * float(np.abs(Z).sum())


def lctl_objective(T, M, x, z, q, lam: float, mu: float) -> float:
    """Label-consistent objective: :func:`tl_objective` plus ``||Q - MZ||_F^2``."""
    Z = as_matrix(z, "coefficient matrix")
    Q = as_matrix(q, "label matrix")
    Mm = as_matrix(M, "classifier map")
    if Mm.shape[1] != Z.shape[0] or Q.shape != (Mm.shape[0], Z.shape[1]):
        raise DimensionMismatch(
            f"inconsistent shapes: M {Mm.shape}, Z {Z.shape}, Q {Q.shape}"
        )
    R = Q - Mm @ Z
    return tl_objective(T, x, Z, lam, mu) + float((R * R).sum())


class _Subproblem:
    """Transform subproblem in whitened coordinates ``W = T L``.

    In ``W`` the quadratic part is ``||W||^2 - 2 tr(W B) + const`` with
    identity Hessian, which keeps quasi-Newton refinement well conditioned
    no matter how badly scaled the data are.
    """

    def __init__(self, L: np.ndarray, C: np.ndarray, lam: float):
        self.L = L
        self.B = scipy.linalg.solve_triangular(L, C, lower=True)
        self.lam = lam
        self.p, self.d = C.shape[1], C.shape[0]

    def to_t(self, W: np.ndarray) -> np.ndarray:
        return scipy.linalg.solve_triangular(self.L, W.T, lower=True, trans="T").T

    def to_w(self, T: np.ndarray) -> np.ndarray:
        return T @ self.L

    def __call__(self, w: np.ndarray):
        W = w.reshape(self.p, self.d)
        T = self.to_t(W)
        G = T @ T.T
        try:
            cf = np.linalg.cholesky(G)
        except np.linalg.LinAlgError:
            return np.inf, np.zeros_like(w)
        logdet = 2.0 * np.log(np.diag(cf)).sum()
        f = (W * W).sum() - 2.0 * np.einsum("ij,ji->", W, self.B) - 0.5 * self.lam * logdet
        # d/dT of 0.5 logdet(T T^T) is (T T^T)^{-1} T; chain rule through T = W L^{-1}
        gT = scipy.linalg.cho_solve((cf, True), T)
        gW = 2.0 * W - 2.0 * self.B.T - self.lam * scipy.linalg.solve_triangular(
            self.L, gT.T, lower=True
        ).T
        return f, gW.ravel()

    def refine(self, T0: np.ndarray, maxiter: int = 2000) -> np.ndarray:
        w0 = self.to_w(T0).ravel()
        res = scipy.optimize.minimize(
            self, w0, jac=True, method="L-BFGS-B",
            options={"maxiter": maxiter, "maxcor": 30, "ftol": 1e-16, "gtol": 1e-12},
        )
        log.debug("transform refinement: %s after %d iterations", res.message, res.nit)
        return self.to_t(res.x.reshape(self.p, self.d))


def transform_update(x, z, lam: float, T_prev=None, hyperparams: Hyperparams | None = None,
                     factor: CholeskyFactor | None = None) -> TransformModel:
    """Transform step of the alternating minimization.

    Square transforms get the exact closed form.  Rectangular transforms
    start from the closed form and are refined by quasi-Newton iterations
    to a stationary point of the subproblem.  When ``T_prev`` is given the
    result never has a larger subproblem objective than ``T_prev``.
    ``factor`` lets the caller reuse the Cholesky factor of ``XX^T + lam I``.
    """
    _check_lambda(lam)
    X = as_matrix(x, "data matrix")
    Z = as_matrix(z, "coefficient matrix")
    _check_xz(X, Z)
    L = (factor if factor is not None else cholesky_factor(X, lam)).L
    C = X @ Z.T
    T = _closed_form(L, C, lam)
    hp = hyperparams if hyperparams is not None else Hyperparams(atoms=Z.shape[0], lam=lam)

    candidates = []
    if Z.shape[0] < X.shape[0]:
        sub = _Subproblem(L, C, lam)
        T = sub.refine(T)
        candidates.append(T)
        if T_prev is not None:
            Tp = _transform_of(T_prev)
            f_new = transform_subproblem_objective(T, X, Z, lam)
            f_old = transform_subproblem_objective(Tp, X, Z, lam)
            if f_new > f_old:
                candidates.append(sub.refine(Tp))
                candidates.append(Tp)
    else:
        candidates.append(T)
        if T_prev is not None:
            candidates.append(_transform_of(T_prev))

    if len(candidates) > 1:
        vals = []
        for cand in candidates:
            try:
                vals.append(transform_subproblem_objective(cand, X, Z, lam))
            except SingularTransform:
                vals.append(np.inf)
        T = candidates[int(np.argmin(vals))]
    if not np.all(np.isfinite(T)):
        raise NumericalFailure("transform update produced non-finite entries")
    return TransformModel(T, hp)
