"""One-class SVM: hyperplane separating the target class from the origin.

Scores follow the package-wide sign convention (positive = anomalous), so
``score(x) = rho - sum_i a_i K(x, x_i)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..features import Scaler
from .kernels import KernelSpec, LINEAR, _as_matrix, gram_matrix, resolve_kernel
from .smo import solve_ocsvm_dual
from .svdd import BOUNDARY_EPS, SUPPORT_KEEP_EPS


@dataclass(frozen=True, eq=False)
class OcsvmModel:
    alphas: np.ndarray
    support_samples: np.ndarray
    rho: float
    nu: float
    kernel: KernelSpec
    scaler: Scaler | None = None


def ocsvm_fit(X, nu: float, kernel: KernelSpec = LINEAR, *,
              scaler: Scaler | None = None, tol: float = 1e-6,
              max_iter: int = 100_000) -> OcsvmModel:
    """Fit on (already standardized) target-class rows; ``nu`` bounds the
    training outlier fraction."""
    X = _as_matrix(X, "X")
    if X.shape[0] < 1:
        raise ValueError("ocsvm_fit needs at least 1 training row")
    kernel = resolve_kernel(kernel, X)
    K = gram_matrix(X, X, kernel)
    alphas = solve_ocsvm_dual(K, nu, tol=tol, max_iter=max_iter)
    box = 1.0 / (nu * X.shape[0])
    Ka = K @ alphas
    support = alphas > BOUNDARY_EPS * box
    unbounded = support & (alphas < box * (1.0 - BOUNDARY_EPS))
    chosen = unbounded if unbounded.any() else support
    rho = float(Ka[chosen].mean())
    keep = alphas > SUPPORT_KEEP_EPS
    return OcsvmModel(alphas=alphas[keep], support_samples=X[keep].copy(),
                      rho=rho, nu=float(nu), kernel=kernel, scaler=scaler)


def ocsvm_scores(model: OcsvmModel, X) -> np.ndarray:
    X = _as_matrix(X, "X")
    if X.shape[1] != model.support_samples.shape[1]:
        raise ValueError(f"expected {model.support_samples.shape[1]} features, "
                         f"got {X.shape[1]}")
    Kx = gram_matrix(X, model.support_samples, model.kernel)
    return model.rho - Kx @ model.alphas


def ocsvm_score(model: OcsvmModel, x) -> float:
    return float(ocsvm_scores(model, np.atleast_2d(np.asarray(x, dtype=float)))[0])
