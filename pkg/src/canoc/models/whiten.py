"""Whitened one-class models: ellipsoidal and graph-embedded variants.

Both are realized as a linear transform W applied before an inner SVDD or
OC-SVM. E-SVDD whitens by the regularized covariance, so the spherical
boundary in the whitened space is an ellipsoid in input space; the
graph-embedded variants whiten by a kNN-Laplacian scatter instead, warping
the geometry toward locally connected structure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..features import Scaler
from .kernels import KernelSpec, LINEAR, _as_matrix, squared_distances
from .ocsvm import OcsvmModel, ocsvm_fit, ocsvm_scores
from .svdd import SvddModel, svdd_fit, svdd_scores

WHITEN_KINDS = ("ellipsoid", "graph")


@dataclass(frozen=True, eq=False)
class WhitenSpec:
    """D x D transform applied to inputs before the inner model."""

    transform: np.ndarray
    kind: str
    epsilon: float
    k_neighbors: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in WHITEN_KINDS:
            raise ValueError(f"whitening kind must be one of {WHITEN_KINDS}")
        if not np.all(np.isfinite(self.transform)):
            raise ValueError("whitening transform must be finite")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")


@dataclass(frozen=True, eq=False)
class WhitenedModel:
    """Whitening plus inner model; iterable so it unpacks as (whiten, inner)."""

    whiten: WhitenSpec
    inner: SvddModel | OcsvmModel
    family: str
    scaler: Scaler | None = None

    def __iter__(self):
        yield self.whiten
        yield self.inner


def inv_sqrt_psd(S: np.ndarray) -> np.ndarray:
    """Symmetric inverse square root of a positive definite matrix."""
    S = 0.5 * (S + S.T)
    vals, vecs = np.linalg.eigh(S)
    if vals.min() <= 0:
        raise ValueError(f"matrix not positive definite (min eigenvalue {vals.min():.3e}); "
                         "increase epsilon")
    return (vecs / np.sqrt(vals)) @ vecs.T


def esvdd_fit(X, C: float, epsilon: float = 1e-3, kernel: KernelSpec = LINEAR, *,
              scaler: Scaler | None = None, tol: float = 1e-6,
              max_iter: int = 100_000) -> WhitenedModel:
    """Ellipsoidal description: whiten by (cov + eps I)^(-1/2), then SVDD."""
    X = _as_matrix(X, "X")
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    cov = np.atleast_2d(np.cov(X, rowvar=False))
    if not np.all(np.isfinite(cov)):
        raise ValueError("training covariance is not finite")
    W = inv_sqrt_psd(cov + epsilon * np.eye(X.shape[1]))
    inner = svdd_fit(X @ W, C, kernel, tol=tol, max_iter=max_iter)
    return WhitenedModel(WhitenSpec(W, "ellipsoid", float(epsilon)), inner,
                         family="esvdd", scaler=scaler)


def graph_laplacian(X, k: int) -> np.ndarray:
    """Unnormalized Laplacian of the mutualized (max-symmetrized) binary kNN
    graph; PSD with zero row sums."""
    X = _as_matrix(X, "X")
    n = X.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"k={k} must satisfy 1 <= k < n={n}")
    d2 = squared_distances(X, X)
    np.fill_diagonal(d2, np.inf)
    neighbors = np.argsort(d2, axis=1, kind="stable")[:, :k]
    A = np.zeros((n, n))
    A[np.repeat(np.arange(n), k), neighbors.ravel()] = 1.0
    A = np.maximum(A, A.T)
    return np.diag(A.sum(axis=1)) - A


def _laplacian_whitener(X: np.ndarray, k: int, epsilon: float) -> WhitenSpec:
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    L = graph_laplacian(X, k)
    S = X.T @ L @ X + epsilon * np.eye(X.shape[1])
    return WhitenSpec(inv_sqrt_psd(S), "graph", float(epsilon), k_neighbors=int(k))


def gesvdd_fit(X, C: float, k: int = 5, epsilon: float = 1e-3,
               kernel: KernelSpec = LINEAR, *, scaler: Scaler | None = None,
               tol: float = 1e-6, max_iter: int = 100_000) -> WhitenedModel:
    """Graph-embedded SVDD: whiten by (X'LX + eps I)^(-1/2), then SVDD."""
    X = _as_matrix(X, "X")
    whiten = _laplacian_whitener(X, k, epsilon)
    inner = svdd_fit(X @ whiten.transform, C, kernel, tol=tol, max_iter=max_iter)
    return WhitenedModel(whiten, inner, family="gesvdd", scaler=scaler)


def geocsvm_fit(X, nu: float, k: int = 5, epsilon: float = 1e-3,
                kernel: KernelSpec = LINEAR, *, scaler: Scaler | None = None,
                tol: float = 1e-6, max_iter: int = 100_000) -> WhitenedModel:
    """Graph-embedded one-class SVM (same whitening, OC-SVM inner)."""
    X = _as_matrix(X, "X")
    whiten = _laplacian_whitener(X, k, epsilon)
    inner = ocsvm_fit(X @ whiten.transform, nu, kernel, tol=tol, max_iter=max_iter)
    return WhitenedModel(whiten, inner, family="geocsvm", scaler=scaler)


def whitened_scores(model: WhitenedModel, X) -> np.ndarray:
    X = _as_matrix(X, "X")
    XW = X @ model.whiten.transform
    if isinstance(model.inner, OcsvmModel):
        return ocsvm_scores(model.inner, XW)
    return svdd_scores(model.inner, XW)
