"""Pairwise-coordinate (SMO-style) solver for simplex-box quadratic programs.

Solves  min_a  0.5 a'Qa + p'a   s.t.  sum(a) = 1,  0 <= a_i <= box.

Both one-class duals are instances of this program:

* SVDD:   max  sum_i a_i K_ii - a'Ka   ->  Q = 2K, p = -diag(K), box = C
* OC-SVM: min  0.5 a'Ka               ->  Q = K,  p = 0,        box = 1/(nu n)

Each step picks the maximal-violating pair (steepest feasible descent
coordinate up, steepest ascent coordinate down) and moves mass between the
two, which preserves the simplex constraint exactly. Termination when the
worst KKT violation drops below ``tol``.
"""

from __future__ import annotations

import numpy as np


class DualSolverError(RuntimeError):
    """Solver failed to reach the KKT tolerance; carries the best residual."""

    def __init__(self, message: str, residual: float) -> None:
        super().__init__(f"{message} (best KKT residual {residual:.3e})")
        self.residual = residual


def solve_simplex_box_qp(Q: np.ndarray, p: np.ndarray, box: float,
                         tol: float = 1e-6, max_iter: int = 100_000) -> np.ndarray:
    Q = np.asarray(Q, dtype=float)
    p = np.asarray(p, dtype=float)
    n = Q.shape[0]
    if Q.shape != (n, n) or p.shape != (n,):
        raise ValueError("Q must be square and p match its size")
    if box <= 0 or n * box < 1.0 - 1e-12:
        raise ValueError(f"box constraint 0 <= a <= {box} with sum(a)=1 is "
                         f"infeasible for n={n}")

    a = np.full(n, 1.0 / n)
    if n * box <= 1.0 + 1e-12:
        # box exactly 1/n: the uniform point is the only feasible one
        return a
    g = Q @ a + p
    eps = 1e-12 * max(1.0, box)
    # the KKT violation scales with the gram magnitude; tighten the stopping
    # threshold on tiny-scale problems (e.g. strongly whitened data) so the
    # solution stays scale-equivariant, but never loosen it
    scale = max(float(np.abs(np.diag(Q)).max()), float(np.abs(p).max()), 1e-12)
    tol = tol * min(1.0, scale)
    best = np.inf

    for _ in range(max_iter):
        up = a < box - eps  # mass can move in
        dn = a > eps        # mass can move out
        if not up.any() or not dn.any():
            return a
        i = int(np.argmin(np.where(up, g, np.inf)))
        j = int(np.argmax(np.where(dn, g, -np.inf)))
        viol = g[j] - g[i]
        best = min(best, viol)
        if viol < tol:
            return a

        denom = Q[i, i] + Q[j, j] - 2.0 * Q[i, j]
        t_max = min(box - a[i], a[j])
        t = min(viol / denom, t_max) if denom > 0 else t_max
        pair_sum = a[i] + a[j]
        ai_new = min(a[i] + t, box, pair_sum)
        aj_new = pair_sum - ai_new
        g += (ai_new - a[i]) * Q[:, i] + (aj_new - a[j]) * Q[:, j]
        a[i] = ai_new
        a[j] = aj_new

    raise DualSolverError(f"no convergence after {max_iter} iterations", residual=float(best))


def solve_svdd_dual(K: np.ndarray, C: float, tol: float = 1e-6,
                    max_iter: int = 100_000) -> np.ndarray:
    """Dual coefficients of the soft hypersphere description.

    Maximizes ``sum_i a_i K_ii - a'Ka`` over the simplex with box ``C``; the
    returned alphas satisfy the distance-form KKT conditions within ``tol``.
    """
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    if n == 0:
        raise ValueError("empty gram matrix")
    if C < 1.0 / n - 1e-12:
        raise ValueError(f"C={C} is infeasible: the simplex needs C >= 1/n = {1.0 / n:.6g}")
    return solve_simplex_box_qp(2.0 * K, -np.diag(K).copy(), box=float(C),
                                tol=tol, max_iter=max_iter)


def solve_ocsvm_dual(K: np.ndarray, nu: float, tol: float = 1e-6,
                     max_iter: int = 100_000) -> np.ndarray:
    """Dual coefficients of the one-class SVM: min 0.5 a'Ka, box 1/(nu n)."""
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    if n == 0:
        raise ValueError("empty gram matrix")
    if not 0 < nu <= 1:
        raise ValueError(f"nu must be in (0, 1], got {nu}")
    return solve_simplex_box_qp(K, np.zeros(n), box=1.0 / (nu * n),
                                tol=tol, max_iter=max_iter)


def center_distances_sq(K: np.ndarray, alphas: np.ndarray) -> np.ndarray:
    """Squared kernel distance of each training sample to the alpha-center."""
    Ka = K @ alphas
    return np.diag(K) - 2.0 * Ka + float(alphas @ Ka)
