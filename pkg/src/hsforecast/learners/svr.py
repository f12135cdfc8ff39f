"""Epsilon-insensitive support vector regression trained by SMO.

The dual is solved over 2l variables (alpha, alpha*) with second-order
working-set selection, in the formulation used by LIBSVM (Fan, Chen & Lin,
2005). The target is standardized internally so ``epsilon`` and the
tolerance are in units of the target's standard deviation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

TAU = 1e-12


@numba.njit(cache=True)
def _smo(K, y, C, eps, tol, max_iter):
    l = y.size
    n = 2 * l
    alpha = np.zeros(n)
    sgn = np.empty(n)
    G = np.empty(n)
    for i in range(l):
        sgn[i] = 1.0
        sgn[i + l] = -1.0
        G[i] = eps - y[i]
        G[i + l] = eps + y[i]

    it = 0
    converged = False
    while it < max_iter:
        # maximal violating i from I_up
        gmax = -np.inf
        i = -1
        for t in range(n):
            if sgn[t] > 0:
                if alpha[t] < C and -G[t] >= gmax:
                    gmax = -G[t]
                    i = t
            else:
                if alpha[t] > 0 and G[t] >= gmax:
                    gmax = G[t]
                    i = t
        gmax2 = -np.inf
        j = -1
        obj_min = np.inf
        ii = i % l if i >= 0 else 0
        kii = K[ii, ii]
        for t in range(n):
            tt = t % l
            if sgn[t] > 0:
                if alpha[t] > 0:
                    diff = gmax + G[t]
                    if G[t] >= gmax2:
                        gmax2 = G[t]
                    if diff > 0 and i >= 0:
                        quad = kii + K[tt, tt] - 2.0 * K[ii, tt]
                        if quad <= 0:
                            quad = TAU
                        obj = -(diff * diff) / quad
                        if obj <= obj_min:
                            j = t
                            obj_min = obj
            else:
                if alpha[t] < C:
                    diff = gmax - G[t]
                    if -G[t] >= gmax2:
                        gmax2 = -G[t]
                    if diff > 0 and i >= 0:
                        quad = kii + K[tt, tt] - 2.0 * K[ii, tt]
                        if quad <= 0:
                            quad = TAU
                        obj = -(diff * diff) / quad
                        if obj <= obj_min:
                            j = t
                            obj_min = obj
        if gmax + gmax2 < tol or j < 0:
            converged = True
            break
        it += 1

        jj = j % l
        kij = sgn[i] * sgn[j] * K[ii, jj]
        kjj = K[jj, jj]
        old_i = alpha[i]
        old_j = alpha[j]
        if sgn[i] != sgn[j]:
            quad = kii + kjj + 2.0 * kij
            if quad <= 0:
                quad = TAU
            delta = (-G[i] - G[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            else:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + diff
        else:
            quad = kii + kjj - 2.0 * kij
            if quad <= 0:
                quad = TAU
            delta = (G[i] - G[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = total
            if total > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = total

        di = alpha[i] - old_i
        dj = alpha[j] - old_j
        for t in range(n):
            tt = t % l
            G[t] += sgn[t] * (sgn[i] * K[ii, tt] * di + sgn[j] * K[jj, tt] * dj)

    # offset from free variables, else midpoint of the feasible interval
    ub = np.inf
    lb = -np.inf
    n_free = 0
    sum_free = 0.0
    for t in range(n):
        yg = sgn[t] * G[t]
        if alpha[t] >= C:
            if sgn[t] < 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif alpha[t] <= 0:
            if sgn[t] > 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            n_free += 1
            sum_free += yg
    if n_free > 0:
        rho = sum_free / n_free
    else:
        rho = 0.5 * (ub + lb)
    coef = alpha[:l] - alpha[l:]
    return coef, rho, it, converged


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    sq = (np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :] - 2.0 * A @ B.T)
    return np.exp(-gamma * np.maximum(sq, 0.0))


@dataclass(frozen=True)
class SupportVectorRegressor:
    kernel: str
    gamma: float
    support: np.ndarray  # support vectors (rbf) or empty (linear)
    coef: np.ndarray
    weights: np.ndarray  # primal weights (linear kernel only)
    rho: float
    y_mean: float
    y_scale: float
    n_iter: int
    converged: bool

    def decision(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.kernel == "linear":
            return X @ self.weights - self.rho
        if self.coef.size == 0:
            return np.full(X.shape[0], -self.rho)
        return rbf_kernel(X, self.support, self.gamma) @ self.coef - self.rho

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.decision(X) * self.y_scale + self.y_mean


def fit_svr(X: np.ndarray, y: np.ndarray, kernel: str = "rbf", C: float = 1.0,
            epsilon: float = 0.1, tol: float = 1e-3, gamma: float | None = None,
            max_passes: int = 10_000) -> SupportVectorRegressor:
    """Fit an epsilon-SVR. The iteration cap is ``max_passes`` sweeps of l pair updates.

    The problem is solved on the standardized target; ``epsilon`` is given in
    target units and rescaled accordingly.
    """
    X = np.ascontiguousarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    l, d = X.shape
    y_mean = float(y.mean())
    y_scale = float(y.std())
    if not y_scale > 0:
        y_scale = 1.0
    ys = (y - y_mean) / y_scale
    if gamma is None:
        gamma = 1.0 / d
    if kernel == "rbf":
        K = rbf_kernel(X, X, gamma)
    elif kernel == "linear":
        K = X @ X.T
    else:
        raise ValueError(f"unknown kernel {kernel!r}")
    coef, rho, n_iter, converged = _smo(np.ascontiguousarray(K), ys, float(C), float(epsilon) / y_scale,
                                        float(tol), int(max_passes) * l)
    sv = coef != 0
    if kernel == "linear":
        return SupportVectorRegressor(kernel, gamma, np.empty((0, d)), coef[sv],
                                      X[sv].T @ coef[sv], float(rho), y_mean, y_scale,
                                      int(n_iter), bool(converged))
    return SupportVectorRegressor(kernel, gamma, X[sv], coef[sv], np.empty(0), float(rho),
                                  y_mean, y_scale, int(n_iter), bool(converged))
