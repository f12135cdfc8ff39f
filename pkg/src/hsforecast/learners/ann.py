"""Single-hidden-layer tanh network trained by back-propagation.

tanh is evaluated with a clamped rational approximation, identically in
training and prediction, because it dominates the training cost.

``standard`` and ``momentum`` update the weights after every pattern
(shuffled each epoch); ``resilient`` is batch iRprop-. The target is
standardized internally; the stopping threshold applies to the MSE in those
units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

VARIANTS = ("standard", "momentum", "resilient")

# rational minimax fit of tanh (odd 13/6); |error| < 3e-7 and saturates past the clamp
_TANH_CLAMP = 7.90531110763549805
_TP = (4.89352455891786e-03, 6.37261928875436e-04, 1.48572235717979e-05, 5.12229709037114e-08,
       -8.60467152213735e-11, 2.00018790482477e-13, -2.76076847742355e-16)
_TQ = (4.89352518554385e-03, 2.26843463243900e-03, 1.18534705686654e-04, 1.19825839466702e-06)


@numba.njit(cache=True)
def _tanh(x):
    x = min(_TANH_CLAMP, max(-_TANH_CLAMP, x))
    x2 = x * x
    p = _TP[6]
    p = p * x2 + _TP[5]
    p = p * x2 + _TP[4]
    p = p * x2 + _TP[3]
    p = p * x2 + _TP[2]
    p = p * x2 + _TP[1]
    p = p * x2 + _TP[0]
    q = _TQ[3]
    q = q * x2 + _TQ[2]
    q = q * x2 + _TQ[1]
    q = q * x2 + _TQ[0]
    return x * p / q


@numba.njit(cache=True)
def _hidden(X, W1, b1):
    n, d = X.shape
    H = W1.shape[0]
    out = np.empty((n, H))
    for p in range(n):
        for j in range(H):
            a = b1[j]
            for k in range(d):
                a += X[p, k] * W1[j, k]
            out[p, j] = _tanh(a)
    return out


@dataclass(frozen=True)
class Network:
    W1: np.ndarray  # (hidden, d)
    b1: np.ndarray
    W2: np.ndarray
    b2: float
    y_mean: float
    y_scale: float
    epochs: int
    train_mse: float
    converged: bool

    def predict(self, X: np.ndarray) -> np.ndarray:
        h = _hidden(np.ascontiguousarray(X, dtype=float), self.W1, self.b1)
        return (h @ self.W2 + self.b2) * self.y_scale + self.y_mean


@numba.njit(cache=True, fastmath=True)
def _online(X, y, W1, b1, W2, b2, lr, mom, epochs, tol, seed):
    np.random.seed(seed)
    n, d = X.shape
    H = W1.shape[0]
    vW1 = np.zeros_like(W1)
    vb1 = np.zeros_like(b1)
    vW2 = np.zeros_like(W2)
    vb2 = 0.0
    h = np.empty(H)
    order = np.arange(n)
    mse = np.inf
    epoch = 0
    while epoch < epochs:
        np.random.shuffle(order)
        sse = 0.0
        for t in range(n):
            xp = X[order[t]]
            out = b2
            for j in range(H):
                a = b1[j]
                w = W1[j]
                for k in range(d):
                    a += xp[k] * w[k]
                hj = _tanh(a)
                h[j] = hj
                out += hj * W2[j]
            g = out - y[order[t]]
            sse += g * g
            for j in range(H):
                gh = g * W2[j] * (1.0 - h[j] * h[j])
                vW2[j] = mom * vW2[j] - lr * g * h[j]
                W2[j] += vW2[j]
                vb1[j] = mom * vb1[j] - lr * gh
                b1[j] += vb1[j]
                w = W1[j]
                v = vW1[j]
                s = lr * gh
                for k in range(d):
                    v[k] = mom * v[k] - s * xp[k]
                    w[k] += v[k]
            vb2 = mom * vb2 - lr * g
            b2 += vb2
        epoch += 1
        # epoch error accumulated during the pass, as in classic online BP
        mse = sse / n
        if mse < tol:
            break
    return b2, epoch, mse


@numba.njit(cache=True, fastmath=True)
def _batch_grad(X, y, W1, b1, W2, b2, gW1, gb1, gW2):
    """Fill gradient buffers of the MSE; returns (mse, d mse / d b2)."""
    n, d = X.shape
    H = W1.shape[0]
    gW1[:] = 0.0
    gb1[:] = 0.0
    gW2[:] = 0.0
    gb2 = 0.0
    sse = 0.0
    h = np.empty(H)
    for p in range(n):
        out = b2
        for j in range(H):
            a = b1[j]
            for k in range(d):
                a += X[p, k] * W1[j, k]
            h[j] = _tanh(a)
            out += h[j] * W2[j]
        e = out - y[p]
        sse += e * e
        g = 2.0 * e / n
        gb2 += g
        for j in range(H):
            gW2[j] += g * h[j]
            gh = g * W2[j] * (1.0 - h[j] * h[j])
            gb1[j] += gh
            for k in range(d):
                gW1[j, k] += gh * X[p, k]
    return sse / n, gb2


@numba.njit(cache=True)
def _rprop_update(w, g, gp, step, eta_plus, eta_minus, step_min, step_max):
    for i in range(w.size):
        s = g[i] * gp[i]
        if s > 0:
            step[i] = min(step[i] * eta_plus, step_max)
        elif s < 0:
            step[i] = max(step[i] * eta_minus, step_min)
            g[i] = 0.0
        if g[i] > 0:
            w[i] -= step[i]
        elif g[i] < 0:
            w[i] += step[i]
        gp[i] = g[i]


@numba.njit(cache=True)
def _rprop(X, y, W1, b1, W2, b2, epochs, tol, eta_plus, eta_minus, step_min, step_max, step0):
    # b2 travels in a 1-element array so all parameters share the update routine
    H, d = W1.shape
    B2 = np.array([b2])
    gW1 = np.zeros_like(W1)
    gb1 = np.zeros_like(b1)
    gW2 = np.zeros_like(W2)
    gB2 = np.zeros(1)
    params = (W1.reshape(-1), b1, W2, B2)
    steps = (np.full(H * d, step0), np.full(H, step0), np.full(H, step0), np.full(1, step0))
    prev = (np.zeros(H * d), np.zeros(H), np.zeros(H), np.zeros(1))
    mse = np.inf
    epoch = 0
    while epoch < epochs:
        mse, gB2[0] = _batch_grad(X, y, W1, b1, W2, B2[0], gW1, gb1, gW2)
        if mse < tol:
            break
        _rprop_update(params[0], gW1.reshape(-1), prev[0], steps[0], eta_plus, eta_minus, step_min, step_max)
        _rprop_update(params[1], gb1, prev[1], steps[1], eta_plus, eta_minus, step_min, step_max)
        _rprop_update(params[2], gW2, prev[2], steps[2], eta_plus, eta_minus, step_min, step_max)
        _rprop_update(params[3], gB2, prev[3], steps[3], eta_plus, eta_minus, step_min, step_max)
        epoch += 1
    if epoch == epochs:
        mse, _ = _batch_grad(X, y, W1, b1, W2, B2[0], gW1, gb1, gW2)
    return B2[0], epoch, mse


def fit_network(X: np.ndarray, y: np.ndarray, variant: str = "standard", hidden: int = 10,
                lr: float = 0.01, momentum: float = 0.9, epochs: int = 2000, tol: float = 1e-6,
                eta_plus: float = 1.2, eta_minus: float = 0.5, step_min: float = 1e-6,
                step_max: float = 50.0, step0: float = 0.1, seed: int = 0) -> Network:
    if variant not in VARIANTS:
        raise ValueError(f"unknown back-propagation variant {variant!r}")
    X = np.ascontiguousarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    d = X.shape[1]
    y_mean = float(y.mean())
    y_scale = float(y.std())
    rng = np.random.default_rng(seed)
    W1 = rng.uniform(-1.0, 1.0, (hidden, d)) / math.sqrt(d)
    b1 = np.zeros(hidden)
    if not y_scale > 0:
        # constant target: zero output weights are the exact optimum
        return Network(W1, b1, np.zeros(hidden), 0.0, y_mean, 1.0, 0, 0.0, True)
    ys = (y - y_mean) / y_scale
    W2 = rng.uniform(-1.0, 1.0, hidden) / math.sqrt(hidden)
    if variant == "resilient":
        b2, n_epochs, mse = _rprop(X, ys, W1, b1, W2, 0.0, epochs, tol, eta_plus, eta_minus,
                                   step_min, step_max, step0)
    else:
        mom = momentum if variant == "momentum" else 0.0
        shuffle_seed = int(rng.integers(0, 2**31 - 1))
        b2, n_epochs, mse = _online(X, ys, W1, b1, W2, 0.0, lr, mom, epochs, tol, shuffle_seed)
    converged = bool(mse < tol)
    return Network(W1, b1, W2, float(b2), y_mean, y_scale, int(n_epochs), float(mse), converged)
