"""Hot numeric kernels for MLP training: numba-compiled with a numpy fallback.

The fused minibatch-Adam epoch dominates grid runtime (hundreds of fold
trainings per grid), so it exists twice: ``mlp_adam_epoch_numba`` compiled
with ``@njit`` and the vectorized ``mlp_adam_epoch_numpy``. Both compute the
same math; results agree to float rounding of reduction order.

Backend selection: the numba kernel is used when numba imports successfully
unless the environment variable ``TABCLS_NUMBA`` is set to 0/off/false/no.
``benchmarks/bench_kernels.py`` times the two paths against each other.

Weight layout inside kernels is transposed relative to the public parameter
container: w1 is (d, h), w2 is (h, k), so batches stay row-major throughout.
"""

from __future__ import annotations

import os

import numpy as np


def _env_wants_numba() -> bool:
    value = os.environ.get("TABCLS_NUMBA", "1").strip().lower()
    return value not in {"0", "off", "false", "no"}


try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _env_wants_numba()


def mlp_forward_probs(w1, b1, w2, b2, x):
    """Batch forward pass: softmax(tanh(x w1 + b1) w2 + b2), shape (n, k)."""
    z1 = x @ w1 + b1
    a = np.tanh(z1)
    logits = a @ w2 + b2
    logits = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(logits)
    return e / e.sum(axis=1, keepdims=True)


def mlp_nll(w1, b1, w2, b2, x, y):
    """Mean negative log-likelihood of the true classes."""
    p = mlp_forward_probs(w1, b1, w2, b2, x)
    return float(-np.log(p[np.arange(x.shape[0]), y]).mean())


def mlp_gradients(w1, b1, w2, b2, x, y):
    """Full-batch analytic gradients of the mean NLL (numpy reference).

    Returns (nll, gw1, gb1, gw2, gb2). This is the reference the
    finite-difference gradient check validates and the training kernels are
    tested against.
    """
    n = x.shape[0]
    z1 = x @ w1 + b1
    a = np.tanh(z1)
    logits = a @ w2 + b2
    logits = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(logits)
    p = e / e.sum(axis=1, keepdims=True)
    rows = np.arange(n)
    nll = float(-np.log(p[rows, y]).mean())
    dlog = p.copy()
    dlog[rows, y] -= 1.0
    dlog /= n
    gw2 = a.T @ dlog
    gb2 = dlog.sum(axis=0)
    da = dlog @ w2.T
    dz = da * (1.0 - a * a)
    gw1 = x.T @ dz
    gb1 = dz.sum(axis=0)
    return nll, gw1, gb1, gw2, gb2


def _adam_inplace(p, g, m, v, t, lr, beta1, beta2, eps):
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * (g * g)
    mhat = m / (1.0 - beta1**t)
    vhat = v / (1.0 - beta2**t)
    p -= lr * mhat / (np.sqrt(vhat) + eps)


def mlp_adam_epoch_numpy(
    w1, b1, w2, b2,
    mw1, mb1, mw2, mb2,
    vw1, vb1, vw2, vb2,
    x, y, order, batch_size, t0, lr, beta1, beta2, eps,
):
    """One epoch of minibatch Adam; parameters and moments update in place.

    ``order`` is this epoch's sample permutation, ``t0`` the Adam step count
    so far. Returns (summed NLL over all samples, new step count).
    """
    n = x.shape[0]
    t = t0
    total_nll = 0.0
    for start in range(0, n, batch_size):
        idx = order[start : start + batch_size]
        xb = x[idx]
        yb = y[idx]
        nb = idx.shape[0]
        z1 = xb @ w1 + b1
        a = np.tanh(z1)
        logits = a @ w2 + b2
        logits -= logits.max(axis=1, keepdims=True)
        e = np.exp(logits)
        p = e / e.sum(axis=1, keepdims=True)
        rows = np.arange(nb)
        total_nll += float(-np.log(p[rows, yb]).sum())
        dlog = p
        dlog[rows, yb] -= 1.0
        dlog /= nb
        gw2 = a.T @ dlog
        gb2 = dlog.sum(axis=0)
        da = dlog @ w2.T
        dz = da * (1.0 - a * a)
        gw1 = xb.T @ dz
        gb1 = dz.sum(axis=0)
        t += 1
        _adam_inplace(w1, gw1, mw1, vw1, t, lr, beta1, beta2, eps)
        _adam_inplace(b1, gb1, mb1, vb1, t, lr, beta1, beta2, eps)
        _adam_inplace(w2, gw2, mw2, vw2, t, lr, beta1, beta2, eps)
        _adam_inplace(b2, gb2, mb2, vb2, t, lr, beta1, beta2, eps)
    return total_nll, t


def _epoch_loops(
    w1, b1, w2, b2,
    mw1, mb1, mw2, mb2,
    vw1, vb1, vw2, vb2,
    x, y, order, batch_size, t0, lr, beta1, beta2, eps,
):
    n = x.shape[0]
    d = w1.shape[0]
    h = w1.shape[1]
    k = w2.shape[1]
    t = t0
    total_nll = 0.0
    start = 0
    while start < n:
        stop = min(start + batch_size, n)
        nb = stop - start
        xb = np.empty((nb, d))
        yb = np.empty(nb, dtype=np.int64)
        for i in range(nb):
            xb[i, :] = x[order[start + i], :]
            yb[i] = y[order[start + i]]

        z1 = np.dot(xb, w1)
        a = np.empty((nb, h))
        for i in range(nb):
            for j in range(h):
                a[i, j] = np.tanh(z1[i, j] + b1[j])
        logits = np.dot(a, w2)
        p = np.empty((nb, k))
        for i in range(nb):
            mx = logits[i, 0] + b2[0]
            for c in range(1, k):
                val = logits[i, c] + b2[c]
                if val > mx:
                    mx = val
            s = 0.0
            for c in range(k):
                ec = np.exp(logits[i, c] + b2[c] - mx)
                p[i, c] = ec
                s += ec
            for c in range(k):
                p[i, c] = p[i, c] / s
            total_nll += -np.log(p[i, yb[i]])

        for i in range(nb):
            p[i, yb[i]] -= 1.0
            for c in range(k):
                p[i, c] /= nb
        gw2 = np.dot(np.ascontiguousarray(a.T), p)
        gb2 = np.zeros(k)
        for i in range(nb):
            for c in range(k):
                gb2[c] += p[i, c]
        da = np.dot(p, np.ascontiguousarray(w2.T))
        for i in range(nb):
            for j in range(h):
                da[i, j] *= 1.0 - a[i, j] * a[i, j]
        gw1 = np.dot(np.ascontiguousarray(xb.T), da)
        gb1 = np.zeros(h)
        for i in range(nb):
            for j in range(h):
                gb1[j] += da[i, j]

        t += 1
        ob1 = 1.0 - beta1**t
        ob2 = 1.0 - beta2**t
        for i in range(d):
            for j in range(h):
                g = gw1[i, j]
                m = beta1 * mw1[i, j] + (1.0 - beta1) * g
                v = beta2 * vw1[i, j] + (1.0 - beta2) * (g * g)
                mw1[i, j] = m
                vw1[i, j] = v
                w1[i, j] -= lr * (m / ob1) / (np.sqrt(v / ob2) + eps)
        for j in range(h):
            g = gb1[j]
            m = beta1 * mb1[j] + (1.0 - beta1) * g
            v = beta2 * vb1[j] + (1.0 - beta2) * (g * g)
            mb1[j] = m
            vb1[j] = v
            b1[j] -= lr * (m / ob1) / (np.sqrt(v / ob2) + eps)
        for j in range(h):
            for c in range(k):
                g = gw2[j, c]
                m = beta1 * mw2[j, c] + (1.0 - beta1) * g
                v = beta2 * vw2[j, c] + (1.0 - beta2) * (g * g)
                mw2[j, c] = m
                vw2[j, c] = v
                w2[j, c] -= lr * (m / ob1) / (np.sqrt(v / ob2) + eps)
        for c in range(k):
            g = gb2[c]
            m = beta1 * mb2[c] + (1.0 - beta1) * g
            v = beta2 * vb2[c] + (1.0 - beta2) * (g * g)
            mb2[c] = m
            vb2[c] = v
            b2[c] -= lr * (m / ob1) / (np.sqrt(v / ob2) + eps)
        start = stop
    return total_nll, t


if HAVE_NUMBA:
    mlp_adam_epoch_numba = njit(cache=True)(_epoch_loops)
else:  # pragma: no cover
    mlp_adam_epoch_numba = None

mlp_adam_epoch = mlp_adam_epoch_numba if USE_NUMBA else mlp_adam_epoch_numpy

BACKEND = "numba" if USE_NUMBA else "numpy"
