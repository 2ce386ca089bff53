"""Independent reference computations used to check the production code."""

import math

import numpy as np


def forward_oracle(weights, biases, x):
    """Loop-based forward pass: sigmoid everywhere, no bias on the last layer."""
    a = [float(v) for v in x]
    for li, w in enumerate(weights):
        out = []
        for row_i in range(w.shape[0]):
            s = sum(float(w[row_i, j]) * a[j] for j in range(len(a)))
            if li < len(weights) - 1:
                s += float(biases[li][row_i])
            out.append(1.0 / (1.0 + math.exp(-s)))
        a = out
    return np.array(a)


def bce_oracle(y, t):
    y = np.asarray(y)
    return float(np.mean(-(t * np.log(y) + (1 - t) * np.log(1 - y))))


def numerical_gradient(loss_fn, params, step=1e-5):
    """Central differences for every entry of every array in ``params`` (mutated in place)."""
    grads = []
    for p in params:
        g = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + step
            up = loss_fn()
            p[idx] = old - step
            down = loss_fn()
            p[idx] = old
            g[idx] = (up - down) / (2 * step)
        grads.append(g)
    return grads


def delay_matrix(reference, start, n, filter_len):
    """Explicit (n, filter_len) matrix of delayed reference copies, zeros before index 0."""
    A = np.zeros((n, filter_len))
    for k in range(filter_len):
        for i in range(n):
            j = start + i - k
            if j >= 0:
                A[i, k] = reference[j]
    return A


def projection_oracle(estimate, reference, filter_len, edge):
    n = len(estimate) - 2 * edge
    A = delay_matrix(reference, edge, n, filter_len)
    e = estimate[edge:edge + n]
    coeffs, *_ = np.linalg.lstsq(A, e, rcond=None)
    target = A @ coeffs
    return target, e - target


def orthogonal_noise(reference, start, n, filter_len, rng):
    """Noise over the window, orthogonal to every delayed copy (via QR)."""
    A = delay_matrix(reference, start, n, filter_len)
    q, _ = np.linalg.qr(A)
    z = rng.normal(size=n)
    z -= q @ (q.T @ z)
    z -= q @ (q.T @ z)
    return z
