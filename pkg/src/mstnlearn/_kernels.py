"""Forward / BPTT kernels for a sparse recurrent network.

Two interchangeable backends share one calling convention:

* ``numba``: scalar loops compiled with ``@njit``.
* ``numpy``: per-neuron vectorised gathers, no compilation.

The numba path is used when numba imports and ``MSTNLEARN_NO_NUMBA`` is unset
(or ``0``). Both are always importable so they can be cross-checked.

Graph layout: neurons ``0..n_in-1`` are inputs (activation = input value),
the rest are logistic units evaluated in ``order``. Connection ``c`` feeds
``src[c]`` into ``tgt[c]`` with an integer delay ``delay[c]``. ``in_ptr`` /
``in_idx`` list incoming connections per neuron, ``out_ptr`` / ``out_idx``
outgoing ones.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get("MSTNLEARN_NO_NUMBA", "0") in ("", "0")
BACKEND = "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------- numpy path

def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def forward_numpy(inputs, n_neurons, order, in_ptr, in_idx, src, delay, w):
    T, n_in = inputs.shape
    x = np.zeros((T, n_neurons))
    y = np.zeros((T, n_neurons))
    x[:, :n_in] = inputs
    y[:, :n_in] = inputs
    for t in range(T):
        for i in order:
            conns = in_idx[in_ptr[i]:in_ptr[i + 1]]
            tt = t - delay[conns]
            ok = tt >= 0
            conns = conns[ok]
            x[t, i] = np.dot(w[conns], y[tt[ok], src[conns]])
            y[t, i] = _sigmoid(x[t, i])
    return x, y


def backward_numpy(y, err, n_in, order, out_ptr, out_idx, tgt, src, delay, w):
    """Deltas and per-connection gradients ``sum_t delta_tgt(t) * y_src(t - d)``.

    ``err`` holds ``d - y`` on output units and 0 elsewhere.
    """
    T, n = y.shape
    delta = np.zeros((T, n))
    for t in range(T - 1, -1, -1):
        for i in order[::-1]:
            conns = out_idx[out_ptr[i]:out_ptr[i + 1]]
            tt = t + delay[conns]
            ok = tt < T
            conns = conns[ok]
            acc = err[t, i] + np.dot(w[conns], delta[tt[ok], tgt[conns]])
            delta[t, i] = y[t, i] * (1.0 - y[t, i]) * acc
    grad = np.zeros(len(w))
    for d in np.unique(delay):
        sel = np.flatnonzero(delay == d)
        if d < T:
            grad[sel] = np.einsum("tc,tc->c", delta[d:, tgt[sel]], y[:T - d, src[sel]])
    return delta, grad


def step_batch_numpy(inputs, n_neurons, order, in_ptr, in_idx, src, delay, w):
    """One time step from zero history for each row of ``inputs``."""
    B, n_in = inputs.shape
    y = np.zeros((B, n_neurons))
    y[:, :n_in] = inputs
    for i in order:
        conns = in_idx[in_ptr[i]:in_ptr[i + 1]]
        # column-by-column accumulation: BLAS matmul may round rows differently
        # depending on their position in the batch
        s = np.zeros(B)
        for c in conns[delay[conns] == 0]:
            s += w[c] * y[:, src[c]]
        y[:, i] = _sigmoid(s)
    return y


# ---------------------------------------------------------------- numba path

if HAVE_NUMBA:
    _jit = numba.njit(cache=True, nogil=True)

    @_jit
    def forward_numba(inputs, n_neurons, order, in_ptr, in_idx, src, delay, w):
        T, n_in = inputs.shape
        x = np.zeros((T, n_neurons))
        y = np.zeros((T, n_neurons))
        for t in range(T):
            for i in range(n_in):
                x[t, i] = inputs[t, i]
                y[t, i] = inputs[t, i]
            for k in range(order.shape[0]):
                i = order[k]
                s = 0.0
                for p in range(in_ptr[i], in_ptr[i + 1]):
                    c = in_idx[p]
                    tt = t - delay[c]
                    if tt >= 0:
                        s += w[c] * y[tt, src[c]]
                x[t, i] = s
                y[t, i] = 1.0 / (1.0 + np.exp(-s))
        return x, y

    @_jit
    def backward_numba(y, err, n_in, order, out_ptr, out_idx, tgt, src, delay, w):
        T, n = y.shape
        delta = np.zeros((T, n))
        for t in range(T - 1, -1, -1):
            for k in range(order.shape[0] - 1, -1, -1):
                i = order[k]
                acc = err[t, i]
                for p in range(out_ptr[i], out_ptr[i + 1]):
                    c = out_idx[p]
                    tt = t + delay[c]
                    if tt < T:
                        acc += w[c] * delta[tt, tgt[c]]
                delta[t, i] = y[t, i] * (1.0 - y[t, i]) * acc
        grad = np.zeros(w.shape[0])
        for c in range(w.shape[0]):
            g = 0.0
            for t in range(delay[c], T):
                g += delta[t, tgt[c]] * y[t - delay[c], src[c]]
            grad[c] = g
        return delta, grad

    @_jit
    def step_batch_numba(inputs, n_neurons, order, in_ptr, in_idx, src, delay, w):
        B, n_in = inputs.shape
        y = np.zeros((B, n_neurons))
        for b in range(B):
            for i in range(n_in):
                y[b, i] = inputs[b, i]
            for k in range(order.shape[0]):
                i = order[k]
                s = 0.0
                for p in range(in_ptr[i], in_ptr[i + 1]):
                    c = in_idx[p]
                    if delay[c] == 0:
                        s += w[c] * y[b, src[c]]
                y[b, i] = 1.0 / (1.0 + np.exp(-s))
        return y

else:  # pragma: no cover
    forward_numba = backward_numba = step_batch_numba = None


if USE_NUMBA:
    forward, backward, step_batch = forward_numba, backward_numba, step_batch_numba
else:
    forward, backward, step_batch = forward_numpy, backward_numpy, step_batch_numpy
