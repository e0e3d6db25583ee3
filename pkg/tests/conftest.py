"""Shared test oracles, independent of the library code paths they check."""

import numpy as np
import pytest


def central_difference(loss_fn, array, h=1e-5):
    """Forward-only finite-difference gradient; never touches backward()."""
    grad = np.zeros_like(array, dtype=np.float64)
    it = np.nditer(array, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        orig = array[idx]
        array[idx] = orig + h
        up = loss_fn()
        array[idx] = orig - h
        down = loss_fn()
        array[idx] = orig
        grad[idx] = (up - down) / (2.0 * h)
        it.iternext()
    return grad


def max_rel_err(analytic, numeric):
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-12)
    return float((np.abs(analytic - numeric) / denom).max())


def brute_force_conv1d(x, w, b):
    """Cross-correlation by explicit loops over (out-channel, position, tap)."""
    c_out, c_in, k = w.shape
    _, length = x.shape
    t_out = length - k + 1
    out = np.zeros((c_out, t_out))
    for o in range(c_out):
        for t in range(t_out):
            acc = b[o]
            for c in range(c_in):
                for j in range(k):
                    acc += w[o, c, j] * x[c, t + j]
            out[o, t] = acc
    return out


def reference_lstm_step(x_t, h_prev, c_prev, W, b):
    """Hand-rolled single LSTM step (gate order i, f, g, o), scalar math only."""

    def sig(v):
        return 1.0 / (1.0 + np.exp(-v))

    hid = h_prev.shape[-1]
    z = np.concatenate([x_t, h_prev]) @ W + b
    i = sig(z[:hid])
    f = sig(z[hid:2 * hid])
    g = np.tanh(z[2 * hid:3 * hid])
    o = sig(z[3 * hid:])
    c_t = f * c_prev + i * g
    h_t = o * np.tanh(c_t)
    return h_t, c_t


@pytest.fixture
def np_rng():
    return np.random.default_rng(20240817)
