"""LSTM forward/backward kernels.

These loops dominate training time, so they are compiled with numba when
available. Set PRONTRAIN_NUMBA=0 to force the pure-numpy fallback (same
source, interpreted). The selected backend is exposed as BACKEND.
"""

import os

import numpy as np


def _lstm_forward(x, w, u, b):
    """Run a single-direction LSTM over a sequence.

    x: (T, I) inputs; w: (I, 4H) input weights; u: (H, 4H) recurrent
    weights; b: (4H,) bias. Gate order along the 4H axis: input, forget,
    candidate, output.

    Returns (hs, cs, gates) with shapes (T, H), (T, H), (T, 4H); gates
    holds the post-nonlinearity gate activations needed for backprop.
    """
    T = x.shape[0]
    H = u.shape[0]
    hs = np.zeros((T, H))
    cs = np.zeros((T, H))
    gates = np.zeros((T, 4 * H))
    h = np.zeros(H)
    c = np.zeros(H)
    for t in range(T):
        a = x[t] @ w + h @ u + b
        i = 1.0 / (1.0 + np.exp(-a[:H]))
        f = 1.0 / (1.0 + np.exp(-a[H:2 * H]))
        g = np.tanh(a[2 * H:3 * H])
        o = 1.0 / (1.0 + np.exp(-a[3 * H:]))
        c = f * c + i * g
        h = o * np.tanh(c)
        gates[t, :H] = i
        gates[t, H:2 * H] = f
        gates[t, 2 * H:3 * H] = g
        gates[t, 3 * H:] = o
        cs[t] = c
        hs[t] = h
    return hs, cs, gates


def _lstm_backward(x, hs, cs, gates, u, dhs):
    """Backprop through _lstm_forward.

    dhs: (T, H) gradient w.r.t. each hidden state output. Input gradients
    are not computed (encoder features are fixed). Returns (dw, du, db).
    """
    T = x.shape[0]
    I = x.shape[1]
    H = u.shape[0]
    dw = np.zeros((I, 4 * H))
    du = np.zeros((H, 4 * H))
    db = np.zeros(4 * H)
    dh_next = np.zeros(H)
    dc_next = np.zeros(H)
    da = np.zeros(4 * H)
    zeros_h = np.zeros(H)
    for t in range(T - 1, -1, -1):
        i = gates[t, :H]
        f = gates[t, H:2 * H]
        g = gates[t, 2 * H:3 * H]
        o = gates[t, 3 * H:]
        tc = np.tanh(cs[t])
        dh = dhs[t] + dh_next
        dc = dc_next + dh * o * (1.0 - tc * tc)
        if t > 0:
            c_prev = cs[t - 1]
            h_prev = hs[t - 1]
        else:
            c_prev = zeros_h
            h_prev = zeros_h
        da[:H] = dc * g * i * (1.0 - i)
        da[H:2 * H] = dc * c_prev * f * (1.0 - f)
        da[2 * H:3 * H] = dc * i * (1.0 - g * g)
        da[3 * H:] = dh * tc * o * (1.0 - o)
        dw += np.outer(x[t], da)
        du += np.outer(h_prev, da)
        db += da
        dh_next = u @ da
        dc_next = dc * f
    return dw, du, db


_USE_NUMBA = os.environ.get("PRONTRAIN_NUMBA", "1") != "0"

if _USE_NUMBA:
    try:
        from numba import njit

        lstm_forward = njit(cache=True)(_lstm_forward)
        lstm_backward = njit(cache=True)(_lstm_backward)
        BACKEND = "numba"
    except ImportError:
        lstm_forward = _lstm_forward
        lstm_backward = _lstm_backward
        BACKEND = "numpy"
else:
    lstm_forward = _lstm_forward
    lstm_backward = _lstm_backward
    BACKEND = "numpy"
