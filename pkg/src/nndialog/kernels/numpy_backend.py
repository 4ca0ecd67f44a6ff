"""Pure numpy implementations of the hot kernels.

Import-time fallback for the compiled extension; both backends expose the
same functions and must agree numerically (see tests/test_kernels.py and
benchmarks/bench_kernels.py). All arrays are C-contiguous float64.
"""

import numpy as np

COMPILED = False


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def sigmoid_grad(y, gy):
    # y is the forward output
    return gy * y * (1.0 - y)


def tanh(x):
    return np.tanh(x)


def tanh_grad(y, gy):
    return gy * (1.0 - y * y)


def softmax_rows(x):
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_xent_forward(logits, labels):
    """Fused stable softmax + cross-entropy over rows.

    Returns (losses[B], probs[B, n]); losses[b] = -log softmax(logits[b])[labels[b]].
    """
    mx = logits.max(axis=1, keepdims=True)
    shifted = logits - mx
    e = np.exp(shifted)
    z = e.sum(axis=1, keepdims=True)
    probs = e / z
    rows = np.arange(logits.shape[0])
    losses = np.log(z[:, 0]) - shifted[rows, labels]
    return losses, probs


def softmax_xent_backward(probs, labels, glosses):
    glogits = probs * glosses[:, None]
    rows = np.arange(probs.shape[0])
    glogits[rows, labels] -= glosses
    return glogits


def lstm_gates_forward(pre, h_prev, c_prev, mask):
    """Post-matmul LSTM cell update with a row mask.

    pre packs the gate preactivations [i, f, g, o] along the last axis.
    Rows with mask 0 carry (h_prev, c_prev) through unchanged, which is how
    padded positions are skipped without branching.
    Returns (h, c, acts, tanh_c); acts/tanh_c are caches for the backward pass.
    """
    hdim = c_prev.shape[1]
    i = sigmoid(pre[:, :hdim])
    f = sigmoid(pre[:, hdim:2 * hdim])
    g = np.tanh(pre[:, 2 * hdim:3 * hdim])
    o = sigmoid(pre[:, 3 * hdim:])
    c_new = f * c_prev + i * g
    tanh_c = np.tanh(c_new)
    h_new = o * tanh_c
    m = mask[:, None]
    c = m * c_new + (1.0 - m) * c_prev
    h = m * h_new + (1.0 - m) * h_prev
    acts = np.concatenate([i, f, g, o], axis=1)
    return h, c, acts, tanh_c


def lstm_gates_backward(acts, tanh_c, c_prev, mask, gh, gc):
    """Backward of lstm_gates_forward; returns (gpre, gh_prev, gc_prev)."""
    hdim = c_prev.shape[1]
    i = acts[:, :hdim]
    f = acts[:, hdim:2 * hdim]
    g = acts[:, 2 * hdim:3 * hdim]
    o = acts[:, 3 * hdim:]
    m = mask[:, None]
    gh_new = m * gh
    gh_prev = (1.0 - m) * gh
    gc_new = m * gc + gh_new * o * (1.0 - tanh_c * tanh_c)
    go = gh_new * tanh_c
    gf = gc_new * c_prev
    gc_prev = (1.0 - m) * gc + gc_new * f
    gi = gc_new * g
    gg = gc_new * i
    gpre = np.concatenate(
        [
            gi * i * (1.0 - i),
            gf * f * (1.0 - f),
            gg * (1.0 - g * g),
            go * o * (1.0 - o),
        ],
        axis=1,
    )
    return gpre, gh_prev, gc_prev


def scatter_add_rows(out, idx, rows):
    """out[idx[n]] += rows[n], with repeated indices accumulated."""
    np.add.at(out, idx, rows)


def adam_step(p, g, m, v, t, lr, beta1, beta2, eps):
    """Bias-corrected Adam update, in place on p, m, v. t is 1-based."""
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * (g * g)
    mhat = m / (1.0 - beta1 ** t)
    vhat = v / (1.0 - beta2 ** t)
    p -= lr * mhat / (np.sqrt(vhat) + eps)
