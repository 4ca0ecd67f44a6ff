"""Reverse-mode automatic differentiation on a linear tape.

Tensors wrap C-contiguous float64 arrays. Ops record backward closures on
the innermost active tape; with no active tape they are plain forward
computations (inference mode). Backward traversal pops closures in exact
reverse of forward order, so every output gradient is fully accumulated
before its producer runs.
"""

from contextlib import contextmanager

import numpy as np

from nndialog import kernels
from nndialog.errors import ConfigError, NumericError, ShapeError


class Tensor:
    """Dense float64 array with an optional same-shape gradient buffer."""

    __slots__ = ("data", "grad", "requires_grad")

    def __init__(self, data, requires_grad=False):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim > 0 and not arr.flags.c_contiguous:
            arr = np.ascontiguousarray(arr)
        self.data = arr
        self.grad = None
        self.requires_grad = bool(requires_grad)

    @property
    def shape(self):
        return self.data.shape

    def item(self):
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def tensor(data):
    """Constant (non-differentiable) tensor."""
    return Tensor(data, requires_grad=False)


def parameter(data):
    """Leaf tensor that collects gradients."""
    return Tensor(data, requires_grad=True)


class Tape:
    """Ordered record of backward closures for one forward pass."""

    def __init__(self):
        self._backwards = []
        self._used = False

    def _record(self, fn):
        self._backwards.append(fn)

    def backward(self, loss):
        if loss.data.shape != ():
            raise ShapeError(f"backward requires a scalar loss, got shape {loss.data.shape}")
        if self._used:
            raise RuntimeError("tape backward already ran; build a fresh tape")
        self._used = True
        loss.grad = np.ones((), dtype=np.float64)
        for fn in reversed(self._backwards):
            fn()


_STACK = []


@contextmanager
def tape():
    t = Tape()
    _STACK.append(t)
    try:
        yield t
    finally:
        _STACK.pop()


def _track(*inputs):
    return bool(_STACK) and any(t.requires_grad for t in inputs)


def _accum(t, g, own=False):
    # own=True means g is freshly allocated and safe to adopt without copying
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = g if own else g.copy()
    else:
        t.grad += g


def _grad_buffer(t):
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    return t.grad


def matmul(a, b):
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise ShapeError(f"matmul shapes incompatible: {a.data.shape} x {b.data.shape}")
    out = Tensor(a.data @ b.data)
    if _track(a, b):
        out.requires_grad = True

        def bwd():
            g = out.grad
            if g is None:
                return
            if a.requires_grad:
                _accum(a, g @ b.data.T, own=True)
            if b.requires_grad:
                _accum(b, a.data.T @ g, own=True)

        _STACK[-1]._record(bwd)
    return out


def linear(x, w, b=None):
    """x[B,D] @ w[N,D].T (+ b[N]) -> [B,N]; the layout every layer stores."""
    if x.data.ndim != 2 or w.data.ndim != 2 or x.data.shape[1] != w.data.shape[1]:
        raise ShapeError(f"linear shapes incompatible: {x.data.shape} x {w.data.shape}.T")
    data = x.data @ w.data.T
    if b is not None:
        if b.data.shape != (w.data.shape[0],):
            raise ShapeError(f"linear bias shape {b.data.shape} != ({w.data.shape[0]},)")
        data += b.data
    out = Tensor(data)
    inputs = (x, w) if b is None else (x, w, b)
    if _track(*inputs):
        out.requires_grad = True

        def bwd():
            g = out.grad
            if g is None:
                return
            if x.requires_grad:
                _accum(x, g @ w.data, own=True)
            if w.requires_grad:
                _accum(w, g.T @ x.data, own=True)
            if b is not None and b.requires_grad:
                _accum(b, g.sum(axis=0), own=True)

        _STACK[-1]._record(bwd)
    return out


def add(x, y):
    """Elementwise sum; y may also be a 1-D bias row against 2-D x."""
    bias_row = x.data.ndim == 2 and y.data.ndim == 1
    if not bias_row and x.data.shape != y.data.shape:
        raise ShapeError(f"add shapes incompatible: {x.data.shape} + {y.data.shape}")
    if bias_row and y.data.shape[0] != x.data.shape[1]:
        raise ShapeError(f"add bias row {y.data.shape} != columns of {x.data.shape}")
    out = Tensor(x.data + y.data)
    if _track(x, y):
        out.requires_grad = True

        def bwd():
            g = out.grad
            if g is None:
                return
            _accum(x, g)
            if y.requires_grad:
                _accum(y, g.sum(axis=0) if bias_row else g, own=bias_row)

        _STACK[-1]._record(bwd)
    return out


def mul(x, y):
    if x.data.shape != y.data.shape:
        raise ShapeError(f"mul shapes incompatible: {x.data.shape} * {y.data.shape}")
    out = Tensor(x.data * y.data)
    if _track(x, y):
        out.requires_grad = True

        def bwd():
            g = out.grad
            if g is None:
                return
            if x.requires_grad:
                _accum(x, g * y.data, own=True)
            if y.requires_grad:
                _accum(y, g * x.data, own=True)

        _STACK[-1]._record(bwd)
    return out


def scale(x, alpha):
    out = Tensor(x.data * float(alpha))
    if _track(x):
        out.requires_grad = True

        def bwd():
            g = out.grad
            if g is None:
                return
            _accum(x, g * float(alpha), own=True)

        _STACK[-1]._record(bwd)
    return out


def concat(parts, axis=1):
    if not parts:
        raise ShapeError("concat of zero tensors")
    out = Tensor(np.concatenate([p.data for p in parts], axis=axis))
    if _track(*parts):
        out.requires_grad = True
        sizes = [p.data.shape[axis] for p in parts]

        def bwd():
            g = out.grad
            if g is None:
                return
            start = 0
            for p, size in zip(parts, sizes):
                sl = [slice(None)] * g.ndim
                sl[axis] = slice(start, start + size)
                _accum(p, g[tuple(sl)])
                start += size

        _STACK[-1]._record(bwd)
    return out


def slice_cols(x, start, stop):
    if x.data.ndim != 2:
        raise ShapeError(f"slice_cols requires a 2-D tensor, got {x.data.shape}")
    out = Tensor(x.data[:, start:stop])
    if _track(x):
        out.requires_grad = True

        def bwd():
            g = out.grad
            if g is None:
                return
            _grad_buffer(x)[:, start:stop] += g

        _STACK[-1]._record(bwd)
    return out


def take_rows(x, idx):
    """Row gather (embedding lookup); backward scatter-adds into x.grad."""
    idx = np.ascontiguousarray(idx, dtype=np.int64)
    if idx.ndim != 1:
        raise ShapeError(f"take_rows index must be 1-D, got {idx.shape}")
    if idx.size and (idx.min() < 0 or idx.max() >= x.data.shape[0]):
        raise IndexError(f"take_rows index out of range for {x.data.shape[0]} rows")
    out = Tensor(x.data[idx])
    if _track(x):
        out.requires_grad = True

        def bwd():
            g = out.grad
            if g is None:
                return
            kernels.scatter_add_rows(_grad_buffer(x), idx, np.ascontiguousarray(g))

        _STACK[-1]._record(bwd)
    return out


def sigmoid(x):
    out = Tensor(kernels.sigmoid(x.data))
    if _track(x):
        out.requires_grad = True

        def bwd():
            g = out.grad
            if g is None:
                return
            _accum(x, kernels.sigmoid_grad(out.data, g), own=True)

        _STACK[-1]._record(bwd)
    return out


def tanh(x):
    out = Tensor(kernels.tanh(x.data))
    if _track(x):
        out.requires_grad = True

        def bwd():
            g = out.grad
            if g is None:
                return
            _accum(x, kernels.tanh_grad(out.data, g), own=True)

        _STACK[-1]._record(bwd)
    return out


def softmax(x):
    """Row softmax (1-D treated as a single row); inference-facing."""
    if not np.isfinite(x.data).all():
        raise NumericError("softmax input contains NaN or Inf")
    rows = x.data if x.data.ndim == 2 else x.data[None, :]
    p = kernels.softmax_rows(np.ascontiguousarray(rows))
    out = Tensor(p if x.data.ndim == 2 else p[0])
    if _track(x):
        out.requires_grad = True

        def bwd():
            g = out.grad
            if g is None:
                return
            pd = out.data if out.data.ndim == 2 else out.data[None, :]
            gd = g if g.ndim == 2 else g[None, :]
            gx = pd * (gd - (gd * pd).sum(axis=1, keepdims=True))
            _accum(x, gx if x.data.ndim == 2 else gx[0], own=True)

        _STACK[-1]._record(bwd)
    return out


def cross_entropy(dist, label):
    """-log(dist[label]) on an explicit probability vector."""
    if dist.data.ndim != 1:
        raise ShapeError(f"cross_entropy expects a 1-D distribution, got {dist.data.shape}")
    n = dist.data.shape[0]
    label = int(label)
    if not 0 <= label < n:
        raise IndexError(f"cross_entropy label {label} out of range [0, {n})")
    out = Tensor(-np.log(dist.data[label]))
    if _track(dist):
        out.requires_grad = True

        def bwd():
            g = out.grad
            if g is None:
                return
            gd = np.zeros_like(dist.data)
            gd[label] = -float(g) / dist.data[label]
            _accum(dist, gd, own=True)

        _STACK[-1]._record(bwd)
    return out


def softmax_xent(logits, labels):
    """Fused stable softmax + cross-entropy; returns per-row losses [B].

    labels is a constant int array. Rows must carry valid labels; callers
    mask unsupervised rows by zero weight downstream, not by bad indices.
    """
    if logits.data.ndim != 2:
        raise ShapeError(f"softmax_xent expects 2-D logits, got {logits.data.shape}")
    labels = np.ascontiguousarray(labels, dtype=np.int64)
    if labels.shape != (logits.data.shape[0],):
        raise ShapeError(f"softmax_xent labels shape {labels.shape} != ({logits.data.shape[0]},)")
    if labels.size and (labels.min() < 0 or labels.max() >= logits.data.shape[1]):
        raise IndexError("softmax_xent label out of range")
    losses, probs = kernels.softmax_xent_forward(logits.data, labels)
    out = Tensor(losses)
    if _track(logits):
        out.requires_grad = True

        def bwd():
            g = out.grad
            if g is None:
                return
            glogits = kernels.softmax_xent_backward(probs, labels, np.ascontiguousarray(g))
            _accum(logits, glogits, own=True)

        _STACK[-1]._record(bwd)
    return out


def weighted_sum(x, weights):
    """Scalar dot of a 1-D tensor with a constant weight vector."""
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    if x.data.shape != weights.shape or x.data.ndim != 1:
        raise ShapeError(f"weighted_sum shapes incompatible: {x.data.shape} . {weights.shape}")
    out = Tensor(np.asarray(float(x.data @ weights)))
    if _track(x):
        out.requires_grad = True

        def bwd():
            g = out.grad
            if g is None:
                return
            _accum(x, weights * float(g), own=True)

        _STACK[-1]._record(bwd)
    return out


def sum_all(x):
    out = Tensor(np.asarray(x.data.sum()))
    if _track(x):
        out.requires_grad = True

        def bwd():
            g = out.grad
            if g is None:
                return
            _accum(x, np.full_like(x.data, float(g)), own=True)

        _STACK[-1]._record(bwd)
    return out


def lstm_gates(pre, h_prev, c_prev, mask):
    """Masked LSTM cell update from packed gate preactivations.

    pre[B,4H] packs [input, forget, cell, output] gates. Rows with mask 0
    carry the previous state through unchanged (padding skip), which also
    zeroes their preactivation gradients exactly.
    """
    hdim = c_prev.data.shape[1] if c_prev.data.ndim == 2 else 0
    if pre.data.ndim != 2 or pre.data.shape != (c_prev.data.shape[0], 4 * hdim):
        raise ShapeError(
            f"lstm_gates shapes incompatible: pre {pre.data.shape}, state {c_prev.data.shape}"
        )
    if h_prev.data.shape != c_prev.data.shape:
        raise ShapeError(f"lstm_gates h/c shapes differ: {h_prev.data.shape} vs {c_prev.data.shape}")
    mask = np.ascontiguousarray(mask, dtype=np.float64)
    if mask.shape != (pre.data.shape[0],):
        raise ShapeError(f"lstm_gates mask shape {mask.shape} != ({pre.data.shape[0]},)")
    h_data, c_data, acts, tanh_c = kernels.lstm_gates_forward(
        pre.data, h_prev.data, c_prev.data, mask
    )
    h = Tensor(h_data)
    c = Tensor(c_data)
    if _track(pre, h_prev, c_prev):
        h.requires_grad = True
        c.requires_grad = True

        def bwd():
            gh = h.grad if h.grad is not None else np.zeros_like(h.data)
            gc = c.grad if c.grad is not None else np.zeros_like(c.data)
            gpre, gh_prev, gc_prev = kernels.lstm_gates_backward(
                acts, tanh_c, c_prev.data, mask, gh, gc
            )
            _accum(pre, gpre, own=True)
            _accum(h_prev, gh_prev, own=True)
            _accum(c_prev, gc_prev, own=True)

        _STACK[-1]._record(bwd)
    return h, c


def dropout(x, rate, rng, training=True):
    """Inverted dropout; identity when not training or rate is 0."""
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    keep = (rng.random(x.data.shape) >= rate).astype(np.float64)
    keep /= 1.0 - rate
    return mul(x, tensor(keep))
